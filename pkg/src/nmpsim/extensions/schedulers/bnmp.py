from ...core.config import Technique
from ...core.offload import NmpScheduler, ResolvedOp, Role


class BnmpScheduler(NmpScheduler):
    """
    Computes every op at the cube hosting its destination page.
    """

    technique = Technique.BNMP

    def default_cube(self, resolved: ResolvedOp) -> int:
        return resolved.cubes[Role.DEST]
