from ...core.config import Technique
from ...core.offload import NmpScheduler, ResolvedOp, Role


class LdbScheduler(NmpScheduler):
    """
    Moves computation to the first source's cube and forwards the result to the destination.
    """

    technique = Technique.LDB

    def default_cube(self, resolved: ResolvedOp) -> int:
        return resolved.cubes[Role.SRC1]
