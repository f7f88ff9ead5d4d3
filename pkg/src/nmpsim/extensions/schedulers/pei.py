from __future__ import annotations

from enum import StrEnum

from ...core.config import ControllerConfig, Technique
from ...core.offload import (
    ComputeRemapTable,
    HostCache,
    NmpScheduler,
    ResolvedOp,
    Role,
    SchedulePlan,
    build_host_caches,
    host_address,
    remap_target,
)
from ...core.trace import NmpOp

ROLES = (Role.DEST, Role.SRC1, Role.SRC2)


class PeiDecision(StrEnum):
    HOST_EXECUTE = "HOST_EXECUTE"
    OFFLOAD = "OFFLOAD"


def core_of(op: NmpOp, cores: int) -> int:
    return op.seq_id % cores


def pei_host_filter(op: NmpOp, caches: list[HostCache]) -> tuple[PeiDecision, tuple[Role, ...]]:
    """
    Probe every operand line in the issuing core's cache.

    Returns:
        tuple[PeiDecision, tuple[Role, ...]]: HOST_EXECUTE if at least one operand hits, and
            the operands that miss (to be fetched by the host)
    """
    cache = caches[core_of(op, len(caches))]
    misses = tuple(
        role
        for role, vaddr in zip(ROLES, op.operands())
        if not cache.probe(host_address(op, vaddr))
    )
    if len(misses) < len(op.operands()):
        return PeiDecision.HOST_EXECUTE, misses
    return PeiDecision.OFFLOAD, misses


class PeiScheduler(NmpScheduler):
    """
    Host-cache aware offloading: ops with at least one operand cached run on the issuing core,
    the others are offloaded to the first source's cube. The issuing core fills the
    destination line when an offloaded op is acknowledged.
    """

    technique = Technique.PEI

    def __init__(self, caches: list[HostCache]) -> None:
        self.caches = caches

    @classmethod
    def from_config(cls, config: ControllerConfig) -> PeiScheduler:
        return cls(build_host_caches(config))

    def host_cache(self, op: NmpOp) -> HostCache:
        return self.caches[core_of(op, len(self.caches))]

    def default_cube(self, resolved: ResolvedOp) -> int:
        return resolved.cubes[Role.SRC1]

    def schedule(self, resolved: ResolvedOp, remap: ComputeRemapTable) -> SchedulePlan:
        if remap_target(resolved, remap) is not None:
            return super().schedule(resolved, remap)

        decision, misses = pei_host_filter(resolved.op, self.caches)
        if decision == PeiDecision.HOST_EXECUTE:
            return SchedulePlan(compute_cube=-1, host_execute=True, host_fetch=misses)
        return self.default_plan(resolved)

    def on_complete(self, resolved: ResolvedOp, plan: SchedulePlan) -> None:
        if plan.host_execute:
            return
        op = resolved.op
        self.host_cache(op).fill(host_address(op, op.dest_vaddr))
