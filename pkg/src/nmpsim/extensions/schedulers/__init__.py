from .bnmp import BnmpScheduler
from .ldb import LdbScheduler
from .pei import PeiDecision, PeiScheduler, pei_host_filter

__all__ = [
    "BnmpScheduler",
    "LdbScheduler",
    "PeiScheduler",
    "PeiDecision",
    "pei_host_filter",
]
