from .aimm import AimmRemapper
from .none import NoRemapper
from .tom import TomRemapper, movement_score, tom_epoch_select

__all__ = [
    "AimmRemapper",
    "NoRemapper",
    "TomRemapper",
    "movement_score",
    "tom_epoch_select",
]
