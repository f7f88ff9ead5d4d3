from .default import RoundRobinAllocator
from .hoard import HoardAllocator

__all__ = ["RoundRobinAllocator", "HoardAllocator"]
