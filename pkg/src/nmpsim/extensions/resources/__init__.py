from .folder import FolderResource, InMemoryFolder, LocalFolder

__all__ = ["FolderResource", "InMemoryFolder", "LocalFolder"]
