import io
from contextlib import contextmanager
from pathlib import Path, PurePath
from typing import IO, Iterator, Literal, Protocol, overload, runtime_checkable

import smart_open as so  # type: ignore

FolderResourceModeStr = Literal["r"] | Literal["w"]
FolderResourceModeBin = Literal["rb"] | Literal["wb"]
FolderResourceMode = FolderResourceModeStr | FolderResourceModeBin


@runtime_checkable
class FolderResource(Protocol):
    def full_path(self, path: PurePath) -> Path: ...

    @overload
    @contextmanager
    def open(
        self, path: PurePath, mode: FolderResourceModeStr = "r"
    ) -> Iterator[io.TextIOWrapper]: ...

    @overload
    @contextmanager
    def open(
        self, path: PurePath, mode: FolderResourceModeBin = "rb"
    ) -> Iterator[io.BufferedIOBase]: ...

    @contextmanager
    def open(self, path: PurePath, mode: FolderResourceMode = "r") -> Iterator[IO]: ...

    def exists(self, path: PurePath) -> bool: ...


class InMemoryFolder(FolderResource):
    """
    Folder keeping its files as bytes in a dictionary, for tests.
    """

    def __init__(self) -> None:
        self._files: dict[PurePath, bytes] = {}

    def full_path(self, path: PurePath) -> Path:
        return Path(path)

    @overload
    @contextmanager
    def open(
        self, path: PurePath, mode: FolderResourceModeStr = "r"
    ) -> Iterator[io.TextIOWrapper]: ...

    @overload
    @contextmanager
    def open(
        self, path: PurePath, mode: FolderResourceModeBin = "rb"
    ) -> Iterator[io.BufferedIOBase]: ...

    @contextmanager
    def open(self, path: PurePath, mode: FolderResourceMode = "r") -> Iterator[IO]:
        if mode.startswith("r"):
            if path not in self._files:
                raise FileNotFoundError(str(path))
            buffer = io.BytesIO(self._files[path])
            yield buffer if mode == "rb" else io.TextIOWrapper(buffer, encoding="utf-8")
            return

        buffer = io.BytesIO()
        if mode == "wb":
            yield buffer
        else:
            wrapper = io.TextIOWrapper(buffer, encoding="utf-8")
            yield wrapper
            wrapper.flush()
        self._files[path] = buffer.getvalue()

    def exists(self, path: PurePath) -> bool:
        return path in self._files.keys()

    def paths(self) -> list[PurePath]:
        return sorted(self._files)


class LocalFolder(FolderResource):
    def __init__(self, base_path: str | Path) -> None:
        self.base_path = Path(base_path)

    def full_path(self, path: PurePath) -> Path:
        return Path(self.base_path, path)

    @overload
    @contextmanager
    def open(
        self, path: PurePath, mode: FolderResourceModeStr = "r"
    ) -> Iterator[io.TextIOWrapper]: ...

    @overload
    @contextmanager
    def open(
        self, path: PurePath, mode: FolderResourceModeBin = "rb"
    ) -> Iterator[io.BufferedIOBase]: ...

    @contextmanager
    def open(self, path: PurePath, mode: FolderResourceMode = "r") -> Iterator[IO]:
        full_path = self.full_path(path)
        if mode.startswith("w"):
            full_path.parent.mkdir(parents=True, exist_ok=True)
        with so.open(str(full_path), mode) as f:
            yield f

    def exists(self, path: PurePath) -> bool:
        return self.full_path(path).is_file()
