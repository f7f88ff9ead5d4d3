from pathlib import Path, PurePath

import pytest

from nmpsim.extensions.resources import FolderResource, InMemoryFolder, LocalFolder


@pytest.fixture(params=["local", "memory"])
def folder(request: pytest.FixtureRequest, tmp_path: Path) -> FolderResource:
    if request.param == "local":
        return LocalFolder(tmp_path)
    return InMemoryFolder()


def test_folders_implement_the_protocol(folder: FolderResource):
    assert isinstance(folder, FolderResource)


def test_text_round_trip(folder: FolderResource):
    path = PurePath("a/b/summary.txt")
    with folder.open(path, "w") as f:
        f.write("hello")

    assert folder.exists(path)
    with folder.open(path, "r") as f:
        assert f.read() == "hello"


def test_binary_round_trip(folder: FolderResource):
    path = PurePath("net.ckpt")
    with folder.open(path, "wb") as f:
        f.write(b"\x00\x01")
    with folder.open(path, "rb") as f:
        assert f.read() == b"\x00\x01"


def test_missing_file(folder: FolderResource):
    assert not folder.exists(PurePath("missing.txt"))
    with pytest.raises(FileNotFoundError):
        with folder.open(PurePath("missing.txt"), "r") as f:
            f.read()


def test_local_folder_full_path(tmp_path: Path):
    folder = LocalFolder(tmp_path)
    assert folder.full_path(PurePath("x/y.csv")) == tmp_path / "x" / "y.csv"
