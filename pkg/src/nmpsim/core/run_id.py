from __future__ import annotations

from pathlib import PurePath


class RunId(str):
    """
    A string-based identifier for simulation runs that can be converted to a filesystem path.

    RunId extends the str class so run identifiers can be used as dictionary keys and
    printed directly, while dot-separated components map onto output folders.

    Examples:
        >>> run_id = RunId.build("BNMP", "AIMM", 7)
        >>> run_id.as_path()
        PurePath('bnmp/aimm/seed7')
    """

    @classmethod
    def build(cls, technique: str, remapper: str, seed: int) -> RunId:
        return cls(f"{technique.lower()}.{remapper.lower()}.seed{seed}")

    def as_path(self, suffix: str | None = None) -> PurePath:
        """
        Convert the dot-separated run ID into a filesystem path.

        Returns:
            PurePath: A path object where each component is a part of the dot-separated ID
        """

        path = PurePath(*self.split("."))
        if suffix is not None:
            if suffix.startswith("."):
                path = path.with_suffix(suffix)
            else:
                path = path.with_suffix("." + suffix)
        return path

    def file(self, name: str) -> PurePath:
        """
        Path of a named output file inside this run's folder.
        """
        return self.as_path() / name
