"""In-repo fixture pack lookup."""

from dataclasses import dataclass
from pathlib import Path

from src.errors import ParseError

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"
SUFFIX = ".plumb"


@dataclass(frozen=True)
class FixtureInfo:
    name: str
    path: Path
    description: str


def _describe(path: Path) -> str:
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            return line.lstrip("# ").strip()
    return ""


def list_fixtures() -> list[FixtureInfo]:
    """Shipped fixtures sorted by name, described by their first comment."""
    return [
        FixtureInfo(path.stem, path, _describe(path))
        for path in sorted(FIXTURE_DIR.glob(f"*{SUFFIX}"))
    ]


def resolve_input(name: str) -> Path:
    """Path of an input given as a file path, fixture file name or fixture name.

    Raises:
        ParseError: If nothing matches.
    """
    for candidate in (Path(name), FIXTURE_DIR / name, FIXTURE_DIR / f"{name}{SUFFIX}"):
        if candidate.is_file():
            return candidate
    raise ParseError(f"No such input or fixture: {name}")
