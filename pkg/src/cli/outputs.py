"""
Result directory handling

Every file a command produces is claimed through `OutputDir`, which refuses to
overwrite existing results unless forced and later hashes each claimed file
into the `run.json` manifest.
"""

import hashlib
import platform
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
import pydantic
import scipy

from src.cli.models import OutputFile, RunManifest
from src.errors import OutputExistsError

MANIFEST_NAME = "run.json"


def package_versions() -> Dict[str, str]:
    try:
        own = version("stabkit")
    except PackageNotFoundError:
        own = "unknown"
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.VERSION,
        "stabkit": own,
    }


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class OutputDir:
    """An output directory that tracks the files written into it."""

    def __init__(self, root: Union[str, Path], force: bool = False):
        self.root = Path(root)
        self.force = force
        self.root.mkdir(parents=True, exist_ok=True)
        self._claimed: List[Path] = []

    def claim(self, name: str) -> Path:
        """Reserve `name` inside the directory and return its path."""
        path = self.root / name
        if path.exists() and not self.force:
            raise OutputExistsError(f"{path} exists (pass --force to overwrite)")
        path.parent.mkdir(parents=True, exist_ok=True)
        if path not in self._claimed:
            self._claimed.append(path)
        return path

    def write_text(self, name: str, text: str) -> Path:
        path = self.claim(name)
        path.write_text(text, encoding="utf-8")
        return path

    def output_files(self) -> List[OutputFile]:
        files = []
        for path in self._claimed:
            if path.name == MANIFEST_NAME and path.parent == self.root:
                continue
            if path.exists():
                files.append(
                    OutputFile(
                        path=path.relative_to(self.root).as_posix(),
                        sha256=sha256_file(path),
                        bytes=path.stat().st_size,
                    )
                )
        return files

    def write_manifest(self, manifest: RunManifest) -> Path:
        manifest = manifest.model_copy(update={"outputs": self.output_files()})
        return self.write_text(MANIFEST_NAME, manifest.model_dump_json(indent=2) + "\n")
