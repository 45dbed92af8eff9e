"""
Subspace sidecar files

A basis is stored as two files sharing a stem:

  <stem>.json  header: format tag, N, D, eigenvalues, residuals, solver stats
               and the SHA-256 of the payload
  <stem>.bin   payload: the D x N matrix of eigenvectors (rows), row-major,
               little-endian float64, no padding
"""

import hashlib
import json
from pathlib import Path
from typing import List, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from src.curvature.models import SubspaceBasis
from src.errors import CacheError

FORMAT_TAG = "stabkit-subspace-v1"
PAYLOAD_DTYPE = np.dtype("<f8")


class BasisHeader(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format: str = FORMAT_TAG
    N: int
    D: int
    eigenvalues: List[float]
    residuals: List[float]
    iterations_used: int
    hvp_calls: int
    wall_time: float
    tol: float
    method: str
    payload_sha256: str


def sidecar_paths(stem: Union[str, Path]):
    stem = Path(stem)
    return stem.with_name(stem.name + ".json"), stem.with_name(stem.name + ".bin")


def save_basis(basis: SubspaceBasis, stem: Union[str, Path]) -> Path:
    """Write `<stem>.json` and `<stem>.bin`; returns the header path."""
    header_path, payload_path = sidecar_paths(stem)
    header_path.parent.mkdir(parents=True, exist_ok=True)
    payload = np.ascontiguousarray(basis.vectors, dtype=PAYLOAD_DTYPE).tobytes(order="C")
    header = BasisHeader(
        N=basis.dimension,
        D=basis.D,
        eigenvalues=basis.eigenvalues.tolist(),
        residuals=basis.residuals.tolist(),
        iterations_used=basis.iterations_used,
        hvp_calls=basis.hvp_calls,
        wall_time=basis.wall_time,
        tol=basis.tol,
        method=basis.method,
        payload_sha256=hashlib.sha256(payload).hexdigest(),
    )
    # payload first so a header never points at a missing payload
    payload_path.write_bytes(payload)
    header_path.write_text(header.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return header_path


def load_basis(stem: Union[str, Path]) -> SubspaceBasis:
    """
    Read a basis written by `save_basis`.

    Raises:
        CacheError: If either file is missing, truncated or inconsistent
    """
    header_path, payload_path = sidecar_paths(stem)
    try:
        header = BasisHeader.model_validate(
            json.loads(header_path.read_text(encoding="utf-8"))
        )
        payload = payload_path.read_bytes()
    except FileNotFoundError as exc:
        raise CacheError(f"missing sidecar file {exc.filename}") from exc
    except (json.JSONDecodeError, ValidationError) as exc:
        raise CacheError(f"unreadable header {header_path}: {exc}") from exc

    if header.format != FORMAT_TAG:
        raise CacheError(f"unknown sidecar format '{header.format}'")
    expected = header.N * header.D * PAYLOAD_DTYPE.itemsize
    if len(payload) != expected:
        raise CacheError(
            f"payload {payload_path} has {len(payload)} bytes, expected {expected}"
        )
    if hashlib.sha256(payload).hexdigest() != header.payload_sha256:
        raise CacheError(f"payload {payload_path} does not match its header hash")

    vectors = np.frombuffer(payload, dtype=PAYLOAD_DTYPE).reshape(header.D, header.N)
    try:
        return SubspaceBasis(
            vectors=vectors.astype(np.float64),
            eigenvalues=np.asarray(header.eigenvalues),
            residuals=np.asarray(header.residuals),
            iterations_used=header.iterations_used,
            hvp_calls=header.hvp_calls,
            wall_time=header.wall_time,
            tol=header.tol,
            method=header.method,
        )
    except ValidationError as exc:
        raise CacheError(f"inconsistent sidecar {header_path}: {exc}") from exc
