"""On-disk subspace cache backed by the basis sidecar files."""

from pathlib import Path
from typing import Optional, Union

from src.curvature import SubspaceBasis, load_basis, save_basis, sidecar_paths
from src.errors import CacheError
from src.experiments import RunContext, SubspaceKey, build_subspace
from src.logging_config import setup_logging
from src.loss_family import LossFamily, Weights

logger = setup_logging(service_name="cache")


class SubspaceCache:
    """
    Stores one sidecar pair per SubspaceKey under `root`.

    Satisfies the experiments' SubspaceStore protocol. Unreadable entries are
    reported and treated as misses so the caller recomputes and overwrites them.
    """

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.hits = 0
        self.misses = 0
        self.corrupt = 0

    def stem(self, key: SubspaceKey) -> Path:
        return self.root / key.stem()

    def load(self, key: SubspaceKey) -> Optional[SubspaceBasis]:
        stem = self.stem(key)
        header, _ = sidecar_paths(stem)
        if not header.exists():
            self.misses += 1
            logger.info(f"Subspace cache miss: {stem.name}")
            return None
        try:
            basis = load_basis(stem)
        except CacheError as exc:
            self.misses += 1
            self.corrupt += 1
            logger.warning(f"Corrupt subspace cache entry {stem.name}, recomputing: {exc}")
            return None
        if basis.D != key.D:
            self.misses += 1
            logger.warning(f"Cache entry {stem.name} holds D={basis.D}, expected {key.D}; recomputing")
            return None
        self.hits += 1
        logger.info(f"Subspace cache hit: {stem.name}")
        return basis

    def save(self, key: SubspaceKey, basis: SubspaceBasis) -> None:
        save_basis(basis, self.stem(key))


def subspace_cache(
    family: LossFamily,
    k: int,
    cfg,
    cache: SubspaceCache,
    w_star: Optional[Weights] = None,
) -> Path:
    """
    Ensure the top-`cfg.D` subspace of H^(k) at the minimizer is cached.

    `cfg` is a CriterionConfig (any SolverConfig with a `D`). Returns the stem
    of the sidecar pair; `load_basis` on it gives the basis back.
    """
    if w_star is None:
        w_star = family.minimize(k, tol=cfg.minimizer_tol, max_iters=cfg.minimizer_max_iters)
    build_subspace(family, k, w_star, cfg.D, cfg, RunContext(store=cache))
    return cache.stem(SubspaceKey.for_point(cfg, k, cfg.D, w_star))
