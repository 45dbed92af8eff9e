"""
Subcommand handlers

Each handler reads its JSON config, applies `--set` overrides and the resolved
seed, validates, computes, and writes its results through an OutputDir. The
dispatcher wraps every handler with the `run.json` manifest.
"""

import json
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from src.cli.cache import SubspaceCache, subspace_cache
from src.cli.checks import SuiteOptions, format_table, run_property_suite
from src.cli.models import CliConfig, CriterionConfig, RunManifest, parse_criterion_config
from src.cli.outputs import MANIFEST_NAME, OutputDir, package_versions
from src.cli.overrides import apply_overrides, config_hash
from src.config import settings
from src.criteria import (CriterionEstimate, ProbeSpec, delta1, delta_p_mc,
                          direct_mc, eigenvalue_increments, full_space_gm,
                          gm_closed_form, quad_mc, spectral_closed_form,
                          stable_directions_defect, surrogate_coeffs)
from src.curvature import load_basis, save_basis
from src.errors import ConfigError, PropertyCheckError
from src.experiments import parse_sweep_config, read_json, run_experiment, write_records_csv
from src.logging_config import setup_logging
from src.loss_family import build_family, dump_family_spec, parse_family_spec

logger = setup_logging(service_name="cli")


@dataclass
class CommandOutcome:
    config_hash: str = ""
    seed: Optional[int] = None
    cache: Optional[SubspaceCache] = None


def _document(cli: CliConfig) -> dict:
    if cli.config_path is None:
        raise ConfigError(f"{cli.subcommand} needs --config")
    return apply_overrides(read_json(cli.config_path), cli.overrides, cli.resolved_seed())


def _cache(cli: CliConfig) -> SubspaceCache:
    return SubspaceCache(cli.cache_dir or Path(settings.CACHE_DIR))


def _threads(cli: CliConfig, configured: int) -> int:
    if cli.threads is not None:
        return cli.threads
    return 1 if cli.determinism_check else configured


# ============================================================================
# Handlers
# ============================================================================


def gen_family(cli: CliConfig, out: OutputDir) -> CommandOutcome:
    """Validate a family spec and write its canonical form."""
    data = _document(cli)
    spec = parse_family_spec(data)
    target = out.claim("family.json")
    family = build_family(spec)
    logger.info(
        f"Family {spec.kind}: N={family.dimension}, max_samples={family.max_samples}"
    )
    target.write_text(dump_family_spec(spec), encoding="utf-8")
    return CommandOutcome(config_hash=config_hash(data), seed=spec.seed)


def subspace(cli: CliConfig, out: OutputDir) -> CommandOutcome:
    """Build (or load from the cache) the top-D subspace at the minimizer and export it."""
    data = _document(cli)
    cfg = parse_criterion_config(data)
    out.claim("subspace.json")
    out.claim("subspace.bin")
    family = build_family(cfg.family)
    cache = _cache(cli)
    stem = subspace_cache(family, cfg.k, cfg, cache)
    save_basis(load_basis(stem), out.root / "subspace")
    return CommandOutcome(config_hash=config_hash(data), seed=cfg.seed, cache=cache)


def _estimate(
    name: str, cfg: CriterionConfig, family, w, basis, coeffs, threads: int
) -> CriterionEstimate:
    if name == "delta1":
        return delta1(family, cfg.k, w)
    if name == "delta_p_mc":
        probe = ProbeSpec(kind="full_gaussian", center=w.w, sigma=cfg.sigma)
        return delta_p_mc(family, cfg.k, probe, cfg.p, cfg.S, cfg.seed, threads)
    if name == "direct_mc":
        return direct_mc(family, cfg.k, w, basis, cfg.sigma, cfg.S, cfg.seed, threads)
    if name == "quad_mc":
        return quad_mc(coeffs, cfg.S, cfg.seed, threads)
    if name == "gm_closed_form":
        return gm_closed_form(coeffs)
    if name == "spectral_closed_form":
        estimate = spectral_closed_form(eigenvalue_increments(coeffs), cfg.sigma)
        return estimate.model_copy(update={"k": cfg.k})
    if name == "full_space_gm":
        return full_space_gm(family, cfg.k, w, cfg.sigma)
    raise ConfigError(f"unknown estimator '{name}'")


def criterion(cli: CliConfig, out: OutputDir) -> CommandOutcome:
    """Evaluate the requested estimators at one (k, D, sigma) cell."""
    data = _document(cli)
    cfg = parse_criterion_config(data)
    estimates_path = out.claim("criterion.json")
    coefficients_path = out.claim("coefficients.json")
    family = build_family(cfg.family)
    threads = _threads(cli, 1)

    w = family.minimize(cfg.k, tol=cfg.minimizer_tol, max_iters=cfg.minimizer_max_iters)
    if not w.provenance.converged:
        logger.warning(f"Minimizer did not converge: ||g|| = {w.achieved_grad_norm:.3e}")
    cache = _cache(cli)
    basis = load_basis(subspace_cache(family, cfg.k, cfg, cache, w_star=w))
    coeffs = surrogate_coeffs(family, cfg.k, w, basis, cfg.sigma)
    if "spectral_closed_form" in cfg.estimators:
        logger.info(f"Off-diagonal share of B_k: {stable_directions_defect(coeffs):.3e}")

    estimates = [_estimate(name, cfg, family, w, basis, coeffs, threads) for name in cfg.estimators]
    for estimate in estimates:
        logger.info(
            f"{estimate.estimator}: {estimate.value:.6e} (se {estimate.std_error:.2e}, S={estimate.samples})"
        )
    payload = [estimate.model_dump(mode="json") for estimate in estimates]
    estimates_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    coefficients_path.write_text(coeffs.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return CommandOutcome(config_hash=config_hash(data), seed=cfg.seed, cache=cache)


def experiment(cli: CliConfig, out: OutputDir) -> CommandOutcome:
    """Run one sweep and write `<experiment>.csv` plus its summary JSON."""
    data = _document(cli)
    cfg = parse_sweep_config(data)
    cfg = cfg.model_copy(update={"threads": _threads(cli, cfg.threads)})
    csv_path = out.claim(f"{cfg.experiment}.csv")
    summary_path = out.claim(f"{cfg.experiment}_summary.json")
    # a cache hit reports zero HVPs, so determinism runs always recompute
    cache = None if cli.determinism_check else _cache(cli)
    digest = config_hash(data)

    result = run_experiment(cfg, store=cache, config_hash=digest)
    write_records_csv(result.records, csv_path, zero_timings=cli.determinism_check)
    summary_path.write_text(result.summary.model_dump_json(indent=2) + "\n", encoding="utf-8")
    failed = [name for name, passed in result.summary.checks.items() if not passed]
    if failed:
        logger.warning(f"{cfg.experiment}: property checks failed: {', '.join(failed)}")
    return CommandOutcome(config_hash=digest, seed=cfg.seed, cache=cache)


COMMANDS: Dict[str, Callable[[CliConfig, OutputDir], CommandOutcome]] = {
    "gen-family": gen_family,
    "subspace": subspace,
    "criterion": criterion,
    "experiment": experiment,
}


# ============================================================================
# Dispatch
# ============================================================================


def run_command(cli: CliConfig, argv: Sequence[str]) -> None:
    """Run one subcommand and write its manifest."""
    if cli.out_dir is None:
        raise ConfigError(f"{cli.subcommand} needs --out")
    started = time.perf_counter()
    out = OutputDir(cli.out_dir, force=cli.force)
    out.claim(MANIFEST_NAME)
    outcome = COMMANDS[cli.subcommand](cli, out)
    cache = outcome.cache
    manifest = RunManifest(
        command=cli.subcommand,
        argv=list(argv),
        config_hash=outcome.config_hash,
        seed=outcome.seed,
        versions=package_versions(),
        settings=settings.public_dict(),
        wall_time=time.perf_counter() - started,
        cache_hits=cache.hits if cache else 0,
        cache_misses=cache.misses if cache else 0,
    )
    path = out.write_manifest(manifest)
    logger.info(f"{cli.subcommand} finished in {manifest.wall_time:.2f}s; manifest at {path}")


def run_check(cli: CliConfig, argv: Sequence[str]) -> str:
    """
    Run the property suite and return its table.

    With --out the per-check results go to `check.json` next to a manifest.

    Raises:
        PropertyCheckError: If any check fails (after the table has been built)
    """
    started = time.perf_counter()
    seed = cli.resolved_seed() or 0
    threads = _threads(cli, 1)

    def execute(workdir: Path) -> List:
        options = SuiteOptions(
            quick=cli.quick, seed=seed, threads=threads,
            determinism=cli.determinism_check, workdir=workdir,
        )
        return run_property_suite(options)

    if cli.out_dir is not None:
        out = OutputDir(cli.out_dir, force=cli.force)
        out.claim(MANIFEST_NAME)
        results_path = out.claim("check.json")
        results = execute(out.root)
        results_path.write_text(
            json.dumps([r.model_dump() for r in results], indent=2) + "\n", encoding="utf-8"
        )
        out.write_manifest(
            RunManifest(
                command="check",
                argv=list(argv),
                seed=seed,
                versions=package_versions(),
                settings=settings.public_dict(),
                wall_time=time.perf_counter() - started,
            )
        )
    else:
        with tempfile.TemporaryDirectory(prefix="stabkit-check-") as workdir:
            results = execute(Path(workdir))

    table = format_table(results)
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise PropertyCheckError(
            f"{len(failed)} of {len(results)} checks failed: {', '.join(failed)}", table
        )
    return table
