"""
Property suite behind `stabkit --check`

Each check exercises one library invariant end to end on desk-sized inputs
and reports pass/fail with a short detail string. Sweep-backed checks run
through `run_experiment`; in determinism mode those sweeps run twice and their
timing-free CSVs must match byte for byte.
"""

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Tuple

import numpy as np

from src.cli.models import CheckResult
from src.criteria import (SurrogateCoefficients, direct_mc,
                          empirical_bound_constants, extremality_argmax,
                          gm_closed_form, quad_mc, rate_bound,
                          spectral_closed_form, surrogate_coeffs)
from src.curvature import EigSolverConfig, matrix_operator, top_d_eigenpairs
from src.errors import StabkitError
from src.experiments import (SolverConfig, build_subspace, parse_sweep_config,
                             run_experiment, write_records_csv)
from src.logging_config import setup_logging
from src.loss_family import (MlpFamilySpec, QuadraticFamilySpec, build_family)
from src.numerics import (RngStream, dense_sym_eigh, gaussian_quartic_moment,
                          orthonormality_error, projector_distance)

logger = setup_logging(service_name="checks")

CheckOutcome = Tuple[bool, str]


@dataclass
class SuiteOptions:
    quick: bool = False
    seed: int = 0
    threads: int = 1
    determinism: bool = False
    workdir: Path = Path(".")


# ============================================================================
# Sweep configs
# ============================================================================


def decay_config(options: SuiteOptions) -> dict:
    return {
        "experiment": "decay",
        "family": {
            "kind": "quadratic", "dimension": 32, "max_samples": 65, "d_true": 4,
            "center_scale": 0.1, "offset_law": "alternating", "seed": 7,
        },
        "k_grid": [2, 4, 8, 16, 32, 64],
        "D_grid": [4],
        "sigma_grid": [1e-3],
        "S": 512,
        "estimators": ["delta1", "delta_p_mc", "direct_mc"],
        "slope_k_min": 8,
        "seed": options.seed,
        "threads": options.threads,
    }


def ratio_config(options: SuiteOptions) -> dict:
    return {
        "experiment": "ratio",
        "family": {"kind": "quadratic", "dimension": 64, "max_samples": 17, "d_true": 5, "seed": 11},
        "k_grid": [8] if options.quick else [8, 16],
        "D_grid": [5, 10, 64],
        "sigma_grid": [1e-3] if options.quick else [1e-4, 1e-3],
        "S": 2000 if options.quick else 10_000,
        "seed": options.seed,
        "threads": options.threads,
    }


def proxy_config(options: SuiteOptions, family: dict) -> dict:
    return {
        "experiment": "proxy_validity",
        "family": family,
        "k_grid": [32],
        "D_grid": [1],
        "sigma_grid": [1e-6, 1e-4, 1e-2],
        "proxy_draws": 16 if options.quick else 64,
        "seed": options.seed,
    }


def timing_config(options: SuiteOptions) -> dict:
    return {
        "experiment": "estimators",
        "family": {
            "kind": "quadratic", "dimension": 2000 if options.quick else 10_000,
            "max_samples": 9, "d_true": 10, "seed": 5,
        },
        "k_grid": [8],
        "D_grid": [10],
        "sigma_grid": [1e-3],
        "S_grid": [10_000],
        "timing_repeats": 1 if options.quick else 3,
        "seed": options.seed,
    }


def _sweep(name: str, data: dict, wanted: List[str], options: SuiteOptions) -> CheckOutcome:
    cfg = parse_sweep_config(data)
    result = run_experiment(cfg)
    missing = [check for check in wanted if check not in result.summary.checks]
    failed = [check for check in wanted if not result.summary.checks.get(check, False)]
    detail = ", ".join(f"{check}={result.summary.checks.get(check)}" for check in wanted)
    if result.summary.slopes:
        slopes = {key: value for key, value in result.summary.slopes.items() if value is not None}
        detail += "; slopes " + ", ".join(f"{key}={value:.3f}" for key, value in slopes.items())

    if options.determinism:
        first = options.workdir / "first" / f"{name}.csv"
        second = options.workdir / "second" / f"{name}.csv"
        write_records_csv(result.records, first, zero_timings=True)
        write_records_csv(run_experiment(cfg).records, second, zero_timings=True)
        identical = first.read_bytes() == second.read_bytes()
        detail += f"; rerun csv identical={identical}"
        if not identical:
            return False, detail
    return not missing and not failed, detail


# ============================================================================
# Direct checks
# ============================================================================


def check_increment_identity(options: SuiteOptions) -> CheckOutcome:
    """Increment identity against plain risk subtraction on both family kinds."""
    generator = RngStream(options.seed, stream_id=1).generator()
    families = [
        build_family(QuadraticFamilySpec(dimension=16, max_samples=40, seed=options.seed)),
        build_family(MlpFamilySpec(layer_sizes=[3, 6, 1], max_samples=40, seed=options.seed)),
    ]
    worst = 0.0
    for trial in range(100):
        family = families[trial % 2]
        k = int(generator.integers(1, family.max_samples))
        w = generator.standard_normal(family.dimension)
        after, before = family.empirical_risk(k + 1, w), family.empirical_risk(k, w)
        error = abs(family.increment(k, w) - (after - before)) / (1.0 + abs(after) + abs(before))
        worst = max(worst, error)
    return worst <= 1e-12, f"worst relative error {worst:.2e} over 100 triples"


def check_gaussian_moment(options: SuiteOptions) -> CheckOutcome:
    """E[(z^T B z)^2] by Monte Carlo against its closed form."""
    generator = RngStream(options.seed, stream_id=2).generator()
    samples = 100_000 if options.quick else 1_000_000
    trials = 5 if options.quick else 20
    worst = 0.0
    for trial in range(trials):
        d = int(generator.integers(1, 11))
        raw = generator.standard_normal((d, d))
        b = 0.5 * (raw + raw.T)
        sigma = float(generator.uniform(0.5, 2.0))
        # (1/2 z^T (2B) z)^2 = (z^T B z)^2
        coeffs = SurrogateCoefficients(a=0.0, c=np.zeros(d), B=2.0 * b, sigma=sigma)
        estimate = quad_mc(coeffs, samples, (options.seed + trial) % 2**64, options.threads)
        target = gaussian_quartic_moment(b, sigma)
        worst = max(worst, abs(estimate.value - target) / estimate.std_error)
    return worst <= 5.0, f"worst deviation {worst:.2f} standard errors, S={samples}"


def check_estimator_agreement(options: SuiteOptions) -> CheckOutcome:
    """direct_mc, quad_mc and gm_closed_form agree on a quadratic family; direct_mc under the rate bound."""
    spec = QuadraticFamilySpec(dimension=64, max_samples=33, d_true=5, seed=options.seed)
    family = build_family(spec)
    solver = SolverConfig(family=spec, seed=options.seed)
    ks = [2, 8] if options.quick else [2, 8, 32]
    ds = [1, 5] if options.quick else [1, 5, 10]
    sigmas = [1e-3] if options.quick else [1e-4, 1e-3, 1e-2]
    samples = 2000 if options.quick else 10_000

    agree, bounded, worst = True, True, 0.0
    for k in ks:
        w = family.minimize(k)
        constants = empirical_bound_constants(family, k, w, seed=options.seed)
        basis = build_subspace(family, k, w, ds[-1], solver)
        for d in ds:
            leading = basis.leading(d)
            for sigma in sigmas:
                coeffs = surrogate_coeffs(family, k, w, leading, sigma)
                gm = gm_closed_form(coeffs).value
                direct = direct_mc(family, k, w, leading, sigma, samples, options.seed, options.threads)
                quad = quad_mc(coeffs, samples, options.seed, options.threads)
                floor = 1e-12 * gm
                pairs = [
                    (direct.value, quad.value, np.hypot(direct.std_error, quad.std_error)),
                    (direct.value, gm, direct.std_error),
                    (quad.value, gm, quad.std_error),
                ]
                for left, right, error in pairs:
                    gap = abs(left - right)
                    agree &= gap <= 4.0 * error + floor
                    if error > 0:
                        worst = max(worst, gap / error)
                bounded &= direct.value <= rate_bound(constants, sigma, d, k)
    cells = len(ks) * len(ds) * len(sigmas)
    return agree and bounded, (
        f"{cells} cells, worst gap {worst:.2f} combined standard errors, "
        f"below rate bound={bounded}"
    )


def check_spectral_extremality(options: SuiteOptions) -> CheckOutcome:
    """Spectral closed form equals the diagonal Gaussian moment; leading sets are extremal."""
    generator = RngStream(options.seed, stream_id=3).generator()
    worst = 0.0
    for _ in range(50):
        d = int(generator.integers(1, 11))
        deltas = generator.uniform(-1.0, 1.0, d)
        sigma = float(generator.uniform(0.1, 2.0))
        coeffs = SurrogateCoefficients(a=0.0, c=np.zeros(d), B=np.diag(deltas), sigma=sigma)
        closed = gm_closed_form(coeffs).value
        spectral = spectral_closed_form(deltas, sigma).value
        worst = max(worst, abs(closed - spectral) / max(abs(spectral), 1e-300))
    argmax_ok = True
    for _ in range(50):
        n = int(generator.integers(1, 13))
        deltas = np.sort(generator.uniform(0.0, 1.0, n))[::-1]
        for d in range(1, n + 1):
            try:
                best, _ = extremality_argmax(deltas, d)
            except StabkitError:
                argmax_ok = False
                continue
            argmax_ok &= best == tuple(range(1, d + 1))
    return worst <= 1e-12 and argmax_ok, (
        f"worst spectral mismatch {worst:.2e}, extremality holds={argmax_ok}"
    )


def _gap_conditioned(n: int, d: int, generator: np.random.Generator) -> np.ndarray:
    top = 20.0 - np.arange(d)
    rest = generator.uniform(-5.0, top[-1] - 0.1, n - d)
    basis = np.linalg.qr(generator.standard_normal((n, n)))[0]
    return (basis * np.concatenate([top, rest])) @ basis.T


def check_eigensolver(options: SuiteOptions) -> CheckOutcome:
    """Deflated power iteration against the dense oracle."""
    generator = RngStream(options.seed, stream_id=4).generator()
    trials = 5 if options.quick else 20
    worst_value, worst_projector, worst_ortho = 0.0, 0.0, 0.0
    ok = True
    for trial in range(trials):
        matrix = _gap_conditioned(80, 10, generator)
        cfg = EigSolverConfig(D=10, tol=1e-8, max_iters=20_000, seed=(options.seed + trial) % 2**64)
        basis = top_d_eigenpairs(matrix_operator(matrix), 80, cfg)
        values, vectors = dense_sym_eigh(matrix)
        scale = 1.0 + abs(values[0])
        value_error = float(np.max(np.abs(basis.eigenvalues - values[:10])))
        projector = projector_distance(basis.u, vectors[:, :10])
        ortho = orthonormality_error(basis.u)
        ok &= value_error <= 1e-6 * scale and projector <= 1e-4 and ortho <= 1e-8
        worst_value = max(worst_value, value_error / scale)
        worst_projector = max(worst_projector, projector)
        worst_ortho = max(worst_ortho, ortho)
    algebraic = top_d_eigenpairs(matrix_operator(np.diag([3.0, -5.0, 1.0])), 3, EigSolverConfig(D=1))
    top_ok = abs(algebraic.eigenvalues[0] - 3.0) <= 1e-5
    return ok and top_ok, (
        f"eigenvalue {worst_value:.1e}, projector {worst_projector:.1e}, "
        f"orthonormality {worst_ortho:.1e}, diag(3,-5,1) top={algebraic.eigenvalues[0]:.6f}"
    )


# ============================================================================
# Suite
# ============================================================================


def _proxy(options: SuiteOptions) -> CheckOutcome:
    mlp = {"kind": "mlp", "layer_sizes": [4, 16, 1], "max_samples": 40, "seed": 3}
    quadratic = {"kind": "quadratic", "dimension": 16, "max_samples": 40, "seed": 3}
    mlp_ok, mlp_detail = _sweep(
        "proxy_mlp", proxy_config(options, mlp), ["taylor_regime_split", "taylor_small_sigma"], options
    )
    quad_ok, quad_detail = _sweep(
        "proxy_quadratic", proxy_config(options, quadratic), ["taylor_exact_on_quadratic"], options
    )
    return mlp_ok and quad_ok, f"{mlp_detail}; {quad_detail}"


SUITE: Dict[str, Callable[[SuiteOptions], CheckOutcome]] = {
    "increment_identity": check_increment_identity,
    "gaussian_moment": check_gaussian_moment,
    "estimator_agreement": check_estimator_agreement,
    "decay_rates": lambda o: _sweep(
        "decay", decay_config(o),
        ["delta1_slope_in_band", "direct_mc_slope_in_band", "direct_mc_below_rate_bound"], o,
    ),
    "spectral_extremality": check_spectral_extremality,
    "eigensolver_fidelity": check_eigensolver,
    "proxy_validity": _proxy,
    "subspace_ratio": lambda o: _sweep(
        "ratio", ratio_config(o), ["ratio_in_band", "ratio_one_at_full_dimension"], o
    ),
    "stage_timing": lambda o: _sweep(
        "estimators", timing_config(o),
        ["stage3_ordering", "stage1_dominates", "direct_over_gm_speedup_100x"], o,
    ),
}


def run_property_suite(options: SuiteOptions) -> List[CheckResult]:
    """Run every check; a raised library error counts as a failure of that check."""
    results = []
    for name, check in SUITE.items():
        logger.info(f"check {name}: running")
        started = time.perf_counter()
        try:
            passed, detail = check(options)
        except StabkitError as exc:
            passed, detail = False, f"{exc.category}: {exc}"
        elapsed = time.perf_counter() - started
        level = logger.info if passed else logger.warning
        level(f"check {name}: {'pass' if passed else 'FAIL'} in {elapsed:.2f}s ({detail})")
        results.append(CheckResult(name=name, passed=bool(passed), detail=detail, seconds=elapsed))
    return results


def format_table(results: List[CheckResult]) -> str:
    width = max(len(result.name) for result in results)
    lines = [f"{'check':<{width}}  result  seconds  detail"]
    for result in results:
        status = "pass" if result.passed else "FAIL"
        lines.append(f"{result.name:<{width}}  {status:<6}  {result.seconds:7.2f}  {result.detail}")
    passed = sum(result.passed for result in results)
    lines.append(f"{passed}/{len(results)} checks passed")
    return "\n".join(lines)
