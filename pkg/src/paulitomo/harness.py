"""Case-study orchestration: strategies, metrics, robustness sweep, CSV export."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    PauliChannel,
    affine_basis_qubit,
    affine_basis_qutrit,
    channel_from_dict,
    channel_to_dict,
    choi,
)
from .design import optimal_configs_qubit
from .errors import DimensionError, NonConvergenceError, ValidationError
from .estimate import (
    TomographyConfiguration,
    estimate_affine,
    estimate_optimal_closed_form,
    exact_freqs,
    relative_freqs,
    simulate_record,
)
from .qstate import (
    DensityMatrix,
    Mub,
    basis_povm,
    bloch_to_density,
    mub_from_directions,
    projective_povm,
    standard_mub,
    substream,
    tetrahedron_povm,
)
from .solver import SolverSettings, gen_lambda_constraints, qubit_lambda_constraints

STRATEGIES = (
    "nonoptimal-minimal",
    "nonoptimal-input",
    "optimal",
    "qutrit-nonoptimal",
    "qutrit-optimal",
)

_DIAGONAL_INPUT = np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0)


def rotate_bloch(v, axis, alpha: float) -> np.ndarray:
    """Rodrigues rotation of v by alpha radians about a unit axis."""
    v = np.asarray(v, dtype=float)
    a = np.asarray(axis, dtype=float)
    if v.shape != (3,) or a.shape != (3,):
        raise DimensionError("expected 3-vectors")
    if abs(np.linalg.norm(a) - 1.0) > 1e-8:
        raise ValidationError("rotation axis must be a unit vector")
    c, s = np.cos(alpha), np.sin(alpha)
    return v * c + np.cross(a, v) * s + a * (a @ v) * (1.0 - c)


def empirical_stats(estimates):
    """Sample mean and unbiased per-component variance of parameter estimates."""
    arr = np.asarray(estimates, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise ValidationError("need at least two estimates for empirical statistics")
    return arr.mean(axis=0), arr.var(axis=0, ddof=1)


def hs_error(x_hat, x_true) -> float:
    """Hilbert-Schmidt (Frobenius) norm of the estimation error."""
    a = np.asarray(getattr(x_hat, "matrix", x_hat), dtype=complex)
    b = np.asarray(getattr(x_true, "matrix", x_true), dtype=complex)
    if a.shape != b.shape:
        raise DimensionError("matrices have different shapes")
    return float(np.linalg.norm(a - b))


@dataclass(frozen=True, eq=False)
class CaseStudySpec:
    """One reproducible experiment: channel, configuration strategy, shot grid."""

    channel: object
    strategy: str
    shot_grid: tuple
    trials: int = 5
    seed: int = 0
    exact: bool = False

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"unknown strategy {self.strategy!r}")
        grid = tuple(int(n) for n in self.shot_grid)
        if not grid or any(n < 1 for n in grid):
            raise ValidationError("shot grid must contain positive counts")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValidationError("shot grid must be strictly increasing")
        if int(self.trials) < 1:
            raise ValidationError("trial count must be at least 1")
        want_dim = 3 if self.strategy.startswith("qutrit") else 2
        if self.channel.dim != want_dim:
            raise ValidationError(
                f"strategy {self.strategy!r} needs a dimension-{want_dim} channel"
            )
        object.__setattr__(self, "shot_grid", grid)
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True, eq=False)
class MetricsRow:
    n_shots: int
    trial_count: int
    lambda_mean: np.ndarray
    lambda_var: np.ndarray
    hs_error: float
    complete: bool = True


@dataclass(frozen=True, eq=False)
class CaseStudyResult:
    spec: CaseStudySpec
    rows: tuple
    closed_form_rows: tuple = ()


def _strategy_configs(strategy: str, lam, n_shots: int):
    """Configurations for one strategy; returns (configs, direction order or None)."""
    if strategy == "nonoptimal-minimal":
        cfg = TomographyConfiguration(
            input=bloch_to_density(_DIAGONAL_INPUT),
            povm=tetrahedron_povm(),
            shots=n_shots,
        )
        return [cfg], None
    if strategy == "nonoptimal-input":
        rho = bloch_to_density(_DIAGONAL_INPUT)
        configs = [
            TomographyConfiguration(
                input=rho, povm=projective_povm(np.eye(3)[i]), shots=n_shots
            )
            for i in range(3)
        ]
        return configs, None
    if strategy == "optimal":
        design = optimal_configs_qubit(standard_mub(2), lam, shots=n_shots)
        return list(design.configs), design.order
    mub = standard_mub(3)
    if strategy == "qutrit-nonoptimal":
        vec = sum(mub.bases[i][0] for i in range(4))
        vec = vec / np.linalg.norm(vec)
        rho = DensityMatrix(np.outer(vec, vec.conj()))
        configs = [
            TomographyConfiguration(input=rho, povm=basis_povm(mub, i), shots=n_shots)
            for i in range(4)
        ]
        return configs, None
    configs = []
    for i in range(4):
        vec = mub.bases[i][0]
        rho = DensityMatrix(np.outer(vec, vec.conj()))
        configs.append(
            TomographyConfiguration(input=rho, povm=basis_povm(mub, i), shots=n_shots)
        )
    return configs, None


def _estimation_pieces(strategy: str):
    if strategy.startswith("qutrit"):
        return affine_basis_qutrit(), gen_lambda_constraints(3)
    return affine_basis_qubit(), qubit_lambda_constraints()


def _closed_form_from_freqs(freqs, order) -> np.ndarray:
    lam_hat = np.zeros(3)
    p_plus = np.array([f[0] for f in freqs])
    p_minus = np.array([f[1] for f in freqs])
    diff = estimate_optimal_closed_form(p_plus, p_minus)
    for slot, direction in enumerate(order):
        lam_hat[direction] = diff[slot]
    return lam_hat


def _aggregate(n_shots, lam_hats, hs_errors, n_params) -> MetricsRow:
    count = len(lam_hats)
    if count == 0:
        nan = np.full(n_params, np.nan)
        return MetricsRow(
            n_shots=n_shots,
            trial_count=0,
            lambda_mean=nan,
            lambda_var=nan,
            hs_error=float("nan"),
            complete=False,
        )
    arr = np.asarray(lam_hats, dtype=float)
    var = arr.var(axis=0, ddof=1) if count > 1 else np.zeros(arr.shape[1])
    return MetricsRow(
        n_shots=n_shots,
        trial_count=count,
        lambda_mean=arr.mean(axis=0),
        lambda_var=var,
        hs_error=float(np.mean(hs_errors)),
    )


def run_case_study(
    spec: CaseStudySpec, settings: SolverSettings | None = None
) -> CaseStudyResult:
    """Simulate, estimate, and aggregate over the shot grid.

    Every (shot-grid row, trial) pair draws from its own child stream of the
    spec seed, so results are deterministic and trials are independent. The
    affine estimator runs for every strategy; the aligned (optimal) strategy
    additionally logs the closed-form estimator in a parallel row list. With
    ``exact`` set, sampled counts are replaced by exact outcome probabilities.
    """
    channel = spec.channel
    basis, ineq = _estimation_pieces(spec.strategy)
    x_true = choi(channel).matrix
    rows = []
    closed_rows = []
    for r, n_shots in enumerate(spec.shot_grid):
        configs, order = _strategy_configs(spec.strategy, channel.lam, n_shots)
        lam_hats, hs_errors, failures = [], [], 0
        cf_hats, cf_hs = [], []
        for t in range(spec.trials):
            if spec.exact:
                freqs = exact_freqs(channel, configs)
            else:
                record = simulate_record(channel, configs, substream(spec.seed, r, t))
                freqs = relative_freqs(record)
            try:
                est = estimate_affine(basis, ineq, configs, freqs, settings)
            except NonConvergenceError:
                failures += 1
                continue
            lam_hats.append(est.lam)
            hs_errors.append(hs_error(est.choi, x_true))
            if order is not None:
                cf = _closed_form_from_freqs(freqs, order)
                cf_hats.append(cf)
                cf_hs.append(float(np.linalg.norm(basis.evaluate(cf) - x_true)))
        rows.append(_aggregate(n_shots, lam_hats, hs_errors, basis.n_params))
        if order is not None:
            closed_rows.append(_aggregate(n_shots, cf_hats, cf_hs, basis.n_params))
    return CaseStudyResult(
        spec=spec, rows=tuple(rows), closed_form_rows=tuple(closed_rows)
    )


@dataclass(frozen=True, eq=False)
class RobustnessRow:
    alpha: float
    trial_count: int
    lambda_mean: np.ndarray
    lambda_var: np.ndarray
    hs_error: float


def robustness_sweep(
    lam,
    axis,
    alpha_grid,
    n_shots: int,
    trials: int = 5,
    seed: int = 0,
    settings: SolverSettings | None = None,
) -> tuple:
    """Directional-mismatch sweep for the aligned qubit strategy.

    For each angle alpha the data-generating channel has its three directions
    rotated by alpha about the axis, while estimation still assumes the
    standard directions. Each (angle, trial) pair draws from its own child
    stream of the seed.
    """
    lam = np.asarray(lam, dtype=float)
    axis = np.asarray(axis, dtype=float)
    if abs(np.linalg.norm(axis) - 1.0) > 1e-8:
        raise ValidationError("rotation axis must be a unit vector")
    basis, ineq = _estimation_pieces("optimal")
    rows = []
    for a_idx, alpha in enumerate(alpha_grid):
        dirs = np.stack([rotate_bloch(np.eye(3)[i], axis, alpha) for i in range(3)])
        true_channel = PauliChannel(lam, mub_from_directions(dirs))
        x_true = choi(true_channel).matrix
        configs, _ = _strategy_configs("optimal", lam, n_shots)
        lam_hats, hs_errors = [], []
        for t in range(trials):
            record = simulate_record(
                true_channel, configs, substream(int(seed), a_idx, t)
            )
            est = estimate_affine(basis, ineq, configs, record, settings)
            lam_hats.append(est.lam)
            hs_errors.append(hs_error(est.choi, x_true))
        arr = np.asarray(lam_hats)
        var = arr.var(axis=0, ddof=1) if trials > 1 else np.zeros(3)
        rows.append(
            RobustnessRow(
                alpha=float(alpha),
                trial_count=trials,
                lambda_mean=arr.mean(axis=0),
                lambda_var=var,
                hs_error=float(np.mean(hs_errors)),
            )
        )
    return tuple(rows)


def _float_cell(x) -> str:
    return repr(float(x))


def _metric_header(n_params: int) -> list:
    return (
        ["n_shots", "trial_count"]
        + [f"lambda_mean_{i + 1}" for i in range(n_params)]
        + [f"lambda_var_{i + 1}" for i in range(n_params)]
        + ["hs_error"]
    )


def write_case_study_csv(rows, path):
    """Plot-ready CSV, one row per shot count; float cells are repr round-trips."""
    n_params = max((len(r.lambda_mean) for r in rows if r.complete), default=3)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_metric_header(n_params))
        for row in rows:
            mean = row.lambda_mean if row.complete else [float("nan")] * n_params
            var = row.lambda_var if row.complete else [float("nan")] * n_params
            writer.writerow(
                [row.n_shots, row.trial_count]
                + [_float_cell(v) for v in mean]
                + [_float_cell(v) for v in var]
                + [_float_cell(row.hs_error)]
            )


def write_robustness_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["alpha", "trial_count"]
            + [f"lambda_mean_{i + 1}" for i in range(3)]
            + [f"lambda_var_{i + 1}" for i in range(3)]
            + ["hs_error"]
        )
        for row in rows:
            writer.writerow(
                [_float_cell(row.alpha), row.trial_count]
                + [_float_cell(v) for v in row.lambda_mean]
                + [_float_cell(v) for v in row.lambda_var]
                + [_float_cell(row.hs_error)]
            )


def spec_to_dict(spec: CaseStudySpec) -> dict:
    return {
        "channel": channel_to_dict(spec.channel),
        "strategy": spec.strategy,
        "shot_grid": list(spec.shot_grid),
        "trials": spec.trials,
        "seed": spec.seed,
        "exact": spec.exact,
    }


def spec_from_dict(data: dict) -> CaseStudySpec:
    return CaseStudySpec(
        channel=channel_from_dict(data["channel"]),
        strategy=data["strategy"],
        shot_grid=tuple(data["shot_grid"]),
        trials=int(data.get("trials", 5)),
        seed=int(data.get("seed", 0)),
        exact=bool(data.get("exact", False)),
    )


def write_sidecar(spec: CaseStudySpec, path):
    """JSON companion recording exactly what produced a CSV."""
    with open(path, "w") as fh:
        json.dump(spec_to_dict(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")


def metrics_rows_to_dicts(rows) -> list:
    out = []
    for row in rows:
        out.append(
            {
                "n_shots": row.n_shots,
                "trial_count": row.trial_count,
                "lambda_mean": [float(v) for v in row.lambda_mean],
                "lambda_var": [float(v) for v in row.lambda_var],
                "hs_error": float(row.hs_error),
                "complete": row.complete,
            }
        )
    return out


def robustness_rows_to_dicts(rows) -> list:
    return [
        {
            "alpha": row.alpha,
            "trial_count": row.trial_count,
            "lambda_mean": [float(v) for v in row.lambda_mean],
            "lambda_var": [float(v) for v in row.lambda_var],
            "hs_error": row.hs_error,
        }
        for row in rows
    ]
