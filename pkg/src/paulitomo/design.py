"""Fisher information for channel parameters and optimal-configuration search."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import AffineChoiBasis, affine_basis_qubit, affine_basis_qutrit
from .errors import DimensionError, SingularConfigurationError, ValidationError
from .estimate import TomographyConfiguration
from .qstate import (
    DensityMatrix,
    Mub,
    Povm,
    basis_povm,
    bloch_to_density,
    config_matrix,
    projective_povm,
    rng_from_seed,
)

_PROB_FLOOR = 1e-12
_GRAD_FLOOR = 1e-9
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class FisherMatrix:
    """Parameter-information matrix accumulated over a configuration set."""

    entries: np.ndarray
    configs_used: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", np.asarray(self.entries, dtype=float))

    @property
    def n_params(self) -> int:
        return self.entries.shape[0]


def _as_state_povm_pairs(configs):
    pairs = []
    for cfg in configs:
        if isinstance(cfg, TomographyConfiguration):
            pairs.append((cfg.input, cfg.povm))
        else:
            rho, povm = cfg
            pairs.append((rho, povm))
    if not pairs:
        raise ValidationError("at least one configuration is required")
    return pairs


def _stack_config_matrices(pairs) -> np.ndarray:
    return np.stack(
        [config_matrix(rho, el) for rho, povm in pairs for el in povm.elements]
    )


def fisher_trace_from_config_matrices(
    basis: AffineChoiBasis, lam, cmats
) -> float:
    """Trace-of-Fisher objective as a function of raw configuration matrices.

    Each outcome contributes sum_k g_k^2 / p with p the outcome probability
    and g_k its derivative in parameter k; the whole expression is convex in
    the configuration matrices (quadratic over linear, summed).
    """
    lam = np.asarray(lam, dtype=float)
    cmats = np.asarray(cmats, dtype=complex)
    x = basis.evaluate(lam)
    probs = np.einsum("aij,ji->a", cmats, x).real
    grads = np.einsum("aij,kji->ak", cmats, basis.terms).real
    total = 0.0
    for p, g in zip(probs, grads):
        if p < _PROB_FLOOR:
            if np.abs(g).max() <= _GRAD_FLOOR:
                continue
            raise SingularConfigurationError(
                "outcome has zero probability but nonzero parameter sensitivity"
            )
        total += float(g @ g) / p
    return total


def fisher_matrix(basis: AffineChoiBasis, lam, configs) -> FisherMatrix:
    """Fisher information F_ij = sum_alpha g_i g_j / p_alpha for affine parameters.

    Outcomes with probability below 1e-12 and no parameter sensitivity are
    skipped; a dead outcome that still carries sensitivity makes the matrix
    singular in a way the caller must handle, so it raises.
    """
    lam = np.asarray(lam, dtype=float)
    pairs = _as_state_povm_pairs(configs)
    cmats = _stack_config_matrices(pairs)
    x = basis.evaluate(lam)
    probs = np.einsum("aij,ji->a", cmats, x).real
    grads = np.einsum("aij,kji->ak", cmats, basis.terms).real
    f = np.zeros((basis.n_params, basis.n_params))
    for p, g in zip(probs, grads):
        if p < _PROB_FLOOR:
            if np.abs(g).max() <= _GRAD_FLOOR:
                continue
            raise SingularConfigurationError(
                "outcome has zero probability but nonzero parameter sensitivity"
            )
        f += np.outer(g, g) / p
    return FisherMatrix(entries=(f + f.T) / 2.0, configs_used=tuple(pairs))


def fisher_trace(basis: AffineChoiBasis, lam, configs) -> float:
    """Trace of the Fisher matrix, accumulated directly."""
    pairs = _as_state_povm_pairs(configs)
    return fisher_trace_from_config_matrices(
        basis, lam, _stack_config_matrices(pairs)
    )


def fisher_qubit(b, m, lam) -> float:
    """Closed-form Fisher trace for a qubit direction configuration.

    Input Bloch vector b, projective measurement along unit m:
    (sum m_i^2 b_i^2) / (1 - (sum m_i b_i lam_i)^2).
    """
    b = np.asarray(b, dtype=float)
    m = np.asarray(m, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if b.shape != (3,) or m.shape != (3,) or lam.shape != (3,):
        raise DimensionError("expected Bloch 3-vectors and a 3-parameter vector")
    if np.linalg.norm(b) > 1.0 + 1e-10:
        raise ValidationError("input Bloch vector must lie in the unit ball")
    if abs(np.linalg.norm(m) - 1.0) > 1e-8:
        raise ValidationError("measurement direction must be a unit vector")
    c = m * b
    denom = 1.0 - float(c @ lam) ** 2
    if denom <= _PROB_FLOOR:
        raise SingularConfigurationError(
            "deterministic outcome: configuration carries no Fisher information"
        )
    return float(c @ c) / denom


@dataclass(frozen=True, eq=False)
class OptimalDesign:
    """Aligned qubit configurations ordered by decreasing parameter magnitude."""

    configs: tuple
    order: tuple
    objectives: tuple

    def __len__(self):
        return len(self.configs)

    def __iter__(self):
        return iter(self.configs)

    def __getitem__(self, i):
        return self.configs[i]


def optimal_configs_qubit(directions: Mub, lam, shots: int = 1) -> OptimalDesign:
    """One aligned configuration per channel direction, strongest parameter first.

    Configuration i prepares the pure state along direction i and measures the
    projective POVM along the same direction; ties in |lam| break toward the
    lower direction index.
    """
    lam = np.asarray(lam, dtype=float)
    if directions.dim != 2 or lam.shape != (3,):
        raise DimensionError("expected a qubit direction set and 3 parameters")
    order = tuple(sorted(range(3), key=lambda i: (-abs(lam[i]), i)))
    configs = []
    objectives = []
    for i in order:
        v = directions.direction_bloch(i)
        configs.append(
            TomographyConfiguration(
                input=bloch_to_density(v), povm=projective_povm(v), shots=shots
            )
        )
        objectives.append(1.0 / (1.0 - float(lam[i]) ** 2))
    return OptimalDesign(
        configs=tuple(configs), order=order, objectives=tuple(objectives)
    )


def _golden_max(f, lo, hi, iters: int = 40):
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def _qubit_config_from_angles(angles) -> TomographyConfiguration:
    tb, pb, tm, pm = angles
    b = np.array([np.sin(tb) * np.cos(pb), np.sin(tb) * np.sin(pb), np.cos(tb)])
    m = np.array([np.sin(tm) * np.cos(pm), np.sin(tm) * np.sin(pm), np.cos(tm)])
    return TomographyConfiguration(
        input=bloch_to_density(b), povm=projective_povm(m)
    )


def _givens(n, i, j, angle, phase):
    g = np.eye(n, dtype=complex)
    g[i, i] = np.cos(angle)
    g[j, j] = np.cos(angle)
    g[i, j] = -np.exp(1j * phase) * np.sin(angle)
    g[j, i] = np.exp(-1j * phase) * np.sin(angle)
    return g


def _qutrit_config_from_angles(angles) -> TomographyConfiguration:
    a1, a2, p1, p2, g1, g2, g3, q1, q2, q3 = angles
    psi = np.array(
        [
            np.cos(a1),
            np.sin(a1) * np.cos(a2) * np.exp(1j * p1),
            np.sin(a1) * np.sin(a2) * np.exp(1j * p2),
        ]
    )
    rho = np.outer(psi, psi.conj())
    u = _givens(3, 0, 1, g1, q1) @ _givens(3, 0, 2, g2, q2) @ _givens(3, 1, 2, g3, q3)
    povm = Povm([np.outer(u[:, k], u[:, k].conj()) for k in range(3)])
    return TomographyConfiguration(input=DensityMatrix(rho), povm=povm)


@dataclass(frozen=True, eq=False)
class DesignSearchResult:
    """Outcome of the random-restart configuration search."""

    best_config: TomographyConfiguration
    best_objective: float
    restart_results: tuple
    mub_aligned: tuple
    mub_attains_max: bool


def _mub_aligned_evaluations(basis, lam, mub):
    rows = []
    for i in range(mub.n_bases):
        vec = mub.bases[i][0]
        rho = DensityMatrix(np.outer(vec, vec.conj()))
        cfg = TomographyConfiguration(input=rho, povm=basis_povm(mub, i))
        rows.append((i, cfg, fisher_trace(basis, lam, [cfg])))
    return tuple(rows)


def search_optimal_configs(
    channel, restarts: int = 4, rng=None, line_searches: int = 200
) -> DesignSearchResult:
    """Random-restart coordinate ascent over (pure input, projective POVM) pairs.

    Qubit configurations are parametrized by 4 spherical angles, qutrit ones
    by 10 angles (pure-state coordinates plus a Givens factorization of the
    measurement basis). Each restart runs coordinate-wise golden-section line
    searches. Alongside the search, every direction-aligned configuration
    (input pure state in basis i, measurement in basis i) is evaluated, and
    the result flags whether an aligned configuration matches the best value
    found.
    """
    if restarts < 0:
        raise ValidationError("restart count must be nonnegative")
    gen = rng_from_seed(rng if rng is not None else 0)
    dim = channel.dim
    if dim == 2:
        basis = affine_basis_qubit(channel.mub)
        n_angles, build = 4, _qubit_config_from_angles
    elif dim == 3:
        basis = affine_basis_qutrit(channel.mub)
        n_angles, build = 10, _qutrit_config_from_angles
    else:
        raise DimensionError("configuration search supports dimensions 2 and 3")
    lam = channel.lam

    def objective(angles):
        try:
            cfg = build(angles)
            return fisher_trace(basis, lam, [cfg])
        except SingularConfigurationError:
            return -np.inf

    aligned = _mub_aligned_evaluations(basis, lam, channel.mub)
    best_config = None
    best_objective = -np.inf
    restart_rows = []
    for _ in range(restarts):
        x = gen.uniform(0.0, np.pi, size=n_angles)
        fx = objective(x)
        for it in range(line_searches):
            i = it % n_angles
            lo, hi = x[i] - np.pi / 2.0, x[i] + np.pi / 2.0

            def line(t, i=i):
                trial = x.copy()
                trial[i] = t
                return objective(trial)

            t_best, f_best = _golden_max(line, lo, hi)
            if f_best > fx:
                x[i], fx = t_best, f_best
        cfg = build(x)
        restart_rows.append((cfg, fx))
        if fx > best_objective:
            best_config, best_objective = cfg, fx
    for _, cfg, val in aligned:
        if val > best_objective:
            best_config, best_objective = cfg, val
    best_aligned = max(val for _, _, val in aligned)
    return DesignSearchResult(
        best_config=best_config,
        best_objective=best_objective,
        restart_results=tuple(restart_rows),
        mub_aligned=tuple((i, val) for i, _, val in aligned),
        mub_attains_max=bool(best_aligned >= best_objective - 1e-6),
    )
