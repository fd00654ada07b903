"""Convex kernels: PSD/TP projections, Dykstra for the CPTP set, projected gradient."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .channel import ChoiMatrix, trace_over_output
from .errors import (
    DimensionError,
    InfeasibleRegionError,
    NonConvergenceError,
    ValidationError,
)

_POLISH_TARGET = 5e-11
_POLYTOPE_TOL = 1e-12


@dataclass(frozen=True)
class SolverSettings:
    """Iteration budget, tolerances, and step rule shared by the iterative solvers."""

    max_iters: int = 5000
    tol_objective: float = 1e-10
    tol_feasibility: float = 1e-8
    step_rule: str = "backtracking"
    armijo_c: float = 1e-4

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValidationError("max_iters must be at least 1")
        if self.tol_objective <= 0 or self.tol_feasibility <= 0:
            raise ValidationError("tolerances must be positive")
        if self.step_rule not in ("fixed", "backtracking"):
            raise ValidationError(f"unknown step rule {self.step_rule!r}")


@dataclass(frozen=True, eq=False)
class LinearInequalitySet:
    """Linear constraints rows @ x <= bounds."""

    rows: np.ndarray
    bounds: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        bounds = np.atleast_1d(np.asarray(self.bounds, dtype=float))
        if rows.shape[0] != bounds.shape[0]:
            raise DimensionError("row count must match bound count")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "bounds", bounds)

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_vars(self) -> int:
        return self.rows.shape[1]

    def max_violation(self, x) -> float:
        if self.n_rows == 0:
            return 0.0
        return float(np.maximum(self.rows @ x - self.bounds, 0.0).max())


def qubit_lambda_constraints() -> LinearInequalitySet:
    """CPTP polytope for qubit Pauli parameters: tetrahedron facets plus box bounds."""
    facets = np.array(
        [[1.0, 1.0, -1.0], [1.0, -1.0, 1.0], [-1.0, 1.0, 1.0], [-1.0, -1.0, -1.0]]
    )
    box = np.vstack([np.eye(3), -np.eye(3)])
    rows = np.vstack([facets, box])
    bounds = np.ones(10)
    names = tuple(f"facet_{i}" for i in range(4)) + tuple(
        f"box_{s}{i + 1}" for s in ("+", "-") for i in range(3)
    )
    return LinearInequalitySet(rows=rows, bounds=bounds, names=names)


def gen_lambda_constraints(dim: int) -> LinearInequalitySet:
    """CPTP constraints 1 + d*lam_i >= sum(lam) >= -1/(d-1) plus box bounds."""
    d = int(dim)
    if d < 2:
        raise DimensionError("dimension must be at least 2")
    u = d + 1
    upper = np.ones((u, u)) - d * np.eye(u)
    total = -np.ones((1, u))
    box = np.vstack([np.eye(u), -np.eye(u)])
    rows = np.vstack([upper, total, box])
    bounds = np.concatenate([np.ones(u), [1.0 / (d - 1)], np.ones(2 * u)])
    names = (
        tuple(f"upper_{i + 1}" for i in range(u))
        + ("sum_lower",)
        + tuple(f"box_{s}{i + 1}" for s in ("+", "-") for i in range(u))
    )
    return LinearInequalitySet(rows=rows, bounds=bounds, names=names)


def _check_hermitian(h, atol=1e-10):
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionError("expected a square matrix")
    if np.abs(h - h.conj().T).max() > atol:
        raise ValidationError("matrix is not Hermitian within tolerance")
    return (h + h.conj().T) / 2.0


def project_psd(h) -> np.ndarray:
    """Frobenius-nearest PSD matrix: negative eigenvalues clipped to zero."""
    sym = _check_hermitian(h)
    w, v = np.linalg.eigh(sym)
    w = np.maximum(w, 0.0)
    out = (v * w) @ v.conj().T
    return (out + out.conj().T) / 2.0


def project_tp(x, dim: int) -> np.ndarray:
    """Orthogonal projection onto {X : trace_over_output(X) = I}."""
    x = np.asarray(x, dtype=complex)
    d = int(dim)
    if x.shape != (d * d, d * d):
        raise DimensionError(f"expected a {d * d}x{d * d} matrix")
    residual = trace_over_output(x) - np.eye(d)
    return x - np.kron(residual, np.eye(d)) / d


class _TraceWriter:
    """CSV iteration log with columns (iter, objective, feas_psd, feas_tp).

    Accepts None (disabled), an open stream, or a path to create.
    """

    def __init__(self, target):
        self._owned = False
        if target is None:
            self.stream = None
            return
        if hasattr(target, "write"):
            self.stream = target
        else:
            self.stream = open(target, "w")
            self._owned = True
        self.stream.write("iter,objective,feas_psd,feas_tp\n")

    def row(self, it, objective, feas_psd, feas_tp):
        if self.stream is not None:
            self.stream.write(f"{it},{objective!r},{feas_psd!r},{feas_tp!r}\n")

    def close(self):
        if self._owned:
            self.stream.close()
            self._owned = False
            self.stream = None


@dataclass(frozen=True, eq=False)
class DykstraResult:
    choi: ChoiMatrix
    iterations: int
    feas_psd: float
    feas_tp: float
    iterates: tuple = ()


def _psd_clip(sym):
    w, v = np.linalg.eigh(sym)
    if w[0] >= 0.0:
        return sym
    out = (v * np.maximum(w, 0.0)) @ v.conj().T
    return (out + out.conj().T) / 2.0


def _dykstra_raw(x0, dim, target, max_iters, writer=None, keep_iterates=False):
    d = int(dim)
    y = x0
    p = np.zeros_like(y)
    q = np.zeros_like(y)
    iterates = []
    feas_psd = feas_tp = np.inf
    for it in range(1, max_iters + 1):
        z = _psd_clip(y + p)
        p = y + p - z
        w = project_tp(z + q, d)
        q = z + q - w
        y = w
        feas_psd = max(0.0, -float(np.linalg.eigvalsh(y).min()))
        feas_tp = float(np.abs(trace_over_output(z) - np.eye(d)).max())
        if writer is not None:
            writer.row(it, 0.5 * float(np.linalg.norm(y - x0) ** 2), feas_psd, feas_tp)
        if keep_iterates:
            iterates.append(y.copy())
        if feas_psd <= target and feas_tp <= target:
            return y, it, feas_psd, feas_tp, iterates
    raise NonConvergenceError(
        "Dykstra projection did not reach feasibility",
        iterations=max_iters,
        residuals={"feas_psd": feas_psd, "feas_tp": feas_tp},
    )


def _polish_cptp(y, dim, target=_POLISH_TARGET, max_iters=200):
    # plain alternating projections; we are already within tol of the
    # intersection, so this nails feasibility without moving the point
    # by more than O(tol)
    for _ in range(max_iters):
        if -float(np.linalg.eigvalsh(y).min()) <= target:
            return y
        y = project_tp(_psd_clip(y), dim)
    raise NonConvergenceError("feasibility polish stalled", residuals={"feas_psd": target})


def dykstra_cptp(
    x0,
    dim: int,
    settings: SolverSettings | None = None,
    trace_file=None,
    keep_iterates: bool = False,
) -> DykstraResult:
    """Project a Hermitian matrix onto the CPTP set {X PSD, trace_over_output(X) = I}."""
    s = settings or SolverSettings()
    start = _check_hermitian(x0)
    if start.shape != (dim * dim, dim * dim):
        raise DimensionError(f"expected a {dim * dim}x{dim * dim} matrix")
    writer = _TraceWriter(trace_file)
    target = min(s.tol_feasibility, 1e-10)
    try:
        y, its, feas_psd, feas_tp, iterates = _dykstra_raw(
            start, dim, target, s.max_iters, writer, keep_iterates
        )
    finally:
        writer.close()
    y = _polish_cptp(y, dim)
    return DykstraResult(
        choi=ChoiMatrix(y),
        iterations=its,
        feas_psd=max(0.0, -float(np.linalg.eigvalsh(y).min())),
        feas_tp=float(np.abs(trace_over_output(y) - np.eye(dim)).max()),
        iterates=tuple(iterates),
    )


def project_polytope(ineq: LinearInequalitySet, x, max_sweeps: int = 500) -> np.ndarray:
    """Dykstra projection of a point onto {x : rows @ x <= bounds}."""
    x = np.asarray(x, dtype=float)
    if ineq.n_rows == 0:
        return x.copy()
    if x.shape != (ineq.n_vars,):
        raise DimensionError(f"expected a {ineq.n_vars}-vector")
    rows = ineq.rows
    sq_norms = np.einsum("ij,ij->i", rows, rows)
    corrections = np.zeros((ineq.n_rows, ineq.n_vars))
    y = x.copy()
    for _ in range(max_sweeps):
        y_prev = y.copy()
        for r in range(ineq.n_rows):
            z = y + corrections[r]
            viol = rows[r] @ z - ineq.bounds[r]
            if viol > 0.0 and sq_norms[r] > 0.0:
                y = z - (viol / sq_norms[r]) * rows[r]
            else:
                y = z
            corrections[r] = z - y
        if (
            ineq.max_violation(y) <= _POLYTOPE_TOL
            and np.linalg.norm(y - y_prev) <= 1e-13 * (1.0 + np.linalg.norm(y))
        ):
            return y
    if ineq.max_violation(y) > 1e-9:
        raise InfeasibleRegionError(
            f"constraint set appears infeasible (residual {ineq.max_violation(y):.2e})"
        )
    return y


def _power_iteration_matrix(a, iters: int = 100) -> float:
    n = a.shape[0]
    v = np.ones(n) / np.sqrt(n)
    lam = 0.0
    for _ in range(iters):
        w = a @ v
        norm = np.linalg.norm(w)
        if norm <= 1e-300:
            return 0.0
        v = w / norm
        lam = float(v @ (a @ v))
    return abs(lam)


@dataclass(frozen=True, eq=False)
class PgdResult:
    x: np.ndarray
    objective: float
    iterations: int
    kkt_residual: float
    converged: bool


def kkt_residual(a, b, ineq: LinearInequalitySet | None, x, active_tol: float = 1e-6) -> float:
    """Norm of gradient plus best nonnegative combination of active constraint normals."""
    g = np.asarray(a) @ x + np.asarray(b)
    if ineq is None or ineq.n_rows == 0:
        return float(np.linalg.norm(g))
    slack = ineq.bounds - ineq.rows @ x
    active = slack <= active_tol
    if not active.any():
        return float(np.linalg.norm(g))
    _, rnorm = nnls(ineq.rows[active].T, -g)
    return float(rnorm)


def pgd_ls(
    a,
    b,
    ineq: LinearInequalitySet | None = None,
    settings: SolverSettings | None = None,
    trace_file=None,
) -> PgdResult:
    """Minimize 0.5 x'Ax + b'x over a linear-inequality polytope by projected gradient.

    A must be symmetric PSD. The start point is the projection of the zero
    vector into the feasible set, which makes rank-deficient problems resolve
    to the minimum-norm solution.
    """
    writer = _TraceWriter(trace_file)
    try:
        return _pgd_ls_impl(a, b, ineq, settings, writer)
    finally:
        writer.close()


def _pgd_ls_impl(a, b, ineq, settings, writer) -> PgdResult:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or b.shape != (a.shape[0],):
        raise DimensionError("quadratic and linear terms have mismatched shapes")
    a = (a + a.T) / 2.0
    if a.size and np.linalg.eigvalsh(a).min() < -1e-10:
        raise ValidationError("quadratic term must be positive semidefinite")
    if ineq is not None and ineq.n_rows and ineq.n_vars != b.shape[0]:
        raise DimensionError("constraint row length does not match variable count")
    s = settings or SolverSettings()

    def project(v):
        return project_polytope(ineq, v) if ineq is not None else np.asarray(v, float)

    def f(v):
        return 0.5 * float(v @ a @ v) + float(b @ v)

    x = project(np.zeros_like(b))
    lip = _power_iteration_matrix(a)
    t0 = 1.0 / lip if lip > 1e-12 else 1.0
    fx = f(x)
    kkt = kkt_residual(a, b, ineq, x)
    if kkt <= s.tol_feasibility * (1.0 + np.linalg.norm(a @ x + b)):
        return PgdResult(x=x, objective=fx, iterations=0, kkt_residual=kkt, converged=True)
    for it in range(1, s.max_iters + 1):
        g = a @ x + b
        t = t0
        while True:
            x_new = project(x - t * g)
            step = x_new - x
            f_new = f(x_new)
            if s.step_rule == "fixed" or f_new <= fx + s.armijo_c * float(g @ step) + 1e-15:
                break
            t *= 0.5
            if t < 1e-18:
                x_new, f_new = x, fx
                break
        decrease = fx - f_new
        x, fx = x_new, f_new
        feas = ineq.max_violation(x) if ineq is not None else 0.0
        writer.row(it, fx, 0.0, feas)
        if decrease <= s.tol_objective:
            kkt = kkt_residual(a, b, ineq, x)
            if kkt <= s.tol_feasibility * (1.0 + np.linalg.norm(a @ x + b)):
                return PgdResult(
                    x=x, objective=fx, iterations=it, kkt_residual=kkt, converged=True
                )
    kkt = kkt_residual(a, b, ineq, x)
    raise NonConvergenceError(
        "projected gradient did not converge",
        iterations=s.max_iters,
        residuals={"kkt": kkt, "objective_decrease": decrease},
    )


@dataclass(frozen=True, eq=False)
class PgdChoiResult:
    choi: ChoiMatrix
    objective: float
    iterations: int
    pg_residual: float
    converged: bool


def pgd_choi_ls(
    config_matrices,
    freqs,
    dim: int,
    settings: SolverSettings | None = None,
    trace_file=None,
) -> PgdChoiResult:
    """Least squares over the CPTP set: min sum_a (Re trace(C_a X) - p_a)^2.

    Projected gradient from the maximally mixed Choi matrix I/d; each step
    projects back onto the CPTP set with Dykstra.
    """
    writer = _TraceWriter(trace_file)
    try:
        return _pgd_choi_ls_impl(config_matrices, freqs, dim, settings, writer)
    finally:
        writer.close()


def _pgd_choi_ls_impl(config_matrices, freqs, dim, settings, writer) -> PgdChoiResult:
    cs = np.asarray(config_matrices, dtype=complex)
    p = np.asarray(freqs, dtype=float)
    d = int(dim)
    if cs.ndim != 3 or cs.shape[1:] != (d * d, d * d):
        raise DimensionError(f"config matrices must have shape (m, {d * d}, {d * d})")
    if p.shape != (cs.shape[0],):
        raise DimensionError("frequency count does not match configuration count")
    s = settings or SolverSettings()
    cs = (cs + cs.conj().transpose(0, 2, 1)) / 2.0  # only the Hermitian part is observable
    proj_target = min(s.tol_feasibility, 1e-10)

    def residuals(x):
        return np.einsum("aij,ji->a", cs, x).real - p

    def f(x):
        r = residuals(x)
        return float(r @ r)

    def grad(x):
        return np.einsum("a,aij->ij", 2.0 * residuals(x), cs)

    def project(x):
        y, *_ = _dykstra_raw(x, d, proj_target, s.max_iters)
        return _polish_cptp(y, d)

    # Lipschitz constant of the gradient via power iteration on V -> 2 sum_a <C_a,V> C_a
    v = cs.sum(axis=0)
    norm = np.linalg.norm(v)
    lip = 0.0
    if norm > 1e-300:
        v = v / norm
        for _ in range(60):
            w = np.einsum("a,aij->ij", 2.0 * np.einsum("aij,ji->a", cs, v).real, cs)
            wnorm = np.linalg.norm(w)
            if wnorm <= 1e-300:
                lip = 0.0
                break
            v = w / wnorm
            lip = abs(float(np.einsum("ij,ji->", v.conj().T, w).real))
    t0 = 1.0 / lip if lip > 1e-12 else 1.0

    x = np.eye(d * d, dtype=complex) / d
    fx = f(x)
    pg = np.inf
    for it in range(1, s.max_iters + 1):
        g = grad(x)
        t = t0
        while True:
            x_new = project(x - t * g)
            step = x_new - x
            f_new = f(x_new)
            inner = float(np.einsum("ij,ij->", g.conj(), step).real)
            if s.step_rule == "fixed" or f_new <= fx + s.armijo_c * inner + 1e-15:
                break
            t *= 0.5
            if t < 1e-18:
                x_new, f_new = x, fx
                break
        decrease = fx - f_new
        x, fx = x_new, f_new
        feas_psd = max(0.0, -float(np.linalg.eigvalsh(x).min()))
        feas_tp = float(np.abs(trace_over_output(x) - np.eye(d)).max())
        writer.row(it, fx, feas_psd, feas_tp)
        if decrease <= s.tol_objective:
            g = grad(x)
            pg = float(np.linalg.norm(x - project(x - t0 * g))) / t0
            if pg <= s.tol_feasibility * (1.0 + np.linalg.norm(g)):
                return PgdChoiResult(
                    choi=ChoiMatrix(x),
                    objective=fx,
                    iterations=it,
                    pg_residual=pg,
                    converged=True,
                )
    raise NonConvergenceError(
        "projected gradient over the CPTP set did not converge",
        iterations=s.max_iters,
        residuals={"pg": pg, "objective": fx},
    )
