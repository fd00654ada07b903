"""Pauli and generalized Pauli channels, Choi matrices, and CPTP parameter checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import serialize
from .errors import DimensionError, InvalidChannelError, ValidationError
from .qstate import (
    PAULIS,
    DensityMatrix,
    Mub,
    _as_state_matrix,
    standard_mub,
)

CHOI_HERMITIAN_ATOL = 1e-12
CHOI_PSD_ATOL = 1e-9
CHOI_TP_ATOL = 1e-9

# Facet normals g with g . lam <= 1 cutting the qubit CPTP tetrahedron out of
# the cube; equivalently |1 + lam_3| >= |lam_1 + lam_2| and |1 - lam_3| >= |lam_1 - lam_2|
# with matched signs expanded into linear form.
QUBIT_CPTP_FACETS = np.array(
    [[1.0, 1.0, -1.0], [1.0, -1.0, 1.0], [-1.0, 1.0, 1.0], [-1.0, -1.0, -1.0]]
)


@dataclass(frozen=True)
class CptpVerdict:
    """Validity verdict for a channel parameter vector."""

    valid: bool
    violations: tuple

    def __bool__(self):
        return self.valid


def cptp_check_qubit(lam, atol: float = 1e-12) -> CptpVerdict:
    """Check the qubit Pauli-channel CPTP polytope (tetrahedron plus box bounds)."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (3,):
        raise DimensionError("qubit channel needs exactly 3 parameters")
    violations = []
    for row in QUBIT_CPTP_FACETS:
        if row @ lam > 1.0 + atol:
            terms = " ".join(
                f"{'+' if c > 0 else '-'} lambda_{i + 1}" for i, c in enumerate(row)
            )
            violations.append(f"{terms.lstrip('+ ')} <= 1")
    for i in range(3):
        if abs(lam[i]) > 1.0 + atol:
            violations.append(f"|lambda_{i + 1}| <= 1")
    return CptpVerdict(not violations, tuple(violations))


def cptp_check_gen(lam, dim: int | None = None, atol: float = 1e-12) -> CptpVerdict:
    """Check the generalized Pauli CPTP constraints 1 + d*lam_i >= sum(lam) >= -1/(d-1)."""
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1 or lam.size < 3:
        raise DimensionError("generalized channel needs at least 3 parameters")
    d = lam.size - 1 if dim is None else int(dim)
    if lam.size != d + 1:
        raise DimensionError(f"expected {d + 1} parameters for dimension {d}")
    total = lam.sum()
    violations = []
    for i in range(lam.size):
        if total - d * lam[i] > 1.0 + atol:
            violations.append(f"sum(lambda) - {d}*lambda_{i + 1} <= 1")
    if -total > 1.0 / (d - 1) + atol:
        violations.append(f"sum(lambda) >= -1/{d - 1}")
    for i in range(lam.size):
        if abs(lam[i]) > 1.0 + atol:
            violations.append(f"|lambda_{i + 1}| <= 1")
    return CptpVerdict(not violations, tuple(violations))


class PauliChannel:
    """Qubit channel contracting the Bloch component along direction i by lam_i.

    The directions are the Bloch vectors of the first vector of each MUB basis;
    the default MUB gives the coordinate axes (sigma_1, sigma_2, sigma_3
    eigenbases in that order).
    """

    __slots__ = ("lam", "mub", "_dirs", "_frame")

    def __init__(self, lam, mub: Mub | None = None, *, require_cptp: bool = True):
        lam = np.array(lam, dtype=float)
        if lam.shape != (3,):
            raise DimensionError("qubit channel needs exactly 3 parameters")
        mub = standard_mub(2) if mub is None else mub
        if mub.dim != 2 or mub.n_bases != 3:
            raise DimensionError("qubit channel needs a complete d=2 MUB (3 bases)")
        if require_cptp:
            verdict = cptp_check_qubit(lam)
            if not verdict.valid:
                raise InvalidChannelError(
                    "parameters violate complete positivity: "
                    + "; ".join(verdict.violations)
                )
        lam.setflags(write=False)
        self.lam = lam
        self.mub = mub
        dirs = np.array([mub.direction_bloch(i) for i in range(3)])
        dirs.setflags(write=False)
        self._dirs = dirs
        self._frame = np.einsum("ia,ajk->ijk", dirs, PAULIS)

    @property
    def dim(self) -> int:
        return 2

    def directions(self) -> np.ndarray:
        """Bloch directions as rows of a 3x3 orthonormal matrix."""
        return np.array(self._dirs)

    def apply_matrix(self, a) -> np.ndarray:
        """Linear action on an arbitrary 2x2 matrix (no state validation)."""
        a = np.asarray(a, dtype=complex)
        if a.shape != (2, 2):
            raise DimensionError("expected a 2x2 matrix")
        comps = np.einsum("ij,kji->k", a, PAULIS) / 2.0
        frame_comps = self._dirs @ comps
        out = (np.trace(a) / 2.0) * np.eye(2, dtype=complex)
        out += np.einsum("i,i,ijk->jk", self.lam, frame_comps, self._frame)
        return out

    def apply(self, rho) -> DensityMatrix:
        """Channel action on a density matrix."""
        return DensityMatrix(self.apply_matrix(_as_state_matrix(rho)))

    def __repr__(self):
        return f"PauliChannel(lam={self.lam.tolist()})"


def conditional_expectation(mub: Mub, i: int, a) -> np.ndarray:
    """Pinching onto MUB basis i: sum_k <phi_ik|A|phi_ik> |phi_ik><phi_ik|."""
    if not 0 <= i < mub.n_bases:
        raise ValidationError(f"basis index {i} out of range")
    a = np.asarray(a, dtype=complex)
    if a.shape != (mub.dim, mub.dim):
        raise DimensionError(f"expected a {mub.dim}x{mub.dim} matrix")
    v = mub.bases[i]
    diag = np.einsum("ka,ab,kb->k", v.conj(), a, v)
    return np.einsum("k,ka,kb->ab", diag, v, v.conj())


class GenPauliChannel:
    """Generalized Pauli channel E(A) = (1 - sum lam)(tr A / d) I + sum_i lam_i E_i(A).

    E_i is the conditional expectation (pinching) onto MUB basis i; a complete
    set of d+1 bases is required.
    """

    __slots__ = ("lam", "mub")

    def __init__(self, lam, mub: Mub | None = None, *, require_cptp: bool = True):
        lam = np.array(lam, dtype=float)
        if lam.ndim != 1 or lam.size < 3:
            raise DimensionError("generalized channel needs at least 3 parameters")
        d = lam.size - 1
        mub = standard_mub(d) if mub is None else mub
        if mub.dim != d or mub.n_bases != d + 1:
            raise DimensionError(
                f"parameter count {lam.size} needs a complete d={d} MUB ({d + 1} bases)"
            )
        if require_cptp:
            verdict = cptp_check_gen(lam, d)
            if not verdict.valid:
                raise InvalidChannelError(
                    "parameters violate complete positivity: "
                    + "; ".join(verdict.violations)
                )
        lam.setflags(write=False)
        self.lam = lam
        self.mub = mub

    @property
    def dim(self) -> int:
        return self.mub.dim

    def apply_matrix(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=complex)
        d = self.dim
        if a.shape != (d, d):
            raise DimensionError(f"expected a {d}x{d} matrix")
        out = (1.0 - self.lam.sum()) * (np.trace(a) / d) * np.eye(d, dtype=complex)
        for i, lam_i in enumerate(self.lam):
            if lam_i != 0.0:
                out += lam_i * conditional_expectation(self.mub, i, a)
        return out

    def apply(self, rho) -> DensityMatrix:
        return DensityMatrix(self.apply_matrix(_as_state_matrix(rho)))

    def __repr__(self):
        return f"GenPauliChannel(dim={self.dim}, lam={self.lam.tolist()})"


class ChoiMatrix:
    """Validated Choi matrix: Hermitian, PSD, output partial trace equal to I."""

    __slots__ = ("matrix", "dim")

    def __init__(self, matrix):
        m = np.array(matrix, dtype=complex)
        n = m.shape[0] if m.ndim == 2 else 0
        d = int(round(np.sqrt(n))) if n else 0
        if m.ndim != 2 or m.shape != (n, n) or d * d != n or n == 0:
            raise DimensionError(f"Choi matrix must be d^2 x d^2, got shape {m.shape}")
        if np.abs(m - m.conj().T).max() > CHOI_HERMITIAN_ATOL:
            raise InvalidChannelError("Choi matrix is not Hermitian")
        if np.linalg.eigvalsh(m).min() < -CHOI_PSD_ATOL:
            raise InvalidChannelError("Choi matrix has a negative eigenvalue")
        if np.abs(trace_over_output(m) - np.eye(d)).max() > CHOI_TP_ATOL:
            raise InvalidChannelError("Choi matrix is not trace-preserving")
        m.setflags(write=False)
        self.matrix = m
        self.dim = d

    def __repr__(self):
        return f"ChoiMatrix(dim={self.dim})"


def trace_over_output(x) -> np.ndarray:
    """Partial trace over the output (second) tensor factor of a Choi-ordered matrix."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionError("expected a square matrix")
    d = int(round(np.sqrt(x.shape[0])))
    if d * d != x.shape[0]:
        raise DimensionError(f"matrix size {x.shape[0]} is not a perfect square")
    return np.einsum("ikjk->ij", x.reshape(d, d, d, d))


def choi(channel, dim: int | None = None) -> ChoiMatrix:
    """Choi matrix X = sum_ij E_ij (x) E(E_ij) with the input factor first.

    Accepts a channel object (apply_matrix + dim) or a bare matrix-to-matrix
    callable together with an explicit dimension.
    """
    if hasattr(channel, "apply_matrix"):
        amap, d = channel.apply_matrix, channel.dim
    else:
        if dim is None:
            raise ValidationError("dim is required when passing a bare matrix map")
        amap, d = channel, int(dim)
    x = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            unit = np.zeros((d, d), dtype=complex)
            unit[i, j] = 1.0
            x += np.kron(unit, np.asarray(amap(unit), dtype=complex))
    return ChoiMatrix(x)


@dataclass(frozen=True)
class ChoiVerdict:
    """Per-property verdicts and residuals from choi_validate."""

    hermitian: bool
    psd: bool
    trace_preserving: bool
    residuals: dict

    @property
    def valid(self) -> bool:
        return self.hermitian and self.psd and self.trace_preserving


def choi_validate(x) -> ChoiVerdict:
    """Report Hermiticity, positivity, and trace preservation of a candidate Choi matrix."""
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionError("expected a square matrix")
    herm_res = float(np.abs(x - x.conj().T).max())
    sym = (x + x.conj().T) / 2.0
    min_eig = float(np.linalg.eigvalsh(sym).min())
    psd_res = max(0.0, -min_eig)
    d = int(round(np.sqrt(x.shape[0])))
    if d * d != x.shape[0]:
        raise DimensionError(f"matrix size {x.shape[0]} is not a perfect square")
    tp_res = float(np.abs(trace_over_output(sym) - np.eye(d)).max())
    return ChoiVerdict(
        hermitian=herm_res <= CHOI_HERMITIAN_ATOL,
        psd=psd_res <= CHOI_PSD_ATOL,
        trace_preserving=tp_res <= CHOI_TP_ATOL,
        residuals={"hermitian": herm_res, "psd": psd_res, "tp": tp_res},
    )


@dataclass(frozen=True, eq=False)
class AffineChoiBasis:
    """Affine Choi parametrization X(lam) = h0 + sum_k lam_k terms[k]."""

    h0: np.ndarray
    terms: np.ndarray
    dim: int

    @property
    def n_params(self) -> int:
        return self.terms.shape[0]

    def evaluate(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        if lam.shape != (self.n_params,):
            raise DimensionError(f"expected {self.n_params} parameters")
        return self.h0 + np.tensordot(lam, self.terms, axes=1)


_QUBIT_H1 = 0.5 * np.array(
    [[0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0], [1, 0, 0, 0]], dtype=complex
)
_QUBIT_H2 = 0.5 * np.array(
    [[0, 0, 0, 1], [0, 0, -1, 0], [0, -1, 0, 0], [1, 0, 0, 0]], dtype=complex
)
_QUBIT_H3 = 0.5 * np.diag([1.0, -1.0, -1.0, 1.0]).astype(complex)


def _basis_from_family(make_channel, dim: int, n_params: int) -> AffineChoiBasis:
    h0 = choi(make_channel(np.zeros(n_params))).matrix
    terms = np.empty((n_params, dim * dim, dim * dim), dtype=complex)
    for k in range(n_params):
        terms[k] = choi(make_channel(np.eye(n_params)[k])).matrix - h0
    return AffineChoiBasis(h0=h0, terms=terms, dim=dim)


def affine_basis_qubit(mub: Mub | None = None) -> AffineChoiBasis:
    """Affine Choi basis for qubit Pauli channels with the given directions.

    With default (coordinate-axis) directions the terms have the closed form
    H1 = (sigma_1 (x) sigma_1)/2, H2 = -(sigma_2 (x) sigma_2)/2,
    H3 = (sigma_3 (x) sigma_3)/2 around h0 = I/2.
    """
    if mub is None:
        terms = np.stack([_QUBIT_H1, _QUBIT_H2, _QUBIT_H3])
        return AffineChoiBasis(h0=np.eye(4, dtype=complex) / 2.0, terms=terms, dim=2)
    return _basis_from_family(lambda lam: PauliChannel(lam, mub), 2, 3)


def affine_basis_qutrit(mub: Mub | None = None) -> AffineChoiBasis:
    """Affine Choi basis for qutrit generalized Pauli channels (4 parameters)."""
    mub = standard_mub(3) if mub is None else mub
    if mub.dim != 3 or mub.n_bases != 4:
        raise DimensionError("qutrit basis needs a complete d=3 MUB (4 bases)")
    return _basis_from_family(lambda lam: GenPauliChannel(lam, mub), 3, 4)


def cascade(channel, k: int):
    """The channel composed with itself k times; parameters become lam**k."""
    if int(k) != k or k < 1:
        raise ValidationError("cascade depth must be a positive integer")
    if isinstance(channel, PauliChannel):
        return PauliChannel(channel.lam ** int(k), channel.mub)
    if isinstance(channel, GenPauliChannel):
        return GenPauliChannel(channel.lam ** int(k), channel.mub)
    raise ValidationError(f"cannot cascade object of type {type(channel).__name__}")


def channel_to_dict(channel) -> dict:
    """JSON-ready channel description {dim, lambda, directions} with [re, im] pairs."""
    if not isinstance(channel, (PauliChannel, GenPauliChannel)):
        raise ValidationError(f"cannot serialize object of type {type(channel).__name__}")
    return {
        "dim": channel.dim,
        "lambda": [float(v) for v in channel.lam],
        "directions": serialize.to_pairs(channel.mub.bases),
    }


def channel_from_dict(data: dict):
    """Inverse of channel_to_dict; missing directions select the standard MUB."""
    try:
        dim = int(data["dim"])
        lam = np.asarray(data["lambda"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed channel description: {exc}") from exc
    directions = data.get("directions")
    mub = Mub(serialize.from_pairs(directions)) if directions is not None else standard_mub(dim)
    if dim == 2:
        return PauliChannel(lam, mub)
    return GenPauliChannel(lam, mub)
