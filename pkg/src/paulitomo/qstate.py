"""States, measurements, Born-rule sampling, and measurement-configuration matrices."""

from __future__ import annotations

import numpy as np

from .errors import (
    DimensionError,
    InvalidMeasurementError,
    InvalidStateError,
    ValidationError,
)

HERMITIAN_ATOL = 1e-12
PSD_ATOL = 1e-10
TRACE_ATOL = 1e-12
UNIT_ATOL = 1e-10
POVM_SUM_ATOL = 1e-10
MUB_OVERLAP_ATOL = 1e-10

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULIS = np.stack([PAULI_X, PAULI_Y, PAULI_Z])


def rng_from_seed(seed) -> np.random.Generator:
    """Return a PCG64-backed Generator; Generator inputs pass through unchanged.

    All randomness in the package flows through numpy PCG64 bit generators so
    that a 64-bit integer seed fully determines every stream.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def substream(seed, *key) -> np.random.Generator:
    """Independent child generator identified by a root seed and an integer key path."""
    if isinstance(seed, np.random.Generator):
        raise ValidationError("substream needs an integer root seed, not a Generator")
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


class DensityMatrix:
    """Validated density matrix: Hermitian, positive semidefinite, unit trace."""

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got shape {m.shape}")
        if np.abs(m - m.conj().T).max() > HERMITIAN_ATOL:
            raise InvalidStateError("density matrix is not Hermitian")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_ATOL:
            raise InvalidStateError(f"density matrix trace {tr} differs from 1")
        if np.linalg.eigvalsh(m).min() < -PSD_ATOL:
            raise InvalidStateError("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


def _as_state_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.matrix
    return DensityMatrix(rho).matrix


def bloch_to_density(theta) -> DensityMatrix:
    """Map a Bloch vector to the qubit state (I + theta . sigma) / 2."""
    t = np.asarray(theta, dtype=float)
    if t.shape != (3,):
        raise DimensionError("Bloch vector must have exactly 3 real components")
    norm = float(np.linalg.norm(t))
    if norm > 1.0 + UNIT_ATOL:
        raise InvalidStateError(f"Bloch vector norm {norm} exceeds 1")
    m = 0.5 * (np.eye(2, dtype=complex) + np.tensordot(t, PAULIS, axes=1))
    return DensityMatrix(m)


def density_to_bloch(rho) -> np.ndarray:
    """Bloch components theta_i = trace(rho sigma_i) of a qubit state."""
    m = _as_state_matrix(rho)
    if m.shape != (2, 2):
        raise DimensionError("Bloch decomposition is defined for qubit states only")
    return np.einsum("ij,kji->k", m, PAULIS).real


class Mub:
    """A set of pairwise mutually unbiased orthonormal bases.

    ``bases[i, k]`` is the k-th unit vector of basis i. Orthonormality within
    each basis and the cross-basis overlap condition |<phi|psi>|^2 = 1/d are
    enforced on construction.
    """

    __slots__ = ("bases",)

    def __init__(self, bases):
        b = np.array(bases, dtype=complex)
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise DimensionError(f"expected (n_bases, d, d) vectors, got shape {b.shape}")
        d = b.shape[1]
        for i in range(b.shape[0]):
            gram = b[i] @ b[i].conj().T
            if np.abs(gram - np.eye(d)).max() > MUB_OVERLAP_ATOL:
                raise InvalidMeasurementError(f"basis {i} is not orthonormal")
        for i in range(b.shape[0]):
            for j in range(i + 1, b.shape[0]):
                overlap = np.abs(b[i].conj() @ b[j].T) ** 2
                if np.abs(overlap - 1.0 / d).max() > MUB_OVERLAP_ATOL:
                    raise InvalidMeasurementError(
                        f"bases {i} and {j} are not mutually unbiased"
                    )
        b.setflags(write=False)
        self.bases = b

    @property
    def dim(self) -> int:
        return self.bases.shape[1]

    @property
    def n_bases(self) -> int:
        return self.bases.shape[0]

    def projectors(self, i: int) -> np.ndarray:
        """Rank-1 projectors of basis i, shape (d, d, d)."""
        v = self.bases[i]
        return np.einsum("ka,kb->kab", v, v.conj())

    def direction_bloch(self, i: int) -> np.ndarray:
        """Bloch vector of the first vector of basis i (qubit only)."""
        if self.dim != 2:
            raise DimensionError("Bloch directions are defined for d=2 only")
        proj = np.outer(self.bases[i, 0], self.bases[i, 0].conj())
        return np.einsum("ij,kji->k", proj, PAULIS).real

    def __repr__(self):
        return f"Mub(dim={self.dim}, n_bases={self.n_bases})"


def standard_mub(d: int) -> Mub:
    """Reference complete MUB set for d=2 (Pauli eigenbases) or d=3.

    For d=2 basis i is the sigma_i eigenbasis, so the Bloch directions are the
    coordinate axes. For d=3 the set is the computational basis plus the three
    Fourier-family bases with vectors (1, w^k, w^(2k+j)) / sqrt(3), w = exp(2 pi i / 3).
    """
    if d == 2:
        s = 1.0 / np.sqrt(2.0)
        bases = np.array(
            [
                [[s, s], [s, -s]],
                [[s, 1j * s], [s, -1j * s]],
                [[1.0, 0.0], [0.0, 1.0]],
            ],
            dtype=complex,
        )
        return Mub(bases)
    if d == 3:
        w = np.exp(2j * np.pi / 3.0)
        out = [np.eye(3, dtype=complex)]
        for j in range(3):
            rows = [[1.0, w**k, w ** ((2 * k + j) % 3)] for k in range(3)]
            out.append(np.asarray(rows, dtype=complex) / np.sqrt(3.0))
        return Mub(np.stack(out))
    raise DimensionError(f"no reference MUB construction for d={d}")


def mub_from_directions(directions) -> Mub:
    """Qubit MUB whose basis Bloch directions are the given orthonormal rows."""
    dirs = np.asarray(directions, dtype=float)
    if dirs.shape != (3, 3):
        raise DimensionError("expected three 3-component direction rows")
    if np.abs(dirs @ dirs.T - np.eye(3)).max() > UNIT_ATOL:
        raise InvalidMeasurementError("direction rows must be orthonormal")
    bases = []
    for v in dirs:
        theta = np.arccos(np.clip(v[2], -1.0, 1.0))
        phi = np.arctan2(v[1], v[0])
        plus = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
        minus = np.array([np.sin(theta / 2), -np.exp(1j * phi) * np.cos(theta / 2)])
        bases.append([plus, minus])
    return Mub(np.asarray(bases))


class Povm:
    """Positive operator-valued measure: Hermitian PSD elements summing to identity."""

    __slots__ = ("elements",)

    def __init__(self, elements):
        e = np.array(elements, dtype=complex)
        if e.ndim != 3 or e.shape[1] != e.shape[2]:
            raise DimensionError(f"expected (n_outcomes, d, d) elements, got {e.shape}")
        if np.abs(e - e.conj().transpose(0, 2, 1)).max() > HERMITIAN_ATOL:
            raise InvalidMeasurementError("POVM elements must be Hermitian")
        for k in range(e.shape[0]):
            if np.linalg.eigvalsh(e[k]).min() < -PSD_ATOL:
                raise InvalidMeasurementError(f"POVM element {k} is not PSD")
        if np.abs(e.sum(axis=0) - np.eye(e.shape[1])).max() > POVM_SUM_ATOL:
            raise InvalidMeasurementError("POVM elements must sum to the identity")
        e.setflags(write=False)
        self.elements = e

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.elements.shape[0]

    def __repr__(self):
        return f"Povm(dim={self.dim}, n_outcomes={self.n_outcomes})"


def projective_povm(m) -> Povm:
    """Two-outcome qubit POVM {(I + m.sigma)/2, (I - m.sigma)/2} for unit m."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3,):
        raise DimensionError("measurement direction must have 3 components")
    if abs(np.linalg.norm(m) - 1.0) > UNIT_ATOL:
        raise InvalidMeasurementError("measurement direction must be a unit vector")
    sm = np.tensordot(m, PAULIS, axes=1)
    eye = np.eye(2, dtype=complex)
    return Povm([(eye + sm) / 2.0, (eye - sm) / 2.0])


def basis_povm(mub: Mub, i: int) -> Povm:
    """d-outcome POVM made of the rank-1 projectors of MUB basis i."""
    return Povm(mub.projectors(i))


def tetrahedron_povm() -> Povm:
    """Four-outcome symmetric qubit POVM with elements (I + t_k.sigma)/4.

    The t_k are the vertices of a regular tetrahedron on the Bloch sphere; this
    is the canonical minimal informationally complete qubit measurement.
    """
    s = 1.0 / np.sqrt(3.0)
    vertices = s * np.array(
        [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float
    )
    eye = np.eye(2, dtype=complex)
    return Povm([(eye + np.tensordot(t, PAULIS, axes=1)) / 4.0 for t in vertices])


def outcome_probs(rho, povm: Povm) -> np.ndarray:
    """Born-rule outcome distribution p_a = trace(rho M_a)."""
    m = _as_state_matrix(rho)
    if m.shape[0] != povm.dim:
        raise DimensionError(
            f"state dimension {m.shape[0]} does not match POVM dimension {povm.dim}"
        )
    p = np.einsum("ij,aji->a", m, povm.elements).real
    # tolerated PSD wiggle can leave probabilities at -1e-16; snap those to 0
    p[(p < 0.0) & (p > -PSD_ATOL)] = 0.0
    if p.min() < 0.0:
        raise InvalidMeasurementError("negative outcome probability")
    return p


def sample_record(probs, n: int, seed) -> np.ndarray:
    """Multinomial outcome counts for n shots, via sequential binomial conditioning.

    ``seed`` may be an integer or a Generator; identical inputs give identical
    counts.
    """
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DimensionError("probability vector must be 1-dimensional and nonempty")
    if np.any(p < 0.0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValidationError("probabilities must be nonnegative and sum to 1")
    if n < 0 or int(n) != n:
        raise ValidationError("shot count must be a nonnegative integer")
    rng = rng_from_seed(seed)
    counts = np.zeros(p.size, dtype=np.int64)
    remaining = int(n)
    mass = 1.0
    for a in range(p.size - 1):
        if remaining == 0:
            break
        q = min(max(p[a] / mass, 0.0), 1.0) if mass > 0.0 else 0.0
        c = int(rng.binomial(remaining, q))
        counts[a] = c
        remaining -= c
        mass -= p[a]
    counts[-1] += remaining
    return counts


class MeasurementRecord:
    """Outcome counts per configuration; counts[g][a] is a nonnegative integer."""

    __slots__ = ("counts",)

    def __init__(self, counts):
        arrays = []
        for c in counts:
            a = np.array(c, dtype=np.int64)
            if a.ndim != 1 or a.size == 0:
                raise DimensionError("each configuration needs a 1-d count vector")
            if np.any(a < 0):
                raise ValidationError("counts must be nonnegative")
            a.setflags(write=False)
            arrays.append(a)
        if not arrays:
            raise ValidationError("record needs at least one configuration")
        self.counts = tuple(arrays)

    @property
    def n_configs(self) -> int:
        return len(self.counts)

    @property
    def shots(self) -> tuple:
        return tuple(int(a.sum()) for a in self.counts)

    def __repr__(self):
        return f"MeasurementRecord(n_configs={self.n_configs}, shots={self.shots})"


def config_matrix(rho, element) -> np.ndarray:
    """Configuration matrix C = rho^T (x) M.

    trace(C X) is the Born probability of the POVM element M after the channel
    with Choi matrix X acts on input rho (input factor first in X).
    """
    r = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    m = np.asarray(element, dtype=complex)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise DimensionError("input state must be a square matrix")
    if m.shape != r.shape:
        raise DimensionError(
            f"POVM element shape {m.shape} does not match state shape {r.shape}"
        )
    return np.kron(r.T, m)
