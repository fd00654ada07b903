"""Channel parameter estimation from tomography data.

Covers the general Choi least-squares estimator, the affine-parametrized
estimator for Pauli families, the closed-form estimator for aligned
configurations, and iterative estimation of unknown channel directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import AffineChoiBasis, ChoiMatrix
from .errors import (
    DegenerateIterateError,
    DimensionError,
    PartialResultError,
    ValidationError,
)
from .qstate import (
    PAULIS,
    DensityMatrix,
    MeasurementRecord,
    Povm,
    bloch_to_density,
    config_matrix,
    density_to_bloch,
    outcome_probs,
    projective_povm,
    rng_from_seed,
    sample_record,
    substream,
)
from .serialize import from_pairs, to_pairs
from .solver import LinearInequalitySet, SolverSettings, pgd_choi_ls, pgd_ls

_DEGENERATE_NORM = 1e-9
EXACT_TAU = 1e-8


@dataclass(frozen=True, eq=False)
class TomographyConfiguration:
    """One probe setting: input state, measurement POVM, and a shot budget."""

    input: DensityMatrix
    povm: Povm
    shots: int = 1

    def __post_init__(self):
        if not isinstance(self.input, DensityMatrix):
            object.__setattr__(self, "input", DensityMatrix(self.input))
        if self.input.dim != self.povm.dim:
            raise DimensionError("input state and POVM dimensions differ")
        if int(self.shots) < 1:
            raise ValidationError("shot count must be at least 1")
        object.__setattr__(self, "shots", int(self.shots))

    @property
    def dim(self) -> int:
        return self.input.dim


def direction_config(b, m, shots: int = 1) -> TomographyConfiguration:
    """Qubit configuration with Bloch-vector input b and projective POVM along m."""
    return TomographyConfiguration(
        input=bloch_to_density(b), povm=projective_povm(m), shots=shots
    )


def config_matrices(configs) -> np.ndarray:
    """Stacked configuration matrices, one per (configuration, outcome) pair."""
    mats = [
        config_matrix(cfg.input, element)
        for cfg in configs
        for element in cfg.povm.elements
    ]
    if not mats:
        raise ValidationError("at least one configuration is required")
    return np.stack(mats)


def exact_freqs(channel, configs) -> tuple:
    """Noiseless outcome distributions, one vector per configuration."""
    return tuple(
        outcome_probs(channel.apply(cfg.input), cfg.povm) for cfg in configs
    )


def simulate_record(channel, configs, seed) -> MeasurementRecord:
    """Sampled outcome counts for each configuration under the given channel.

    Configuration index gamma gets its own child stream of ``seed``, so
    records are reproducible and per-configuration independent.
    """
    counts = []
    for gamma, cfg in enumerate(configs):
        p = outcome_probs(channel.apply(cfg.input), cfg.povm)
        rng = seed if isinstance(seed, np.random.Generator) else substream(seed, gamma)
        counts.append(sample_record(p, cfg.shots, rng))
    return MeasurementRecord(counts)


def relative_freqs(record: MeasurementRecord) -> tuple:
    """Per-configuration outcome frequencies c / n."""
    out = []
    for counts in record.counts:
        n = counts.sum()
        if n == 0:
            raise ValidationError("configuration has zero shots")
        out.append(counts / n)
    return tuple(out)


def _stacked_freqs(record_or_freqs) -> np.ndarray:
    if isinstance(record_or_freqs, MeasurementRecord):
        vecs = relative_freqs(record_or_freqs)
    else:
        vecs = tuple(np.asarray(v, dtype=float) for v in record_or_freqs)
    return np.concatenate(vecs)


@dataclass(frozen=True, eq=False)
class ChoiEstimate:
    choi: ChoiMatrix
    residual: float
    iterations: int


def estimate_choi(
    configs, record, settings: SolverSettings | None = None
) -> ChoiEstimate:
    """Least-squares Choi estimate over the CPTP set.

    ``record`` may be a MeasurementRecord or raw per-configuration frequency
    vectors (exact-probability mode). Identifiability is the caller's concern;
    under-determined data still yields a stationary point of the objective.
    """
    cs = config_matrices(configs)
    p = _stacked_freqs(record)
    if p.shape[0] != cs.shape[0]:
        raise DimensionError("frequency count does not match configuration outcomes")
    dim = configs[0].dim
    result = pgd_choi_ls(cs, p, dim, settings)
    return ChoiEstimate(
        choi=result.choi, residual=result.objective, iterations=result.iterations
    )


@dataclass(frozen=True, eq=False)
class AffineEstimate:
    lam: np.ndarray
    choi: ChoiMatrix
    residual: float
    iterations: int


def estimate_affine(
    basis: AffineChoiBasis,
    ineq: LinearInequalitySet | None,
    configs,
    record,
    settings: SolverSettings | None = None,
) -> AffineEstimate:
    """Least squares in the channel parameters under an affine Choi parametrization.

    Minimizes sum_a (p_hat_a - trace(C_a (H0 + sum_k lam_k H_k)))^2 subject to
    the linear CPTP constraints. The design matrix has one row per
    (configuration, outcome) pair.
    """
    for cfg in configs:
        if cfg.dim != basis.dim:
            raise DimensionError("configuration dimension does not match basis")
    cs = config_matrices(configs)
    p = _stacked_freqs(record)
    if p.shape[0] != cs.shape[0]:
        raise DimensionError("frequency count does not match configuration outcomes")
    design = np.einsum("aij,kji->ak", cs, basis.terms).real
    y = p - np.einsum("aij,ji->a", cs, basis.h0).real
    a = 2.0 * design.T @ design
    b = -2.0 * design.T @ y
    result = pgd_ls(a, b, ineq, settings)
    lam = result.x
    residual = float(np.sum((design @ lam - y) ** 2))
    return AffineEstimate(
        lam=lam,
        choi=ChoiMatrix(basis.evaluate(lam)),
        residual=residual,
        iterations=result.iterations,
    )


def estimate_optimal_closed_form(p_plus, p_minus) -> np.ndarray:
    """Closed-form estimate for aligned configurations: lam_i = p_plus_i - p_minus_i."""
    plus = np.asarray(p_plus, dtype=float)
    minus = np.asarray(p_minus, dtype=float)
    if plus.shape != minus.shape:
        raise DimensionError("outcome vectors have different lengths")
    return plus - minus


def simulate_state_tomography(b, n_shots: int, rng) -> np.ndarray:
    """Noisy surrogate for qubit state tomography.

    Each Bloch component picks up an independent normal perturbation with
    standard deviation sqrt((1 - theta_i)/N); the result is pulled back onto
    the unit sphere if the noise pushed it outside the ball.
    """
    theta = np.asarray(b, dtype=float)
    if theta.shape != (3,):
        raise DimensionError("expected a Bloch 3-vector")
    if int(n_shots) < 1:
        raise ValidationError("shot count must be at least 1")
    gen = rng_from_seed(rng)
    xi = gen.standard_normal(3)
    scale = np.sqrt(np.maximum(1.0 - theta, 0.0) / float(n_shots))
    out = theta + xi * scale
    norm = np.linalg.norm(out)
    if norm > 1.0:
        out = out / norm
    return out


def normalize_project(b, directions) -> np.ndarray:
    """Unit vector along the component of b orthogonal to the found directions."""
    v = np.asarray(b, dtype=float).copy()
    if v.shape != (3,):
        raise DimensionError("expected a Bloch 3-vector")
    for d in directions:
        d = np.asarray(d, dtype=float)
        v -= (d @ v) * d
    norm = np.linalg.norm(v)
    if norm < _DEGENERATE_NORM:
        raise DegenerateIterateError(
            "iterate vanished after projecting out found directions"
        )
    return v / norm


def _fix_sign(v) -> np.ndarray:
    # threshold well above the stopping tolerance so convergence residue in
    # other components cannot decide the sign
    for comp in v:
        if abs(comp) > 1e-5:
            return v if comp > 0 else -v
    return v


@dataclass(frozen=True, eq=False)
class DirectionEstimate:
    """Orthonormal channel directions plus the search diagnostics behind them."""

    directions: np.ndarray
    lambda_first_pass: np.ndarray
    iterates: tuple
    steps: tuple
    restarts: int

    def __post_init__(self):
        object.__setattr__(
            self, "directions", np.asarray(self.directions, dtype=float)
        )
        object.__setattr__(
            self, "lambda_first_pass", np.asarray(self.lambda_first_pass, dtype=float)
        )


def _random_unit_in_complement(rng, found):
    for _ in range(20):
        try:
            return normalize_project(rng.standard_normal(3), found)
        except DegenerateIterateError:
            continue
    raise DegenerateIterateError("could not draw a start vector in the complement")


def _probe(channel_oracle, b, cascade_depth, n_shots, rng, exact):
    rho = bloch_to_density(b)
    for _ in range(cascade_depth):
        rho = channel_oracle(rho)
    out = density_to_bloch(rho)
    if exact:
        return out
    return simulate_state_tomography(out, n_shots, rng)


def estimate_directions(
    channel_oracle,
    n_shots: int = 5000,
    cascade_depth: int = 1,
    tau_scale: float = 2.0,
    max_steps: int = 50,
    rng=None,
    exact: bool = False,
    max_restarts: int = 5,
) -> DirectionEstimate:
    """Estimate the three orthogonal directions of a black-box qubit Pauli channel.

    Repeatedly feeds pure states through the channel (cascaded
    ``cascade_depth`` times), reads the output Bloch vector through the
    tomography surrogate, and renormalizes; the iterate drifts toward the
    direction with the largest parameter magnitude. Found directions are
    projected out and the search repeats; the third direction is the cross
    product of the first two. Contraction ratios along the way give rough
    first-pass magnitudes ``|lambda|^(1/cascade_depth)``.

    A search that degenerates or exhausts ``max_steps`` restarts from a fresh
    random state, up to ``max_restarts`` times; running out raises a
    partial-result error carrying everything found so far.
    """
    if int(cascade_depth) < 1:
        raise ValidationError("cascade depth must be at least 1")
    if int(max_steps) < 1:
        raise ValidationError("max_steps must be at least 1")
    gen = rng_from_seed(rng if rng is not None else 0)
    tau = EXACT_TAU if exact else tau_scale * np.sqrt(3.0 / float(n_shots))
    found = []
    magnitudes = []
    all_iterates = []
    all_steps = []
    restarts = 0

    def partial(reason):
        est = DirectionEstimate(
            directions=np.array(found) if found else np.zeros((0, 3)),
            lambda_first_pass=np.array(magnitudes),
            iterates=tuple(all_iterates),
            steps=tuple(all_steps),
            restarts=restarts,
        )
        return PartialResultError(reason, partial=est)

    def rough_lambda(ratio):
        return float(np.clip(ratio, 0.0, 1.0) ** (1.0 / cascade_depth))

    while len(found) < 2:
        attempts = 0
        direction = None
        while direction is None:
            if attempts > max_restarts:
                raise partial("direction search exhausted its restart budget")
            if attempts:
                restarts += 1
            attempts += 1
            try:
                b = _random_unit_in_complement(gen, found)
            except DegenerateIterateError as exc:
                raise partial(str(exc)) from exc
            iterates = [b]
            ratio = 0.0
            for _ in range(max_steps):
                try:
                    out = _probe(channel_oracle, b, cascade_depth, n_shots, gen, exact)
                    ratio = float(np.linalg.norm(out))
                    b_next = normalize_project(out, found)
                except DegenerateIterateError:
                    break
                if b @ b_next < 0.0:
                    # the channel may flip the iterate each step (negative
                    # parameter); directions are sign-free, keep continuity
                    b_next = -b_next
                iterates.append(b_next)
                if np.linalg.norm(b - b_next) <= tau:
                    direction = b_next
                    break
                b = b_next
            all_iterates.append(tuple(iterates))
            all_steps.append(len(iterates) - 1)
        found.append(_fix_sign(direction))
        magnitudes.append(rough_lambda(ratio))

    third = _fix_sign(np.cross(found[0], found[1]))
    found.append(third / np.linalg.norm(third))
    out = _probe(channel_oracle, found[2], cascade_depth, n_shots, gen, exact)
    magnitudes.append(rough_lambda(float(np.linalg.norm(out))))
    return DirectionEstimate(
        directions=np.array(found),
        lambda_first_pass=np.array(magnitudes),
        iterates=tuple(all_iterates),
        steps=tuple(all_steps),
        restarts=restarts,
    )


def config_to_dict(cfg: TomographyConfiguration) -> dict:
    """JSON form of a configuration; qubit projective pieces compress to Bloch vectors."""
    out: dict = {"shots": cfg.shots}
    if cfg.dim == 2:
        out["input_bloch"] = density_to_bloch(cfg.input).tolist()
    else:
        out["input_matrix"] = to_pairs(cfg.input.matrix)
    bloch_form = None
    if cfg.dim == 2 and cfg.povm.n_outcomes == 2:
        m = np.einsum("ij,kji->k", cfg.povm.elements[0], PAULIS).real
        if np.allclose(
            cfg.povm.elements[0], (np.eye(2) + np.einsum("k,kij->ij", m, PAULIS)) / 2
        ) and abs(np.linalg.norm(m) - 1.0) < 1e-10:
            bloch_form = m.tolist()
    if bloch_form is not None:
        out["povm_bloch"] = bloch_form
    else:
        out["povm_matrices"] = [to_pairs(e) for e in cfg.povm.elements]
    return out


def config_from_dict(data: dict) -> TomographyConfiguration:
    if "input_bloch" in data:
        state = bloch_to_density(np.asarray(data["input_bloch"], dtype=float))
    elif "input_matrix" in data:
        state = DensityMatrix(from_pairs(data["input_matrix"]))
    else:
        raise ValidationError("configuration needs input_bloch or input_matrix")
    if "povm_bloch" in data:
        povm = projective_povm(np.asarray(data["povm_bloch"], dtype=float))
    elif "povm_matrices" in data:
        povm = Povm([from_pairs(e) for e in data["povm_matrices"]])
    else:
        raise ValidationError("configuration needs povm_bloch or povm_matrices")
    return TomographyConfiguration(
        input=state, povm=povm, shots=int(data.get("shots", 1))
    )


def dataset_to_dict(configs, record: MeasurementRecord) -> dict:
    return {
        "configs": [config_to_dict(c) for c in configs],
        "counts": [c.tolist() for c in record.counts],
    }


def dataset_from_dict(data: dict):
    configs = [config_from_dict(c) for c in data["configs"]]
    record = MeasurementRecord([np.asarray(c, dtype=np.int64) for c in data["counts"]])
    if len(configs) != record.n_configs:
        raise ValidationError("configuration and count lists have different lengths")
    return configs, record
