"""Pre- and postselected ensembles: weak values and ABL probabilities.

A :class:`TwoStateVector` pairs a preselected state with a postselected one.
Weak values are ``<post|A|pre> / <post|pre>``; the ABL rule gives outcome
probabilities of one intermediate projective measurement conditioned on
successful postselection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qcore import (
    DimensionMismatch,
    HERMITIAN,
    NORM_TOL,
    Operator,
    StateVector,
    StructureError,
    apply,
    hermitian_spectrum,
    inner,
    random_projector,
    random_state,
)

ORTHOGONALITY_TOL = 1e-10
CERTAINTY_TOL = 1e-10
ABL_DENOMINATOR_TOL = 1e-14


class WeakValueUndefined(ValueError):
    pass


class PostselectionImpossible(ValueError):
    pass


class NotDichotomic(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TwoStateVector:
    pre: StateVector
    post: StateVector
    overlap: complex
    degenerate: bool

    @property
    def dim(self) -> int:
        return self.pre.dim


def make_tsv(pre: StateVector, post: StateVector) -> TwoStateVector:
    if pre.dim != post.dim:
        raise DimensionMismatch(f"pre has dimension {pre.dim}, post has {post.dim}")
    for name, s in (("pre", pre), ("post", post)):
        if not s.is_normalized(NORM_TOL):
            raise ValueError(f"{name} state is not normalized (norm {s.norm():.15g})")
    overlap = inner(post, pre)
    return TwoStateVector(pre, post, overlap, abs(overlap) <= ORTHOGONALITY_TOL)


def transition_amplitude(tsv: TwoStateVector, op: Operator) -> complex:
    """``<post|A|pre>``."""
    return inner(tsv.post, apply(op, tsv.pre))


def weak_value(tsv: TwoStateVector, op: Operator) -> complex:
    if op.dim != tsv.dim:
        raise DimensionMismatch(f"operator dimension {op.dim} vs states {tsv.dim}")
    if tsv.degenerate:
        raise WeakValueUndefined("weak value undefined, <post|pre> = 0")
    return transition_amplitude(tsv, op) / tsv.overlap


@dataclass(frozen=True)
class AblDistribution:
    entries: dict[float, float]

    def probability(self, value: float, tol: float = 1e-8) -> float:
        return sum(p for k, p in self.entries.items() if abs(k - value) <= tol)

    def __getitem__(self, value: float) -> float:
        return self.probability(value)


def abl_distribution(tsv: TwoStateVector, op: Operator) -> AblDistribution:
    """Outcome probabilities of a strong measurement of ``op`` between pre and post."""
    if op.dim != tsv.dim:
        raise DimensionMismatch(f"operator dimension {op.dim} vs states {tsv.dim}")
    spectrum = hermitian_spectrum(op)
    weights = [abs(transition_amplitude(tsv, e.projector)) ** 2 for e in spectrum]
    total = sum(weights)
    if total <= ABL_DENOMINATOR_TOL:
        raise PostselectionImpossible("postselection impossible after this measurement")
    return AblDistribution({e.value: w / total for e, w in zip(spectrum, weights)})


def dichotomic_certainty(tsv: TwoStateVector, op: Operator) -> float | None:
    """Eigenvalue a strong measurement must yield, read off the weak value.

    ``op`` must have exactly two distinct eigenvalues. If the (complex) weak
    value equals one of them within tolerance, that eigenvalue is returned;
    otherwise None.
    """
    spectrum = hermitian_spectrum(op)
    if len(spectrum) != 2:
        raise NotDichotomic(f"observable has {len(spectrum)} distinct eigenvalues, need 2")
    wv = weak_value(tsv, op)
    for value in spectrum.values:
        if abs(wv - value) <= CERTAINTY_TOL:
            return value
    return None


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_av91_instance(rng_seed, dim: int, max_attempts: int = 1000):
    """Random instance whose weak value equals an eigenvalue by construction.

    Draws a dichotomic hermitian ``A = lam1*P + lam0*(1-P)`` with ``P`` a
    Haar-random projector of rank 1..dim-1, a Haar-random ``pre``, picks one
    eigenvalue ``lam`` and draws ``post`` uniformly from the orthogonal
    complement of ``(A - lam)|pre>``. Returns ``(tsv, A, lam)``.
    """
    if dim < 2:
        raise ValueError("dimension must be at least 2")
    rng = _as_rng(rng_seed)
    rank = int(rng.integers(1, dim))
    proj = random_projector(rng, dim, rank)
    lam0, lam1 = np.sort(rng.uniform(-3.0, 3.0, size=2))
    if lam1 - lam0 < 0.25:
        lam1 = lam0 + 0.25
    a = Operator(lam1 * proj.matrix + lam0 * (np.eye(dim) - proj.matrix), {HERMITIAN})
    pre = random_state(rng, dim)
    lam = float(lam0 if rng.integers(2) == 0 else lam1)
    direction = (a.matrix - lam * np.eye(dim)) @ pre.amplitudes
    dnorm = np.linalg.norm(direction)
    if dnorm > 0:
        direction = direction / dnorm
    for _ in range(max_attempts):
        z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        if dnorm > 0:
            z = z - np.vdot(direction, z) * direction
        n = np.linalg.norm(z)
        if n == 0.0:
            continue
        post = StateVector(z / n)
        if abs(inner(post, pre)) > ORTHOGONALITY_TOL:
            return make_tsv(pre, post), a, lam
    raise RuntimeError(f"no admissible postselected state after {max_attempts} attempts")


def require_hermitian(op: Operator) -> None:
    if not op.is_hermitian:
        raise StructureError("observable must be hermitian")
