"""Dense complex linear algebra for small systems.

States and operators are immutable wrappers around numpy arrays. Box-basis
states of ``n`` particles live in dimension ``2**n`` with labels such as
``"LRL"``; particle 0 is the most significant character and ``L`` precedes
``R``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from . import kernels

HERMITIAN = "hermitian"
PROJECTOR = "projector"
UNITARY = "unitary"
_FLAGS = frozenset({HERMITIAN, PROJECTOR, UNITARY})

HERMITIAN_TOL = 1e-12
IDEMPOTENT_TOL = 1e-10
UNITARY_TOL = 1e-10
NORM_TOL = 1e-12

EIG_CLUSTER_TOL = 1e-8
RANK_TOL = 1e-10
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


class DimensionMismatch(ValueError):
    pass


class StructureError(ValueError):
    """An operator does not satisfy a structure flag it claims or needs."""


class ConvergenceError(RuntimeError):
    pass


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=complex)
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite entries")
    out.setflags(write=False)
    return out


def box_labels(n_particles: int) -> tuple[str, ...]:
    return tuple("".join(t) for t in itertools.product("LR", repeat=n_particles))


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1 or amps.size == 0:
            raise ValueError("state amplitudes must be a non-empty 1-D array")
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != amps.size:
                raise ValueError(f"{len(labels)} labels for dimension {amps.size}")
            object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_labels(cls, mapping: dict[str, complex]) -> "StateVector":
        """Build a box-basis state from ``{"LLR": amp, ...}``."""
        n = len(next(iter(mapping)))
        labels = box_labels(n)
        index = {s: i for i, s in enumerate(labels)}
        amps = np.zeros(len(labels), dtype=complex)
        for key, amp in mapping.items():
            amps[index[key]] = amp
        return cls(amps, labels)

    @classmethod
    def basis(cls, label: str) -> "StateVector":
        return cls.from_labels({label: 1.0})

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(float(np.sum(np.abs(self.amplitudes) ** 2)) - 1.0) <= tol

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n, self.labels)

    def amplitude(self, label: str) -> complex:
        if self.labels is None:
            raise KeyError("state carries no basis labels")
        return complex(self.amplitudes[self.labels.index(label)])

    def __repr__(self):
        return f"StateVector(dim={self.dim})"


@dataclass(frozen=True, eq=False)
class Operator:
    matrix: np.ndarray
    flags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError(f"operator matrix must be square, got shape {m.shape}")
        flags = frozenset(self.flags)
        unknown = flags - _FLAGS
        if unknown:
            raise ValueError(f"unknown flags {sorted(unknown)}")
        if PROJECTOR in flags:
            flags = flags | {HERMITIAN}
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "flags", flags)
        self._check_flags()

    def _check_flags(self):
        m = self.matrix
        if HERMITIAN in self.flags:
            dev = np.max(np.abs(m - m.conj().T))
            if dev > HERMITIAN_TOL:
                raise StructureError(f"not hermitian (deviation {dev:.3g})")
        if PROJECTOR in self.flags:
            dev = np.max(np.abs(m @ m - m))
            if dev > IDEMPOTENT_TOL:
                raise StructureError(f"not idempotent (deviation {dev:.3g})")
        if UNITARY in self.flags:
            dev = np.max(np.abs(m.conj().T @ m - np.eye(self.dim)))
            if dev > UNITARY_TOL:
                raise StructureError(f"not unitary (deviation {dev:.3g})")

    @classmethod
    def identity(cls, dim: int) -> "Operator":
        return cls(np.eye(dim), {PROJECTOR, UNITARY})

    @classmethod
    def zero(cls, dim: int) -> "Operator":
        return cls(np.zeros((dim, dim)), {PROJECTOR})

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_hermitian(self) -> bool:
        return HERMITIAN in self.flags

    @property
    def is_projector(self) -> bool:
        return PROJECTOR in self.flags

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def dagger(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.flags)

    def __add__(self, other: "Operator") -> "Operator":
        _same_dim(self.dim, other.dim)
        flags = {HERMITIAN} if self.is_hermitian and other.is_hermitian else set()
        return Operator(self.matrix + other.matrix, flags)

    def __sub__(self, other: "Operator") -> "Operator":
        _same_dim(self.dim, other.dim)
        flags = {HERMITIAN} if self.is_hermitian and other.is_hermitian else set()
        return Operator(self.matrix - other.matrix, flags)

    def scaled(self, factor: float) -> "Operator":
        """Real rescaling keeps hermiticity."""
        flags = {HERMITIAN} if self.is_hermitian and np.isreal(factor) else set()
        return Operator(self.matrix * factor, flags)

    def __matmul__(self, other: "Operator") -> "Operator":
        _same_dim(self.dim, other.dim)
        return Operator(self.matrix @ other.matrix)

    def __repr__(self):
        return f"Operator(dim={self.dim}, flags={sorted(self.flags)})"


@dataclass(frozen=True)
class Eigenpair:
    value: float
    multiplicity: int
    projector: Operator


@dataclass(frozen=True)
class Spectrum:
    eigenpairs: tuple[Eigenpair, ...]

    @property
    def values(self) -> list[float]:
        return [e.value for e in self.eigenpairs]

    @property
    def multiplicities(self) -> dict[float, int]:
        return {e.value: e.multiplicity for e in self.eigenpairs}

    def __len__(self):
        return len(self.eigenpairs)

    def __iter__(self):
        return iter(self.eigenpairs)


def _same_dim(a: int, b: int):
    if a != b:
        raise DimensionMismatch(f"dimension mismatch: {a} vs {b}")


def inner(bra: StateVector, ket: StateVector) -> complex:
    """Return ``<bra|ket>``, conjugating the bra amplitudes."""
    _same_dim(bra.dim, ket.dim)
    return complex(np.vdot(bra.amplitudes, ket.amplitudes))


def tensor(*parts):
    """Kronecker product of states or of operators, left to right."""
    if not parts:
        raise ValueError("tensor needs at least one operand")
    if all(isinstance(p, StateVector) for p in parts):
        amps = reduce(np.kron, [p.amplitudes for p in parts])
        labels = None
        if all(p.labels is not None for p in parts):
            labels = tuple(
                "".join(combo) for combo in itertools.product(*[p.labels for p in parts])
            )
        return StateVector(amps, labels)
    if all(isinstance(p, Operator) for p in parts):
        matrix = reduce(np.kron, [p.matrix for p in parts])
        flags = frozenset.intersection(*[p.flags for p in parts])
        return Operator(matrix, flags)
    raise TypeError("tensor operands must all be StateVector or all Operator")


def apply(op: Operator, state: StateVector) -> StateVector:
    """Matrix-vector product. The result is not renormalized."""
    _same_dim(op.dim, state.dim)
    return StateVector(op.matrix @ state.amplitudes, state.labels)


def eigh(op: Operator) -> tuple[np.ndarray, np.ndarray]:
    """Jacobi eigendecomposition of a hermitian operator.

    Returns ``(values, vectors)`` sorted by ascending eigenvalue; the columns
    of ``vectors`` are orthonormal eigenvectors.
    """
    if not op.is_hermitian:
        raise StructureError("eigendecomposition requires a hermitian operator")
    a = np.array(op.matrix, dtype=complex, order="C")
    v = np.eye(op.dim, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(a)))
    sweeps, off = kernels.jacobi_sweeps(a, v, JACOBI_TOL * scale, JACOBI_MAX_SWEEPS)
    if off > JACOBI_TOL * scale:
        raise ConvergenceError(
            f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps "
            f"(off-diagonal residual {off:.3e})"
        )
    values = np.diag(a).real.copy()
    order = np.argsort(values, kind="stable")
    return values[order], v[:, order]


def hermitian_spectrum(op: Operator, cluster_tol: float = EIG_CLUSTER_TOL) -> Spectrum:
    """Eigenvalues with multiplicities and eigenprojectors.

    Eigenvalues closer than ``cluster_tol`` to their sorted neighbour are
    merged into one eigenpair.
    """
    values, vectors = eigh(op)
    groups: list[list[int]] = [[0]]
    for i in range(1, len(values)):
        if values[i] - values[i - 1] <= cluster_tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    pairs = []
    for g in groups:
        vecs = vectors[:, g]
        proj = vecs @ vecs.conj().T
        pairs.append(Eigenpair(float(np.mean(values[g])), len(g), Operator(proj, {PROJECTOR})))
    return Spectrum(tuple(pairs))


def orthonormal_basis(vectors, rank_tol: float = RANK_TOL) -> list[np.ndarray]:
    """Modified Gram-Schmidt with one reorthogonalization pass.

    Vectors whose residual norm falls to ``rank_tol`` or below are dropped.
    """
    basis: list[np.ndarray] = []
    for vec in vectors:
        w = np.array(vec, dtype=complex)
        for _ in range(2):
            for e in basis:
                w = w - np.vdot(e, w) * e
        n = np.linalg.norm(w)
        if n > rank_tol:
            basis.append(w / n)
    return basis


def projector_onto(vectors: list[StateVector], dim: int | None = None) -> Operator:
    """Orthogonal projector onto the span of ``vectors``.

    ``dim`` is only needed for an empty list, which gives the zero operator.
    """
    if not vectors:
        if dim is None:
            raise DimensionMismatch("empty vector list needs an explicit dim")
        return Operator.zero(dim)
    d = vectors[0].dim
    for v in vectors[1:]:
        _same_dim(d, v.dim)
    if dim is not None:
        _same_dim(dim, d)
    matrix = np.zeros((d, d), dtype=complex)
    for e in orthonormal_basis([v.amplitudes for v in vectors]):
        matrix += np.outer(e, e.conj())
    return Operator(matrix, {PROJECTOR})


def commutator_norm(a: Operator, b: Operator) -> float:
    """Max-entry norm of ``[a, b]``."""
    _same_dim(a.dim, b.dim)
    return float(np.max(np.abs(a.matrix @ b.matrix - b.matrix @ a.matrix)))


def random_state(rng: np.random.Generator, dim: int) -> StateVector:
    """Haar-random pure state: complex Gaussian components, normalized."""
    z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector(z / np.linalg.norm(z))


def random_hermitian(rng: np.random.Generator, dim: int) -> Operator:
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return Operator((m + m.conj().T) / 2, {HERMITIAN})


def random_projector(rng: np.random.Generator, dim: int, rank: int) -> Operator:
    """Projector onto a Haar-random ``rank``-dimensional subspace."""
    if not 0 <= rank <= dim:
        raise ValueError(f"rank {rank} out of range for dimension {dim}")
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, _ = np.linalg.qr(z)
    cols = q[:, :rank]
    return Operator(cols @ cols.conj().T, {PROJECTOR})
