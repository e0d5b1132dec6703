"""Von Neumann pointer measurements with postselection.

Each coupling ``exp(-i eps A (x) p)`` translates its own Gaussian pointer by
``eps * lambda`` on the eigenspace of ``A`` with eigenvalue ``lambda``.
Translations are carried out exactly in the conjugate basis of the periodic
grid, so fractional shifts are never snapped to grid points.

Because all couplings act in a common eigenbasis, the joint state is a sum
over branches ``sum_b c_b |v_b> (x) phi_b^(1) (x) ... (x) phi_b^(K)``. It is
stored in that factorized form: one wavefunction per (pointer, branch). The
full tensor over ``K`` pointer grids is never built.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .qcore import (
    DimensionMismatch,
    Operator,
    StateVector,
    StructureError,
    commutator_norm,
    eigh,
    inner,
    NORM_TOL,
)

COMMUTE_TOL = 1e-12
POSTSELECT_MIN = 1e-14
DEFAULT_SIGMA = 1.0
DEFAULT_HALF_WIDTH = 10.0
DEFAULT_POINTS = 1024
DEFAULT_EPSILONS = (0.2, 0.1, 0.05, 0.025, 0.0125)


class PointerError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PointerRegister:
    sigma: float
    half_width: float
    n_points: int
    positions: np.ndarray
    amplitudes: np.ndarray

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n_points

    @property
    def momenta(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)

    @property
    def momentum_variance(self) -> float:
        return 1.0 / (4.0 * self.sigma ** 2)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.spacing)


def gaussian_pointer(sigma: float = DEFAULT_SIGMA, half_width: float = DEFAULT_HALF_WIDTH,
                     n_points: int = DEFAULT_POINTS) -> PointerRegister:
    """Grid-normalized ``exp(-x^2 / 4 sigma^2)`` on a periodic symmetric grid.

    Grid points sit at cell centres, ``x_j = -L + (j + 1/2) dx``, so the grid
    is symmetric about 0.
    """
    if not sigma > 0:
        raise PointerError("sigma must be positive")
    if half_width < 5 * sigma:
        raise PointerError("half_width must be at least 5 sigma")
    if n_points < 64:
        raise PointerError("n_points must be at least 64")
    dx = 2.0 * half_width / n_points
    if dx > sigma / 4:
        raise PointerError("pointer under-resolved")
    x = -half_width + (np.arange(n_points) + 0.5) * dx
    psi = np.exp(-x ** 2 / (4 * sigma ** 2)).astype(complex)
    psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * dx)
    x.setflags(write=False)
    psi.setflags(write=False)
    return PointerRegister(sigma, half_width, n_points, x, psi)


def translate(psi: np.ndarray, shift: float, spacing: float) -> np.ndarray:
    """Return ``psi(x - shift)`` using the DFT shift theorem (periodic grid)."""
    if shift == 0.0:
        return np.array(psi, dtype=complex)
    k = 2.0 * np.pi * np.fft.fftfreq(psi.shape[-1], d=spacing)
    return np.fft.ifft(np.fft.fft(psi, axis=-1) * np.exp(-1j * k * shift), axis=-1)


@dataclass(frozen=True)
class CouplingSpec:
    observable: Operator
    strength: float
    pointer_index: int

    def __post_init__(self):
        if not math.isfinite(self.strength):
            raise ValueError("coupling strength must be finite")
        if not self.observable.is_hermitian:
            raise StructureError("coupled observable must be hermitian")


@dataclass(frozen=True, eq=False)
class JointState:
    """System (x) pointers, factorized over branches of a common eigenbasis.

    ``basis[:, b]`` is the system vector of branch ``b``, ``coefficients[b]``
    its amplitude and ``branches[k][b]`` the wavefunction of pointer ``k``.
    """

    system_dim: int
    pointer: PointerRegister
    basis: np.ndarray
    coefficients: np.ndarray
    branches: tuple[np.ndarray, ...]

    @property
    def pointer_count(self) -> int:
        return len(self.branches)

    def norm(self) -> float:
        """Squared norm; branch system vectors are orthonormal."""
        dx = self.pointer.spacing
        total = np.abs(self.coefficients) ** 2
        for phi in self.branches:
            total = total * np.sum(np.abs(phi) ** 2, axis=1) * dx
        return float(np.sum(total))


def _common_eigenbasis(observables: list[Operator]) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis diagonalizing every observable; returns (basis, eigenvalues).

    ``eigenvalues[k, b]`` is the eigenvalue of observable ``k`` on ``basis[:, b]``.
    """
    dim = observables[0].dim
    if all(np.count_nonzero(o.matrix - np.diag(np.diag(o.matrix))) == 0 for o in observables):
        basis = np.eye(dim, dtype=complex)
    else:
        # a generic real combination separates the joint eigenspaces
        weights = [1.0 / (k + math.sqrt(2.0)) for k in range(len(observables))]
        mix = observables[0].scaled(weights[0])
        for w, o in zip(weights[1:], observables[1:]):
            mix = mix + o.scaled(w)
        _, basis = eigh(mix)
    values = np.array([np.real(np.einsum("ib,ij,jb->b", basis.conj(), o.matrix, basis))
                       for o in observables])
    for o, vals in zip(observables, values):
        resid = np.max(np.abs(o.matrix @ basis - basis * vals))
        if resid > 1e-9:
            raise StructureError(f"observables share no eigenbasis (residual {resid:.3g})")
    return basis, values


def couple(system: StateVector, pointers: list[PointerRegister],
           couplings: list[CouplingSpec]) -> JointState:
    """Apply all couplings simultaneously (impulsive, one pointer each)."""
    if not pointers:
        raise PointerError("need at least one pointer")
    grid = pointers[0]
    for p in pointers[1:]:
        if (p.n_points, p.half_width) != (grid.n_points, grid.half_width):
            raise PointerError("all pointers must share one grid")
    used = set()
    for c in couplings:
        if not 0 <= c.pointer_index < len(pointers):
            raise PointerError(f"pointer index {c.pointer_index} out of range")
        if c.pointer_index in used:
            raise PointerError(f"pointer {c.pointer_index} is coupled twice")
        used.add(c.pointer_index)
        if c.observable.dim != system.dim:
            raise DimensionMismatch(f"observable dimension {c.observable.dim} vs system {system.dim}")
    for i, a in enumerate(couplings):
        for b in couplings[i + 1:]:
            n = commutator_norm(a.observable, b.observable)
            if n > COMMUTE_TOL:
                raise StructureError(
                    f"observables do not commute (commutator norm {n:.3g}); "
                    "apply the couplings sequentially instead")

    if couplings:
        basis, values = _common_eigenbasis([c.observable for c in couplings])
    else:
        basis, values = np.eye(system.dim, dtype=complex), np.zeros((0, system.dim))
    coefficients = basis.conj().T @ system.amplitudes
    nb = basis.shape[1]
    branches = [np.tile(p.amplitudes, (nb, 1)) for p in pointers]
    dx = grid.spacing
    for c, lam in zip(couplings, values):
        phi0 = pointers[c.pointer_index].amplitudes
        branches[c.pointer_index] = np.stack([translate(phi0, c.strength * l, dx) for l in lam])
    for b in branches:
        b.setflags(write=False)
    return JointState(system.dim, grid, basis, coefficients, tuple(branches))


@dataclass(frozen=True, eq=False)
class PointerState:
    """Pointer-only state ``sum_{b,b'} M[b,b'] (x)_k |phi_b^k><phi_b'^k|``."""

    pointer: PointerRegister
    branches: tuple[np.ndarray, ...]
    mixing: np.ndarray

    @property
    def pointer_count(self) -> int:
        return len(self.branches)

    def _gram(self, k: int) -> np.ndarray:
        """``S[b', b] = <phi_b'|phi_b>`` for pointer ``k``."""
        phi = self.branches[k]
        return phi.conj() @ phi.T * self.pointer.spacing

    def _reduced_weights(self, index: int) -> np.ndarray:
        if not 0 <= index < self.pointer_count:
            raise IndexError(f"pointer index {index} out of range 0..{self.pointer_count - 1}")
        t = np.ones_like(self.mixing)
        for j in range(self.pointer_count):
            if j != index:
                t = t * self._gram(j)
        # W[b, b'] = M[b, b'] * prod_j <phi_b'|phi_b>
        return self.mixing * t.T

    def expectation(self, index: int, matrix_elements: np.ndarray) -> float:
        """``Tr(rho_k O) / Tr(rho_k)`` given ``O[b', b] = <phi_b'|O|phi_b>``."""
        w = self._reduced_weights(index)
        norm = np.sum(w * self._gram(index).T)
        return float(np.real(np.sum(w * matrix_elements.T) / norm))

    def marginal(self, index: int) -> np.ndarray:
        """Position probability density of pointer ``index`` on the grid."""
        w = self._reduced_weights(index)
        phi = self.branches[index]
        dens = np.real(np.einsum("bc,bx,cx->x", w, phi, phi.conj()))
        return dens / (np.sum(dens) * self.pointer.spacing)


def postselect_pointers(joint: JointState, post: StateVector) -> tuple[PointerState, float]:
    """Project the system onto ``post``; return the pointer state and success probability."""
    if post.dim != joint.system_dim:
        raise DimensionMismatch(f"post dimension {post.dim} vs system {joint.system_dim}")
    if not post.is_normalized(NORM_TOL):
        raise ValueError("postselected state must be normalized")
    w = (post.amplitudes.conj() @ joint.basis) * joint.coefficients
    dx = joint.pointer.spacing
    gram = np.ones((w.size, w.size), dtype=complex)
    for phi in joint.branches:
        gram = gram * (phi.conj() @ phi.T * dx)
    prob = float(np.real(w.conj() @ gram @ w))
    if prob < POSTSELECT_MIN:
        raise PointerError("postselection failed")
    mixing = np.outer(w, w.conj()) / prob
    return PointerState(joint.pointer, joint.branches, mixing), prob


def trace_system(joint: JointState) -> PointerState:
    """Pointer state with no postselection (system traced out)."""
    mixing = np.diag(np.abs(joint.coefficients) ** 2).astype(complex)
    mixing /= joint.norm()
    return PointerState(joint.pointer, joint.branches, mixing)


def pointer_mean_position(state: PointerState, index: int) -> float:
    x = state.pointer.positions
    phi = state.branches[index] if 0 <= index < state.pointer_count else None
    if phi is None:
        raise IndexError(f"pointer index {index} out of range 0..{state.pointer_count - 1}")
    elements = (phi.conj() * x) @ phi.T * state.pointer.spacing
    return state.expectation(index, elements)


def pointer_mean_momentum(state: PointerState, index: int) -> float:
    """Mean conjugate momentum, from the DFT of the branch wavefunctions."""
    if not 0 <= index < state.pointer_count:
        raise IndexError(f"pointer index {index} out of range 0..{state.pointer_count - 1}")
    grid = state.pointer
    spec = np.fft.fft(state.branches[index], axis=1)
    # Parseval: sum |phi|^2 dx = (dx / n) sum |phi_hat|^2
    elements = (spec.conj() * grid.momenta) @ spec.T * grid.spacing / grid.n_points
    return state.expectation(index, elements)


@dataclass
class SweepConfig:
    """A weak-measurement experiment; ``post=None`` means no postselection."""

    pre: StateVector
    observables: list[Operator]
    post: StateVector | None = None
    sigma: float = DEFAULT_SIGMA
    half_width: float = DEFAULT_HALF_WIDTH
    n_points: int = DEFAULT_POINTS
    pointer_ids: list[str] = field(default_factory=list)

    def ids(self) -> list[str]:
        return self.pointer_ids or [str(k) for k in range(len(self.observables))]


@dataclass(frozen=True)
class SlopeFit:
    pointer_id: str
    slope: float
    curvature: float
    residual: float


@dataclass
class SweepResult:
    epsilons: list[float]
    mean_positions: np.ndarray  # (n_eps, n_pointers)
    mean_momenta: np.ndarray
    fits: list[SlopeFit]
    pointer_ids: list[str]
    postselection_probabilities: list[float]

    def rows(self) -> list[list]:
        """(epsilon, pointer_id, mean_position, mean_momentum), ordered by epsilon then pointer."""
        out = []
        for i, eps in enumerate(self.epsilons):
            for k, pid in enumerate(self.pointer_ids):
                out.append([eps, pid, float(self.mean_positions[i, k]), float(self.mean_momenta[i, k])])
        return out


def measure_point(config: SweepConfig, eps: float) -> tuple[list[float], list[float], float]:
    """Couple every observable at strength ``eps`` and read all pointer means."""
    pointer = gaussian_pointer(config.sigma, config.half_width, config.n_points)
    pointers = [pointer] * len(config.observables)
    couplings = [CouplingSpec(o, eps, k) for k, o in enumerate(config.observables)]
    joint = couple(config.pre, pointers, couplings)
    if config.post is None:
        state, prob = trace_system(joint), 1.0
    else:
        state, prob = postselect_pointers(joint, config.post)
    n = len(pointers)
    return ([pointer_mean_position(state, k) for k in range(n)],
            [pointer_mean_momentum(state, k) for k in range(n)], prob)


def fit_polynomial(epsilons, values, degree: int = 2) -> tuple[np.ndarray, float]:
    """Least squares ``values ~ sum_{j=1..degree} c_j eps^j`` (no constant term).

    Returns the coefficients ``(c_1, ..., c_degree)`` and the residual norm.
    """
    eps = np.asarray(epsilons, dtype=float)
    design = np.stack([eps ** j for j in range(1, degree + 1)], axis=1)
    coef, *_ = np.linalg.lstsq(design, np.asarray(values, dtype=float), rcond=None)
    resid = float(np.linalg.norm(design @ coef - values))
    return coef, resid


def sweep(config: SweepConfig, epsilons=DEFAULT_EPSILONS, workers: int = 1) -> SweepResult:
    """Mean pointer readouts over an epsilon list plus per-pointer quadratic fits."""
    eps = [float(e) for e in epsilons]
    if len(set(eps)) < 4:
        raise ValueError("need at least 4 distinct epsilon values for the fit")
    max_eig = max(float(np.max(np.abs(np.linalg.eigvalsh(o.matrix)))) for o in config.observables)
    limit = config.half_width / 4
    for e in eps:
        if abs(e) * max_eig > limit:
            raise ValueError(f"epsilon {e} shifts the pointer beyond half_width/4 = {limit}")

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = dict(zip(eps, pool.map(lambda e: measure_point(config, e), eps)))
    else:
        results = {e: measure_point(config, e) for e in eps}
    positions = np.array([results[e][0] for e in eps])
    momenta = np.array([results[e][1] for e in eps])
    probs = [results[e][2] for e in eps]
    fits = []
    for k, pid in enumerate(config.ids()):
        coef, resid = fit_polynomial(eps, positions[:, k], 2)
        fits.append(SlopeFit(pid, float(coef[0]), float(coef[1]), resid))
    return SweepResult(eps, positions, momenta, fits, config.ids(), probs)


def shift_slope(config: SweepConfig, epsilons=DEFAULT_EPSILONS) -> list[SlopeFit]:
    """Per-pointer fit of mean position to ``c1 eps + c2 eps^2``."""
    return sweep(config, epsilons).fits
