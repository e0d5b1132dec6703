"""Seeded Monte Carlo of strong measurement followed by postselection.

Probabilities come straight from Born's rule on ``qcore`` objects; nothing
here goes through the ABL formula, so the sampler is an independent check of
``tsvf``.

Randomness uses numpy's Philox-4x64 counter-based generator keyed by the
seed. Shot ``i`` consumes uniforms ``2i`` and ``2i+1`` of the stream (one for
the intermediate outcome, one for postselection), so any split of the shot
range into chunks reproduces the same counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qcore import NORM_TOL, Operator, StateVector, StructureError, hermitian_spectrum
from .report import CheckResult, Report

GENERATOR_ID = f"numpy.random.Philox-4x64 (numpy {np.__version__})"
Z_THRESHOLD = 4.0
MIN_POSTSELECTED = 100
NO_MEASUREMENT = "none"


class TooFewPostselected(ValueError):
    pass


@dataclass(frozen=True)
class RunRecord:
    outcome: float | str
    postselected: bool


@dataclass
class Counts:
    shots: int
    seed: int
    table: dict[tuple, int] = field(default_factory=dict)
    generator: str = GENERATOR_ID

    def count(self, outcome, postselected: bool, tol: float = 1e-8) -> int:
        total = 0
        for (o, ps), n in self.table.items():
            if ps != postselected:
                continue
            if o == outcome or (not isinstance(o, str) and not isinstance(outcome, str)
                                and abs(o - outcome) <= tol):
                total += n
        return total

    @property
    def postselected(self) -> int:
        return sum(n for (_, ps), n in self.table.items() if ps)

    def rows(self) -> list[list]:
        return [[o, ps, n] for (o, ps), n in sorted(self.table.items(), key=lambda kv: (str(kv[0][0]), kv[0][1]))]


def _branches(pre: StateVector, post: StateVector, observable: Operator | None):
    """Outcome labels, Born probabilities and postselection probabilities per outcome."""
    if observable is None:
        return [NO_MEASUREMENT], np.array([1.0]), np.array([abs(np.vdot(post.amplitudes, pre.amplitudes)) ** 2])
    labels, born, survive = [], [], []
    for pair in hermitian_spectrum(observable):
        projected = pair.projector.matrix @ pre.amplitudes
        p = float(np.real(np.vdot(projected, projected)))
        labels.append(pair.value)
        born.append(p)
        if p > 0.0:
            collapsed = projected / math.sqrt(p)
            survive.append(abs(np.vdot(post.amplitudes, collapsed)) ** 2)
        else:
            survive.append(0.0)
    born = np.array(born)
    return labels, born / born.sum(), np.minimum(np.array(survive), 1.0)


def _uniforms(seed: int, start: int, stop: int) -> np.ndarray:
    """Uniforms for shots ``start..stop-1``, shape (stop-start, 2)."""
    bitgen = np.random.Philox(key=seed)
    # Philox yields 4 uint64 per counter step; one double per uint64
    first = 2 * start
    bitgen.advance(first // 4)
    gen = np.random.Generator(bitgen)
    skip = first % 4
    raw = gen.random(skip + 2 * (stop - start))
    return raw[skip:].reshape(stop - start, 2)


def sample_strong(pre: StateVector, post: StateVector, observable: Operator | None = None,
                  shots: int = 100_000, seed: int = 0, chunk_size: int | None = None) -> Counts:
    """Simulate ``shots`` runs: optional projective measurement, then postselection.

    ``chunk_size`` only changes how the stream is drawn, never the result.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    for name, s in (("pre", pre), ("post", post)):
        if not s.is_normalized(NORM_TOL):
            raise ValueError(f"{name} state is not normalized")
    if observable is not None and not observable.is_hermitian:
        raise StructureError("measured observable must be hermitian")
    labels, born, survive = _branches(pre, post, observable)
    cumulative = np.cumsum(born)
    cumulative[-1] = 1.0

    chunk = shots if chunk_size is None else max(1, int(chunk_size))
    tally = np.zeros((len(labels), 2), dtype=np.int64)
    for start in range(0, shots, chunk):
        stop = min(shots, start + chunk)
        u = _uniforms(seed, start, stop)
        outcome = np.searchsorted(cumulative, u[:, 0], side="right")
        outcome = np.minimum(outcome, len(labels) - 1)
        kept = u[:, 1] < survive[outcome]
        np.add.at(tally, (outcome, kept.astype(int)), 1)

    table = {}
    for i, label in enumerate(labels):
        for ps in (False, True):
            table[(label, ps)] = int(tally[i, int(ps)])
    return Counts(shots, seed, table)


def empirical_vs_abl(counts: Counts, predicted) -> Report:
    """z-score every outcome's postselected frequency against a prediction.

    ``predicted`` is an ``AblDistribution`` or a plain ``{eigenvalue: prob}``
    dict. A zero-probability outcome that occurs gets ``z = inf``.
    """
    entries = getattr(predicted, "entries", predicted)
    n = counts.postselected
    if n < MIN_POSTSELECTED:
        raise TooFewPostselected(
            f"only {n} postselected runs (need {MIN_POSTSELECTED}); increase shots")
    outcomes = [o for (o, ps) in counts.table if ps and not isinstance(o, str)]
    keys = list(entries)
    for o in outcomes:
        if not any(abs(o - k) <= 1e-8 for k in keys):
            keys.append(o)
    report = Report()
    for k in sorted(keys):
        p = sum(v for kk, v in entries.items() if abs(kk - k) <= 1e-8)
        f = counts.count(k, True) / n
        sd = math.sqrt(p * (1 - p) / n)
        if sd > 0:
            z = abs(f - p) / sd
            metric = "z-score"
        else:
            z = 0.0 if f == p else math.inf
            metric = "z-score" if f == p else "exact-violation"
        report.add(CheckResult(f"frequency[{k:g}]", p, f, Z_THRESHOLD, z, metric))
    return report
