"""Three particles, two boxes: states, pair projectors and the verification run."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .qcore import (
    HERMITIAN,
    PROJECTOR,
    Operator,
    StateVector,
    apply,
    box_labels,
    hermitian_spectrum,
    inner,
    tensor,
)
from .report import CheckResult, Report, distribution_deviation, scalar_check
from .tsvf import abl_distribution, dichotomic_certainty, make_tsv, weak_value

N_PARTICLES = 3
PAIRS = ((0, 1), (1, 2), (0, 2))
LABELS = box_labels(N_PARTICLES)

_S = 1 / math.sqrt(2)
PLUS = StateVector([_S, _S], ("L", "R"))
PLUS_I = StateVector([_S, 1j * _S], ("L", "R"))


def preselected_state() -> StateVector:
    """|+++> with |+> = (|L> + |R>)/sqrt(2)."""
    return tensor(PLUS, PLUS, PLUS)


def postselected_state() -> StateVector:
    """|+i+i+i> with |+i> = (|L> + i|R>)/sqrt(2)."""
    return tensor(PLUS_I, PLUS_I, PLUS_I)


def pair_projector(a: int, b: int) -> Operator:
    """Projector onto box-basis strings where particles ``a`` and ``b`` share a box."""
    for idx in (a, b):
        if not isinstance(idx, (int, np.integer)) or not 0 <= idx < N_PARTICLES:
            raise ValueError(f"particle index {idx!r} out of range 0..{N_PARTICLES - 1}")
    if a == b:
        raise ValueError("a pair needs two distinct particles")
    diag = [1.0 if s[a] == s[b] else 0.0 for s in LABELS]
    return Operator(np.diag(diag), {PROJECTOR})


def total_projector() -> Operator:
    """Sum of the three pair projectors. Hermitian, not idempotent."""
    total = sum((pair_projector(a, b).matrix for a, b in PAIRS), np.zeros((8, 8)))
    return Operator(total, {HERMITIAN})


@dataclass(frozen=True, eq=False)
class PigeonholeScenario:
    pre: StateVector
    post: StateVector
    pair_projectors: dict
    total: Operator
    n_particles: int = N_PARTICLES

    @classmethod
    def build(cls) -> "PigeonholeScenario":
        return cls(
            preselected_state(),
            postselected_state(),
            {p: pair_projector(*p) for p in PAIRS},
            total_projector(),
        )

    def tsv(self):
        return make_tsv(self.pre, self.post)


def pigeonhole_tsv():
    return make_tsv(preselected_state(), postselected_state())


def _pair_name(pair) -> str:
    return f"{pair[0]}{pair[1]}"


def _spectrum_dict(op: Operator) -> dict[float, int]:
    return hermitian_spectrum(op).multiplicities


def _spectrum_deviation(expected: dict[float, int], actual: dict[float, int]) -> float:
    if sorted(expected.values()) != sorted(actual.values()) or len(expected) != len(actual):
        return math.inf
    return max(abs(e - a) for e, a in zip(sorted(expected), sorted(actual)))


def verify_conundrum(
    tolerance: float = 1e-10,
    pre: StateVector | None = None,
    post: StateVector | None = None,
) -> Report:
    """Run every check on the pigeonhole pre/postselection, in fixed order.

    Failures are recorded in the report, never raised. ``pre``/``post``
    default to |+++> and |+i+i+i>.
    """
    if not tolerance >= 0:
        raise ValueError("tolerance must be non-negative")
    pre = preselected_state() if pre is None else pre
    post = postselected_state() if post is None else post
    report = Report()
    projectors = {p: pair_projector(*p) for p in PAIRS}
    total = total_projector()

    for p, proj in projectors.items():
        amp = inner(post, apply(proj, pre))
        report.add(scalar_check(f"matrix_element[{_pair_name(p)}]", 0.0, amp, tolerance))

    amp_total = inner(post, apply(total, pre))
    report.add(scalar_check("total_matrix_element_sq", 0.0, abs(amp_total) ** 2, tolerance))

    overlap = inner(post, pre)
    report.add(scalar_check("overlap", -(1 + 1j) / 4, overlap, tolerance))

    tsv = make_tsv(pre, post)
    for p, proj in projectors.items():
        report.add(_guarded_scalar(f"weak_value[{_pair_name(p)}]", 0.0, tolerance,
                                   lambda proj=proj: weak_value(tsv, proj)))
    report.add(_guarded_scalar("weak_value[total]", 0.0, tolerance,
                               lambda: weak_value(tsv, total)))

    expected_spec = {1.0: 6, 3.0: 2}
    actual_spec = _spectrum_dict(total)
    report.add(CheckResult("spectrum[total]", expected_spec, actual_spec, tolerance,
                           _spectrum_deviation(expected_spec, actual_spec), "eigenvalues"))

    for p, proj in projectors.items():
        report.add(_guarded_dist(f"abl[{_pair_name(p)}]", {0.0: 1.0, 1.0: 0.0}, tolerance,
                                 lambda proj=proj: abl_distribution(tsv, proj).entries))
    report.add(_guarded_dist("abl[total]", {1.0: 0.9, 3.0: 0.1}, tolerance,
                             lambda: abl_distribution(tsv, total).entries))

    for p, proj in projectors.items():
        report.add(_guarded_certainty(f"certainty[{_pair_name(p)}]", 0.0, tolerance,
                                      lambda proj=proj: dichotomic_certainty(tsv, proj)))
    report.add(_guarded_certainty("certainty[total]", None, tolerance,
                                  lambda: dichotomic_certainty(tsv, total)))
    return report


def _guarded_scalar(name, expected, tolerance, compute) -> CheckResult:
    try:
        return scalar_check(name, expected, compute(), tolerance)
    except ValueError as exc:
        return CheckResult(name, expected, f"error: {exc}", tolerance, math.inf)


def _guarded_dist(name, expected, tolerance, compute) -> CheckResult:
    try:
        actual = compute()
    except ValueError as exc:
        return CheckResult(name, expected, f"error: {exc}", tolerance, math.inf, "distribution")
    return CheckResult(name, expected, actual, tolerance,
                       distribution_deviation(expected, actual), "distribution")


def _guarded_certainty(name, expected, tolerance, compute) -> CheckResult:
    try:
        actual = compute()
    except ValueError as exc:
        return CheckResult(name, expected, f"error: {exc}", tolerance, math.inf, "certainty")
    if expected is None or actual is None:
        dev = 0.0 if expected is None and actual is None else math.inf
    else:
        dev = abs(actual - expected)
    return CheckResult(name, expected, actual, tolerance, dev, "certainty")


@dataclass(frozen=True)
class Branch:
    outcomes: tuple[int, ...]
    probability: float  # joint with postselection, unconditioned
    conditional: float  # given successful postselection


def enumerate_sequential(order, pre: StateVector | None = None,
                         post: StateVector | None = None) -> tuple[list[Branch], float]:
    """Exact branch table for measuring ``order`` pairs in turn, then postselecting.

    Outcome 1 means the pair was found together. Returns the branches and the
    total postselection probability.
    """
    order = [tuple(p) for p in order]
    if not 1 <= len(order) <= 3:
        raise ValueError("order must list 1 to 3 pairs")
    canon = [tuple(sorted(p)) for p in order]
    if len(set(canon)) != len(canon):
        raise ValueError(f"repeated pair in order {order}")
    pre = preselected_state() if pre is None else pre
    post = postselected_state() if post is None else post
    projectors = [pair_projector(*p) for p in order]
    ident = Operator.identity(pre.dim)

    joint = {}
    for outcomes in itertools.product((0, 1), repeat=len(order)):
        state = pre
        for proj, hit in zip(projectors, outcomes):
            state = apply(proj if hit else ident - proj, state)
        # unnormalized chain: |<post|P_n...P_1|pre>|^2 is the joint probability
        joint[outcomes] = abs(inner(post, state)) ** 2
    total = sum(joint.values())
    branches = [Branch(k, v, v / total if total > 0 else math.nan) for k, v in joint.items()]
    return branches, total


def pair_together_probabilities(order, pre: StateVector | None = None,
                                 post: StateVector | None = None) -> list[float]:
    """P(pair found together | postselected) for each measured pair in ``order``."""
    branches, _ = enumerate_sequential(order, pre, post)
    return [sum(b.conditional for b in branches if b.outcomes[i] == 1)
            for i in range(len(order))]


def sequential_pair_demo(order, pre: StateVector | None = None,
                         post: StateVector | None = None) -> Report:
    """Measure several pairs one after another and postselect.

    A single measured pair is never found together. Once a second pair is
    measured, some pair after the first is found together with positive
    probability, so the certainty holds per single measured pair only.
    """
    branches, _ = enumerate_sequential(order, pre, post)
    report = Report(columns=["outcomes", "joint_probability", "conditional_probability"])
    for b in branches:
        report.data_rows.append(["".join(map(str, b.outcomes)), b.probability, b.conditional])

    if len(order) == 1:
        first = sum(b.conditional for b in branches if b.outcomes[0] == 1)
        report.add(scalar_check(f"single_pair_together[{_pair_name(order[0])}]", 0.0, first, 1e-12))
    else:
        later = sum(b.conditional for b in branches if any(b.outcomes[1:]))
        # deviation 0 when strictly positive, inf otherwise
        report.add(CheckResult("later_pair_together_positive", "> 0", later, 0.0,
                               0.0 if later > 1e-12 else math.inf, "positive"))
    return report
