import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpigeon.qcore import (
    DimensionMismatch,
    Operator,
    StateVector,
    random_hermitian,
    random_projector,
    random_state,
)
from qpigeon.scenario import (
    PAIRS,
    pair_projector,
    pigeonhole_tsv,
    preselected_state,
    total_projector,
)
from qpigeon.tsvf import (
    NotDichotomic,
    PostselectionImpossible,
    WeakValueUndefined,
    abl_distribution,
    dichotomic_certainty,
    make_tsv,
    random_av91_instance,
    weak_value,
)

L = StateVector([1, 0])
R = StateVector([0, 1])


def _random_tsv(rng, dim):
    return make_tsv(random_state(rng, dim), random_state(rng, dim))


class TestMakeTsv:
    def test_pigeonhole_overlap(self):
        assert abs(pigeonhole_tsv().overlap - (-(1 + 1j) / 4)) < 1e-15

    def test_self_overlap(self, rng):
        psi = random_state(rng, 5)
        tsv = make_tsv(psi, psi)
        assert tsv.overlap == pytest.approx(1.0, abs=1e-14)
        assert not tsv.degenerate

    def test_orthogonal_flagged(self):
        tsv = make_tsv(L, R)
        assert tsv.degenerate and tsv.overlap == 0

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError, match="normalized"):
            make_tsv(StateVector([1, 1]), L)

    def test_rejects_mismatch(self):
        with pytest.raises(DimensionMismatch):
            make_tsv(L, preselected_state())


class TestWeakValue:
    @pytest.mark.parametrize("pair", PAIRS)
    def test_pair_projectors_vanish(self, pair):
        assert abs(weak_value(pigeonhole_tsv(), pair_projector(*pair))) <= 1e-15

    def test_total_vanishes(self):
        assert abs(weak_value(pigeonhole_tsv(), total_projector())) <= 1e-15

    def test_equal_pre_post_gives_expectation(self):
        pre = preselected_state()
        # <+++|P01|+++> = |a_LLL|^2 + |a_LLR|^2 + |a_RRL|^2 + |a_RRR|^2 = 4/8
        assert weak_value(make_tsv(pre, pre), pair_projector(0, 1)) == pytest.approx(0.5, abs=1e-15)

    def test_identity(self, rng):
        assert weak_value(_random_tsv(rng, 6), Operator.identity(6)) == pytest.approx(1.0, abs=1e-12)

    def test_degenerate_raises(self):
        with pytest.raises(WeakValueUndefined, match="<post\\|pre> = 0"):
            weak_value(make_tsv(L, R), Operator.identity(2))

    def test_can_leave_the_spectrum(self, rng):
        values = [weak_value(_random_tsv(rng, 4), random_projector(rng, 4, 2)) for _ in range(200)]
        assert max(abs(v.imag) for v in values) > 0.1
        assert max(abs(v) for v in values) > 1.0

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 4, 8]))
    def test_linearity(self, seed, dim):
        rng = np.random.default_rng(seed)
        tsv = _random_tsv(rng, dim)
        a, b = random_hermitian(rng, dim), random_hermitian(rng, dim)
        lhs = weak_value(tsv, a + b)
        rhs = weak_value(tsv, a) + weak_value(tsv, b)
        scale = max(1.0, abs(lhs))
        assert abs(lhs - rhs) <= 1e-10 * scale


class TestAbl:
    @pytest.mark.parametrize("pair", PAIRS)
    def test_pairs_certain_null(self, pair):
        dist = abl_distribution(pigeonhole_tsv(), pair_projector(*pair))
        assert dist[0.0] == pytest.approx(1.0, abs=1e-12)
        assert dist[1.0] == pytest.approx(0.0, abs=1e-12)

    def test_total_against_explicit_projectors(self):
        # oracle: eigenprojectors of the total written down directly
        tsv = pigeonhole_tsv()
        p3 = np.zeros((8, 8))
        p3[0, 0] = p3[7, 7] = 1.0
        p1 = np.eye(8) - p3
        pre, post = tsv.pre.amplitudes, tsv.post.amplitudes
        w3 = abs(post.conj() @ p3 @ pre) ** 2
        w1 = abs(post.conj() @ p1 @ pre) ** 2
        assert w3 == pytest.approx(1 / 32, abs=1e-15)
        assert w1 == pytest.approx(9 / 32, abs=1e-15)
        dist = abl_distribution(tsv, total_projector())
        assert dist[3.0] == pytest.approx(w3 / (w1 + w3), abs=1e-12)
        assert dist[1.0] == pytest.approx(0.9, abs=1e-12)
        assert set(dist.entries) == {1.0, 3.0}

    def test_equal_pre_post(self):
        pre = preselected_state()
        dist = abl_distribution(make_tsv(pre, pre), pair_projector(0, 1))
        assert dist[0.0] == pytest.approx(0.5, abs=1e-12)
        assert dist[1.0] == pytest.approx(0.5, abs=1e-12)

    def test_impossible_postselection(self):
        with pytest.raises(PostselectionImpossible):
            abl_distribution(make_tsv(L, R), Operator(np.diag([1.0, 2.0]), {"hermitian"}))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([2, 4, 8]))
    def test_sums_to_one(self, seed, dim):
        rng = np.random.default_rng(seed)
        dist = abl_distribution(_random_tsv(rng, dim), random_hermitian(rng, dim))
        assert sum(dist.entries.values()) == pytest.approx(1.0, abs=1e-12)
        assert all(0.0 <= p <= 1.0 for p in dist.entries.values())


class TestDichotomic:
    @pytest.mark.parametrize("pair", PAIRS)
    def test_pairs(self, pair):
        assert dichotomic_certainty(pigeonhole_tsv(), pair_projector(*pair)) == 0.0

    def test_total_is_uninformative(self):
        assert dichotomic_certainty(pigeonhole_tsv(), total_projector()) is None

    def test_identity_not_dichotomic(self, rng):
        with pytest.raises(NotDichotomic):
            dichotomic_certainty(_random_tsv(rng, 4), Operator.identity(4))

    def test_complex_weak_value_not_certain(self):
        # weak value 1 + small imaginary part is not equal to eigenvalue 1
        pre = StateVector([1, 1]).normalized()
        proj = Operator(np.diag([1.0, 0.0]), {"projector"})
        post = StateVector([1, 1e-3j]).normalized()
        assert abs(weak_value(make_tsv(pre, post), proj) - 1) > 1e-10
        assert dichotomic_certainty(make_tsv(pre, post), proj) is None


class TestSpectralLinearity:
    def test_pigeonhole_eigenprojector_weak_values(self):
        tsv = pigeonhole_tsv()
        from qpigeon.qcore import hermitian_spectrum

        spec = hermitian_spectrum(total_projector())
        wvs = {e.value: weak_value(tsv, e.projector) for e in spec}
        assert abs(wvs[1.0] - 1.5) <= 1e-12
        assert abs(wvs[3.0] + 0.5) <= 1e-12
        assert abs(sum(v * w for v, w in wvs.items()) - weak_value(tsv, total_projector())) <= 1e-10

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([2, 4, 8]))
    def test_random(self, seed, dim):
        from qpigeon.qcore import hermitian_spectrum

        rng = np.random.default_rng(seed)
        tsv, a = _random_tsv(rng, dim), random_hermitian(rng, dim)
        total = sum(e.value * weak_value(tsv, e.projector) for e in hermitian_spectrum(a))
        wv = weak_value(tsv, a)
        assert abs(total - wv) <= 1e-10 * max(1.0, abs(wv))


class TestAv91:
    def test_deterministic(self):
        a = random_av91_instance(42, 8)
        b = random_av91_instance(42, 8)
        assert np.array_equal(a[0].pre.amplitudes, b[0].pre.amplitudes)
        assert np.array_equal(a[0].post.amplitudes, b[0].post.amplitudes)
        assert np.array_equal(a[1].matrix, b[1].matrix) and a[2] == b[2]

    @pytest.mark.parametrize("dim", [2, 4, 8])
    def test_instances_are_certain(self, dim):
        for seed in range(100):
            tsv, a, lam = random_av91_instance(seed, dim)
            assert abs(weak_value(tsv, a) - lam) <= 1e-10
            assert abs(abl_distribution(tsv, a)[lam] - 1.0) <= 1e-9
            assert dichotomic_certainty(tsv, a) == pytest.approx(lam)

    def test_corollary_for_projectors(self, rng):
        # projector-valued dichotomic observable with weak value 0 or 1
        for _ in range(50):
            dim = int(rng.choice([2, 4, 8]))
            proj = random_projector(rng, dim, int(rng.integers(1, dim)))
            pre = random_state(rng, dim)
            target = int(rng.integers(2))
            v = (proj.matrix - target * np.eye(dim)) @ pre.amplitudes
            z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
            z -= np.vdot(v, z) / np.vdot(v, v) * v
            tsv = make_tsv(pre, StateVector(z / np.linalg.norm(z)))
            assert abs(abl_distribution(tsv, proj)[float(target)] - 1.0) <= 1e-9

    def test_dim_too_small(self):
        with pytest.raises(ValueError):
            random_av91_instance(0, 1)

    def test_budget_exhausted(self):
        with pytest.raises(RuntimeError, match="attempts"):
            random_av91_instance(0, 2, max_attempts=0)
