import itertools
import math

import numpy as np
import pytest

from jsm2lab import (
    EnumerationBudgetError,
    InvalidDimensionError,
    InvalidParameterError,
    InvalidRangeError,
    MeasurementEnsemble,
    ProblemParams,
    RankDeficientError,
    SensingEnsemble,
    SupportSet,
    decode,
    default_delta,
    ls_estimate,
    measure,
    projection_residual,
    sample_sensing,
    sample_sparse_ensemble,
    sample_support,
    typicality_stat,
)
from oracles import (
    brute_force_decode,
    brute_force_stats,
    dense_projection_residual,
    normal_equations_ls,
)


class TestProjectionResidual:
    def test_standard_basis_column(self):
        f = np.array([[1.0], [0.0], [0.0]])
        y = np.array([2.0, 3.0, 4.0])
        assert projection_residual(f, y) == pytest.approx(9.0 + 16.0)

    def test_square_invertible_gives_zero(self):
        rng = np.random.default_rng(5)
        f = rng.standard_normal((4, 4))
        y = rng.standard_normal(4)
        assert projection_residual(f, y) == pytest.approx(0.0, abs=1e-10)

    def test_matches_dense_formula(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            m = int(rng.integers(2, 10))
            k = int(rng.integers(1, m + 1))
            f = rng.standard_normal((m, k))
            y = rng.standard_normal(m)
            ref = dense_projection_residual(f, y)
            val = projection_residual(f, y)
            assert val == pytest.approx(ref, rel=1e-10, abs=1e-10)

    def test_rank_deficient_rejected(self):
        col = np.arange(1.0, 5.0)
        f = np.column_stack([col, 2.0 * col])
        with pytest.raises(RankDeficientError):
            projection_residual(f, np.ones(4))

    def test_wide_block_rejected(self):
        with pytest.raises(RankDeficientError):
            projection_residual(np.ones((2, 3)), np.ones(2))

    def test_idempotent(self):
        # projecting the projected residual changes nothing: the residual of
        # y already orthogonal to the span equals ||y||^2 minus nothing new
        rng = np.random.default_rng(23)
        f = rng.standard_normal((6, 2))
        y = rng.standard_normal(6)
        basis, _ = np.linalg.qr(f)
        resid_vec = y - basis @ (basis.T @ y)
        once = projection_residual(f, y)
        again = projection_residual(f, resid_vec)
        assert again == pytest.approx(once, rel=1e-10)


def _instance(n, k, m, s, sigma2, xmin2, seeds=(1, 2, 3, 4), rho=2.0, **kw):
    sup = sample_support(n, k, seeds[0])
    x = sample_sparse_ensemble(sup, s, math.sqrt(xmin2), seed=seeds[1])
    f = sample_sensing(m, n, s, seeds[2])
    y = measure(x, f, sigma2, seeds[3])
    p = ProblemParams(n=n, k=k, m=m, s=s, sigma2=sigma2, xmin2=xmin2, rho=rho, **kw)
    return sup, x, f, y, p


class TestTypicalityStat:
    def test_noiseless_true_support_value_zero(self):
        sup, x, f, _, p = _instance(8, 2, 5, 3, 1.0, 4.0)
        y0 = measure(x, f, 0.0, 9)
        st = typicality_stat(sup, y0, f, p.delta)
        assert st.value == pytest.approx(0.0, abs=1e-18)
        # centered sits at exactly -S(M-K)sigma2 when the recorded noise
        # variance is zero, so the stat is typical for every positive slack
        assert st.centered == pytest.approx(0.0, abs=1e-18)
        assert st.typical

    def test_matches_dense_oracle(self):
        sup, x, f, y, p = _instance(6, 2, 4, 2, 1.0, 4.0, seeds=(5, 6, 7, 8))
        rows = brute_force_stats(y.measurements, f.matrices, p.sigma2, 2, p.delta)
        ref = dict((tuple(r[0]), r) for r in rows)
        for j in itertools.combinations(range(6), 2):
            st = typicality_stat(SupportSet(j, 6), y, f, p.delta)
            assert st.value == pytest.approx(ref[j][1], rel=1e-9)
            assert st.typical == ref[j][3]

    def test_rank_deficiency_blocks_typicality(self):
        sup, x, f, y, p = _instance(6, 2, 4, 2, 1.0, 4.0)
        mats = f.matrices.copy()
        mats[0][:, 1] = 2.0 * mats[0][:, 0]  # duplicate direction inside J = {0, 1}
        f_bad = SensingEnsemble(mats)
        y_bad = measure(x, f_bad, 1.0, 10)
        st = typicality_stat(SupportSet((0, 1), 6), y_bad, f_bad, math.inf)
        assert not st.rank_ok
        assert not st.typical

    def test_delta_must_be_positive(self):
        sup, _, f, y, p = _instance(6, 2, 4, 2, 1.0, 4.0)
        with pytest.raises(InvalidRangeError):
            typicality_stat(sup, y, f, 0.0)

    def test_candidate_must_be_smaller_than_m(self):
        f = sample_sensing(4, 6, 2, 31)
        y = MeasurementEnsemble(np.ones((2, 4)), 1.0)
        with pytest.raises(InvalidDimensionError):
            typicality_stat(SupportSet((0, 1, 2, 3), 6), y, f, 1.0)


class TestDecode:
    def test_high_snr_recovers_support(self):
        # the correct support keeps only noise energy in its residual, so its
        # centered statistic sits orders of magnitude below any pretender;
        # event_failure may still fire (wide slack admits stray supports) but
        # the argmin must land on the truth
        for seed in range(5):
            sup, x, f, y, p = _instance(
                6, 1, 6, 4, 1e-4, 100.0, seeds=(seed, seed + 50, seed + 100, seed + 150)
            )
            out = decode(y, f, p, true_support=sup)
            assert out.decoded == sup
            assert out.correct_typical
            assert not out.decode_error

    def test_infinite_delta_makes_everything_typical(self):
        sup, x, f, y, p = _instance(6, 2, 4, 2, 1.0, 4.0)
        out = decode(y, f, p, true_support=sup, delta=math.inf)
        assert out.correct_typical
        assert out.num_incorrect_typical == math.comb(6, 2) - 1
        assert out.event_failure  # incorrect supports are typical too

    def test_zero_delta_makes_nothing_typical(self):
        sup, x, f, y, p = _instance(6, 2, 4, 2, 1.0, 4.0)
        out = decode(y, f, p, true_support=sup, delta=0.0)
        assert out.decoded is None
        assert not out.correct_typical
        assert out.num_incorrect_typical == 0
        assert out.event_failure

    def test_typical_set_grows_with_delta(self):
        sup, x, f, y, p = _instance(8, 2, 5, 2, 1.0, 4.0, seeds=(9, 10, 11, 12))
        deltas = [0.05, 0.2, 1.0, 5.0, math.inf]
        previous = None
        for d in deltas:
            flags = tuple(
                typicality_stat(SupportSet(j, 8), y, f, d).typical
                for j in itertools.combinations(range(8), 2)
            )
            if previous is not None:
                assert all(b or not a for a, b in zip(previous, flags))
            previous = flags

    def test_matches_brute_force_reference(self):
        rng = np.random.default_rng(77)
        for _ in range(25):
            n = int(rng.integers(4, 9))
            k = int(rng.integers(1, 3))
            m = int(rng.integers(k + 1, min(n, 6) + 1))
            s = int(rng.integers(1, 4))
            sigma2 = float(10.0 ** rng.uniform(-2, 0.5))
            sup, x, f, y, p = _instance(
                n, k, m, s, sigma2, 2.0,
                seeds=tuple(int(v) for v in rng.integers(0, 2**31, size=4)),
            )
            out = decode(y, f, p, true_support=sup)
            ref = brute_force_decode(
                y.measurements, f.matrices, sigma2, k, p.delta, sup.indices
            )
            decoded = out.decoded.indices if out.decoded is not None else None
            assert decoded == ref[0]
            assert out.correct_typical == ref[1]
            assert out.num_incorrect_typical == ref[2]
            assert out.event_failure == ref[3]
            assert out.decode_error == ref[4]

    def test_without_true_support_flags_are_none(self):
        sup, x, f, y, p = _instance(6, 2, 4, 2, 1.0, 4.0)
        out = decode(y, f, p)
        assert out.correct_typical is None
        assert out.event_failure is None
        assert out.decode_error is None

    def test_enumeration_cap(self):
        sup, x, f, y, p = _instance(8, 2, 5, 1, 1.0, 4.0)
        with pytest.raises(EnumerationBudgetError):
            decode(y, f, p, enumeration_cap=10)

    def test_shape_mismatch(self):
        sup, x, f, y, _ = _instance(6, 2, 4, 2, 1.0, 4.0)
        other = ProblemParams(n=6, k=2, m=4, s=3, sigma2=1.0, xmin2=4.0)
        with pytest.raises(InvalidDimensionError):
            decode(y, f, other)

    def test_event_failure_definition_holds(self):
        # union bookkeeping: failure iff correct missed or any incorrect hit
        for seed in range(8):
            sup, x, f, y, p = _instance(
                6, 2, 4, 2, 0.5, 1.0, seeds=(seed, seed + 9, seed + 18, seed + 27)
            )
            out = decode(y, f, p, true_support=sup)
            assert out.event_failure == (
                (not out.correct_typical) or out.num_incorrect_typical > 0
            )


class TestLsEstimate:
    def test_noiseless_exact_recovery(self):
        sup, x, f, _, _ = _instance(8, 3, 6, 2, 1.0, 4.0, seeds=(13, 14, 15, 16))
        y0 = measure(x, f, 0.0, 17)
        z = ls_estimate(sup, y0, f)
        ref = x.vectors[:, sup.as_array()]
        assert np.allclose(z, ref, rtol=1e-8)

    def test_zero_measurements_zero_coefficients(self):
        f = sample_sensing(4, 6, 2, 18)
        y = MeasurementEnsemble(np.zeros((2, 4)), 1.0)
        z = ls_estimate(SupportSet((1, 3), 6), y, f)
        assert np.allclose(z, 0.0)

    def test_matches_normal_equations(self):
        sup, x, f, y, _ = _instance(8, 2, 6, 3, 1.0, 4.0, seeds=(19, 20, 21, 22))
        z = ls_estimate(sup, y, f)
        cols = sup.as_array()
        for s in range(3):
            ref = normal_equations_ls(f.matrices[s][:, cols], y.measurements[s])
            assert np.allclose(z[s], ref, rtol=1e-8)

    def test_rank_deficiency(self):
        mats = sample_sensing(4, 6, 1, 23).matrices.copy()
        mats[0][:, 3] = mats[0][:, 1]
        f = SensingEnsemble(mats)
        y = MeasurementEnsemble(np.ones((1, 4)), 1.0)
        with pytest.raises(RankDeficientError):
            ls_estimate(SupportSet((1, 3), 6), y, f)


class TestDefaultDelta:
    def test_half_sparsity_point(self):
        p = ProblemParams(n=8, k=2, m=4, s=1, sigma2=1.0, xmin2=1.0, rho=2.0)
        assert default_delta(p) == pytest.approx(0.25)

    def test_vanishes_as_rho_grows(self):
        values = [
            default_delta(ProblemParams(n=8, k=2, m=4, s=1, sigma2=1.0, xmin2=1.0, rho=r))
            for r in (2.0, 20.0, 2000.0)
        ]
        assert values[0] > values[1] > values[2]
        assert values[2] < 1e-3

    def test_admissibility_margin_at_reference_point(self):
        p = ProblemParams(n=10, k=2, m=8, s=4, sigma2=1.0, xmin2=10.0, rho=2.0)
        d = default_delta(p)
        ceiling = (1.0 - p.k / p.m) * p.xmin2
        assert d == pytest.approx(3.75)
        assert ceiling == pytest.approx(7.5)
        assert 0.0 < d < ceiling

    def test_rho_validation_lives_in_params(self):
        with pytest.raises(InvalidParameterError):
            ProblemParams(n=8, k=2, m=4, s=1, sigma2=1.0, xmin2=1.0, rho=0.5)
