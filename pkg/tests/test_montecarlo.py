import json
import math

import numpy as np
import pytest

from jsm2lab import (
    InvalidParameterError,
    InvalidRangeError,
    ProblemParams,
)
from jsm2lab.bounds import upper_bound_perr
from jsm2lab.montecarlo import (
    MC_CSV_COLUMNS,
    EstimateWithCI,
    TrialPlan,
    find_M_star,
    run_trials,
    sweep,
    sweep_csv_lines,
    sweep_metadata,
    trend_residual,
    wilson_interval,
    write_sweep_csv,
)

Z = 1.959963984540054


class TestWilson:
    def test_frozen_midpoint(self):
        low, high = wilson_interval(5, 10)
        z2 = Z * Z
        denom = 1.0 + z2 / 10.0
        center = (0.5 + z2 / 20.0) / denom
        half = (Z / denom) * math.sqrt(0.025 + z2 / 400.0)
        assert low == pytest.approx(center - half, rel=1e-12)
        assert high == pytest.approx(center + half, rel=1e-12)

    def test_positive_width_at_extremes(self):
        low, high = wilson_interval(0, 50)
        assert low == 0.0
        assert 0.0 < high < 0.15
        low, high = wilson_interval(50, 50)
        assert 0.85 < low < 1.0
        assert high == 1.0

    def test_contains_point_estimate(self):
        for succ, tot in [(1, 7), (3, 11), (10, 400), (399, 400)]:
            low, high = wilson_interval(succ, tot)
            assert low <= succ / tot <= high

    def test_mirror_symmetry(self):
        low, high = wilson_interval(12, 40)
        low2, high2 = wilson_interval(28, 40)
        assert low == pytest.approx(1.0 - high2, rel=1e-12)
        assert high == pytest.approx(1.0 - low2, rel=1e-12)

    def test_validation(self):
        with pytest.raises(InvalidRangeError):
            wilson_interval(1, 0)
        with pytest.raises(InvalidRangeError):
            wilson_interval(-1, 5)
        with pytest.raises(InvalidRangeError):
            wilson_interval(6, 5)


class TestEstimateWithCI:
    def test_from_counts(self):
        est = EstimateWithCI.from_counts(3, 12)
        assert est.point == 0.25
        low, high = wilson_interval(3, 12)
        assert (est.ci_low, est.ci_high) == (low, high)
        assert est.half_width == pytest.approx(0.5 * (high - low))


PARAMS_EASY = ProblemParams(n=8, k=2, m=6, s=4, sigma2=1e-4, xmin2=1.0, rho=2.0)


class TestTrialPlan:
    def test_validation(self):
        with pytest.raises(InvalidRangeError):
            TrialPlan(params=PARAMS_EASY, trials=0, master_seed=1)
        with pytest.raises(InvalidParameterError):
            TrialPlan(params=PARAMS_EASY, trials=10, master_seed=1, amplitude_mode="gauss")

    def test_defaults(self):
        plan = TrialPlan(params=PARAMS_EASY, trials=10, master_seed=1)
        assert plan.amplitude_mode == "fixed"
        assert plan.fix_signal
        assert plan.x_max is None


class TestRunTrials:
    def test_high_snr_rates_respect_bound(self):
        plan = TrialPlan(params=PARAMS_EASY, trials=1000, master_seed=31)
        res = run_trials(plan)
        rep = upper_bound_perr(PARAMS_EASY)
        assert res.event_failure.point <= rep.upper_perr + res.event_failure.half_width
        assert res.decode_error.point <= 0.05

    def test_decode_error_never_exceeds_union_event(self):
        for seed in (1, 2, 3):
            plan = TrialPlan(
                params=ProblemParams(n=8, k=2, m=4, s=2, sigma2=0.5, xmin2=1.0, rho=2.0),
                trials=400,
                master_seed=seed,
            )
            res = run_trials(plan)
            assert res.decode_error.point <= res.event_failure.point + 1e-12

    def test_infinite_slack_forces_failure(self):
        p = ProblemParams(
            n=8, k=2, m=6, s=2, sigma2=1.0, xmin2=1.0, rho=2.0, delta_override=math.inf
        )
        res = run_trials(TrialPlan(params=p, trials=64, master_seed=7))
        assert res.event_failure.point == 1.0
        assert res.correct_atypical.point == 0.0
        assert res.incorrect_typical_rate.point == 1.0

    def test_jobs_do_not_change_results(self):
        plan = TrialPlan(params=PARAMS_EASY, trials=600, master_seed=99)
        a = run_trials(plan, jobs=1)
        b = run_trials(plan, jobs=2)
        assert a == b

    def test_redrawn_signal_and_uniform_amplitudes(self):
        plan = TrialPlan(
            params=ProblemParams(n=8, k=2, m=6, s=2, sigma2=0.25, xmin2=1.0, rho=2.0),
            trials=128,
            master_seed=11,
            amplitude_mode="uniform",
            fix_signal=False,
            x_max=3.0,
        )
        res = run_trials(plan)
        assert 0.0 <= res.event_failure.point <= 1.0
        # same plan, same seed: reproducible despite the extra randomness
        assert run_trials(plan) == res


class TestSweep:
    def _plans(self, ms, trials=64):
        return [
            TrialPlan(
                params=ProblemParams(n=8, k=2, m=m, s=2, sigma2=0.25, xmin2=1.0, rho=2.0),
                trials=trials,
                master_seed=17,
            )
            for m in ms
        ]

    def test_rows_ordered_by_axis(self):
        rows = sweep(self._plans([7, 3, 5]), axis="m")
        assert [r.plan.params.m for r in rows] == [3, 5, 7]

    def test_empty_input(self):
        assert sweep([], axis="m") == []

    def test_bad_axis(self):
        with pytest.raises(InvalidParameterError):
            sweep(self._plans([3]), axis="q")

    def test_budget_failure_recorded_not_raised(self):
        plans = self._plans([4])
        plans.append(
            TrialPlan(
                params=ProblemParams(n=40, k=10, m=20, s=1, sigma2=1.0, xmin2=1.0, rho=2.0),
                trials=8,
                master_seed=17,
            )
        )
        rows = sweep(plans, axis="m", enumeration_cap=10_000)
        by_m = {r.plan.params.m: r for r in rows}
        assert by_m[4].error is None
        assert by_m[4].rates is not None
        assert by_m[20].error is not None and "trials:" in by_m[20].error
        assert by_m[20].rates is None
        assert by_m[20].bound is not None  # the analytic side still works

    def test_csv_round_trip(self):
        rows = sweep(self._plans([3, 5]), axis="m")
        text = sweep_csv_lines(rows)
        lines = text.strip().split("\n")
        assert lines[0] == ",".join(MC_CSV_COLUMNS)
        assert len(lines) == 3
        for line in lines[1:]:
            cells = line.split(",")
            assert len(cells) == len(MC_CSV_COLUMNS)
            assert float(cells[MC_CSV_COLUMNS.index("event_fail")]) <= 1.0

    def test_csv_bytes_stable_across_jobs(self):
        plans = self._plans([3, 5], trials=300)
        a = sweep_csv_lines(sweep(plans, axis="m", jobs=1))
        b = sweep_csv_lines(sweep(plans, axis="m", jobs=2))
        assert a == b

    def test_write_csv_and_metadata(self, tmp_path):
        rows = sweep(self._plans([3]), axis="m")
        out = tmp_path / "grid.csv"
        write_sweep_csv(rows, str(out))
        text = out.read_text()
        assert text.startswith(",".join(MC_CSV_COLUMNS))
        meta = sweep_metadata(rows, wall_time_s=1.25)
        json.dumps(meta)  # must be serializable as the sidecar
        assert meta["wall_time_s"] == 1.25
        assert meta["rows"][0]["master_seed"] == 17
        assert set(meta["versions"]) == {"jsm2lab", "numpy", "scipy"}
        assert meta["interval"] == "wilson-95"


class TestFindMStar:
    def test_trivial_target_stops_at_smallest_m(self):
        p = ProblemParams(n=8, k=2, m=4, s=2, sigma2=1.0, xmin2=1.0, rho=2.0)
        res = find_M_star(p, target=1.0, trials=16, seed=5)
        assert res.m_star == 3
        assert not res.saturated
        assert list(res.evaluations) == [3]

    def test_high_snr_bracket(self):
        p = ProblemParams(n=8, k=1, m=2, s=4, sigma2=0.01, xmin2=1.0, rho=2.0)
        res = find_M_star(p, target=0.1, trials=400, seed=6)
        assert not res.saturated
        assert res.m_star is not None and 2 <= res.m_star <= 8
        assert res.evaluations[res.m_star].point <= 0.1
        if res.bracket is not None:
            lo, hi = res.bracket
            assert hi == res.m_star
            assert res.evaluations[lo].point > 0.1

    def test_saturation(self):
        p = ProblemParams(n=6, k=2, m=3, s=1, sigma2=100.0, xmin2=1.0, rho=2.0)
        res = find_M_star(p, target=0.01, trials=128, seed=7)
        assert res.saturated
        assert res.m_star is None
        assert res.bracket is None

    def test_target_validation(self):
        p = ProblemParams(n=8, k=2, m=4, s=2, sigma2=1.0, xmin2=1.0, rho=2.0)
        for bad in (0.0, -0.3, 1.5):
            with pytest.raises(InvalidRangeError):
                find_M_star(p, target=bad, trials=8, seed=5)

    def test_same_seed_shares_randomness_across_probes(self):
        p = ProblemParams(n=8, k=1, m=2, s=4, sigma2=0.01, xmin2=1.0, rho=2.0)
        a = find_M_star(p, target=0.1, trials=200, seed=8)
        b = find_M_star(p, target=0.1, trials=200, seed=8)
        assert a == b


class TestTrendResidual:
    def test_zero_for_non_increasing(self):
        assert trend_residual([0.9, 0.5, 0.5, 0.1]) == 0.0
        assert trend_residual([0.4]) == 0.0
        assert trend_residual([]) == 0.0

    def test_two_point_bump(self):
        assert trend_residual([0.5, 0.7]) == pytest.approx(0.1, rel=1e-12)

    def test_noise_bump_is_local(self):
        # one out-of-order pair is pooled; the residual is half the gap
        assert trend_residual([0.9, 0.3, 0.4, 0.1]) == pytest.approx(0.05, rel=1e-12)
