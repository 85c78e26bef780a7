import math

import pytest

from alvec.lv import LVParams, PopulationState, first_integral
from alvec.solver import (
    Divergence,
    MaxStepsExceeded,
    SolverConfig,
    SolverError,
    StepSizeUnderflow,
    convergence_check,
    integrate,
    integrate_fixed,
    rkf45_step,
)

CASE1 = LVParams(alpha=30.0, beta=1.0, gamma=50.0, delta=1.0)
CASE2 = LVParams(alpha=150.0, beta=1.0, gamma=80.0, delta=1.0)
CASE3 = LVParams(alpha=120.0, beta=1.0, gamma=30.0, delta=1.0)

START1 = PopulationState(30.0, 50.0)
START2 = PopulationState(80.0, 150.0)
START3 = PopulationState(60.0, 80.0)

# Reference grids computed with an independent high-order integrator at
# tolerances far below the solver defaults (rtol = atol = 1e-12), frozen here.
CASE1_REFERENCE = [
    (0.1, 73.82363881129311, 14.919179586605111),
    (0.2, 25.14627755654836, 23.959086946695127),
    (0.3, 84.14817290172547, 42.65352787311345),
    (0.4, 36.838544700193914, 12.98730753608394),
    (0.5, 37.35049350558157, 58.123200710269664),
    (0.6, 63.66946618322728, 12.595559137529456),
    (0.7, 24.453206259086375, 30.11584095555303),
    (0.8, 89.10086200651702, 30.42272932795641),
    (0.9, 31.853584824322063, 14.975182690554714),
    (1.0, 49.230359118387895, 61.97798170217348),
    (1.1, 54.124296441842844, 11.631935843427545),
    (1.2, 25.318893511904697, 37.83562800968069),
]
CASE3_REFERENCE = [
    (0.1, 34.54234455911063, 66.23526633552716),
    (0.2, 18.933538082235845, 69.38985437088829),
    (0.3, 11.41406479013725, 82.51411061881227),
    (0.4, 8.367257681367748, 103.89701310344606),
    (0.5, 8.171531330283933, 133.16804107600566),
    (0.6, 11.521061647191445, 168.02235110018555),
]


class TestConfig:
    def test_tightened_divides_tolerances(self):
        cfg = SolverConfig().tightened()
        assert cfg.rel_tol == pytest.approx(1e-9)
        assert cfg.abs_tol == pytest.approx(1e-11)

    @pytest.mark.parametrize("bad", [0.0, -1e-9, 1.5])
    def test_tolerance_bounds(self, bad):
        with pytest.raises(ValueError):
            SolverConfig(rel_tol=bad)
        with pytest.raises(ValueError):
            SolverConfig(abs_tol=bad)

    def test_step_ordering(self):
        with pytest.raises(ValueError):
            SolverConfig(h_min=1e-2, h_init=1e-3)
        with pytest.raises(ValueError):
            SolverConfig(h_init=0.5, h_max=0.1)
        with pytest.raises(ValueError):
            SolverConfig(max_steps=0)


class TestStep:
    def test_rejects_bad_h(self):
        for h in (0.0, -1e-3, math.nan, math.inf):
            with pytest.raises(ValueError):
                rkf45_step(START1, CASE1, h)

    def test_accepted_step_advances_time(self):
        res = rkf45_step(START1, CASE1, 1e-3)
        assert res.accepted
        assert res.h_used == 1e-3
        assert res.state.t == pytest.approx(1e-3)

    def test_oversized_step_is_rejected(self):
        res = rkf45_step(START1, CASE1, 0.1)
        assert not res.accepted
        assert res.error_estimate > 1.0
        # shrink factor is clamped at 0.2x
        assert res.h_next == pytest.approx(0.1 * 0.2)

    def test_h_next_growth_is_clamped(self):
        # near-stationary dynamics: error ~ 0, so growth hits the 5x cap
        res = rkf45_step(START2, CASE2, 1e-3)
        assert res.accepted
        assert res.h_next <= 5.0 * 1e-3 + 1e-15
        assert res.h_next <= SolverConfig().h_max

    def test_small_step_matches_taylor(self):
        # one accepted micro-step should track the local derivative closely
        h = 1e-6
        res = rkf45_step(START1, CASE1, h)
        assert res.state.prey == pytest.approx(30.0 - 600.0 * h, rel=1e-6)
        assert res.state.predator == pytest.approx(50.0 - 1000.0 * h, rel=1e-6)


class TestIntegrate:
    def test_sample_grid(self):
        traj = integrate(START1, CASE1, t_end=2.0, sample_step=0.1)
        assert len(traj) == 21
        assert traj.times[0] == 0.0
        assert traj.times[-1] == pytest.approx(2.0)
        for i, t in enumerate(traj.times):
            assert t == pytest.approx(0.1 * i, abs=1e-12)

    @pytest.mark.parametrize("t,p,q", CASE1_REFERENCE)
    def test_case1_matches_reference(self, t, p, q):
        traj = integrate(START1, CASE1, t_end=1.2, sample_step=0.1)
        idx = round(t / 0.1)
        assert traj.samples[idx].prey == pytest.approx(p, abs=5e-3)
        assert traj.samples[idx].predator == pytest.approx(q, abs=5e-3)

    @pytest.mark.parametrize("t,p,q", CASE3_REFERENCE)
    def test_case3_matches_reference(self, t, p, q):
        traj = integrate(START3, CASE3, t_end=0.6, sample_step=0.1)
        idx = round(t / 0.1)
        assert traj.samples[idx].prey == pytest.approx(p, abs=5e-3)
        assert traj.samples[idx].predator == pytest.approx(q, abs=5e-3)

    def test_case2_is_stationary(self):
        traj = integrate(START2, CASE2, t_end=10.0, sample_step=0.5)
        for s in traj.samples:
            assert abs(s.prey - 80.0) < 1e-6
            assert abs(s.predator - 150.0) < 1e-6

    def test_conserves_first_integral(self):
        k0 = first_integral(START1, CASE1)
        traj = integrate(START1, CASE1, t_end=2.0, sample_step=0.1)
        for s in traj.samples:
            assert abs(first_integral(s, CASE1) - k0) / abs(k0) < 1e-6

    def test_orbit_stays_bounded(self):
        # conservation forces a closed orbit: the long run never escapes
        traj = integrate(START1, CASE1, t_end=20.0, sample_step=0.05)
        for s in traj.samples:
            assert 1.0 < s.prey < 150.0
            assert 1.0 < s.predator < 120.0

    def test_orbit_recurs(self):
        # some sample along the long run must come back near the start
        traj = integrate(START1, CASE1, t_end=5.0, sample_step=0.001)
        best = min(
            abs(s.prey - 30.0) + abs(s.predator - 50.0)
            for s in traj.samples
            if s.t > 0.05
        )
        assert best < 0.5

    def test_requires_forward_time(self):
        with pytest.raises(ValueError):
            integrate(START1, CASE1, t_end=0.0)
        with pytest.raises(ValueError):
            integrate(START1, CASE1, t_end=1.0, sample_step=0.0)

    def test_max_steps_exceeded(self):
        cfg = SolverConfig(max_steps=3)
        with pytest.raises(MaxStepsExceeded):
            integrate(START1, CASE1, t_end=2.0, config=cfg)

    def test_axis_states_stay_on_axis(self):
        # prey-only start grows exponentially; predator stays at zero
        traj = integrate(PopulationState(1.0, 0.0), LVParams(1.0, 1.0, 1.0, 1.0), t_end=2.0)
        assert traj.final.predator == 0.0
        assert traj.final.prey == pytest.approx(math.exp(2.0), rel=1e-6)

    def test_divergence_guard(self):
        # exponential blowup on the prey axis eventually trips the overflow guard
        with pytest.raises(Divergence):
            integrate(PopulationState(1.0, 0.0), LVParams(10.0, 1.0, 1.0, 1.0), t_end=100.0)


class TestFixedStep:
    def test_matches_adaptive_for_small_h(self):
        fixed = integrate_fixed(START1, CASE1, t_end=0.5, h=1e-4)
        ref = integrate(START1, CASE1, t_end=0.5, sample_step=0.5).final
        assert fixed.prey == pytest.approx(ref.prey, abs=1e-3)
        assert fixed.predator == pytest.approx(ref.predator, abs=1e-3)

    def test_error_shrinks_with_h(self):
        ref_p, ref_q = 84.14817290172547, 42.65352787311345  # frozen reference at t=0.3
        err = []
        for h in (1e-3, 5e-4):
            end = integrate_fixed(START1, CASE1, t_end=0.3, h=h)
            err.append(abs(end.prey - ref_p) + abs(end.predator - ref_q))
        # 4th-order propagation: halving h cuts the error by roughly 16x
        assert err[1] < err[0] / 8.0

    def test_validation(self):
        with pytest.raises(ValueError):
            integrate_fixed(START1, CASE1, t_end=0.0, h=1e-3)
        with pytest.raises(ValueError):
            integrate_fixed(START1, CASE1, t_end=1.0, h=0.0)


class TestConvergence:
    def test_case1_converged(self):
        report = convergence_check(START1, CASE1, t_end=2.0, sample_step=0.1)
        assert report.samples == 21
        assert report.max_deviation < 1e-4

    def test_max_deviation_is_componentwise_max(self):
        report = convergence_check(START3, CASE3, t_end=1.0, sample_step=0.1)
        assert report.max_deviation == max(
            report.max_prey_deviation, report.max_predator_deviation
        )
