"""Adaptive Runge-Kutta-Fehlberg 4(5) integration of the predator-prey system.

The classical Fehlberg tableau drives an embedded 4th/5th order pair; the
4th order solution is propagated and the pair difference, scaled per
component by (abs_tol + rel_tol*|state|), gives the acceptance test. Dense
output between accepted steps uses cubic Hermite interpolation, which keeps
grid sampling independent of the adaptive step sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .lv import LVParams, PopulationState, Trajectory


class SolverError(RuntimeError):
    """Base class for integration failures."""


class StepSizeUnderflow(SolverError):
    """The controller needs a step below h_min to meet the tolerance."""


class MaxStepsExceeded(SolverError):
    """The step budget ran out before reaching t_end."""


class Divergence(SolverError):
    """The state left the representable range."""


# Classical Fehlberg coefficients: stage weights (a) and the 4th/5th order
# combination weights (b4, b5).
_A21 = 1 / 4
_A31, _A32 = 3 / 32, 9 / 32
_A41, _A42, _A43 = 1932 / 2197, -7200 / 2197, 7296 / 2197
_A51, _A52, _A53, _A54 = 439 / 216, -8.0, 3680 / 513, -845 / 4104
_A61, _A62, _A63, _A64, _A65 = -8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40
_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)

# Controller limits: growth clamp, shrink clamp, safety factor.
_GROW, _SHRINK, _SAFETY = 5.0, 0.2, 0.9


@dataclass(frozen=True)
class SolverConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    h_init: float = 1e-3
    h_min: float = 1e-12
    h_max: float = 0.1
    max_steps: int = 10_000_000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            value = getattr(self, name)
            if not (0.0 < value < 1.0):
                raise ValueError(f"{name} must lie in (0, 1), got {value!r}")
        if not (0.0 < self.h_min <= self.h_init <= self.h_max):
            raise ValueError(
                "step sizes must satisfy 0 < h_min <= h_init <= h_max, got "
                f"h_min={self.h_min!r} h_init={self.h_init!r} h_max={self.h_max!r}"
            )
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")

    def tightened(self, factor: float = 10.0) -> "SolverConfig":
        """Same controller with both tolerances divided by factor."""
        return replace(self, rel_tol=self.rel_tol / factor, abs_tol=self.abs_tol / factor)


@dataclass(frozen=True)
class StepResult:
    """One attempted step; state is meaningful only when accepted."""

    state: PopulationState
    error_estimate: float
    h_used: float
    h_next: float
    accepted: bool


@dataclass(frozen=True)
class ConvergenceReport:
    """Grid-sample deviation between a run and a 10x tighter rerun."""

    max_prey_deviation: float
    max_predator_deviation: float
    samples: int

    @property
    def max_deviation(self) -> float:
        return max(self.max_prey_deviation, self.max_predator_deviation)


def _rhs(p: float, q: float, params: LVParams) -> tuple[float, float]:
    return (
        params.alpha * p - params.beta * p * q,
        params.delta * p * q - params.gamma * q,
    )


def _fehlberg_pair(p, q, params, h):
    """4th and 5th order states after one step of size h from (p, q)."""
    k1p, k1q = _rhs(p, q, params)
    k2p, k2q = _rhs(p + h * _A21 * k1p, q + h * _A21 * k1q, params)
    k3p, k3q = _rhs(
        p + h * (_A31 * k1p + _A32 * k2p),
        q + h * (_A31 * k1q + _A32 * k2q),
        params,
    )
    k4p, k4q = _rhs(
        p + h * (_A41 * k1p + _A42 * k2p + _A43 * k3p),
        q + h * (_A41 * k1q + _A42 * k2q + _A43 * k3q),
        params,
    )
    k5p, k5q = _rhs(
        p + h * (_A51 * k1p + _A52 * k2p + _A53 * k3p + _A54 * k4p),
        q + h * (_A51 * k1q + _A52 * k2q + _A53 * k3q + _A54 * k4q),
        params,
    )
    k6p, k6q = _rhs(
        p + h * (_A61 * k1p + _A62 * k2p + _A63 * k3p + _A64 * k4p + _A65 * k5p),
        q + h * (_A61 * k1q + _A62 * k2q + _A63 * k3q + _A64 * k4q + _A65 * k5q),
        params,
    )
    kp = (k1p, k2p, k3p, k4p, k5p, k6p)
    kq = (k1q, k2q, k3q, k4q, k5q, k6q)
    p4 = p + h * sum(b * k for b, k in zip(_B4, kp))
    q4 = q + h * sum(b * k for b, k in zip(_B4, kq))
    p5 = p + h * sum(b * k for b, k in zip(_B5, kp))
    q5 = q + h * sum(b * k for b, k in zip(_B5, kq))
    return p4, q4, p5, q5


def _attempt(p, q, params, h, cfg):
    """Raw step attempt: (p_new, q_new, err, h_next, accepted).

    The advanced state is the 5th-order solution (local extrapolation, so the
    local error carried forward is order h^6); the embedded difference still
    drives acceptance and step control. The state is unclamped, so callers
    can inspect negative undershoot.
    """
    p4, q4, p5, q5 = _fehlberg_pair(p, q, params, h)
    if not (math.isfinite(p4) and math.isfinite(q4) and math.isfinite(p5) and math.isfinite(q5)):
        raise Divergence(f"non-finite state after step of h={h!r} from ({p!r}, {q!r})")
    scale_p = cfg.abs_tol + cfg.rel_tol * abs(p)
    scale_q = cfg.abs_tol + cfg.rel_tol * abs(q)
    err = max(abs(p5 - p4) / scale_p, abs(q5 - q4) / scale_q)
    if err == 0.0:
        factor = _GROW
    else:
        factor = min(_GROW, max(_SHRINK, _SAFETY * err ** -0.2))
    h_next = min(cfg.h_max, max(cfg.h_min, h * factor))
    return p5, q5, err, h_next, err <= 1.0


def rkf45_step(
    state: PopulationState, params: LVParams, h: float, config: SolverConfig | None = None
) -> StepResult:
    """Attempt one adaptive step of size h from state.

    The returned state is the locally extrapolated 5th order solution at
    t + h, floored at zero per component so it remains a valid population;
    integrate() applies the stricter undershoot policy on the raw values.
    """
    cfg = config or SolverConfig()
    if h <= 0.0 or not math.isfinite(h):
        raise ValueError(f"step size must be positive and finite, got {h!r}")
    p_new, q_new, err, h_next, accepted = _attempt(state.prey, state.predator, params, h, cfg)
    new_state = PopulationState(max(p_new, 0.0), max(q_new, 0.0), state.t + h)
    return StepResult(new_state, err, h, h_next, accepted)


def _hermite(t0, y0, f0, t1, y1, f1, ts):
    """Cubic Hermite value at ts within [t0, t1]."""
    h = t1 - t0
    s = (ts - t0) / h
    s2 = s * s
    s3 = s2 * s
    return (
        (2 * s3 - 3 * s2 + 1) * y0
        + (s3 - 2 * s2 + s) * h * f0
        + (-2 * s3 + 3 * s2) * y1
        + (s3 - s2) * h * f1
    )


def integrate(
    start: PopulationState,
    params: LVParams,
    t_end: float,
    sample_step: float = 0.1,
    config: SolverConfig | None = None,
) -> Trajectory:
    """Integrate from start to t_end, sampling every sample_step.

    Samples land on the grid start.t + k*sample_step, inclusive of t_end when
    the grid hits it. A step driving a population negative by less than
    abs_tol is floored at zero; a larger undershoot rejects the step and
    halves h.
    """
    cfg = config or SolverConfig()
    if not math.isfinite(t_end) or t_end <= start.t:
        raise ValueError(f"t_end must exceed start.t={start.t!r}, got {t_end!r}")
    if sample_step <= 0.0:
        raise ValueError("sample_step must be positive")

    span = t_end - start.t
    grid_eps = 1e-9 * max(1.0, abs(t_end))
    n_samples = int(math.floor(span / sample_step + 1e-9))
    sample_times = [start.t + k * sample_step for k in range(1, n_samples + 1)]

    t, p, q = start.t, start.prey, start.predator
    fp, fq = _rhs(p, q, params)
    samples = [start]
    next_idx = 0

    h = min(cfg.h_init, span)
    steps = 0
    while t < t_end - grid_eps:
        if steps >= cfg.max_steps:
            raise MaxStepsExceeded(f"no convergence within {cfg.max_steps} steps at t={t!r}")
        steps += 1
        h_try = min(h, t_end - t)
        p_raw, q_raw, err, h_next, accepted = _attempt(p, q, params, h_try, cfg)
        if not accepted:
            if h_try <= cfg.h_min * (1.0 + 1e-9):
                raise StepSizeUnderflow(
                    f"tolerance unreachable at t={t!r}: rejected step at h_min={cfg.h_min!r}"
                )
            h = h_next if h_next < h_try else h_try / 2.0
            continue
        if p_raw < 0.0 or q_raw < 0.0:
            undershoot = -min(p_raw, q_raw)
            if undershoot >= cfg.abs_tol:
                if h_try <= cfg.h_min * (1.0 + 1e-9):
                    raise StepSizeUnderflow(
                        f"population undershoot {undershoot!r} persists at h_min at t={t!r}"
                    )
                h = max(h_try / 2.0, cfg.h_min)
                continue
        t_new = t + h_try
        p_new, q_new = max(p_raw, 0.0), max(q_raw, 0.0)
        fp_new, fq_new = _rhs(p_new, q_new, params)
        while next_idx < len(sample_times) and sample_times[next_idx] <= t_new + grid_eps:
            ts = sample_times[next_idx]
            if abs(ts - t_new) <= grid_eps:
                ps, qs = p_new, q_new
            else:
                ps = _hermite(t, p, fp, t_new, p_new, fp_new, ts)
                qs = _hermite(t, q, fq, t_new, q_new, fq_new, ts)
            samples.append(PopulationState(max(ps, 0.0), max(qs, 0.0), ts))
            next_idx += 1
        t, p, q, fp, fq = t_new, p_new, q_new, fp_new, fq_new
        h = h_next
    return Trajectory(params=params, sample_step=sample_step, samples=tuple(samples))


def integrate_fixed(
    start: PopulationState, params: LVParams, t_end: float, h: float
) -> PopulationState:
    """Fixed-step variant propagating the 4th order solution; no controller.

    Exists for order verification; the step count is rounded so the last step
    lands exactly on t_end.
    """
    if t_end <= start.t:
        raise ValueError(f"t_end must exceed start.t={start.t!r}, got {t_end!r}")
    if h <= 0.0:
        raise ValueError("h must be positive")
    span = t_end - start.t
    n = max(1, round(span / h))
    step = span / n
    p, q = start.prey, start.predator
    for i in range(n):
        p, q, _, _ = _fehlberg_pair(p, q, params, step)
        if not (math.isfinite(p) and math.isfinite(q)):
            raise Divergence(f"non-finite state at fixed step {i}")
    return PopulationState(max(p, 0.0), max(q, 0.0), t_end)


def convergence_check(
    start: PopulationState,
    params: LVParams,
    t_end: float,
    sample_step: float = 0.1,
    config: SolverConfig | None = None,
) -> ConvergenceReport:
    """Compare grid samples of a run against a 10x tighter rerun."""
    cfg = config or SolverConfig()
    base = integrate(start, params, t_end, sample_step, cfg)
    tight = integrate(start, params, t_end, sample_step, cfg.tightened())
    if len(base) != len(tight):
        raise SolverError("convergence runs produced unequal grids")
    dev_p = max(abs(a.prey - b.prey) for a, b in zip(base, tight))
    dev_q = max(abs(a.predator - b.predator) for a, b in zip(base, tight))
    return ConvergenceReport(dev_p, dev_q, len(base))
