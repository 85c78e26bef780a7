"""Elastic scaling: parameter tuning, predator-prey scale targets, controllers.

The scaling model treats online VMs as the prey population and active
cloudlets as the predator population. Controllers watch the monitor feed
(and, for the gate variant, arrivals) and translate trajectory samples into
acquire/release calls against the simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .lv import LVParams, PopulationState, Scenario, scenario_condition
from .predictor import WmaWindow
from .solver import SolverConfig, integrate


class Direction(Enum):
    UP = "Up"
    DOWN = "Down"


class Trigger(Enum):
    UTIL_HIGH = "UtilizationHigh"
    UTIL_LOW = "UtilizationLow"
    RESPONSE_HIGH = "ResponseHigh"
    RESPONSE_LOW = "ResponseLow"
    OCCUPANCY_HIGH = "OccupancyHigh"


@dataclass(frozen=True)
class ScalePolicyConfig:
    """Thresholds and trajectory sampling knobs shared by all controllers."""

    max_threshold: float = 0.8
    min_threshold: float = 0.2
    upper_response_ms: float = 400.0
    lower_response_ms: float = 100.0
    wma_window: int = 3
    epsilon: float = 0.5
    lv_sample_step: float = 0.1
    lv_horizon: float = 2.0
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if not 0.0 <= self.min_threshold < self.max_threshold <= 1.0:
            raise ValueError("thresholds must satisfy 0 <= min < max <= 1")
        if self.lower_response_ms >= self.upper_response_ms:
            raise ValueError("lower_response_ms must be below upper_response_ms")
        if self.wma_window < 1:
            raise ValueError("wma_window must be at least 1")
        if self.epsilon <= 0 or self.lv_sample_step <= 0 or self.lv_horizon <= 0:
            raise ValueError("epsilon, sample step and horizon must be positive")


@dataclass(frozen=True)
class ScaleDecision:
    time: float
    trigger: Trigger
    current_vms: int
    target_vms: int
    lv_sample_time: float | None  # None for fixed-step fallback decisions


def tune_parameters(
    prey: float, predator: float, goal: Scenario, epsilon: float = 0.5
) -> LVParams:
    """Pick coefficients so the scenario test at (prey, predator) yields goal.

    beta and delta stay at 1; only the growth and decay rates move. The
    increasing and decreasing branches start from an anchor guess and nudge
    one rate by epsilon until the scenario condition and the side conditions
    (gamma above prey for growth, alpha above predator for decay) hold.
    """
    if prey <= 0 or predator <= 0:
        raise ValueError("populations must be positive")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    state = PopulationState(prey=prey, predator=predator)
    if goal is Scenario.STABLE:
        return LVParams(alpha=predator, beta=1.0, gamma=prey, delta=1.0)
    if goal is Scenario.PREY_INCREASING:
        alpha = prey if prey < predator else max(predator - epsilon, predator / 2.0)
        gamma = predator if predator > prey else prey + epsilon
        while True:
            params = LVParams(alpha=alpha, beta=1.0, gamma=gamma, delta=1.0)
            if scenario_condition(state, params) is goal and gamma > prey:
                return params
            gamma += epsilon
    if goal is Scenario.PREY_DECREASING:
        alpha = 2.0 * prey
        gamma = prey / 2.0
        while True:
            params = LVParams(alpha=alpha, beta=1.0, gamma=gamma, delta=1.0)
            if scenario_condition(state, params) is goal and alpha > predator:
                return params
            alpha += epsilon
    raise ValueError(f"unsupported goal {goal!r}")


def lv_scale_candidates(
    current_vms: float,
    current_cloudlets: float,
    direction: Direction,
    cfg: ScalePolicyConfig | None = None,
):
    """Tune parameters for the requested direction and integrate forward.

    Returns (params, samples) where samples are (t, prey, trunc(prey),
    trunc(predator)) at each grid point past t=0.
    """
    cfg = cfg or ScalePolicyConfig()
    goal = (
        Scenario.PREY_INCREASING if direction is Direction.UP else Scenario.PREY_DECREASING
    )
    params = tune_parameters(current_vms, current_cloudlets, goal, cfg.epsilon)
    start = PopulationState(prey=float(current_vms), predator=float(current_cloudlets))
    traj = integrate(start, params, t_end=cfg.lv_horizon, sample_step=cfg.lv_sample_step,
                     config=cfg.solver)
    samples = [
        (s.t, s.prey, math.trunc(s.prey), math.trunc(s.predator))
        for s in traj.samples
        if s.t > 0.0
    ]
    return params, samples


def lv_scale_target(
    current_vms: int,
    current_cloudlets: int,
    direction: Direction,
    pool_remaining: int = 0,
    cfg: ScalePolicyConfig | None = None,
    now: float = 0.0,
    trigger: Trigger | None = None,
) -> ScaleDecision | None:
    """Earliest trajectory sample whose truncated prey is a usable VM target.

    Up-scaling needs current < target <= current + pool_remaining; down-scaling
    needs 0 < target < current. Returns None when no sample qualifies.
    """
    if current_vms < 1 or current_cloudlets < 1:
        raise ValueError("need at least one VM and one cloudlet to scale")
    if pool_remaining < 0:
        raise ValueError("pool_remaining must be non-negative")
    if trigger is None:
        trigger = Trigger.UTIL_HIGH if direction is Direction.UP else Trigger.UTIL_LOW
    _, samples = lv_scale_candidates(current_vms, current_cloudlets, direction, cfg)
    for t, _, target, _ in samples:
        if direction is Direction.UP:
            ok = current_vms < target <= current_vms + pool_remaining
        else:
            ok = 0 < target < current_vms
        if ok:
            return ScaleDecision(
                time=now,
                trigger=trigger,
                current_vms=current_vms,
                target_vms=target,
                lv_sample_time=t,
            )
    return None


class ReactiveController:
    """Threshold scaler on the monitor's busy-VM fraction.

    With use_lv the step size comes from the trajectory target; otherwise it
    scales by one VM at a time. scale_down=False gives the growth-only
    variant used to wrap scheduling heuristics, where the batch plan owns
    fleet reductions.
    """

    def __init__(
        self,
        cfg: ScalePolicyConfig | None = None,
        use_lv: bool = True,
        scale_down: bool = True,
    ):
        self.cfg = cfg or ScalePolicyConfig()
        self.use_lv = use_lv
        self.scale_down = scale_down

    def on_arrival(self, sim, cloudlet) -> bool:
        return True

    def on_finish(self, sim, cloudlet):
        pass

    def on_monitor(self, sim, utilization: float | None):
        if utilization is None:
            return
        if utilization > self.cfg.max_threshold:
            self._scale(sim, Direction.UP, Trigger.UTIL_HIGH)
        elif utilization < self.cfg.min_threshold and self.scale_down:
            self._scale(sim, Direction.DOWN, Trigger.UTIL_LOW)

    def _scale(self, sim, direction: Direction, trigger: Trigger):
        current = len(sim.online)
        if current < 1:
            return
        demand = sim.active_cloudlets()
        headroom = sim.pool_headroom()
        decision = None
        if self.use_lv and demand >= 1:
            decision = lv_scale_target(
                current, demand, direction, headroom, self.cfg, sim.now, trigger
            )
        elif not self.use_lv:
            if direction is Direction.UP and headroom > 0:
                decision = ScaleDecision(sim.now, trigger, current, current + 1, None)
            elif direction is Direction.DOWN and current > 1:
                decision = ScaleDecision(sim.now, trigger, current, current - 1, None)
        if decision is None:
            return
        sim.record_decision(decision)
        if direction is Direction.UP:
            sim.acquire_vms(decision.target_vms - current)
        else:
            sim.release_idle_vms(current - decision.target_vms)


class ProactiveController:
    """Scaler on predicted completion time from a weighted moving average."""

    def __init__(self, cfg: ScalePolicyConfig | None = None, use_lv: bool = True):
        self.cfg = cfg or ScalePolicyConfig()
        self.use_lv = use_lv
        self.window = WmaWindow(self.cfg.wma_window)

    def on_arrival(self, sim, cloudlet) -> bool:
        return True

    def on_finish(self, sim, cloudlet):
        self.window.observe(cloudlet.completion_ms)

    def on_monitor(self, sim, utilization: float | None):
        predicted = self.window.predict()
        if predicted is None:
            return
        if predicted > self.cfg.upper_response_ms:
            self._scale(sim, Direction.UP, Trigger.RESPONSE_HIGH)
        elif predicted < self.cfg.lower_response_ms:
            self._scale(sim, Direction.DOWN, Trigger.RESPONSE_LOW)

    _scale = ReactiveController._scale


class TimesharedGateController:
    """Admission gate for the time-shared broker.

    Arrivals queue while the busy-VM occupancy sits above the high threshold;
    each monitor tick under pressure initiates an LV up-scale sized from the
    current state, and the queue drains FIFO once occupancy falls back into
    band. Below the low threshold admission is aggressive: at least one per
    tick, up to the predator level of the down trajectory's first usable
    sample. Holding never blocks running work, so every queued cloudlet is
    admitted in finite time.
    """

    def __init__(self, cfg: ScalePolicyConfig | None = None):
        self.cfg = cfg or ScalePolicyConfig()
        self.queue: list = []

    def _occupancy(self, sim) -> float | None:
        vms = sim.serviceable_vms()
        if not vms:
            return None
        return sum(1 for vm in vms if vm.runs) / len(vms)

    def on_arrival(self, sim, cloudlet) -> bool:
        occ = self._occupancy(sim)
        if occ is None or occ > self.cfg.max_threshold or self.queue:
            self.queue.append(cloudlet)
            return False
        return True

    def on_finish(self, sim, cloudlet):
        pass

    def on_monitor(self, sim, utilization: float | None):
        if not self.queue:
            return
        occ = self._occupancy(sim)
        if occ is None:
            # no serviceable VM at all; bootstrap one if the pool allows
            if sim.pool_headroom() > 0:
                current = len(sim.online)
                sim.record_decision(ScaleDecision(
                    sim.now, Trigger.OCCUPANCY_HIGH, current, current + 1, None
                ))
                sim.acquire_vms(1)
            return
        if occ > self.cfg.max_threshold:
            self._scale_up(sim)
        elif occ < self.cfg.min_threshold:
            self._drain(sim, self._aggressive_quota(sim))
        else:
            self._drain(sim, len(self.queue))

    def _scale_up(self, sim):
        current = len(sim.online)
        demand = sim.active_cloudlets()
        if current < 1 or demand < 1:
            return
        decision = lv_scale_target(
            current, demand, Direction.UP, sim.pool_headroom(),
            self.cfg, sim.now, Trigger.OCCUPANCY_HIGH,
        )
        if decision is None:
            return  # cannot grow now; finishes will lower occupancy instead
        sim.record_decision(decision)
        sim.acquire_vms(decision.target_vms - current)

    def _aggressive_quota(self, sim) -> int:
        """Admissions allowed this tick: lift active cloudlets toward the
        predator level of the first usable down-scaling sample, always at
        least one so the queue keeps moving."""
        current = len(sim.online)
        demand = sim.active_cloudlets()
        if current < 1 or demand < 1:
            return len(self.queue)
        _, samples = lv_scale_candidates(current, demand, Direction.DOWN, self.cfg)
        for _, _, prey_t, predator_t in samples:
            if 0 < prey_t < current:
                return max(1, predator_t - demand)
        return len(self.queue)

    def _drain(self, sim, count: int):
        for _ in range(min(count, len(self.queue))):
            sim.admit(self.queue.pop(0))
