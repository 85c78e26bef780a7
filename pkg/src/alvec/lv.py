"""Lotka-Volterra dynamics on the (VM supply, job demand) plane.

Prey is the VM population P, predator the job/cloudlet population Q:

    dP/dt = alpha*P - beta*P*Q
    dQ/dt = delta*P*Q - gamma*Q

All four coefficients are positive. The interior equilibrium sits at
(gamma/delta, alpha/beta); the vertical line P = gamma/delta is the predator
nullcline and the horizontal line Q = alpha/beta the prey nullcline. Orbits
with positive populations are closed curves conserving

    K = delta*P - gamma*ln(P) + beta*Q - alpha*ln(Q)

which doubles as an integration-accuracy oracle.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class Region(enum.Enum):
    """Where a state sits relative to the nullclines."""

    ORIGIN_EQUILIBRIUM = "EquilibriumOrigin"
    INTERIOR_EQUILIBRIUM = "EquilibriumInterior"
    ON_PREY_NULLCLINE = "OnPNullcline"      # q == alpha/beta exactly
    ON_PREDATOR_NULLCLINE = "OnQNullcline"  # p == gamma/delta exactly
    A = "A"  # p < gamma/delta, q < alpha/beta: prey grows, predator shrinks
    B = "B"  # p < gamma/delta, q > alpha/beta: both shrink
    C = "C"  # p > gamma/delta, q < alpha/beta: both grow
    D = "D"  # p > gamma/delta, q > alpha/beta: prey shrinks, predator grows


class Scenario(enum.Enum):
    """Demand/supply balance read off the weighted populations."""

    PREY_INCREASING = "PreyIncreasing"
    STABLE = "Stable"
    PREY_DECREASING = "PreyDecreasing"


# Relative tolerance for calling gamma*q and alpha*p balanced.
STABLE_REL_TOL = 1e-9


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class LVParams:
    """Positive coefficients of the predator-prey system."""

    alpha: float
    beta: float
    gamma: float
    delta: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta"):
            value = _require_finite(name, getattr(self, name))
            if value <= 0.0:
                raise ValueError(f"{name} must be positive, got {value!r}")
            object.__setattr__(self, name, value)

    @property
    def interior_equilibrium(self) -> tuple[float, float]:
        return (self.gamma / self.delta, self.alpha / self.beta)


@dataclass(frozen=True)
class PopulationState:
    """Point on an orbit: prey (VMs), predator (jobs), and its time stamp."""

    prey: float
    predator: float
    t: float = 0.0

    def __post_init__(self):
        for name in ("prey", "predator", "t"):
            object.__setattr__(self, name, _require_finite(name, getattr(self, name)))
        if self.prey < 0.0 or self.predator < 0.0:
            raise ValueError(
                f"populations must be non-negative, got ({self.prey!r}, {self.predator!r})"
            )


@dataclass(frozen=True)
class Trajectory:
    """Samples of one orbit on a fixed time grid."""

    params: LVParams
    sample_step: float
    samples: tuple[PopulationState, ...]

    def __post_init__(self):
        if self.sample_step <= 0.0:
            raise ValueError("sample_step must be positive")
        if not self.samples:
            raise ValueError("a trajectory needs at least one sample")
        object.__setattr__(self, "samples", tuple(self.samples))
        times = [s.t for s in self.samples]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("sample times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(s.t for s in self.samples)

    @property
    def prey_values(self) -> tuple[float, ...]:
        return tuple(s.prey for s in self.samples)

    @property
    def predator_values(self) -> tuple[float, ...]:
        return tuple(s.predator for s in self.samples)

    @property
    def final(self) -> PopulationState:
        return self.samples[-1]


def derivative(state: PopulationState, params: LVParams) -> tuple[float, float]:
    """Growth rates (dP/dt, dQ/dt) at a state."""
    p, q = state.prey, state.predator
    return (
        params.alpha * p - params.beta * p * q,
        params.delta * p * q - params.gamma * q,
    )


def equilibria(params: LVParams) -> tuple[tuple[float, float], tuple[float, float]]:
    """Both stationary points: extinction at the origin and the interior center."""
    return ((0.0, 0.0), params.interior_equilibrium)


def classify_region(state: PopulationState, params: LVParams) -> Region:
    """Exhaustive, mutually exclusive region tag for any non-negative state.

    Equality with a nullcline is taken exactly; the interior regions use
    strict comparisons, so every state gets exactly one tag.
    """
    p_star, q_star = params.interior_equilibrium
    p, q = state.prey, state.predator
    if p == 0.0 and q == 0.0:
        return Region.ORIGIN_EQUILIBRIUM
    if p == p_star and q == q_star:
        return Region.INTERIOR_EQUILIBRIUM
    if p == p_star:
        return Region.ON_PREDATOR_NULLCLINE
    if q == q_star:
        return Region.ON_PREY_NULLCLINE
    if p < p_star:
        return Region.A if q < q_star else Region.B
    return Region.C if q < q_star else Region.D


def scenario_condition(state: PopulationState, params: LVParams) -> Scenario:
    """Classify the weighted balance gamma*q vs alpha*p.

    Balance within a relative tolerance of 1e-9 counts as stable; otherwise
    the larger side names the scenario.
    """
    weighted_q = params.gamma * state.predator
    weighted_p = params.alpha * state.prey
    if math.isclose(weighted_q, weighted_p, rel_tol=STABLE_REL_TOL, abs_tol=0.0):
        return Scenario.STABLE
    if weighted_q > weighted_p:
        return Scenario.PREY_INCREASING
    return Scenario.PREY_DECREASING


def first_integral(state: PopulationState, params: LVParams) -> float:
    """Conserved orbit quantity; defined only for strictly positive populations."""
    p, q = state.prey, state.predator
    if p <= 0.0 or q <= 0.0:
        raise ValueError(
            f"first integral needs positive populations, got ({p!r}, {q!r})"
        )
    return (
        params.delta * p
        - params.gamma * math.log(p)
        + params.beta * q
        - params.alpha * math.log(q)
    )
