"""QoS metrics over simulation traces.

All functions are pure: they read cloudlet records (anything with
submit_time, finish_time, deadline) and never touch engine state. The
report builder aggregates a full SimTrace into per-phase and run-level
numbers ready for JSON emission.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from statistics import fmean


class PartialPhaseError(ValueError):
    """A phase metric was requested while some cloudlet is still unfinished."""


def vm_utilization(loads, pes: int, mips: float) -> float:
    """Raw utilization figure: sum of length*pes over the resident cloudlets
    divided by the VM's pes*mips.

    loads is an iterable of (length, pes_required) pairs. Note the result has
    time units (instructions per MIPS), so it is not bounded by 1; use
    utilization_fraction for threshold tests.
    """
    if pes <= 0 or mips <= 0:
        raise ValueError("vm pes and mips must be positive")
    return sum(length * pes_req for length, pes_req in loads) / (pes * mips)


def utilization_fraction(consumed_mips: float, pes: int, mips: float) -> float:
    """Bounded utilization in [0, 1]: MIPS currently consumed over capacity."""
    if pes <= 0 or mips <= 0:
        raise ValueError("vm pes and mips must be positive")
    if consumed_mips < 0:
        raise ValueError("consumed_mips must be non-negative")
    return min(1.0, consumed_mips / (pes * mips))


def avg_utilization(fractions) -> float:
    """Arithmetic mean of per-VM utilization fractions."""
    values = list(fractions)
    if not values:
        raise ValueError("average utilization needs at least one VM")
    return fmean(values)


def avg_completion(records) -> float:
    """Mean completion interval (finish - submit) over a finished phase."""
    records = list(records)
    if not records:
        raise ValueError("average completion needs at least one cloudlet")
    for c in records:
        if c.finish_time is None:
            raise PartialPhaseError(f"cloudlet {c.id} has not finished")
    return fmean(c.finish_time - c.submit_time for c in records)


def makespan(records) -> float:
    """Last finish minus first submission across a finished phase."""
    records = list(records)
    if not records:
        raise ValueError("makespan needs at least one cloudlet")
    for c in records:
        if c.finish_time is None:
            raise PartialPhaseError(f"cloudlet {c.id} has not finished")
    return max(c.finish_time for c in records) - min(c.submit_time for c in records)


def sla_rate(records) -> float:
    """Fraction of cloudlets whose completion interval exceeds their deadline.

    A cloudlet that never finished inside the trace counts as a violation.
    """
    records = list(records)
    if not records:
        raise ValueError("sla rate needs at least one cloudlet")
    late = 0
    for c in records:
        if c.finish_time is None or (c.finish_time - c.submit_time) > c.deadline:
            late += 1
    return late / len(records)


@dataclass
class PhaseQoS:
    phase: int
    submitted: int
    finished: int
    avg_completion_ms: float | None
    makespan_ms: float | None
    sla_violation_rate: float
    avg_vm_utilization: float | None


@dataclass
class QoSReport:
    policy: str
    seed: int
    config_hash: str
    phases: list[PhaseQoS]
    avg_completion_ms: float | None
    makespan_ms: float | None
    sla_violation_rate: float | None
    mean_busy_fraction: float
    avg_ram_util: float
    avg_bw_util: float
    alloc_failures: int
    decisions: int
    end_time_ms: float

    def to_dict(self) -> dict:
        return asdict(self)


def _phase_utilization(trace, records) -> float | None:
    """Mean of the monitor's utilization samples inside the phase window."""
    if not records:
        return None
    start = min(c.submit_time for c in records)
    finishes = [c.finish_time for c in records if c.finish_time is not None]
    end = max(finishes) if finishes else trace.end_time
    inside = [
        util
        for t, util, _, _ in trace.util_samples
        if util is not None and start <= t <= end
    ]
    if not inside:
        return None
    return fmean(inside)


def build_report(trace) -> QoSReport:
    """Aggregate a SimTrace into per-phase and run-level QoS numbers."""
    phase_ids = sorted({c.phase for c in trace.cloudlets})
    phases = []
    for phase in phase_ids:
        records = trace.phase_cloudlets(phase)
        done = [c for c in records if c.finish_time is not None]
        complete = len(done) == len(records)
        phases.append(
            PhaseQoS(
                phase=phase,
                submitted=len(records),
                finished=len(done),
                avg_completion_ms=avg_completion(records) if complete and records else None,
                makespan_ms=makespan(records) if complete and records else None,
                sla_violation_rate=sla_rate(records) if records else 0.0,
                avg_vm_utilization=_phase_utilization(trace, records),
            )
        )
    finished = trace.finished_cloudlets()
    overall_avg = (
        fmean(c.finish_time - c.submit_time for c in finished) if finished else None
    )
    overall_makespan = None
    if finished:
        overall_makespan = max(c.finish_time for c in finished) - min(
            c.submit_time for c in trace.cloudlets
        )
    overall_sla = sla_rate(trace.cloudlets) if trace.cloudlets else None
    return QoSReport(
        policy=trace.policy,
        seed=trace.seed,
        config_hash=trace.config_hash,
        phases=phases,
        avg_completion_ms=overall_avg,
        makespan_ms=overall_makespan,
        sla_violation_rate=overall_sla,
        mean_busy_fraction=trace.mean_busy_fraction(),
        avg_ram_util=trace.ram_utilization,
        avg_bw_util=trace.bw_utilization,
        alloc_failures=len(trace.alloc_failures),
        decisions=len(trace.decisions),
        end_time_ms=trace.end_time,
    )
