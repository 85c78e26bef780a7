"""Dispatch policies mapping pending cloudlets onto serviceable VMs.

A policy never mutates engine state: it receives the pending list (sorted by
submit time, then id) and the serviceable VMs, and returns (cloudlet, vm)
assignments for the engine to apply. Policies that keep state across calls
(round robin's cursor) reset at the start of a run. The rng argument is the
run's dedicated policy stream, so random policies replay deterministically
and never perturb workload generation.
"""

from __future__ import annotations

import math


def _least_loaded(vms, extra):
    """VM with the fewest active cloudlets counting this round's assignments;
    ties go to the lowest id."""
    return min(vms, key=lambda vm: (len(vm.runs) + extra.get(vm.id, 0), vm.id))


class Fcfs:
    """Earliest submission first, onto the least loaded VM.

    This is also the plain time-shared broker: every pending cloudlet is
    placed immediately, sharing happens inside the VM.
    """

    def reset(self):
        pass

    def dispatch(self, pending, vms, now, rng):
        out = []
        extra: dict[int, int] = {}
        for cloudlet in pending:
            vm = _least_loaded(vms, extra)
            extra[vm.id] = extra.get(vm.id, 0) + 1
            out.append((cloudlet, vm))
        return out


class RoundRobin:
    """Cycle through VMs in id order; weighted mode grants each VM
    ceil(mips / slowest mips) consecutive cloudlets per cycle."""

    def __init__(self, weighted: bool = False):
        self._weighted = weighted
        self.reset()

    def reset(self):
        self._cursor: int | None = None  # id of the VM currently holding quantum
        self._quantum_left = 0

    def _advance(self, ordered):
        ids = [vm.id for vm in ordered]
        if self._cursor is None or self._cursor not in ids:
            pos = 0
            if self._cursor is not None:
                # resume after the old cursor position even if that VM left
                pos = next((i for i, v in enumerate(ids) if v > self._cursor), 0)
        else:
            pos = (ids.index(self._cursor) + 1) % len(ids)
        vm = ordered[pos]
        self._cursor = vm.id
        weight = 1.0
        if self._weighted:
            floor = min(v.spec.mips for v in ordered)
            weight = vm.spec.mips / floor
        self._quantum_left = max(1, math.ceil(weight))
        return vm

    def dispatch(self, pending, vms, now, rng):
        ordered = sorted(vms, key=lambda vm: vm.id)
        out = []
        current = None
        if self._cursor is not None and self._quantum_left > 0:
            current = next((vm for vm in ordered if vm.id == self._cursor), None)
        for cloudlet in pending:
            if current is None or self._quantum_left <= 0:
                current = self._advance(ordered)
            out.append((cloudlet, current))
            self._quantum_left -= 1
        return out


class _ByEstimate:
    """Order pending by the dedicated-VM runtime estimate length/mips."""

    def __init__(self, estimate_mips: float, longest: bool):
        if estimate_mips <= 0:
            raise ValueError("estimate_mips must be positive")
        self._mips = estimate_mips
        self._longest = longest

    def reset(self):
        pass

    def dispatch(self, pending, vms, now, rng):
        sign = -1.0 if self._longest else 1.0
        ordered = sorted(
            pending, key=lambda c: (sign * (c.length / self._mips), c.submit_time, c.id)
        )
        out = []
        extra: dict[int, int] = {}
        for cloudlet in ordered:
            vm = _least_loaded(vms, extra)
            extra[vm.id] = extra.get(vm.id, 0) + 1
            out.append((cloudlet, vm))
        return out


class ShortestJobFirst(_ByEstimate):
    def __init__(self, estimate_mips: float):
        super().__init__(estimate_mips, longest=False)


class LongestJobFirst(_ByEstimate):
    def __init__(self, estimate_mips: float):
        super().__init__(estimate_mips, longest=True)


class OpportunisticLoadBalancing:
    """Uniform random VM per cloudlet, preferring idle VMs while any exist."""

    def reset(self):
        pass

    def dispatch(self, pending, vms, now, rng):
        out = []
        extra: dict[int, int] = {}
        ordered = sorted(vms, key=lambda vm: vm.id)
        for cloudlet in pending:
            idle = [vm for vm in ordered if len(vm.runs) + extra.get(vm.id, 0) == 0]
            pool = idle if idle else ordered
            vm = pool[rng.randrange(len(pool))]
            extra[vm.id] = extra.get(vm.id, 0) + 1
            out.append((cloudlet, vm))
        return out


class MinMin:
    """Repeatedly place the cloudlet with the global minimum completion time.

    Completion uses the dedicated-queue estimate: the VM's ready time (its
    remaining work at one-at-a-time speed) plus length/mips. Ties break on
    (completion, cloudlet id, vm id).
    """

    def reset(self):
        pass

    def dispatch(self, pending, vms, now, rng):
        avail = {
            vm.id: now + sum(run.remaining for run in vm.runs) / vm.spec.mips for vm in vms
        }
        by_id = {vm.id: vm for vm in vms}
        remaining = list(pending)
        out = []
        while remaining:
            best = None
            for cloudlet in remaining:
                for vm_id, ready in avail.items():
                    completion = ready + cloudlet.length / by_id[vm_id].spec.mips
                    key = (completion, cloudlet.id, vm_id)
                    if best is None or key < best[0]:
                        best = (key, cloudlet, vm_id)
            _, cloudlet, vm_id = best
            avail[vm_id] += cloudlet.length / by_id[vm_id].spec.mips
            remaining.remove(cloudlet)
            out.append((cloudlet, by_id[vm_id]))
        return out


def make_policy(name: str, estimate_mips: float = 100.0):
    """Instantiate a dispatch policy by its config name."""
    if name in ("fcfs", "timeshared"):
        return Fcfs()
    if name == "rr":
        return RoundRobin()
    if name == "wrr":
        return RoundRobin(weighted=True)
    if name == "sjf":
        return ShortestJobFirst(estimate_mips)
    if name == "ljf":
        return LongestJobFirst(estimate_mips)
    if name == "olb":
        return OpportunisticLoadBalancing()
    if name == "minmin":
        return MinMin()
    raise ValueError(f"unknown scheduling policy {name!r}")
