"""Deterministic discrete-event simulation of a small elastic datacenter.

Time is measured in milliseconds, work in instructions (length units). VMs
run their cloudlets time-shared: with k active cloudlets each one progresses
at mips*pes/k per ms, and finish events are recomputed analytically on every
arrival and departure instead of ticking. Events are ordered by
(time, sequence number), so runs with the same config and seed replay
byte-identically.

Three seeded random streams are derived per run: workload (arrival offsets),
policy (scheduling draws), and vm (per-VM MIPS when heterogeneous). Keeping
them separate means the same seed produces the same workload under every
scheduling policy and scaling controller.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import math
import random
from dataclasses import asdict, dataclass, field

# A cloudlet whose remaining work is below this is complete; resolution is
# far below one instruction at the lengths the workloads use.
REMAINING_EPS = 1e-6

# Hard cap on processed events; trips on controller livelock instead of
# spinning forever.
MAX_EVENTS = 5_000_000


class SimulationError(RuntimeError):
    """Engine-level failure (invalid dispatch, livelock, broken invariant)."""


@dataclass(frozen=True)
class HostSpec:
    pes: int = 4
    mips_per_pe: float = 1000.0
    ram_mb: int = 16384
    bw_kbps: int = 10000
    storage_gb: int = 1

    def __post_init__(self):
        if self.pes < 1 or self.mips_per_pe <= 0 or self.ram_mb < 1 or self.bw_kbps < 1:
            raise ValueError(f"invalid host spec {self!r}")


@dataclass(frozen=True)
class VmSpec:
    mips: float = 100.0
    pes: int = 1
    ram_mb: int = 124
    bw: int = 100

    def __post_init__(self):
        if self.mips <= 0 or self.pes < 1 or self.ram_mb < 1 or self.bw < 0:
            raise ValueError(f"invalid vm spec {self!r}")

    @property
    def capacity(self) -> float:
        """Total MIPS the VM delivers, shared across its active cloudlets."""
        return self.mips * self.pes


@dataclass(frozen=True)
class Batch:
    """One workload phase: a VM provisioning target plus a burst of cloudlets."""

    vm_count: int
    cloudlet_count: int
    deadline_ms: float

    def __post_init__(self):
        if self.vm_count < 0 or self.cloudlet_count < 0 or self.deadline_ms <= 0:
            raise ValueError(f"invalid batch {self!r}")


@dataclass(frozen=True)
class SimConfig:
    hosts: tuple[HostSpec, ...] = (HostSpec(pes=4), HostSpec(pes=2))
    vm_template: VmSpec = VmSpec()
    initial_vms: int = 1
    vm_pool_size: int = 100           # cap on concurrently online VMs
    batches: tuple[Batch, ...] = ()
    batch_gap_ms: float = 1000.0      # batch k is submitted at k * gap
    batch_window_ms: float = 1000.0   # arrival offsets drawn from [0, window)
    monitor_interval_ms: float = 100.0
    background_count: int = 0         # cloudlets injected per background tick
    background_interval_ms: float = 100.0
    background_deadline_ms: float | None = None  # defaults to last batch deadline
    cloudlet_length: float = 40000.0
    cloudlet_pes: int = 1
    rng_seed: int = 1
    vm_boot_delay_ms: float = 0.0
    sim_horizon_ms: float | None = None
    vm_mips_choices: tuple[float, ...] | None = None  # heterogeneous fleets

    def __post_init__(self):
        object.__setattr__(self, "hosts", tuple(self.hosts))
        object.__setattr__(
            self,
            "batches",
            tuple(b if isinstance(b, Batch) else Batch(*b) for b in self.batches),
        )
        if self.vm_mips_choices is not None:
            object.__setattr__(self, "vm_mips_choices", tuple(self.vm_mips_choices))
        if not self.hosts:
            raise ValueError("need at least one host")
        if self.initial_vms < 0 or self.vm_pool_size < 1:
            raise ValueError("initial_vms must be >= 0 and vm_pool_size >= 1")
        if self.initial_vms > self.vm_pool_size:
            raise ValueError("initial_vms cannot exceed vm_pool_size")
        if self.monitor_interval_ms <= 0 or self.batch_gap_ms < 0 or self.batch_window_ms < 0:
            raise ValueError("intervals must be positive")
        if self.background_count < 0 or self.background_interval_ms <= 0:
            raise ValueError("invalid background arrival settings")
        if self.cloudlet_length <= 0 or self.cloudlet_pes < 1:
            raise ValueError("invalid cloudlet defaults")
        ram_cap = sum(h.ram_mb // self.vm_template.ram_mb for h in self.hosts)
        if self.initial_vms > ram_cap:
            raise ValueError(
                f"initial_vms={self.initial_vms} exceeds host RAM capacity for {ram_cap} VMs"
            )

    def config_hash(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


@dataclass
class Cloudlet:
    """A unit job. start/finish/vm are filled in as the run progresses."""

    id: int
    phase: int                 # batch index; -1 for background arrivals
    length: float
    pes: int
    submit_time: float
    deadline: float
    start_time: float | None = None
    finish_time: float | None = None
    vm_id: int | None = None

    @property
    def completion_ms(self) -> float | None:
        if self.finish_time is None:
            return None
        return self.finish_time - self.submit_time


class Host:
    def __init__(self, host_id: int, spec: HostSpec):
        self.id = host_id
        self.spec = spec
        self.free_ram = spec.ram_mb
        self.free_bw = spec.bw_kbps
        # PEs are a ranking signal, not a hard limit: single-PE VMs are packed
        # far beyond the core count, CloudSim style, so this may go negative.
        self.free_pes = spec.pes


class _Run:
    __slots__ = ("cloudlet", "remaining")

    def __init__(self, cloudlet: Cloudlet):
        self.cloudlet = cloudlet
        self.remaining = cloudlet.length


class Vm:
    def __init__(self, vm_id: int, spec: VmSpec, host: Host, now: float, online_at: float):
        self.id = vm_id
        self.spec = spec
        self.host_id = host.id
        self.created_at = now
        self.online_at = online_at
        self.released_at: float | None = None
        self.runs: list[_Run] = []
        self.last_update = online_at
        self.busy_ms = 0.0
        self.executed = 0.0
        self.finish_version = 0

    @property
    def capacity(self) -> float:
        return self.spec.capacity

    def serviceable(self, now: float) -> bool:
        return self.released_at is None and self.online_at <= now


def choose_host(hosts: list[Host], vm_spec: VmSpec) -> Host | None:
    """Pick the host with the most free PEs among those with enough RAM and
    bandwidth; ties go to the lowest host id. None when nothing fits."""
    best = None
    for host in hosts:
        if host.free_ram < vm_spec.ram_mb or host.free_bw < vm_spec.bw:
            continue
        if best is None or host.free_pes > best.free_pes:
            best = host
    return best


def advance_vm(vm: Vm, now: float) -> None:
    """Apply time-shared progress to now: each active cloudlet advances at an
    equal share of the VM's full capacity."""
    dt = now - vm.last_update
    if dt <= 0.0:
        return
    k = len(vm.runs)
    if k:
        rate = vm.capacity / k
        for run in vm.runs:
            run.remaining -= rate * dt
        vm.busy_ms += dt
        vm.executed += vm.capacity * dt
    vm.last_update = now


@dataclass
class VmStat:
    vm_id: int
    online_at: float
    released_at: float | None
    busy_ms: float
    executed: float
    mips: float


@dataclass
class SimTrace:
    """Everything a run produced, in deterministic order."""

    config: SimConfig
    config_hash: str
    seed: int
    policy: str
    cloudlets: list[Cloudlet] = field(default_factory=list)
    decisions: list = field(default_factory=list)
    util_samples: list[tuple[float, float | None, int, int]] = field(default_factory=list)
    alloc_failures: list[tuple[float, str]] = field(default_factory=list)
    vm_stats: list[VmStat] = field(default_factory=list)
    end_time: float = 0.0
    total_executed: float = 0.0
    ram_utilization: float = 0.0
    bw_utilization: float = 0.0

    def finished_cloudlets(self) -> list[Cloudlet]:
        return [c for c in self.cloudlets if c.finish_time is not None]

    def phase_cloudlets(self, phase: int) -> list[Cloudlet]:
        return [c for c in self.cloudlets if c.phase == phase]

    def mean_busy_fraction(self) -> float:
        """Busy time over online time, summed across VMs, clipped to end_time."""
        online = 0.0
        busy = 0.0
        for stat in self.vm_stats:
            stop = stat.released_at if stat.released_at is not None else self.end_time
            stop = min(stop, self.end_time)
            span = max(0.0, stop - stat.online_at)
            online += span
            busy += min(stat.busy_ms, span)
        if online <= 0.0:
            return 0.0
        return busy / online

    def cloudlets_csv(self) -> str:
        lines = [f"# config={self.config_hash} seed={self.seed} policy={self.policy}"]
        lines.append("id,phase,length,pes,submit_ms,start_ms,finish_ms,deadline_ms,vm_id")
        for c in self.cloudlets:
            start = "" if c.start_time is None else repr(c.start_time)
            finish = "" if c.finish_time is None else repr(c.finish_time)
            vm = "" if c.vm_id is None else str(c.vm_id)
            lines.append(
                f"{c.id},{c.phase},{c.length!r},{c.pes},{c.submit_time!r},"
                f"{start},{finish},{c.deadline!r},{vm}"
            )
        return "\n".join(lines) + "\n"

    def decisions_csv(self) -> str:
        lines = [f"# config={self.config_hash} seed={self.seed} policy={self.policy}"]
        lines.append("time_ms,trigger,current_vms,target_vms,lv_sample_time")
        for d in self.decisions:
            sample = "" if d.lv_sample_time is None else repr(d.lv_sample_time)
            lines.append(
                f"{d.time!r},{d.trigger.value},{d.current_vms},{d.target_vms},{sample}"
            )
        return "\n".join(lines) + "\n"

    def utilization_csv(self) -> str:
        lines = [f"# config={self.config_hash} seed={self.seed} policy={self.policy}"]
        lines.append("time_ms,avg_utilization,online_vms,busy_vms")
        for t, util, online, busy in self.util_samples:
            u = "" if util is None else repr(util)
            lines.append(f"{t!r},{u},{online},{busy}")
        return "\n".join(lines) + "\n"


# Event kinds, processed in (time, seq) order.
_BATCH, _ARRIVAL, _FINISH, _MONITOR, _BACKGROUND, _BOOT = range(6)


class Simulation:
    """One deterministic run of a workload under a scheduler and an optional
    scaling/admission controller."""

    def __init__(self, config: SimConfig, scheduler, controller=None, policy_label: str = ""):
        self.config = config
        self.scheduler = scheduler
        self.controller = controller
        self.now = 0.0
        self.hosts = [Host(i, spec) for i, spec in enumerate(config.hosts)]
        self.vms: list[Vm] = []           # every VM ever created
        self.online: list[Vm] = []        # not yet released, in id order
        self.pending: list[Cloudlet] = [] # admitted, waiting for dispatch
        self.cloudlets: list[Cloudlet] = []
        self.trace = SimTrace(
            config=config,
            config_hash=config.config_hash(),
            seed=config.rng_seed,
            policy=policy_label,
        )
        seed = config.rng_seed
        self.rng_workload = random.Random(f"{seed}:workload")
        self.rng_policy = random.Random(f"{seed}:policy")
        self.rng_vm = random.Random(f"{seed}:vm")
        self._queue: list[tuple[float, int, int, tuple]] = []
        self._seq = 0
        self._arrived_unfinished = 0
        self._batches_submitted = 0
        self._release_target: int | None = None
        self._alloc_integral_ram = 0.0
        self._alloc_integral_bw = 0.0
        self._alloc_last_t = 0.0
        self._last_finish = 0.0

    # ------------------------------------------------------------- engine API

    def serviceable_vms(self) -> list[Vm]:
        return [vm for vm in self.online if vm.serviceable(self.now)]

    def pool_headroom(self) -> int:
        return max(0, self.config.vm_pool_size - len(self.online))

    def active_cloudlets(self) -> int:
        """Arrived and not yet finished, including gate-queued ones."""
        return self._arrived_unfinished

    def record_decision(self, decision) -> None:
        self.trace.decisions.append(decision)

    def acquire_vms(self, count: int, clear_release_target: bool = True, instant: bool = False) -> int:
        """Bring up to count new VMs online; returns how many were placed.

        Pool or host exhaustion is recorded as an allocation failure, never
        silent. instant skips the boot delay (initial provisioning).
        """
        if clear_release_target:
            self._release_target = None
        acquired = 0
        for _ in range(count):
            if self.pool_headroom() <= 0:
                self.trace.alloc_failures.append((self.now, "vm pool exhausted"))
                break
            host = choose_host(self.hosts, self._next_vm_spec_peek())
            if host is None:
                self.trace.alloc_failures.append((self.now, "no host fits the vm"))
                break
            spec = self._next_vm_spec_take()
            self._accumulate_alloc()
            host.free_ram -= spec.ram_mb
            host.free_bw -= spec.bw
            host.free_pes -= spec.pes
            online_at = self.now if instant else self.now + self.config.vm_boot_delay_ms
            vm = Vm(len(self.vms), spec, host, self.now, online_at)
            self.vms.append(vm)
            self.online.append(vm)
            if online_at > self.now:
                self._push(online_at, _BOOT, (vm.id,))
            acquired += 1
        return acquired

    def release_idle_vms(self, count: int, clear_release_target: bool = True) -> int:
        """Release up to count idle VMs, newest first; busy VMs are never
        touched. Returns how many actually went away."""
        if clear_release_target:
            self._release_target = None
        released = 0
        for vm in sorted(self.online, key=lambda v: -v.id):
            if released >= count:
                break
            if vm.runs:
                continue
            self._release(vm)
            released += 1
        return released

    def admit(self, cloudlet: Cloudlet) -> None:
        """Move a gate-held cloudlet into the dispatch queue."""
        self.pending.append(cloudlet)

    # ---------------------------------------------------------------- helpers

    def _next_vm_spec_peek(self) -> VmSpec:
        return self.config.vm_template

    def _next_vm_spec_take(self) -> VmSpec:
        template = self.config.vm_template
        choices = self.config.vm_mips_choices
        if choices:
            mips = float(self.rng_vm.choice(choices))
            return VmSpec(mips=mips, pes=template.pes, ram_mb=template.ram_mb, bw=template.bw)
        return template

    def _accumulate_alloc(self) -> None:
        dt = self.now - self._alloc_last_t
        if dt > 0:
            ram = sum(vm.spec.ram_mb for vm in self.online)
            bw = sum(vm.spec.bw for vm in self.online)
            self._alloc_integral_ram += ram * dt
            self._alloc_integral_bw += bw * dt
        self._alloc_last_t = self.now

    def _release(self, vm: Vm) -> None:
        if vm.runs:
            raise SimulationError(f"cannot release busy vm {vm.id}")
        self._accumulate_alloc()
        advance_vm(vm, self.now)
        host = self.hosts[vm.host_id]
        host.free_ram += vm.spec.ram_mb
        host.free_bw += vm.spec.bw
        host.free_pes += vm.spec.pes
        vm.released_at = self.now
        vm.finish_version += 1
        self.online.remove(vm)

    def _push(self, time: float, kind: int, payload: tuple) -> None:
        self._seq += 1
        heapq.heappush(self._queue, (time, self._seq, kind, payload))

    def _work_remaining(self) -> bool:
        return (
            self._arrived_unfinished > 0
            or self._batches_submitted < len(self.config.batches)
            or any(c.finish_time is None for c in self.cloudlets)
        )

    def _batch_work_remaining(self) -> bool:
        if self._batches_submitted < len(self.config.batches):
            return True
        return any(c.finish_time is None for c in self.cloudlets if c.phase >= 0)

    def _new_cloudlet(self, phase: int, submit: float, deadline: float) -> Cloudlet:
        c = Cloudlet(
            id=len(self.cloudlets),
            phase=phase,
            length=self.config.cloudlet_length,
            pes=self.config.cloudlet_pes,
            submit_time=submit,
            deadline=deadline,
        )
        self.cloudlets.append(c)
        return c

    def _reschedule_finish(self, vm: Vm) -> None:
        vm.finish_version += 1
        if vm.runs:
            k = len(vm.runs)
            rem = min(run.remaining for run in vm.runs)
            t_fin = self.now + max(rem, 0.0) * k / vm.capacity
            self._push(t_fin, _FINISH, (vm.id, vm.finish_version))

    def _dispatch(self) -> None:
        if not self.pending:
            return
        vms = self.serviceable_vms()
        if not vms:
            return
        self.pending.sort(key=lambda c: (c.submit_time, c.id))
        assignments = self.scheduler.dispatch(list(self.pending), vms, self.now, self.rng_policy)
        if not assignments:
            return
        pending_ids = {c.id for c in self.pending}
        seen: set[int] = set()
        touched: dict[int, Vm] = {}
        for cloudlet, vm in assignments:
            if cloudlet.id not in pending_ids or cloudlet.id in seen:
                raise SimulationError(
                    f"scheduler dispatched cloudlet {cloudlet.id} which is not pending"
                )
            if not vm.serviceable(self.now):
                raise SimulationError(f"scheduler picked unserviceable vm {vm.id}")
            seen.add(cloudlet.id)
            advance_vm(vm, self.now)
            cloudlet.start_time = self.now
            cloudlet.vm_id = vm.id
            vm.runs.append(_Run(cloudlet))
            touched[vm.id] = vm
        self.pending = [c for c in self.pending if c.id not in seen]
        for vm in touched.values():
            self._reschedule_finish(vm)

    # ------------------------------------------------------------------- run

    def run(self) -> SimTrace:
        cfg = self.config
        if hasattr(self.scheduler, "reset"):
            self.scheduler.reset()
        self.acquire_vms(cfg.initial_vms, clear_release_target=False, instant=True)
        for k, _ in enumerate(cfg.batches):
            self._push(k * cfg.batch_gap_ms, _BATCH, (k,))
        if cfg.batches or cfg.background_count:
            self._push(cfg.monitor_interval_ms, _MONITOR, ())
            if cfg.background_count:
                self._push(cfg.background_interval_ms, _BACKGROUND, ())

        events = 0
        while self._queue:
            time, _, kind, payload = heapq.heappop(self._queue)
            if cfg.sim_horizon_ms is not None and time > cfg.sim_horizon_ms:
                break
            events += 1
            if events > MAX_EVENTS:
                raise SimulationError("event cap exceeded; controller livelock?")
            if time < self.now - 1e-9:
                raise SimulationError(f"event time {time!r} precedes now {self.now!r}")
            self.now = max(self.now, time)

            if kind == _BATCH:
                self._handle_batch(payload[0])
            elif kind == _ARRIVAL:
                self._handle_arrival(payload[0])
            elif kind == _FINISH:
                self._handle_finish(payload[0], payload[1])
            elif kind == _MONITOR:
                self._handle_monitor()
            elif kind == _BACKGROUND:
                self._handle_background()
            elif kind == _BOOT:
                self._dispatch()

        return self._finalize()

    def _handle_batch(self, index: int) -> None:
        batch = self.config.batches[index]
        self._batches_submitted += 1
        current = len(self.online)
        if batch.vm_count > current:
            self.acquire_vms(batch.vm_count - current, clear_release_target=False)
            self._release_target = None
        elif batch.vm_count < current:
            self._release_target = batch.vm_count
            self.release_idle_vms(current - batch.vm_count, clear_release_target=False)
        for _ in range(batch.cloudlet_count):
            offset = self.rng_workload.uniform(0.0, self.config.batch_window_ms)
            submit = self.now + offset
            c = self._new_cloudlet(index, submit, batch.deadline_ms)
            self._push(submit, _ARRIVAL, (c.id,))
        self._dispatch()

    def _handle_arrival(self, cloudlet_id: int) -> None:
        cloudlet = self.cloudlets[cloudlet_id]
        self._arrived_unfinished += 1
        admit = True
        if self.controller is not None and hasattr(self.controller, "on_arrival"):
            admit = self.controller.on_arrival(self, cloudlet)
        if admit:
            self.pending.append(cloudlet)
        self._dispatch()

    def _handle_finish(self, vm_id: int, version: int) -> None:
        vm = self.vms[vm_id]
        if version != vm.finish_version or vm.released_at is not None:
            return
        advance_vm(vm, self.now)
        done = [run for run in vm.runs if run.remaining <= REMAINING_EPS]
        if not done:
            self._reschedule_finish(vm)
            return
        vm.runs = [run for run in vm.runs if run.remaining > REMAINING_EPS]
        for run in done:
            run.cloudlet.finish_time = self.now
            self._arrived_unfinished -= 1
            self._last_finish = self.now
        self._reschedule_finish(vm)
        if (
            self._release_target is not None
            and len(self.online) > self._release_target
            and not vm.runs
        ):
            self._release(vm)
        if self.controller is not None and hasattr(self.controller, "on_finish"):
            for run in done:
                self.controller.on_finish(self, run.cloudlet)
        self._dispatch()

    def _handle_monitor(self) -> None:
        vms = self.serviceable_vms()
        for vm in vms:
            advance_vm(vm, self.now)
        busy = sum(1 for vm in vms if vm.runs)
        util = busy / len(vms) if vms else None
        self.trace.util_samples.append((self.now, util, len(vms), busy))
        if self.controller is not None and hasattr(self.controller, "on_monitor"):
            self.controller.on_monitor(self, util)
        self._dispatch()
        if self._work_remaining():
            self._push(self.now + self.config.monitor_interval_ms, _MONITOR, ())

    def _handle_background(self) -> None:
        if not self._batch_work_remaining():
            return
        deadline = self.config.background_deadline_ms
        if deadline is None:
            deadline = self.config.batches[-1].deadline_ms if self.config.batches else 1000.0
        for _ in range(self.config.background_count):
            c = self._new_cloudlet(-1, self.now, deadline)
            self._push(self.now, _ARRIVAL, (c.id,))
        self._push(self.now + self.config.background_interval_ms, _BACKGROUND, ())

    def _finalize(self) -> SimTrace:
        trace = self.trace
        self._accumulate_alloc()
        for vm in self.online:
            advance_vm(vm, self.now)
        trace.end_time = self.now
        trace.cloudlets = list(self.cloudlets)
        trace.total_executed = sum(vm.executed for vm in self.vms)
        trace.vm_stats = [
            VmStat(
                vm_id=vm.id,
                online_at=vm.online_at,
                released_at=vm.released_at,
                busy_ms=vm.busy_ms,
                executed=vm.executed,
                mips=vm.spec.mips,
            )
            for vm in self.vms
        ]
        total_ram = sum(h.spec.ram_mb for h in self.hosts)
        total_bw = sum(h.spec.bw_kbps for h in self.hosts)
        if self.now > 0:
            trace.ram_utilization = self._alloc_integral_ram / (total_ram * self.now)
            trace.bw_utilization = self._alloc_integral_bw / (total_bw * self.now)
        return trace
