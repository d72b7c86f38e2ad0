"""Deterministic discrete-event simulation of a quantum cloud queue.

Jobs are either independent one-shot tasks or runtime sessions that submit
a stream of circuit executions with think-time delays in between.  Devices
serve a FIFO queue, except that a session's next circuit jumps to the front
of its device's queue (non-preemptive priority).  Six scheduling policies
decide device placement; everything is driven by one seeded generator and
a heap with total-order tie-breaking, so identical inputs give identical
metrics.
"""

from __future__ import annotations

import hashlib
import heapq
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .qsim import ValidationError

POLICIES = (
    "least_busy",
    "load_weighted",
    "fidelity_weighted",
    "best_fidelity",
    "eqc",
    "qoncord",
)

# event kind ranks for deterministic ordering at equal timestamps
_ARRIVAL, _FINISHED, _SESSION_NEXT = 0, 1, 2


@dataclass
class SimDevice:
    id: str
    fidelity: float
    min_exec_time: float
    max_exec_time: float
    busy_until: float = 0.0
    # runtime state
    queue: deque = field(default_factory=deque, repr=False)
    running: object = None
    busy_time: float = 0.0

    def validate(self):
        if not (0.3 <= self.fidelity <= 0.9):
            raise ValidationError("fidelity must be in [0.3, 0.9]")
        if abs(self.max_exec_time - 3.0 * self.min_exec_time) > 1e-9:
            raise ValidationError("max_exec_time must be 3x min_exec_time")

    def pending(self) -> int:
        return len(self.queue) + (1 if self.running is not None else 0)


@dataclass(frozen=True)
class JobSpec:
    job_id: int
    kind: str  # "independent" | "runtime_session"
    num_executions: int
    inter_execution_delays: tuple[float, ...] = ()
    arrival_time: float = 0.0

    def __post_init__(self):
        if self.num_executions < 1:
            raise ValidationError("num_executions must be >= 1")
        if self.kind == "independent" and self.num_executions != 1:
            raise ValidationError("independent jobs execute exactly once")
        if self.kind == "runtime_session" and self.num_executions < 2:
            raise ValidationError("runtime sessions execute more than once")
        if any(d < 0 for d in self.inter_execution_delays):
            raise ValidationError("delays must be non-negative")


@dataclass
class SimMetrics:
    throughput: float
    mean_relative_fidelity: float
    completion_time: float
    per_device_utilization: dict[str, float]
    circuits_generated: int
    circuits_executed: int
    mean_relative_fidelity_circuits: float


@dataclass(frozen=True)
class QoncordPolicyConfig:
    checkpoint_fraction: float = 0.4
    fidelity_floor: float = 0.5  # relative to the fleet maximum
    prune_fraction: float = 0.6


def generate_workload(
    n_jobs: int,
    runtime_fraction: float,
    seed: int,
    *,
    horizon: float = 5000.0,
    session_executions: tuple[int, int] = (2, 8),
    delay_range: tuple[float, float] = (0.0, 2.0),
) -> list[JobSpec]:
    """Synthetic mix of independent tasks and runtime sessions."""
    if n_jobs < 1:
        raise ValidationError("n_jobs must be >= 1")
    if not (0.1 <= runtime_fraction <= 0.9):
        raise ValidationError("runtime_fraction must be in [0.1, 0.9]")
    rng = np.random.default_rng(seed)
    n_runtime = int(runtime_fraction * n_jobs)
    runtime_ids = set(rng.permutation(n_jobs)[:n_runtime].tolist())
    jobs = []
    for job_id in range(n_jobs):
        arrival = float(rng.uniform(0.0, horizon))
        if job_id in runtime_ids:
            execs = int(rng.integers(session_executions[0], session_executions[1] + 1))
            delays = tuple(
                float(rng.uniform(*delay_range)) for _ in range(execs - 1)
            )
            jobs.append(
                JobSpec(job_id, "runtime_session", execs, delays, arrival)
            )
        else:
            jobs.append(JobSpec(job_id, "independent", 1, (), arrival))
    return jobs


def make_fleet(
    n_devices: int = 10,
    seed: int = 0,
    *,
    fidelity_range: tuple[float, float] = (0.3, 0.9),
    base_exec_range: tuple[float, float] = (0.5, 1.5),
) -> list[SimDevice]:
    """Fleet with evenly spaced fidelities and seeded per-device exec times."""
    rng = np.random.default_rng(seed)
    fidelities = np.linspace(fidelity_range[0], fidelity_range[1], n_devices)
    fleet = []
    for i, fid in enumerate(fidelities):
        base = float(rng.uniform(*base_exec_range))
        fleet.append(
            SimDevice(
                id=f"dev{i}",
                fidelity=float(fid),
                min_exec_time=base,
                max_exec_time=3.0 * base,
            )
        )
    return fleet


def throughput(num_circuits: int, completion_time: float) -> float:
    if num_circuits == 0:
        return 0.0
    return num_circuits / completion_time


def select_least_busy(devices: list[SimDevice]) -> SimDevice:
    return min(devices, key=lambda d: (d.pending(), d.id))


def select_load_weighted(devices: list[SimDevice], rng) -> SimDevice:
    weights = np.array([1.0 / (1 + d.pending()) for d in devices])
    idx = rng.choice(len(devices), p=weights / weights.sum())
    return devices[idx]


def select_fidelity_weighted(devices: list[SimDevice], rng) -> SimDevice:
    weights = np.array([d.fidelity for d in devices])
    idx = rng.choice(len(devices), p=weights / weights.sum())
    return devices[idx]


def select_best_fidelity(devices: list[SimDevice]) -> SimDevice:
    return min(devices, key=lambda d: (-d.fidelity, d.pending(), d.id))


def _id_hash(job_id: int) -> int:
    digest = hashlib.md5(str(job_id).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def pruned_session_ids(session_ids: list[int], prune_fraction: float) -> set[int]:
    """The bottom prune_fraction of sessions ranked by a stable id hash."""
    ranked = sorted(session_ids, key=lambda j: (_id_hash(j), j))
    n_pruned = int(prune_fraction * len(ranked) + 1e-9)
    return set(ranked[:n_pruned])


class _JobState:
    __slots__ = (
        "spec", "next_exec", "device", "explore_device", "finetune_device",
        "session_circuits", "pruned", "last_device", "executed",
    )

    def __init__(self, spec: JobSpec):
        self.spec = spec
        self.next_exec = 0
        self.device = None
        self.explore_device = None
        self.finetune_device = None
        self.session_circuits = spec.num_executions
        self.pruned = False
        self.last_device = None
        self.executed = 0


def run_sim(
    jobs: list[JobSpec],
    fleet: list[SimDevice],
    policy: str,
    seed: int,
    qoncord_config: QoncordPolicyConfig | None = None,
) -> SimMetrics:
    """Process the whole workload under one policy and report metrics.

    The throughput numerator counts the workload's circuits (doubled for the
    EQC policy's task duplication); Qoncord's pruned session tails count as
    resolved by pruning rather than executed, so pruning shortens completion
    time without shrinking the task count.
    """
    if policy not in POLICIES:
        raise ValidationError(f"unknown policy {policy!r}")
    if not fleet:
        raise ValidationError("fleet must be non-empty")
    qcfg = qoncord_config or QoncordPolicyConfig()
    rng = np.random.default_rng(seed)
    max_fid = max(d.fidelity for d in fleet)

    # reset device runtime state so fleets can be reused across runs
    for d in fleet:
        d.queue = deque()
        d.running = None
        d.busy_time = 0.0
        d.busy_until = 0.0

    states: dict[int, _JobState] = {}
    sim_jobs: list[JobSpec] = []
    if policy == "eqc":
        # runtime sessions become duplicated independent tasks at their
        # planned submission offsets
        next_id = max((j.job_id for j in jobs), default=-1) + 1
        for j in jobs:
            if j.kind == "independent":
                sim_jobs.append(j)
                continue
            offset = 0.0
            for i in range(j.num_executions):
                for _ in range(2):
                    sim_jobs.append(
                        JobSpec(next_id, "independent", 1, (), j.arrival_time + offset)
                    )
                    next_id += 1
                if i < j.num_executions - 1:
                    offset += j.inter_execution_delays[i]
    else:
        sim_jobs = list(jobs)

    pruned_ids: set[int] = set()
    if policy == "qoncord":
        session_ids = [j.job_id for j in sim_jobs if j.kind == "runtime_session"]
        pruned_ids = pruned_session_ids(session_ids, qcfg.prune_fraction)
    for j in sim_jobs:
        st = _JobState(j)
        states[j.job_id] = st
        if policy == "qoncord" and j.kind == "runtime_session" and j.job_id in pruned_ids:
            st.pruned = True
            st.session_circuits = max(
                1, int(qcfg.checkpoint_fraction * j.num_executions)
            )

    heap: list[tuple] = []
    seq = 0

    def push(time, kind, job_id):
        nonlocal seq
        heapq.heappush(heap, (time, kind, job_id, seq))
        seq += 1

    for j in sim_jobs:
        push(j.arrival_time, _ARRIVAL, j.job_id)

    eligible = [d for d in fleet if d.fidelity >= qcfg.fidelity_floor * max_fid]
    circuits_executed = 0
    fid_weighted_circuits = 0.0
    last_completion = 0.0

    def pick_device(st: _JobState) -> SimDevice:
        j = st.spec
        if policy == "qoncord":
            if j.kind == "independent":
                return select_least_busy(fleet)
            explore = max(1, int(qcfg.checkpoint_fraction * j.num_executions))
            if st.next_exec < explore:
                if st.explore_device is None:
                    st.explore_device = select_least_busy(eligible)
                return st.explore_device
            if st.finetune_device is None:
                st.finetune_device = select_best_fidelity(fleet)
            return st.finetune_device
        if st.device is not None:
            return st.device
        if policy == "least_busy" or policy == "eqc":
            st.device = select_least_busy(fleet)
        elif policy == "load_weighted":
            st.device = select_load_weighted(fleet, rng)
        elif policy == "fidelity_weighted":
            st.device = select_fidelity_weighted(fleet, rng)
        elif policy == "best_fidelity":
            st.device = select_best_fidelity(fleet)
        return st.device

    def try_start(device: SimDevice, now: float):
        if device.running is not None or not device.queue:
            return
        job_id = device.queue.popleft()
        duration = float(rng.uniform(device.min_exec_time, device.max_exec_time))
        device.running = job_id
        device.busy_time += duration
        device.busy_until = now + duration
        push(now + duration, _FINISHED, job_id)

    def enqueue(st: _JobState, now: float, priority: bool):
        device = pick_device(st)
        st.last_device = device
        if priority:
            device.queue.appendleft(st.spec.job_id)
        else:
            device.queue.append(st.spec.job_id)
        try_start(device, now)

    while heap:
        now, kind, job_id, _ = heapq.heappop(heap)
        st = states[job_id]
        if kind == _ARRIVAL:
            enqueue(st, now, priority=False)
        elif kind == _SESSION_NEXT:
            enqueue(st, now, priority=True)
        else:  # execution finished
            device = st.last_device
            device.running = None
            st.next_exec += 1
            st.executed += 1
            circuits_executed += 1
            fid_weighted_circuits += device.fidelity
            last_completion = now
            if st.next_exec < st.session_circuits:
                delay = st.spec.inter_execution_delays[st.next_exec - 1]
                push(now + delay, _SESSION_NEXT, job_id)
            try_start(device, now)

    completion_time = last_completion
    generated = sum(j.num_executions for j in jobs)
    if policy == "eqc":
        generated += sum(
            j.num_executions for j in jobs if j.kind == "runtime_session"
        )

    def job_fidelity(st: _JobState) -> float:
        if policy == "qoncord" and st.spec.kind == "runtime_session":
            return st.finetune_device.fidelity if st.finetune_device else (
                st.explore_device.fidelity
            )
        return st.last_device.fidelity

    runtime_states = [
        st
        for st in states.values()
        if st.spec.kind == "runtime_session" and not st.pruned
    ]
    # Fidelity tracks solution quality, which only runtime (VQA-style) jobs
    # carry; pruned sessions contribute no solution.  Pure-independent
    # workloads fall back to all jobs.
    fid_states = runtime_states or list(states.values())
    mean_rel_fid = float(
        np.mean([job_fidelity(st) / max_fid for st in fid_states])
    )
    util = {
        d.id: (d.busy_time / completion_time if completion_time > 0 else 0.0)
        for d in fleet
    }
    return SimMetrics(
        throughput=throughput(generated, completion_time),
        mean_relative_fidelity=mean_rel_fid,
        completion_time=completion_time,
        per_device_utilization=util,
        circuits_generated=generated,
        circuits_executed=circuits_executed,
        mean_relative_fidelity_circuits=(
            fid_weighted_circuits / (circuits_executed * max_fid)
            if circuits_executed
            else 0.0
        ),
    )
