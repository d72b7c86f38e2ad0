"""Phased multi-device orchestration of variational optimization.

The flow: estimate each device's probability of correct execution for the
task circuit, keep devices above an eligibility threshold ordered from the
lowest eligible fidelity up, explore all restarts on the lowest tier with a
relaxed convergence checker, prune weak restarts at the checkpoint by
clustering their intermediate expectations, and walk survivors up the tier
ladder, finishing with a strict checker on the highest-fidelity device.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from . import optimizer, qsim, vqa
from .optimizer import (
    CONTINUE,
    STOP,
    IterationRecord,
    SpsaConfig,
    Trajectory,
    TrajectoryStatus,
)
from .qsim import CircuitStats, NoiseModel, ValidationError


class NoEligibleDeviceError(RuntimeError):
    """Every device in the fleet fell below the fidelity threshold."""


@dataclass(frozen=True)
class DeviceProfile:
    id: str
    noise: NoiseModel
    display_fidelity: float = 1.0
    pending_load: int = 0


@dataclass(frozen=True)
class ConvergenceConfig:
    strict_window: int = 10
    relaxed_window: int = 5
    # tight defaults: SPSA plateaus mid-descent for several iterations at a
    # time, and entropy near convergence still fluctuates by ~0.02 bits at
    # the bundled noise levels; loose tolerances make the relaxed checker
    # fire mid-exploration, which scatters the checkpoint values the pruning
    # step clusters on
    tol_expectation: float = 0.001
    tol_entropy: float = 0.01

    def __post_init__(self):
        if not (1 <= self.relaxed_window < self.strict_window):
            raise ValidationError("need 1 <= relaxed_window < strict_window")
        if self.tol_expectation <= 0 or self.tol_entropy <= 0:
            raise ValidationError("tolerances must be positive")


@dataclass(frozen=True)
class TierPlan:
    tiers: tuple[DeviceProfile, ...]
    checkpoint_fraction: float = 0.4

    def __post_init__(self):
        if not self.tiers:
            raise ValidationError("tier plan needs at least one device")
        if not (0.0 < self.checkpoint_fraction < 1.0):
            raise ValidationError("checkpoint_fraction must be in (0,1)")


@dataclass
class RestartRecord:
    restart_id: int
    trajectory: Trajectory
    final_expectation: float
    status: TrajectoryStatus
    executions_per_device: dict[str, int]


@dataclass
class MultiRestartResult:
    per_restart: list[RestartRecord]
    best_expectation: float
    executions_per_device: dict[str, int]

    def total_executions(self) -> int:
        return sum(self.executions_per_device.values())


class Convergence(enum.Enum):
    CONTINUE = "continue"
    CONVERGED = "converged"


def estimate_p_correct(stats: CircuitStats, device: DeviceProfile) -> float:
    """Closed-form probability of error-free execution on a device.

    The decoherence exponent divides by the T1*T2 product, which is not
    dimensionless, so a unit convention is part of the contract: gate
    durations and coherence times are taken in milliseconds (NoiseModel
    stores seconds; the conversion happens here).  Realistic hardware
    numbers then land in a usable (0, 1) range instead of underflowing.
    """
    noise = device.noise
    noise.validate()
    ms = 1e3
    avg_gate = ms * (noise.t_g1 + noise.t_g2) / 2.0
    exponent = stats.depth * avg_gate / ((ms * noise.T1) * (ms * noise.T2))
    return (
        math.exp(-exponent)
        * (1.0 - noise.p1) ** stats.g1
        * (1.0 - noise.p2) ** stats.g2
        * (1.0 - noise.readout) ** stats.m
    )


def filter_devices(
    stats: CircuitStats, fleet: list[DeviceProfile], threshold: float = 0.1
) -> list[DeviceProfile]:
    """Eligible devices ordered ascending by estimated fidelity (tier 0 first)."""
    if not (0.0 < threshold < 1.0):
        raise ValidationError("threshold must be in (0,1)")
    scored = [(estimate_p_correct(stats, d), d) for d in fleet]
    eligible = [(p, d) for p, d in scored if p >= threshold]
    if not eligible:
        raise NoEligibleDeviceError(
            f"no device meets the {threshold} fidelity threshold "
            f"(best estimate {max(p for p, _ in scored):.4f})"
        )
    eligible.sort(key=lambda pd: (pd[0], pd[1].id))
    return [d for _, d in eligible]


def check_convergence(
    records: list[IterationRecord] | Trajectory,
    window: int,
    tol_e: float,
    tol_h: float,
) -> Convergence:
    """Converged when, over the trailing window, the best expectation stopped
    improving and the entropy stopped moving.

    The baseline for improvement is the best expectation before the window;
    when the trajectory is no longer than the window, the first record in it
    serves as the baseline.
    """
    if window < 1:
        raise ValidationError("window must be >= 1")
    if isinstance(records, Trajectory):
        records = records.records
    if len(records) < window:
        return Convergence.CONTINUE
    tail = records[-window:]
    head = records[: len(records) - window] or records[:1]
    prev_best = min(r.expectation for r in head)
    tail_best = min(r.expectation for r in tail)
    improvement = prev_best - tail_best
    if improvement >= tol_e:
        return Convergence.CONTINUE
    entropies = [r.entropy for r in tail]
    if max(entropies) - min(entropies) >= tol_h:
        return Convergence.CONTINUE
    return Convergence.CONVERGED


def should_advance_tier(
    last_entropy_current: float, probe_entropy_next: float, tol_entropy: float = 0.05
) -> bool:
    """Advance when the next tier's probe entropy is clearly lower, signalling
    a less noisy execution of the same parameters."""
    return probe_entropy_next < last_entropy_current - tol_entropy


def prune_restarts(intermediate: list[tuple[int, float]]) -> list[int]:
    """Promote the cluster of restarts around the best intermediate value.

    Sorts ascending (minimization: best first) and splits at the largest
    consecutive gap.  When fewer than 4 restarts exist or the largest gap is
    under 5% of the full value range, no cluster structure is trusted and
    everything is promoted.
    """
    if not intermediate:
        raise ValidationError("need at least one restart")
    ranked = sorted(intermediate, key=lambda iv: iv[1])
    values = [v for _, v in ranked]
    full_range = values[-1] - values[0]
    if len(ranked) < 4 or full_range == 0.0:
        return [i for i, _ in ranked]
    gaps = [values[j + 1] - values[j] for j in range(len(values) - 1)]
    largest = max(gaps)
    if largest < 0.05 * full_range:
        return [i for i, _ in ranked]
    split = gaps.index(largest) + 1
    return [i for i, _ in ranked[:split]]


@dataclass(frozen=True)
class VqaTask:
    """A variational problem the orchestrator can run on any device."""

    name: str
    num_params: int
    build_circuit: "callable"  # params -> qsim.Circuit
    evaluate: "callable"  # (params, NoiseModel) -> vqa.EvaluationResult

    def stats(self) -> CircuitStats:
        return qsim.circuit_stats(self.build_circuit(np.zeros(self.num_params)))


def qaoa_task(problem: vqa.MaxCutProblem, layers: int) -> VqaTask:
    cuts = vqa.cut_sizes(problem)

    def build(params):
        return vqa.build_qaoa(problem, params, layers)

    def evaluate(params, noise: NoiseModel) -> vqa.EvaluationResult:
        rho = qsim.simulate_density(build(params), noise)
        probs = qsim.probabilities_from_density(rho, noise)
        return vqa.EvaluationResult(
            expectation=float(-(probs @ cuts)),
            entropy=vqa.entropy_bits(probs),
            distribution=None,
        )

    return VqaTask(
        name=f"qaoa-n{problem.n}-p{layers}",
        num_params=2 * layers,
        build_circuit=build,
        evaluate=evaluate,
    )


def vqe_task(hamiltonian: vqa.PauliHamiltonian, reps: int) -> VqaTask:
    n = hamiltonian.num_qubits

    def build(params):
        return vqa.build_twolocal(n, params, reps)

    def evaluate(params, noise: NoiseModel) -> vqa.EvaluationResult:
        rho = qsim.simulate_density(build(params), noise)
        probs = qsim.probabilities_from_density(rho, noise)
        return vqa.EvaluationResult(
            expectation=vqa.pauli_expectation(rho, hamiltonian),
            entropy=vqa.entropy_bits(probs),
            distribution=None,
        )

    return VqaTask(
        name=f"vqe-n{n}-r{reps}",
        num_params=n * (reps + 1),
        build_circuit=build,
        evaluate=evaluate,
    )


def _phase_seed(seed: int, restart: int, phase: int) -> int:
    return int(np.random.SeedSequence((seed, restart, phase)).generate_state(1)[0])


# Liveness cap: after this many declined entropy probes on one tier the
# restart advances anyway, so a flat entropy landscape cannot strand it.
_MAX_STAYS_PER_TIER = 2


class _RestartRunner:
    """Walks one restart through the tier ladder, tracking its budget and
    per-device execution counts (3 per iteration plus 1 per tier probe)."""

    def __init__(self, task, restart_id, x0, spsa_config, conv_config, seed):
        self.task = task
        self.restart_id = restart_id
        self.x = np.asarray(x0, dtype=float)
        self.spsa_config = spsa_config
        self.conv = conv_config
        self.seed = seed
        self.records: list[IterationRecord] = []
        self.executions: dict[str, int] = {}
        self.phase = 0
        self.stopped_by_monitor = False

    @property
    def used(self) -> int:
        return len(self.records)

    @property
    def remaining(self) -> int:
        return self.spsa_config.max_iters - self.used

    def run_phase(self, device: DeviceProfile, budget: int, window: int) -> bool:
        """Run up to `budget` iterations on `device`; True if the checker fired."""
        if budget <= 0:
            return False
        offset = self.used

        def objective(params, _device_id):
            return self.task.evaluate(params, device.noise)

        def monitor(traj: Trajectory):
            verdict = check_convergence(
                traj.records, window, self.conv.tol_expectation, self.conv.tol_entropy
            )
            return STOP if verdict is Convergence.CONVERGED else CONTINUE

        cfg = replace(
            self.spsa_config,
            max_iters=budget,
            # keep the stability constant tied to the restart's full budget
            # so the resumed gain schedule matches a single continuous run
            A=self.spsa_config.stability,
            seed=_phase_seed(self.seed, self.restart_id, self.phase),
        )
        self.phase += 1
        traj = optimizer.spsa_minimize(
            objective, self.x, cfg, monitor, device_id=device.id, iter_start=offset
        )
        self.records.extend(traj.records)
        if traj.records:
            self.x = traj.records[-1].params
        self.executions[device.id] = (
            self.executions.get(device.id, 0) + optimizer.evaluation_count(traj)
        )
        converged = traj.status is TrajectoryStatus.RUNNING
        self.stopped_by_monitor = converged
        return converged

    def probe(self, device: DeviceProfile) -> float:
        self.executions[device.id] = self.executions.get(device.id, 0) + 1
        return self.task.evaluate(self.x, device.noise).entropy

    def advance_gate(self, current: DeviceProfile, nxt: DeviceProfile):
        """Probe the next tier; stay for extra relaxed windows while entropy
        does not drop, bounded for liveness."""
        stays = 0
        while self.remaining > 0:
            probe_entropy = self.probe(nxt)
            if should_advance_tier(
                self.records[-1].entropy, probe_entropy, self.conv.tol_entropy
            ):
                return
            if stays >= _MAX_STAYS_PER_TIER:
                return
            stays += 1
            self.run_phase(
                current,
                min(self.conv.relaxed_window, self.remaining),
                self.conv.relaxed_window,
            )

    def finish(self, status: TrajectoryStatus) -> RestartRecord:
        traj = Trajectory(records=self.records, status=status)
        return RestartRecord(
            restart_id=self.restart_id,
            trajectory=traj,
            final_expectation=min(r.expectation for r in self.records),
            status=status,
            executions_per_device=dict(self.executions),
        )


def run_multirestart(
    task: VqaTask,
    fleet: list[DeviceProfile],
    num_restarts: int,
    spsa_config: SpsaConfig,
    conv_config: ConvergenceConfig | None = None,
    seed: int = 0,
    *,
    threshold: float = 0.1,
    checkpoint_fraction: float = 0.4,
    prune: bool = True,
) -> MultiRestartResult:
    """Multi-restart optimization across a fidelity-tiered fleet.

    Single-tier fleets degenerate to independent strict-convergence runs with
    pruning disabled (there is no cheaper device to evaluate restarts on).
    """
    if num_restarts < 1:
        raise ValidationError("num_restarts must be >= 1")
    conv = conv_config or ConvergenceConfig()
    plan = TierPlan(
        tiers=tuple(filter_devices(task.stats(), fleet, threshold)),
        checkpoint_fraction=checkpoint_fraction,
    )
    tiers = plan.tiers
    rng = np.random.default_rng(seed)
    x0s = rng.uniform(-math.pi, math.pi, size=(num_restarts, task.num_params))

    runners = [
        _RestartRunner(task, i, x0s[i], spsa_config, conv, seed)
        for i in range(num_restarts)
    ]

    if len(tiers) == 1:
        per_restart = []
        for runner in runners:
            converged = runner.run_phase(
                tiers[0], runner.remaining, conv.strict_window
            )
            status = (
                TrajectoryStatus.CONVERGED_STRICT
                if converged
                else TrajectoryStatus.BUDGET_EXHAUSTED
            )
            per_restart.append(runner.finish(status))
        return _aggregate(per_restart)

    checkpoint_iters = max(1, math.floor(checkpoint_fraction * spsa_config.max_iters))
    for runner in runners:
        runner.run_phase(
            tiers[0], min(checkpoint_iters, runner.remaining), conv.relaxed_window
        )

    if prune:
        # rank restarts by their best visited expectation, matching how a
        # restart's final quality is reported; the last iterate oscillates
        # and blurs the cluster structure the gap rule looks for
        promoted = set(
            prune_restarts(
                [
                    (r.restart_id, min(rec.expectation for rec in r.records))
                    for r in runners
                ]
            )
        )
    else:
        promoted = {r.restart_id for r in runners}

    per_restart: list[RestartRecord] = []
    for runner in runners:
        if runner.restart_id not in promoted:
            per_restart.append(runner.finish(TrajectoryStatus.PRUNED))
            continue
        status = TrajectoryStatus.BUDGET_EXHAUSTED
        for tier_idx in range(1, len(tiers)):
            current, nxt = tiers[tier_idx - 1], tiers[tier_idx]
            runner.advance_gate(current, nxt)
            if runner.remaining <= 0:
                break
            final_tier = tier_idx == len(tiers) - 1
            window = conv.strict_window if final_tier else conv.relaxed_window
            converged = runner.run_phase(nxt, runner.remaining, window)
            if final_tier and converged:
                status = TrajectoryStatus.CONVERGED_STRICT
        per_restart.append(runner.finish(status))
    per_restart.sort(key=lambda r: r.restart_id)
    return _aggregate(per_restart)


def _aggregate(per_restart: list[RestartRecord]) -> MultiRestartResult:
    totals: dict[str, int] = {}
    for r in per_restart:
        for dev, count in r.executions_per_device.items():
            totals[dev] = totals.get(dev, 0) + count
    finals = [
        r.final_expectation
        for r in per_restart
        if r.status is not TrajectoryStatus.PRUNED
    ]
    return MultiRestartResult(
        per_restart=per_restart,
        best_expectation=min(finals),
        executions_per_device=totals,
    )


def run_single_restart(
    task: VqaTask,
    fleet: list[DeviceProfile],
    spsa_config: SpsaConfig,
    conv_config: ConvergenceConfig | None = None,
    seed: int = 0,
    *,
    threshold: float = 0.1,
    checkpoint_fraction: float = 0.4,
) -> RestartRecord:
    """One restart through the tier ladder, with pruning disabled."""
    result = run_multirestart(
        task,
        fleet,
        1,
        spsa_config,
        conv_config,
        seed,
        threshold=threshold,
        checkpoint_fraction=checkpoint_fraction,
        prune=False,
    )
    return result.per_restart[0]
