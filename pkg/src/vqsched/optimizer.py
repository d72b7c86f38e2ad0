"""SPSA minimizer with per-iteration monitoring hooks.

Each iteration costs exactly three objective evaluations: two gradient
probes at x_k +/- c_k*Delta_k and one monitor evaluation at the updated,
unperturbed point.  The monitor sees the trajectory so far and can stop the
run or redirect subsequent evaluations to a different device.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .qsim import ValidationError
from .vqa import EvaluationResult


class TrajectoryStatus(enum.Enum):
    RUNNING = "running"
    CONVERGED_RELAXED = "converged_relaxed"
    CONVERGED_STRICT = "converged_strict"
    PRUNED = "pruned"
    BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class SpsaConfig:
    a: float = 0.2
    c: float = 0.1
    alpha: float = 0.602
    gamma_gain: float = 0.101
    A: float | None = None  # defaults to 0.1 * max_iters
    max_iters: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.a <= 0 or self.c <= 0:
            raise ValidationError("gains a and c must be positive")
        if not (0 < self.gamma_gain < self.alpha <= 1):
            raise ValidationError("need 0 < gamma_gain < alpha <= 1")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")

    @property
    def stability(self) -> float:
        return 0.1 * self.max_iters if self.A is None else self.A


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    params: np.ndarray
    expectation: float
    entropy: float
    device_id: str


@dataclass
class Trajectory:
    records: list[IterationRecord] = field(default_factory=list)
    status: TrajectoryStatus = TrajectoryStatus.RUNNING

    @property
    def final_params(self) -> np.ndarray:
        return self.records[-1].params

    def best_expectation(self) -> float:
        return min(r.expectation for r in self.records)


class MonitorVerdictKind(enum.Enum):
    CONTINUE = "continue"
    STOP = "stop"
    SWITCH_DEVICE = "switch_device"


@dataclass(frozen=True)
class MonitorVerdict:
    kind: MonitorVerdictKind
    device_id: str | None = None


CONTINUE = MonitorVerdict(MonitorVerdictKind.CONTINUE)
STOP = MonitorVerdict(MonitorVerdictKind.STOP)


def switch_device(device_id: str) -> MonitorVerdict:
    return MonitorVerdict(MonitorVerdictKind.SWITCH_DEVICE, device_id)


class NumericalError(RuntimeError):
    """Objective returned a non-finite value; carries the trajectory so far."""

    def __init__(self, message: str, trajectory: Trajectory):
        super().__init__(message)
        self.trajectory = trajectory


def spsa_minimize(objective, x0, config: SpsaConfig, monitor=None,
                  device_id: str = "default", iter_start: int = 0) -> Trajectory:
    """Minimize objective(params, device_id) -> EvaluationResult via SPSA.

    The gain schedule is a_k = a/(k+1+A)^alpha, c_k = c/(k+1)^gamma_gain with
    Rademacher perturbations drawn from a generator seeded by config.seed.
    `iter_start` offsets both the record numbering and the gain-schedule
    index, so a resumed trajectory continues the decaying schedule instead
    of restarting it (restarting re-introduces large steps at a converged
    point and throws away late-stage refinement).
    """
    x = np.asarray(x0, dtype=float).copy()
    rng = np.random.default_rng(config.seed)
    traj = Trajectory()
    a0, c0, big_a = config.a, config.c, config.stability

    def evaluate(params) -> EvaluationResult:
        result = objective(params, device_id)
        if not np.isfinite(result.expectation):
            traj.status = TrajectoryStatus.RUNNING
            raise NumericalError(
                f"objective returned {result.expectation}", traj
            )
        return result

    for k in range(config.max_iters):
        kg = iter_start + k
        a_k = a0 / (kg + 1 + big_a) ** config.alpha
        c_k = c0 / (kg + 1) ** config.gamma_gain
        delta = rng.integers(0, 2, size=x.shape) * 2 - 1
        f_plus = evaluate(x + c_k * delta)
        f_minus = evaluate(x - c_k * delta)
        grad = (f_plus.expectation - f_minus.expectation) / (2.0 * c_k) * delta
        x = x - a_k * grad
        probe = evaluate(x)
        traj.records.append(
            IterationRecord(
                iter=iter_start + k,
                params=x.copy(),
                expectation=probe.expectation,
                entropy=probe.entropy,
                device_id=device_id,
            )
        )
        if monitor is not None:
            verdict = monitor(traj)
            if verdict.kind is MonitorVerdictKind.STOP:
                return traj
            if verdict.kind is MonitorVerdictKind.SWITCH_DEVICE:
                device_id = verdict.device_id
    traj.status = TrajectoryStatus.BUDGET_EXHAUSTED
    return traj


def evaluation_count(trajectory: Trajectory) -> int:
    """Circuit executions consumed: 3 per completed iteration."""
    return 3 * len(trajectory.records)


def evaluations_per_device(trajectory: Trajectory) -> dict[str, int]:
    """Execution counts attributed to the device that ran each iteration."""
    counts: dict[str, int] = {}
    for r in trajectory.records:
        counts[r.device_id] = counts.get(r.device_id, 0) + 3
    return counts
