"""Exact density-matrix simulation of small circuits under depolarizing noise.

The simulator evolves the full density matrix from |0...0>, applying each
gate's unitary followed by a depolarizing channel on the acted qubits, and
finally convolving the computational-basis diagonal with a per-qubit
symmetric readout bit-flip matrix.  Everything is deterministic: noise is
modeled as exact channels, not sampled trajectories.

Bitstring convention: character i of an outcome string is the value of
qubit i (qubit 0 is the leftmost character).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_QUBITS = 14

GATE_KINDS_1Q = ("H", "RX", "RY", "RZ")
GATE_KINDS_2Q = ("CX", "RZZ")
PARAMETRIC_KINDS = ("RX", "RY", "RZ", "RZZ")

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_CX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


class ValidationError(ValueError):
    """Raised when a circuit, gate, noise model, or distribution is invalid."""


class CapacityError(ValueError):
    """Raised when a circuit exceeds the simulator's qubit capacity."""


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if self.kind in GATE_KINDS_1Q:
            if len(self.qubits) != 1:
                raise ValidationError(f"{self.kind} takes exactly 1 qubit")
        elif self.kind in GATE_KINDS_2Q:
            if len(self.qubits) != 2:
                raise ValidationError(f"{self.kind} takes exactly 2 qubits")
        else:
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValidationError("gate qubits must be distinct")
        if self.kind in PARAMETRIC_KINDS:
            if self.angle is None:
                raise ValidationError(f"{self.kind} requires an angle")
        elif self.angle is not None:
            raise ValidationError(f"{self.kind} takes no angle")

    def matrix(self) -> np.ndarray:
        """Unitary of this gate, shaped (2,2) or (4,4)."""
        if self.kind == "H":
            return _H
        if self.kind == "CX":
            return _CX
        t = self.angle / 2.0
        c, s = math.cos(t), math.sin(t)
        if self.kind == "RX":
            return np.array([[c, -1j * s], [-1j * s, c]])
        if self.kind == "RY":
            return np.array([[c, -s], [s, c]], dtype=complex)
        if self.kind == "RZ":
            return np.array([[np.exp(-1j * t), 0], [0, np.exp(1j * t)]])
        # RZZ(theta) = exp(-i theta/2 Z(x)Z)
        return np.diag(
            [np.exp(-1j * t), np.exp(1j * t), np.exp(1j * t), np.exp(-1j * t)]
        )


@dataclass
class Circuit:
    num_qubits: int
    gates: list[Gate] = field(default_factory=list)
    measure_all: bool = False

    def validate(self):
        if self.num_qubits < 1:
            raise ValidationError("num_qubits must be positive")
        if self.num_qubits > MAX_QUBITS:
            raise CapacityError(
                f"{self.num_qubits} qubits exceeds capacity of {MAX_QUBITS}"
            )
        for g in self.gates:
            if any(q < 0 or q >= self.num_qubits for q in g.qubits):
                raise ValidationError(
                    f"gate {g.kind} on {g.qubits} out of range for "
                    f"{self.num_qubits}-qubit circuit"
                )


@dataclass(frozen=True)
class CircuitStats:
    depth: int
    g1: int
    g2: int
    m: int


@dataclass(frozen=True)
class NoiseModel:
    p1: float = 0.0
    p2: float = 0.0
    readout: float = 0.0
    t_g1: float = 0.0
    t_g2: float = 0.0
    T1: float = 1.0
    T2: float = 1.0

    def validate(self):
        if not (0.0 <= self.p1 <= 1.0 and 0.0 <= self.p2 <= 1.0):
            raise ValidationError("depolarizing probabilities must be in [0,1]")
        if not (0.0 <= self.readout <= 0.5):
            raise ValidationError("readout error must be in [0, 0.5]")
        if self.t_g1 < 0 or self.t_g2 < 0:
            raise ValidationError("gate durations must be non-negative")
        if self.T1 <= 0 or self.T2 <= 0:
            raise ValidationError("coherence times must be positive")

    @classmethod
    def ideal(cls) -> "NoiseModel":
        return cls()


@dataclass
class OutcomeDistribution:
    probs: dict[str, float]

    def validate(self):
        total = 0.0
        for bits, p in self.probs.items():
            if p < -1e-12 or p > 1.0 + 1e-12:
                raise ValidationError(f"probability {p} out of range for {bits!r}")
            total += p
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"probabilities sum to {total}, not 1")

    @property
    def num_bits(self) -> int:
        return len(next(iter(self.probs)))


def circuit_stats(circuit: Circuit) -> CircuitStats:
    """Gate counts plus greedy-packed parallel layer depth."""
    circuit.validate()
    frontier = [0] * circuit.num_qubits  # deepest layer touching each qubit
    g1 = g2 = 0
    for g in circuit.gates:
        layer = 1 + max(frontier[q] for q in g.qubits)
        for q in g.qubits:
            frontier[q] = layer
        if len(g.qubits) == 1:
            g1 += 1
        else:
            g2 += 1
    depth = max(frontier) if circuit.gates else 0
    m = circuit.num_qubits if circuit.measure_all else 0
    return CircuitStats(depth=depth, g1=g1, g2=g2, m=m)


# Depolarizing mixers: (1-p)*vec(rho) + (p/2^k) * vec(I) Tr(rho), cached per
# (acted-qubit count, probability).
_depol_cache: dict[tuple[int, float], np.ndarray] = {}


def _depol_superop(k: int, p: float) -> np.ndarray:
    key = (k, p)
    mixer = _depol_cache.get(key)
    if mixer is None:
        dim = 2**k
        vec_id = np.eye(dim, dtype=complex).reshape(-1)
        mixer = (1.0 - p) * np.eye(dim * dim, dtype=complex)
        mixer += (p / dim) * np.outer(vec_id, vec_id)
        _depol_cache[key] = mixer
    return mixer


def _channel_superop(gate: Gate, p: float) -> np.ndarray:
    """Superoperator of the gate unitary followed by its depolarizing channel,
    acting on vec(rho) with row-major (ket, bra) index pairing."""
    u = gate.matrix()
    s = np.kron(u, u.conj())
    if p != 0.0:
        s = _depol_superop(len(gate.qubits), p) @ s
    return s


def _apply_channel(rho: np.ndarray, s: np.ndarray, qubits: tuple[int, ...], n: int):
    """Apply a k-qubit channel superoperator to the (2,)*2n rho tensor."""
    k = len(qubits)
    s_t = s.reshape((2,) * (4 * k))
    axes = qubits + tuple(n + q for q in qubits)
    rho = np.tensordot(s_t, rho, axes=(tuple(range(2 * k, 4 * k)), axes))
    return np.moveaxis(rho, range(2 * k), axes)


def _apply_diagonal_channel(
    rho: np.ndarray, diag: np.ndarray, p: float, qubits: tuple[int, ...], n: int
):
    """Fast path for a diagonal unitary (RZ/RZZ) plus depolarizing: phase the
    acted (ket, bra) block elementwise and mix the partial trace back in."""
    k = len(qubits)
    dim = 2**k
    axes = qubits + tuple(n + q for q in qubits)
    view = np.moveaxis(rho, axes, range(2 * k))
    phases = np.outer(diag, diag.conj()).reshape((2,) * (2 * k))
    # force C order so the block reshape below is a view, not a copy
    out = np.ascontiguousarray(
        phases.reshape(phases.shape + (1,) * (2 * n - 2 * k)) * view
    )
    if p != 0.0:
        flat = out.reshape((dim, dim) + out.shape[2 * k:])
        reduced = flat.trace(axis1=0, axis2=1)
        flat *= 1.0 - p
        for i in range(dim):
            flat[i, i] += (p / dim) * reduced
    return np.moveaxis(out, range(2 * k), axes)


_DIAGONAL_KINDS = ("RZ", "RZZ")


def simulate_density(circuit: Circuit, noise: NoiseModel) -> np.ndarray:
    """Final density matrix (2^n x 2^n), before any readout error."""
    circuit.validate()
    noise.validate()
    n = circuit.num_qubits
    dim = 2**n
    rho = np.zeros((2,) * (2 * n), dtype=complex)
    rho[(0,) * (2 * n)] = 1.0
    for g in circuit.gates:
        p = noise.p1 if len(g.qubits) == 1 else noise.p2
        if g.kind in _DIAGONAL_KINDS:
            rho = _apply_diagonal_channel(
                rho, np.diag(g.matrix()), p, g.qubits, n
            )
        else:
            rho = _apply_channel(rho, _channel_superop(g, p), g.qubits, n)
    return rho.reshape(dim, dim)


def apply_readout(probs: np.ndarray, readout: float, n: int) -> np.ndarray:
    """Convolve a 2^n probability vector with the per-qubit bit-flip matrix."""
    if readout == 0.0:
        return probs
    conf = np.array([[1.0 - readout, readout], [readout, 1.0 - readout]])
    t = probs.reshape((2,) * n)
    for q in range(n):
        t = np.tensordot(conf, t, axes=([1], [q]))
        t = np.moveaxis(t, 0, q)
    return t.reshape(-1)


def probabilities_from_density(rho: np.ndarray, noise: NoiseModel) -> np.ndarray:
    """2^n outcome-probability vector (basis-index order) with readout error."""
    dim = rho.shape[0]
    n = dim.bit_length() - 1
    probs = np.real(np.diag(rho)).clip(min=0.0)
    probs = probs / probs.sum()
    return apply_readout(probs, noise.readout, n)


def distribution_from_density(rho: np.ndarray, noise: NoiseModel) -> OutcomeDistribution:
    """Computational-basis distribution of rho with readout error applied."""
    n = rho.shape[0].bit_length() - 1
    probs = probabilities_from_density(rho, noise)
    out = {format(i, f"0{n}b"): float(p) for i, p in enumerate(probs)}
    return OutcomeDistribution(out)


def simulate(circuit: Circuit, noise: NoiseModel) -> OutcomeDistribution:
    """Run the circuit under the noise model and return the outcome distribution."""
    rho = simulate_density(circuit, noise)
    return distribution_from_density(rho, noise)


def sample(dist: OutcomeDistribution, shots: int, rng_seed: int) -> dict[str, int]:
    """Multinomial draw from a distribution; deterministic for a fixed seed."""
    if shots <= 0:
        raise ValidationError("shots must be positive")
    dist.validate()
    keys = sorted(dist.probs)
    p = np.array([dist.probs[k] for k in keys])
    p = p / p.sum()
    rng = np.random.default_rng(rng_seed)
    counts = rng.multinomial(shots, p)
    return {k: int(c) for k, c in zip(keys, counts) if c > 0}
