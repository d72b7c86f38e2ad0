"""Problem definitions and measurement post-processing for max-cut and VQE.

Sign convention: max-cut energies are negative cut sizes, so every problem
here is a minimization and approximation ratios stay in (0, 1] for noisy
runs against a brute-force ground truth.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .qsim import (
    CapacityError,
    Circuit,
    Gate,
    OutcomeDistribution,
    ValidationError,
)

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class DegenerateInstanceError(ValueError):
    """Raised when a ground-truth value of zero makes a ratio undefined."""


@dataclass(frozen=True)
class EvaluationResult:
    """One objective evaluation: expectation, output entropy in bits, and
    the distribution they came from (None for analytic objectives)."""

    expectation: float
    entropy: float = 0.0
    distribution: OutcomeDistribution | None = None


@dataclass(frozen=True)
class MaxCutProblem:
    n: int
    edges: tuple[tuple[int, int], ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "edges", tuple(tuple(sorted(e)) for e in self.edges)
        )
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValidationError(f"self-loop on node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValidationError(f"edge ({u},{v}) out of range")
            if (u, v) in seen:
                raise ValidationError(f"duplicate edge ({u},{v})")
            seen.add((u, v))

    def cut_value(self, bits: str) -> int:
        return sum(1 for u, v in self.edges if bits[u] != bits[v])


@dataclass(frozen=True)
class PauliHamiltonian:
    terms: tuple[tuple[float, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((float(c), s) for c, s in self.terms))
        if not self.terms:
            raise ValidationError("Hamiltonian needs at least one term")
        n = len(self.terms[0][1])
        for c, s in self.terms:
            if len(s) != n:
                raise ValidationError("all Pauli strings must have the same length")
            if any(ch not in _PAULI for ch in s):
                raise ValidationError(f"invalid Pauli string {s!r}")
            if not math.isfinite(c):
                raise ValidationError("coefficients must be finite")

    @property
    def num_qubits(self) -> int:
        return len(self.terms[0][1])

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense matrix of the full Hamiltonian."""
        dim = 2**self.num_qubits
        h = np.zeros((dim, dim), dtype=complex)
        for coeff, s in self.terms:
            op = np.array([[1.0]], dtype=complex)
            for ch in s:
                op = np.kron(op, _PAULI[ch])
            h += coeff * op
        return h


def erdos_renyi(n: int, edge_prob: float, seed: int, max_retries: int = 100) -> MaxCutProblem:
    """Random graph with each pair included independently; retries if edgeless."""
    if n < 2:
        raise ValidationError("need at least 2 nodes")
    if not (0.0 <= edge_prob <= 1.0):
        raise ValidationError("edge_prob must be in [0,1]")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        edges = tuple(
            (u, v)
            for u, v in itertools.combinations(range(n), 2)
            if rng.random() < edge_prob
        )
        if edges:
            return MaxCutProblem(n=n, edges=edges, seed=seed)
    raise ValidationError(
        f"no edges after {max_retries} draws (n={n}, edge_prob={edge_prob})"
    )


def build_qaoa(problem: MaxCutProblem, params: np.ndarray, layers: int) -> Circuit:
    """Alternating-operator ansatz: H wall, then per layer RZZ(2*gamma) per edge
    and RX(2*beta) per qubit, with terminal measurement."""
    params = np.asarray(params, dtype=float)
    if layers < 1:
        raise ValidationError("layers must be >= 1")
    if params.shape != (2 * layers,):
        raise ValidationError(
            f"expected {2 * layers} parameters, got {params.shape}"
        )
    gates = [Gate("H", (q,)) for q in range(problem.n)]
    for k in range(layers):
        gamma, beta = params[2 * k], params[2 * k + 1]
        for u, v in problem.edges:
            gates.append(Gate("RZZ", (u, v), angle=2.0 * gamma))
        for q in range(problem.n):
            gates.append(Gate("RX", (q,), angle=2.0 * beta))
    return Circuit(num_qubits=problem.n, gates=gates, measure_all=True)


def build_twolocal(n: int, params: np.ndarray, reps: int) -> Circuit:
    """Hardware-efficient ansatz: RY rotation layers alternating with
    linear-chain CX entanglers, ending on a rotation layer.  No measurement;
    expectations are taken from the state directly."""
    params = np.asarray(params, dtype=float)
    if reps < 1:
        raise ValidationError("reps must be >= 1")
    if params.shape != (n * (reps + 1),):
        raise ValidationError(
            f"expected {n * (reps + 1)} parameters, got {params.shape}"
        )
    gates = []
    idx = 0
    for r in range(reps + 1):
        for q in range(n):
            gates.append(Gate("RY", (q,), angle=float(params[idx])))
            idx += 1
        if r < reps:
            for q in range(n - 1):
                gates.append(Gate("CX", (q, q + 1)))
    return Circuit(num_qubits=n, gates=gates, measure_all=False)


def cut_sizes(problem: MaxCutProblem) -> np.ndarray:
    """Cut size of every bitstring, indexed by the integer value of the
    string (qubit 0 as the most significant bit)."""
    idx = np.arange(2**problem.n, dtype=np.int64)
    cuts = np.zeros_like(idx)
    for u, v in problem.edges:
        bu = (idx >> (problem.n - 1 - u)) & 1
        bv = (idx >> (problem.n - 1 - v)) & 1
        cuts += bu ^ bv
    return cuts


def entropy_bits(probs: np.ndarray) -> float:
    """Shannon entropy of a probability vector, in bits."""
    p = probs[probs > 0.0]
    return float(-(p * np.log2(p)).sum())


def maxcut_expectation(dist: OutcomeDistribution, problem: MaxCutProblem) -> float:
    """Negative expected cut size under the distribution."""
    if dist.num_bits != problem.n:
        raise ValidationError(
            f"distribution over {dist.num_bits} bits, problem has {problem.n} nodes"
        )
    return -sum(p * problem.cut_value(bits) for bits, p in dist.probs.items())


def pauli_expectation(rho: np.ndarray, hamiltonian: PauliHamiltonian) -> float:
    """Tr(rho H), exact from the density matrix."""
    h = hamiltonian.matrix
    if rho.shape != h.shape:
        raise ValidationError(
            f"density matrix {rho.shape} does not match Hamiltonian {h.shape}"
        )
    val = np.einsum("ij,ji->", rho, h)
    return float(np.real(val))


def shannon_entropy(dist: OutcomeDistribution) -> float:
    """-sum p log2 p in bits, with 0 log 0 = 0."""
    return float(-sum(p * math.log2(p) for p in dist.probs.values() if p > 0.0))


def approximation_ratio(e_optimized: float, e_ground_truth: float) -> float:
    if e_ground_truth == 0.0:
        raise DegenerateInstanceError("ground-truth expectation is zero")
    return e_optimized / e_ground_truth


def brute_force_maxcut(problem: MaxCutProblem) -> float:
    """-max cut over all bitstrings; the ground-truth oracle for max-cut."""
    if problem.n > 24:
        raise CapacityError("brute force capped at 24 nodes")
    return -float(cut_sizes(problem).max())


def brute_force_eigenmin(hamiltonian: PauliHamiltonian) -> float:
    """Minimum eigenvalue of the dense Hamiltonian."""
    if hamiltonian.num_qubits > 10:
        raise CapacityError("dense eigensolver capped at 10 qubits")
    return float(np.linalg.eigvalsh(hamiltonian.matrix)[0])
