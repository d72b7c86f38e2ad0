"""Shared test helpers: an independent statevector oracle and circuit fuzzing.

The statevector simulator below is written from scratch against the textbook
gate definitions (its matrices are spelled out locally, not imported from the
package) so that agreement with the density-matrix simulator is a genuine
cross-check rather than a tautology.
"""

import math

import numpy as np
import pytest

from vqsched import qsim

# ---------------------------------------------------------------------------
# reference statevector simulation (independent oracle)
# ---------------------------------------------------------------------------

_SQ2 = 1.0 / math.sqrt(2.0)


def _ref_matrix(kind, angle):
    if kind == "H":
        return np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex)
    if kind == "RX":
        c, s = math.cos(angle / 2), math.sin(angle / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == "RY":
        c, s = math.cos(angle / 2), math.sin(angle / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "RZ":
        return np.array(
            [[np.exp(-1j * angle / 2), 0], [0, np.exp(1j * angle / 2)]],
            dtype=complex,
        )
    if kind == "CX":
        m = np.eye(4, dtype=complex)
        m[2, 2] = m[3, 3] = 0.0
        m[2, 3] = m[3, 2] = 1.0
        return m
    if kind == "RZZ":
        # exp(-i angle/2 Z(x)Z): phase per parity of the two bits
        return np.diag(
            [
                np.exp(-1j * angle / 2),
                np.exp(1j * angle / 2),
                np.exp(1j * angle / 2),
                np.exp(-1j * angle / 2),
            ]
        ).astype(complex)
    raise ValueError(kind)


def reference_statevector(circuit):
    """|psi> after the circuit, bit i of the index = qubit i (qubit 0 MSB)."""
    n = circuit.num_qubits
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    for g in circuit.gates:
        u = _ref_matrix(g.kind, g.angle)
        k = len(g.qubits)
        new = np.zeros_like(psi)
        # positions of the acted bits, counted from the MSB
        shifts = [n - 1 - q for q in g.qubits]
        for idx in range(2**n):
            src_bits = 0
            for b, sh in enumerate(shifts):
                src_bits = (src_bits << 1) | ((idx >> sh) & 1)
            base = idx
            for sh in shifts:
                base &= ~(1 << sh)
            amp = 0.0
            for col in range(2**k):
                if u[src_bits, col] == 0.0:
                    continue
                other = base
                for b, sh in enumerate(shifts):
                    if (col >> (k - 1 - b)) & 1:
                        other |= 1 << sh
                amp += u[src_bits, col] * psi[other]
            new[idx] = amp
        psi = new
    return psi


def reference_probabilities(circuit):
    psi = reference_statevector(circuit)
    return np.abs(psi) ** 2


# ---------------------------------------------------------------------------
# random circuit generation
# ---------------------------------------------------------------------------


def random_circuit(rng, num_qubits, num_gates, measure_all=True):
    kinds = ["H", "RX", "RY", "RZ"]
    if num_qubits >= 2:
        kinds += ["CX", "RZZ"]
    gates = []
    for _ in range(num_gates):
        kind = kinds[rng.integers(len(kinds))]
        if kind in ("CX", "RZZ"):
            q = rng.choice(num_qubits, size=2, replace=False)
            qubits = (int(q[0]), int(q[1]))
        else:
            qubits = (int(rng.integers(num_qubits)),)
        angle = None
        if kind in ("RX", "RY", "RZ", "RZZ"):
            angle = float(rng.uniform(-2 * math.pi, 2 * math.pi))
        gates.append(qsim.Gate(kind, qubits, angle=angle))
    return qsim.Circuit(num_qubits, gates, measure_all=measure_all)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
