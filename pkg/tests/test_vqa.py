"""Problem builders, expectations, entropy, ratios, and brute-force oracles."""

import math

import numpy as np
import pytest

from vqsched import qsim, vqa
from vqsched.qsim import NoiseModel, ValidationError
from vqsched.vqa import (
    DegenerateInstanceError,
    MaxCutProblem,
    PauliHamiltonian,
)

TRIANGLE = MaxCutProblem(n=3, edges=((0, 1), (1, 2), (0, 2)))


# ---------------------------------------------------------------------------
# erdos_renyi
# ---------------------------------------------------------------------------


def test_er_complete_at_p1():
    g = vqa.erdos_renyi(3, 1.0, seed=9)
    assert set(g.edges) == {(0, 1), (0, 2), (1, 2)}


def test_er_deterministic():
    assert vqa.erdos_renyi(7, 0.5, 3).edges == vqa.erdos_renyi(7, 0.5, 3).edges


def test_er_mean_edge_count():
    # Binomial(21, 0.5): mean 10.5, per-draw sd ~2.29; 1000-seed mean 3 sigma
    counts = [len(vqa.erdos_renyi(7, 0.5, s).edges) for s in range(1000)]
    sd_mean = math.sqrt(21 * 0.25) / math.sqrt(1000)
    assert abs(np.mean(counts) - 10.5) < 3 * sd_mean


def test_er_validation():
    with pytest.raises(ValidationError):
        vqa.erdos_renyi(1, 0.5, 0)
    with pytest.raises(ValidationError):
        vqa.erdos_renyi(5, 1.5, 0)


def test_maxcut_problem_validation():
    with pytest.raises(ValidationError):
        MaxCutProblem(n=3, edges=((0, 0),))
    with pytest.raises(ValidationError):
        MaxCutProblem(n=3, edges=((0, 3),))
    with pytest.raises(ValidationError):
        MaxCutProblem(n=3, edges=((0, 1), (1, 0)))


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def test_qaoa_gate_counts_triangle():
    c = vqa.build_qaoa(TRIANGLE, np.array([0.3, 0.7]), layers=1)
    s = qsim.circuit_stats(c)
    assert (s.g1, s.g2, s.m) == (6, 3, 3)  # 3 H + 3 RX, 3 RZZ


def test_qaoa_zero_params_uniform():
    c = vqa.build_qaoa(TRIANGLE, np.zeros(2), layers=1)
    d = qsim.simulate(c, NoiseModel.ideal())
    for p in d.probs.values():
        assert p == pytest.approx(1 / 8, abs=1e-12)


def test_qaoa_param_count():
    g = vqa.erdos_renyi(7, 0.5, 0)
    c = vqa.build_qaoa(g, np.zeros(6), layers=3)
    assert c.num_qubits == 7 and c.measure_all
    with pytest.raises(ValidationError):
        vqa.build_qaoa(g, np.zeros(5), layers=3)


def test_qaoa_emission_hand_count():
    # DERIVED: 1-layer emission rule on a 7-node graph, counted by hand
    g = vqa.erdos_renyi(7, 0.5, 0)
    c = vqa.build_qaoa(g, np.array([0.1, 0.2]), layers=1)
    kinds = [gg.kind for gg in c.gates]
    assert kinds[:7] == ["H"] * 7
    assert kinds[7:7 + len(g.edges)] == ["RZZ"] * len(g.edges)
    assert kinds[7 + len(g.edges):] == ["RX"] * 7
    # angle convention: RZZ(2*gamma), RX(2*beta)
    assert c.gates[7].angle == pytest.approx(0.2)
    assert c.gates[-1].angle == pytest.approx(0.4)


def test_twolocal_counts():
    c = vqa.build_twolocal(4, np.zeros(8), reps=1)
    s = qsim.circuit_stats(c)
    assert s.g2 == 3 and s.g1 == 8 and s.m == 0
    c1 = vqa.build_twolocal(1, np.zeros(2), reps=1)
    s1 = qsim.circuit_stats(c1)
    assert s1.g1 == 2 and s1.g2 == 0
    with pytest.raises(ValidationError):
        vqa.build_twolocal(4, np.zeros(8), reps=2)  # needs 12 params


# ---------------------------------------------------------------------------
# expectations / entropy / ratio
# ---------------------------------------------------------------------------


def dist(d):
    return qsim.OutcomeDistribution(d)


def test_maxcut_expectation_examples():
    edge = MaxCutProblem(n=2, edges=((0, 1),))
    assert vqa.maxcut_expectation(dist({"00": 1.0}), edge) == 0.0
    uniform = dist({b: 0.25 for b in ("00", "01", "10", "11")})
    assert vqa.maxcut_expectation(uniform, edge) == pytest.approx(-0.5)
    assert vqa.maxcut_expectation(dist({"010": 1.0}), TRIANGLE) == pytest.approx(-2.0)


def test_maxcut_expectation_bounds(rng):
    for _ in range(20):
        p = rng.dirichlet(np.ones(8))
        d = dist({format(i, "03b"): float(x) for i, x in enumerate(p)})
        e = vqa.maxcut_expectation(d, TRIANGLE)
        assert -len(TRIANGLE.edges) <= e <= 0.0
        assert vqa.brute_force_maxcut(TRIANGLE) <= e + 1e-12


def test_maxcut_width_mismatch():
    with pytest.raises(ValidationError):
        vqa.maxcut_expectation(dist({"00": 1.0}), TRIANGLE)


def test_cut_sizes_matches_cut_value():
    g = vqa.erdos_renyi(5, 0.6, 2)
    cuts = vqa.cut_sizes(g)
    for i in range(2**5):
        assert cuts[i] == g.cut_value(format(i, "05b"))


def test_pauli_expectation_examples():
    rho0 = np.array([[1, 0], [0, 0]], dtype=complex)
    assert vqa.pauli_expectation(rho0, PauliHamiltonian(((1.0, "Z"),))) == pytest.approx(1.0)
    assert vqa.pauli_expectation(rho0, PauliHamiltonian(((1.0, "X"),))) == pytest.approx(0.0)
    mixed = np.eye(4, dtype=complex) / 4.0
    traceless = PauliHamiltonian(((0.7, "ZX"), (-0.3, "XY"), (1.1, "ZZ")))
    assert vqa.pauli_expectation(mixed, traceless) == pytest.approx(0.0, abs=1e-12)


def test_pauli_expectation_linearity(rng):
    h1 = PauliHamiltonian(((0.5, "ZZ"), (0.2, "XI")))
    h2 = PauliHamiltonian(((-0.4, "YZ"), (1.0, "IZ")))
    combined = PauliHamiltonian(
        tuple((2.0 * c, s) for c, s in h1.terms)
        + tuple((-3.0 * c, s) for c, s in h2.terms)
    )
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    lhs = vqa.pauli_expectation(rho, combined)
    rhs = 2.0 * vqa.pauli_expectation(rho, h1) - 3.0 * vqa.pauli_expectation(rho, h2)
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_pauli_dimension_mismatch():
    with pytest.raises(ValidationError):
        vqa.pauli_expectation(np.eye(2, dtype=complex) / 2, PauliHamiltonian(((1.0, "ZZ"),)))


def test_entropy_examples():
    assert vqa.shannon_entropy(dist({"0": 1.0})) == 0.0
    u = dist({format(i, "03b"): 1 / 8 for i in range(8)})
    assert vqa.shannon_entropy(u) == pytest.approx(3.0)
    d3 = dist({"00": 0.5, "01": 0.25, "10": 0.25, "11": 0.0})
    assert vqa.shannon_entropy(d3) == pytest.approx(1.5)


def test_entropy_relabel_invariant():
    a = dist({"00": 0.5, "01": 0.3, "10": 0.2, "11": 0.0})
    b = dist({"11": 0.5, "10": 0.3, "00": 0.2, "01": 0.0})
    assert vqa.shannon_entropy(a) == pytest.approx(vqa.shannon_entropy(b))
    assert vqa.shannon_entropy(a) <= math.log2(3) + 1e-12


def test_entropy_bits_matches_dict_path(rng):
    p = rng.dirichlet(np.ones(16))
    d = dist({format(i, "04b"): float(x) for i, x in enumerate(p)})
    assert vqa.entropy_bits(np.asarray(p)) == pytest.approx(
        vqa.shannon_entropy(d), abs=1e-12
    )


def test_approximation_ratio():
    assert vqa.approximation_ratio(-6.89, -6.89) == pytest.approx(1.0)
    assert vqa.approximation_ratio(-3.445, -6.89) == pytest.approx(0.5)
    uniform = dist({format(i, "03b"): 1 / 8 for i in range(8)})
    e = vqa.maxcut_expectation(uniform, TRIANGLE)
    assert vqa.approximation_ratio(e, vqa.brute_force_maxcut(TRIANGLE)) == pytest.approx(0.75)
    with pytest.raises(DegenerateInstanceError):
        vqa.approximation_ratio(-1.0, 0.0)


# ---------------------------------------------------------------------------
# brute-force oracles
# ---------------------------------------------------------------------------


def test_brute_force_maxcut_examples():
    assert vqa.brute_force_maxcut(MaxCutProblem(2, ((0, 1),))) == -1.0
    assert vqa.brute_force_maxcut(TRIANGLE) == -2.0
    k4 = MaxCutProblem(4, tuple((u, v) for u in range(4) for v in range(u + 1, 4)))
    assert vqa.brute_force_maxcut(k4) == -4.0


def test_brute_force_maxcut_vs_enumeration():
    # independent oracle: python-level enumeration with cut_value
    g = vqa.erdos_renyi(6, 0.5, 11)
    best = max(g.cut_value(format(i, "06b")) for i in range(2**6))
    assert vqa.brute_force_maxcut(g) == -best


def test_brute_force_eigenmin_examples():
    assert vqa.brute_force_eigenmin(PauliHamiltonian(((1.0, "Z"),))) == pytest.approx(-1.0)
    assert vqa.brute_force_eigenmin(PauliHamiltonian(((1.0, "X"),))) == pytest.approx(-1.0)
    # 0.5 ZZ + 0.5 XI: 2x2 blocks [[±0.5, 0.5], [0.5, ∓0.5]] -> min -1/sqrt(2)
    h = PauliHamiltonian(((0.5, "ZZ"), (0.5, "XI")))
    assert vqa.brute_force_eigenmin(h) == pytest.approx(-1.0 / math.sqrt(2.0))


def test_capacity_errors():
    from vqsched.qsim import CapacityError

    big = MaxCutProblem(25, ((0, 1),))
    with pytest.raises(CapacityError):
        vqa.brute_force_maxcut(big)
    h = PauliHamiltonian(((1.0, "Z" * 11),))
    with pytest.raises(CapacityError):
        vqa.brute_force_eigenmin(h)


def test_hamiltonian_validation():
    with pytest.raises(ValidationError):
        PauliHamiltonian(())
    with pytest.raises(ValidationError):
        PauliHamiltonian(((1.0, "ZZ"), (1.0, "Z")))
    with pytest.raises(ValidationError):
        PauliHamiltonian(((1.0, "ZQ"),))
    with pytest.raises(ValidationError):
        PauliHamiltonian(((float("inf"), "Z"),))
