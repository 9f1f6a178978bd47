"""Simulator correctness against dense-matrix oracles and analytic values."""
import math

import numpy as np
import pytest

from qfeo.errors import CapacityError
from qfeo.statevec import (
    BACKEND,
    Circuit,
    Gate,
    all_pauli_expectations,
    apply_gate,
    pauli_expectation,
    run_circuit,
    zero_state,
)

from oracles import expectation_oracle, random_gate, statevector_oracle


class TestZeroState:
    def test_two_qubits(self):
        s = zero_state(2)
        np.testing.assert_array_equal(s.amplitudes, [1, 0, 0, 0])

    def test_one_qubit(self):
        np.testing.assert_array_equal(zero_state(1).amplitudes, [1, 0])

    def test_capacity_guard(self):
        with pytest.raises(CapacityError):
            zero_state(25)
        with pytest.raises(CapacityError):
            zero_state(0)


class TestGateValidation:
    def test_angle_count_mismatch(self):
        with pytest.raises(ValueError):
            Gate("RY", (0,), ())
        with pytest.raises(ValueError):
            Gate("U3", (0,), (0.1,))
        with pytest.raises(ValueError):
            Gate("H", (0,), (0.3,))

    def test_duplicate_qubits(self):
        with pytest.raises(ValueError):
            Gate("CX", (1, 1))

    def test_out_of_range_qubit(self):
        s = zero_state(2)
        with pytest.raises(IndexError):
            apply_gate(s, Gate("RY", (2,), (0.1,)))


class TestSingleGates:
    def test_ry_half_pi(self):
        s = apply_gate(zero_state(1), Gate("RY", (0,), (math.pi / 2,)))
        np.testing.assert_allclose(s.amplitudes, [0.70710678, 0.70710678], atol=1e-8)

    def test_cx_truth_table(self):
        # |01> (qubit 0 set) -> |11>
        s = zero_state(2)
        s.amplitudes[:] = [0, 1, 0, 0]
        apply_gate(s, Gate("CX", (0, 1)))
        np.testing.assert_array_equal(s.amplitudes, [0, 0, 0, 1])
        # control clear leaves the state alone
        s.amplitudes[:] = [0, 0, 1, 0]  # |10>, qubit 1 set
        apply_gate(s, Gate("CX", (0, 1)))
        np.testing.assert_array_equal(s.amplitudes, [0, 0, 1, 0])

    def test_rzz_on_00_is_phase_only(self):
        s = apply_gate(zero_state(2), Gate("RZZ", (0, 1), (1.3,)))
        assert abs(s.amplitudes[0] - np.exp(-0.65j)) < 1e-12
        np.testing.assert_allclose(np.abs(s.amplitudes), [1, 0, 0, 0], atol=1e-12)

    def test_rotations_at_zero_are_identity(self):
        rng = np.random.default_rng(7)
        for kind in ("RX", "RY", "RZ"):
            amps = rng.normal(size=8) + 1j * rng.normal(size=8)
            amps /= np.linalg.norm(amps)
            s = zero_state(3)
            s.amplitudes[:] = amps
            apply_gate(s, Gate(kind, (1,), (0.0,)))
            np.testing.assert_allclose(s.amplitudes, amps, atol=1e-14)


class TestRunCircuit:
    def test_empty_circuit(self):
        s = run_circuit(Circuit(3))
        np.testing.assert_array_equal(s.amplitudes, zero_state(3).amplitudes)

    def test_hadamard(self):
        s = run_circuit(Circuit(1).h(0))
        np.testing.assert_allclose(s.amplitudes, [0.70710678, 0.70710678], atol=1e-8)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(1234)
        for _ in range(60):
            n = int(rng.integers(1, 4))
            gates = [random_gate(rng, n) for _ in range(int(rng.integers(1, 11)))]
            circ = Circuit(n)
            for kind, qubits, angles in gates:
                circ.add(kind, qubits, angles)
            got = run_circuit(circ).amplitudes
            want = statevector_oracle(n, gates)
            assert np.max(np.abs(got - want)) < 1e-10


class TestExpectations:
    def test_ry_bloch_formula(self):
        theta = 0.7
        s = run_circuit(Circuit(1).ry(0, theta))
        assert abs(pauli_expectation(s, 0, "Z") - 0.76484219) < 1e-8
        assert abs(pauli_expectation(s, 0, "X") - 0.64421769) < 1e-8
        assert abs(pauli_expectation(s, 0, "Y")) < 1e-12

    def test_zero_state_axes(self):
        s = zero_state(3)
        for q in range(3):
            assert pauli_expectation(s, q, "Z") == pytest.approx(1.0, abs=1e-12)
            assert pauli_expectation(s, q, "X") == pytest.approx(0.0, abs=1e-12)
            assert pauli_expectation(s, q, "Y") == pytest.approx(0.0, abs=1e-12)

    def test_bell_state_is_maximally_mixed_per_qubit(self):
        s = run_circuit(Circuit(2).h(0).cx(0, 1))
        for axis in "XYZ":
            assert abs(pauli_expectation(s, 0, axis)) < 1e-12

    def test_expectation_leaves_state_unchanged(self):
        s = run_circuit(Circuit(2).ry(0, 1.1).rx(1, 0.4).cx(0, 1))
        before = s.amplitudes.copy()
        for q in range(2):
            for axis in "XYZ":
                pauli_expectation(s, q, axis)
        np.testing.assert_allclose(s.amplitudes, before, atol=1e-14)

    def test_against_dense_oracle(self):
        rng = np.random.default_rng(99)
        for _ in range(25):
            n = int(rng.integers(1, 4))
            gates = [random_gate(rng, n) for _ in range(8)]
            circ = Circuit(n)
            for kind, qubits, angles in gates:
                circ.add(kind, qubits, angles)
            s = run_circuit(circ)
            q = int(rng.integers(n))
            for axis in "XYZ":
                want = expectation_oracle(n, gates, q, axis)
                got = pauli_expectation(s, q, axis)
                assert abs(got - want) < 1e-10

    def test_bad_axis_and_index(self):
        s = zero_state(2)
        with pytest.raises(IndexError):
            pauli_expectation(s, 2, "Z")
        with pytest.raises(ValueError):
            pauli_expectation(s, 0, "W")

    def test_all_expectations_layout(self):
        s = run_circuit(Circuit(2).ry(0, 0.7))
        vals = all_pauli_expectations(s)
        assert vals.shape == (6,)
        assert vals[0] == pytest.approx(math.sin(0.7), abs=1e-12)
        assert vals[2] == pytest.approx(math.cos(0.7), abs=1e-12)
        assert vals[5] == pytest.approx(1.0, abs=1e-12)


class TestInvariants:
    def test_norm_preserved_over_random_circuits(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            n = int(rng.integers(1, 7))
            circ = Circuit(n)
            for _ in range(int(rng.integers(1, 51))):
                kind, qubits, angles = random_gate(rng, n)
                circ.add(kind, qubits, angles)
            s = run_circuit(circ)
            assert abs(s.norm() - 1.0) < 1e-9

    def test_expectation_bounds(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            n = int(rng.integers(1, 5))
            circ = Circuit(n)
            for _ in range(15):
                kind, qubits, angles = random_gate(rng, n)
                circ.add(kind, qubits, angles)
            s = run_circuit(circ)
            vals = all_pauli_expectations(s)
            assert np.all(vals >= -1 - 1e-12)
            assert np.all(vals <= 1 + 1e-12)


class TestBackends:
    """The numpy fallback must agree with whichever backend is active."""

    def test_backend_reported(self):
        assert BACKEND in ("cython", "numpy")

    def test_numpy_fallback_agrees(self):
        from qfeo import _statevec_np as npk

        rng = np.random.default_rng(2024)
        for _ in range(40):
            n = int(rng.integers(1, 5))
            gates = [random_gate(rng, n) for _ in range(12)]
            circ = Circuit(n)
            for kind, qubits, angles in gates:
                circ.add(kind, qubits, angles)
            fast = run_circuit(circ).amplitudes

            slow = np.zeros(2**n, dtype=np.complex128)
            slow[0] = 1.0
            from qfeo.statevec import matrix_1q

            for kind, qubits, angles in gates:
                if len(qubits) == 1:
                    m = matrix_1q(kind, angles)
                    npk.apply_1q(slow, qubits[0], m[0, 0], m[0, 1], m[1, 0], m[1, 1])
                elif kind == "CX":
                    npk.apply_cx(slow, *qubits)
                elif kind == "CP":
                    npk.apply_2q_diag(slow, *qubits, 1.0, 1.0, 1.0, np.exp(1j * angles[0]))
                elif kind == "RZZ":
                    e = np.exp(-0.5j * angles[0])
                    npk.apply_2q_diag(slow, *qubits, e, e.conjugate(), e.conjugate(), e)
                elif kind == "RXX":
                    c, s = math.cos(angles[0] / 2), math.sin(angles[0] / 2)
                    npk.apply_2q_anti(slow, *qubits, c, -1j * s, -1j * s)
                elif kind == "RYY":
                    c, s = math.cos(angles[0] / 2), math.sin(angles[0] / 2)
                    npk.apply_2q_anti(slow, *qubits, c, 1j * s, -1j * s)
            assert np.max(np.abs(fast - slow)) < 1e-12
