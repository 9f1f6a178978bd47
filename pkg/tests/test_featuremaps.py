"""Feature-map builders: gate layouts, capacity accounting, determinism."""
import math

import numpy as np
import pytest

from qfeo.errors import ConfigError, EncodingError
from qfeo.featuremaps import (
    FeatureMapConfig,
    U3AngleBank,
    apply_data_reloading,
    build_circuit,
    build_heisenberg,
    build_repeated_pauli,
    build_separate_entangled,
    capacity,
    entanglement_layer,
    entanglement_pairs,
)
from qfeo.statevec import run_circuit


def se_config(**kw):
    base = dict(family="separate_entangled", n_qubits=2, blocks=2, density=3,
                entanglement="pairwise", alpha=0.1, paulis=("Y", "X", "Z"))
    base.update(kw)
    return FeatureMapConfig(**base)


def hh_config(**kw):
    base = dict(family="heisenberg", n_qubits=4, alpha=0.1)
    base.update(kw)
    return FeatureMapConfig(**base)


def rp_config(**kw):
    base = dict(family="repeated_pauli", n_qubits=2, alpha=0.1,
                entanglement="pairwise", paulis=("Y", "XZ"))
    base.update(kw)
    return FeatureMapConfig(**base)


class TestEntanglementPairs:
    def test_pairwise_even(self):
        assert entanglement_pairs("pairwise", 4, "even") == [(0, 1), (2, 3)]

    def test_pairwise_odd(self):
        assert entanglement_pairs("pairwise", 5, "odd") == [(1, 2), (3, 4)]

    def test_full(self):
        assert entanglement_pairs("full", 3) == [(0, 1), (0, 2), (1, 2)]

    def test_circular_degenerate_ring(self):
        assert entanglement_pairs("circular", 2) == [(0, 1)]

    def test_circular(self):
        assert entanglement_pairs("circular", 4) == [(0, 1), (1, 2), (2, 3), (3, 0)]

    def test_linear(self):
        assert entanglement_pairs("linear", 3) == [(0, 1), (1, 2)]

    def test_single_qubit_has_no_pairs(self):
        assert entanglement_pairs("pairwise", 1) == []

    def test_layer_combines_parities(self):
        assert entanglement_layer("pairwise", 4) == [(0, 1), (2, 3), (1, 2)]


class TestSeparateEntangled:
    def test_figure_layout_12_features(self):
        """Two qubits, 12 features: three rotation layers per block with the
        axis cycling Y, X, Z and features dealt round-robin, one CX between
        the two blocks."""
        x = np.arange(1.0, 13.0)
        circ = build_separate_entangled(se_config(), x)
        got = [(g.kind, g.qubits, g.angles) for g in circ.gates]
        a = 0.1
        want = [
            ("RY", (0,), (a * 1,)), ("RY", (1,), (a * 2,)),
            ("RX", (0,), (a * 3,)), ("RX", (1,), (a * 4,)),
            ("RZ", (0,), (a * 5,)), ("RZ", (1,), (a * 6,)),
            ("CX", (0, 1), ()),
            ("RY", (0,), (a * 7,)), ("RY", (1,), (a * 8,)),
            ("RX", (0,), (a * 9,)), ("RX", (1,), (a * 10,)),
            ("RZ", (0,), (a * 11,)), ("RZ", (1,), (a * 12,)),
        ]
        assert [(k, q) for k, q, _ in got] == [(k, q) for k, q, _ in want]
        for (_, _, ga), (_, _, wa) in zip(got, want):
            assert ga == pytest.approx(wa)

    def test_all_zero_features_give_computational_basis(self):
        circ = build_separate_entangled(se_config(), np.zeros(12))
        state = run_circuit(circ)
        from qfeo.statevec import pauli_expectation

        for q in range(2):
            assert pauli_expectation(state, q, "Z") == pytest.approx(1.0, abs=1e-12)

    def test_capacity_guard(self):
        cfg = se_config()
        assert capacity(cfg) == 12
        with pytest.raises(EncodingError):
            build_separate_entangled(cfg, np.ones(13))

    def test_depth_shrinks_with_fewer_features(self):
        """Unused slots are skipped, not zero-padded; a block with no
        features emits no entanglement layer."""
        cfg = se_config()
        circ = build_separate_entangled(cfg, np.ones(4))
        kinds = [g.kind for g in circ.gates]
        assert "CX" not in kinds
        assert len(kinds) == 4

    def test_feature_gate_count_matches_len_x(self):
        cfg = se_config(n_qubits=3, blocks=4, density=2)
        for p in (0, 1, 5, 11, 24):
            circ = build_separate_entangled(cfg, np.ones(p))
            rotations = [g for g in circ.gates if g.kind in ("RX", "RY", "RZ")]
            assert len(rotations) == p

    def test_full_entanglement_layer(self):
        cfg = se_config(n_qubits=3, blocks=2, density=1, entanglement="full")
        circ = build_separate_entangled(cfg, np.ones(6))
        cxs = [g.qubits for g in circ.gates if g.kind == "CX"]
        assert cxs == [(0, 1), (0, 2), (1, 2)]

    def test_single_qubit_register_allowed(self):
        cfg = se_config(n_qubits=1, blocks=1, density=1, paulis=("Y",))
        circ = build_separate_entangled(cfg, np.array([0.7]))
        assert [(g.kind, g.qubits) for g in circ.gates] == [("RY", (0,))]


class TestHeisenberg:
    def test_brickwork_pair_order(self):
        """Four features on four qubits take pairs in brickwork order:
        (0,1), (2,3), (1,2), then wrapping back to (0,1)."""
        bank = U3AngleBank(4, 0)
        circ = build_heisenberg(hh_config(), np.array([1.0, 2.0, 3.0, 4.0]), bank)
        triples = [g for g in circ.gates if g.kind in ("RZZ", "RYY", "RXX")]
        pair_seq = [triples[i].qubits for i in range(0, len(triples), 3)]
        assert pair_seq == [(0, 1), (2, 3), (1, 2), (0, 1)]
        # every feature contributes the RZZ, RYY, RXX triple in that order
        assert [g.kind for g in triples[:3]] == ["RZZ", "RYY", "RXX"]
        assert triples[0].angles == pytest.approx((0.1,))
        assert triples[9].angles == pytest.approx((0.4,))

    def test_empty_features_is_u3_layer_only(self):
        bank = U3AngleBank(4, 0)
        circ = build_heisenberg(hh_config(), np.array([]), bank)
        assert [g.kind for g in circ.gates] == ["U3"] * 4

    def test_u3_bank_determinism(self):
        cfg = hh_config()
        x = np.array([0.5, 1.5])
        c1 = build_heisenberg(cfg, x, U3AngleBank(4, 123))
        c2 = build_heisenberg(cfg, x, U3AngleBank(4, 123))
        assert [(g.kind, g.qubits, g.angles) for g in c1.gates] == [
            (g.kind, g.qubits, g.angles) for g in c2.gates
        ]
        c3 = build_heisenberg(cfg, x, U3AngleBank(4, 124))
        assert [g.angles for g in c3.gates[:4]] != [g.angles for g in c1.gates[:4]]

    def test_two_qubit_register_reuses_single_pair(self):
        cfg = hh_config(n_qubits=2)
        circ = build_heisenberg(cfg, np.array([1.0, 2.0]), U3AngleBank(2, 0))
        pairs = [g.qubits for g in circ.gates if g.kind == "RZZ"]
        assert pairs == [(0, 1), (0, 1)]

    def test_one_qubit_rejected(self):
        with pytest.raises(ConfigError):
            hh_config(n_qubits=1)

    def test_feature_triple_count_matches_len_x(self):
        bank = U3AngleBank(4, 0)
        for p in (0, 1, 3, 7, 10):
            circ = build_heisenberg(hh_config(), np.full(p, 0.5), bank)
            assert sum(g.kind == "RZZ" for g in circ.gates) == p
            assert sum(g.kind == "RYY" for g in circ.gates) == p
            assert sum(g.kind == "RXX" for g in circ.gates) == p

    def test_permutation_sensitivity(self):
        """Different feature orderings almost always reach different states."""
        cfg = hh_config()
        bank = U3AngleBank(4, 7)
        rng = np.random.default_rng(11)
        sensitive = 0
        trials = 100
        for _ in range(trials):
            x = rng.uniform(0.3, 2.8, size=6)
            perm = rng.permutation(6)
            while np.array_equal(perm, np.arange(6)):
                perm = rng.permutation(6)
            s1 = run_circuit(build_heisenberg(cfg, x, bank)).amplitudes
            s2 = run_circuit(build_heisenberg(cfg, x[perm], bank)).amplitudes
            fidelity = abs(np.vdot(s1, s2)) ** 2
            if fidelity < 1 - 1e-6:
                sensitive += 1
        assert sensitive >= 95


class TestRepeatedPauli:
    def test_figure_block_structure(self):
        """[Y, XZ] on two qubits: H layer, RX(pi/2)-P-RX(-pi/2) sandwiches,
        then H-CX-P-CX-H on the pair; the second block repeats with x2, x3."""
        x = np.array([1.0, 2.0, 3.0, 4.0])
        circ = build_repeated_pauli(rp_config(), x)
        got = [(g.kind, g.qubits) for g in circ.gates]
        half = len(got) // 2
        block = [
            ("H", (0,)), ("H", (1,)),
            ("RX", (0,)), ("P", (0,)), ("RX", (0,)),
            ("RX", (1,)), ("P", (1,)), ("RX", (1,)),
            ("H", (1,)),
            ("CX", (0, 1)), ("P", (1,)), ("CX", (0, 1)),
            ("H", (1,)),
        ]
        assert got[:half] == block
        assert got[half:] == block
        # the pair phase of the second block carries alpha * x2 * x3
        pair_phases = [g for g in circ.gates if g.kind == "P" and g.qubits == (1,)]
        assert pair_phases[1].angles[0] == pytest.approx(0.1 * 1.0 * 2.0)
        assert pair_phases[3].angles[0] == pytest.approx(0.1 * 3.0 * 4.0)

    def test_rescaled_inputs_fit_range(self):
        x = np.full(4, 2.8)
        circ = build_repeated_pauli(rp_config(), x)
        assert circ.gates  # 0.1 * 2.8 * 2.8 = 0.784 < 2pi

    def test_range_guard(self):
        cfg = rp_config(alpha=1.0)
        with pytest.raises(EncodingError):
            build_repeated_pauli(cfg, np.array([2.8, 2.8]))  # 7.84 >= 2pi

    def test_feature_phase_count(self):
        for p in (1, 2, 3, 4, 7):
            circ = build_repeated_pauli(rp_config(n_qubits=2), np.full(p, 0.5))
            single_phases = [
                g for g in circ.gates
                if g.kind == "P" and g.angles[0] == pytest.approx(0.1 * 0.5)
            ]
            assert len(single_phases) == p

    def test_partial_block_skips_missing_pairs(self):
        circ = build_repeated_pauli(rp_config(), np.array([1.0, 2.0, 3.0]))
        cx_count = sum(g.kind == "CX" for g in circ.gates)
        assert cx_count == 2  # only the full first block has the pair term


class TestDataReloading:
    def test_paper_scale_example(self):
        cfg = hh_config(n_qubits=4, reload=True, reload_alpha_factor=2.0)
        x = np.arange(67.0)
        ext, mult = apply_data_reloading(x, cfg)
        assert len(ext) == 134
        np.testing.assert_array_equal(ext[:67], x)
        np.testing.assert_array_equal(ext[67:], x)
        np.testing.assert_array_equal(mult, [1.0] * 67 + [2.0] * 67)

    def test_single_feature(self):
        cfg = hh_config(reload=True)
        ext, mult = apply_data_reloading(np.array([0.4]), cfg)
        np.testing.assert_array_equal(ext, [0.4, 0.4])
        np.testing.assert_array_equal(mult, [1.0, 2.0])

    def test_neutral_factor_matches_plain_tiling(self):
        cfg = se_config(reload=True, reload_alpha_factor=1.0)
        x = np.array([0.5, 1.5, 2.5])
        ext, mult = apply_data_reloading(x, cfg)
        c1 = build_separate_entangled(cfg, ext, mult)
        c2 = build_separate_entangled(cfg, ext)
        assert [(g.kind, g.angles) for g in c1.gates] == [
            (g.kind, g.angles) for g in c2.gates
        ]

    def test_multiplier_scales_angles(self):
        cfg = se_config(reload=True)
        ext, mult = apply_data_reloading(np.array([1.0]), cfg)
        circ = build_separate_entangled(cfg, ext, mult)
        rot = [g for g in circ.gates if g.kind == "RY"]
        assert rot[0].angles[0] == pytest.approx(0.1)
        assert rot[1].angles[0] == pytest.approx(0.2)

    def test_requires_reload_flag(self):
        with pytest.raises(EncodingError):
            apply_data_reloading(np.ones(3), se_config())


class TestDeterminismAndDispatch:
    def test_bitwise_identical_gate_lists(self):
        for cfg in (se_config(), hh_config(), rp_config()):
            x = np.linspace(0.3, 2.8, 6)
            c1 = build_circuit(cfg, x)
            c2 = build_circuit(cfg, x)
            assert [(g.kind, g.qubits, g.angles) for g in c1.gates] == [
                (g.kind, g.qubits, g.angles) for g in c2.gates
            ]

    def test_family_mismatch_raises(self):
        with pytest.raises(EncodingError):
            build_separate_entangled(hh_config(), np.ones(2))
        with pytest.raises(EncodingError):
            build_repeated_pauli(se_config(), np.ones(2))

    def test_config_dict_round_trip(self):
        cfg = se_config(reload=True)
        assert FeatureMapConfig.from_dict(cfg.to_dict()) == cfg

    def test_config_rejects_unknown_fields(self):
        with pytest.raises(ConfigError):
            FeatureMapConfig.from_dict({"family": "heisenberg", "n_qubits": 4, "nope": 1})
