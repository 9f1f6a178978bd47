"""Circuit builders for the three encoding families.

Each builder turns one manipulated feature vector into a :class:`Circuit`.
Builders are pure: identical (config, features, seed) give an identical
gate list. Optional per-feature angle multipliers support data reloading,
where the tiled second copy of every feature is encoded with a scaled
rotation factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, EncodingError
from .statevec import Circuit

FAMILIES = ("separate_entangled", "heisenberg", "repeated_pauli")
ENTANGLEMENTS = ("linear", "pairwise", "circular", "full")

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FeatureMapConfig:
    family: str
    n_qubits: int
    blocks: int = 1
    density: int = 1
    entanglement: str = "pairwise"
    alpha: float = 0.1
    paulis: tuple[str, ...] = ("Y", "X", "Z")
    u3_seed: int = 0
    reload: bool = False
    reload_alpha_factor: float = 2.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"feature_map.family: unknown family {self.family!r}")
        if self.entanglement not in ENTANGLEMENTS:
            raise ConfigError(
                f"feature_map.entanglement: unknown pattern {self.entanglement!r}"
            )
        if self.n_qubits < 1:
            raise ConfigError("feature_map.n_qubits: must be >= 1")
        if self.family == "heisenberg" and self.n_qubits < 2:
            raise ConfigError("feature_map.n_qubits: heisenberg needs >= 2 qubits")
        if self.alpha <= 0:
            raise ConfigError("feature_map.alpha: must be > 0")
        if self.blocks < 1:
            raise ConfigError("feature_map.blocks: must be >= 1")
        if self.density < 1:
            raise ConfigError("feature_map.density: must be >= 1")
        if not self.paulis:
            raise ConfigError("feature_map.paulis: must not be empty")
        for p in self.paulis:
            if not p or any(ch not in "XYZ" for ch in p):
                raise ConfigError(f"feature_map.paulis: bad operator string {p!r}")
            if self.family == "repeated_pauli" and len(p) > 2:
                raise ConfigError("feature_map.paulis: repeated_pauli supports 1- and 2-qubit strings")
            if self.family == "separate_entangled" and len(p) != 1:
                raise ConfigError("feature_map.paulis: separate_entangled takes single axes")

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "n_qubits": self.n_qubits,
            "blocks": self.blocks,
            "density": self.density,
            "entanglement": self.entanglement,
            "alpha": self.alpha,
            "paulis": list(self.paulis),
            "u3_seed": self.u3_seed,
            "reload": self.reload,
            "reload_alpha_factor": self.reload_alpha_factor,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureMapConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"feature_map: unknown fields {sorted(extra)}")
        if "family" not in d or "n_qubits" not in d:
            raise ConfigError("feature_map: family and n_qubits are required")
        kwargs = dict(d)
        if "paulis" in kwargs:
            kwargs["paulis"] = tuple(kwargs["paulis"])
        return cls(**kwargs)


@dataclass(frozen=True)
class U3AngleBank:
    """Frozen per-experiment random U3 angles, one (theta, phi, lambda)
    triple per qubit. Deterministic in (seed, n_qubits) so the map stays
    fixed across every optimizer iteration."""

    n_qubits: int
    seed: int
    angles: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        object.__setattr__(self, "angles", rng.uniform(0.0, TWO_PI, size=(self.n_qubits, 3)))


def capacity(cfg: FeatureMapConfig) -> int | None:
    """Maximum feature count; None when blocks repeat until exhaustion."""
    if cfg.family == "separate_entangled":
        return cfg.blocks * cfg.density * cfg.n_qubits
    return None


def entanglement_pairs(pattern: str, n_qubits: int, layer_parity: str = "even"):
    """Qubit pairs receiving two-qubit gates for one sublayer.

    ``layer_parity`` only matters for the pairwise pattern, whose brickwork
    alternates (0,1),(2,3),... with (1,2),(3,4),...
    """
    if n_qubits < 2:
        return []
    if pattern == "linear":
        return [(i, i + 1) for i in range(n_qubits - 1)]
    if pattern == "pairwise":
        start = 0 if layer_parity == "even" else 1
        return [(i, i + 1) for i in range(start, n_qubits - 1, 2)]
    if pattern == "circular":
        pairs = [(i, i + 1) for i in range(n_qubits - 1)]
        closing = (n_qubits - 1, 0)
        # degenerate 2-qubit ring: the closing pair duplicates (0, 1)
        if frozenset(closing) not in {frozenset(p) for p in pairs}:
            pairs.append(closing)
        return pairs
    if pattern == "full":
        return [(i, j) for i in range(n_qubits) for j in range(i + 1, n_qubits)]
    raise ConfigError(f"unknown entanglement pattern {pattern!r}")


def entanglement_layer(pattern: str, n_qubits: int):
    """All pairs of one entanglement layer. For pairwise this is the even
    sublayer followed by the odd one, as drawn in the pattern examples."""
    if pattern == "pairwise":
        return entanglement_pairs(pattern, n_qubits, "even") + entanglement_pairs(
            pattern, n_qubits, "odd"
        )
    return entanglement_pairs(pattern, n_qubits, "even")


def _effective(x, multipliers):
    x = np.asarray(x, dtype=float)
    if multipliers is None:
        return x
    multipliers = np.asarray(multipliers, dtype=float)
    if multipliers.shape != x.shape:
        raise EncodingError(
            f"multipliers length {multipliers.shape} does not match features {x.shape}"
        )
    return x * multipliers


_SE_ROTATION = {"X": "RX", "Y": "RY", "Z": "RZ"}


def build_separate_entangled(cfg: FeatureMapConfig, x, multipliers=None) -> Circuit:
    """Per block: ``density`` rotation layers assigning features round-robin
    across qubits (axis cycling through cfg.paulis per layer, angle
    alpha * x_i), with a CX entanglement layer between consecutive
    feature-carrying blocks.
    """
    if cfg.family != "separate_entangled":
        raise EncodingError(f"config family is {cfg.family}, not separate_entangled")
    e = _effective(x, multipliers)
    cap = capacity(cfg)
    if len(e) > cap:
        raise EncodingError(f"{len(e)} features exceed capacity {cap} "
                            f"(blocks={cfg.blocks} density={cfg.density} n={cfg.n_qubits})")
    circ = Circuit(cfg.n_qubits)
    pairs = entanglement_layer(cfg.entanglement, cfg.n_qubits)
    k = 0
    for b in range(cfg.blocks):
        if k >= len(e):
            break
        if b > 0:
            for (a, t) in pairs:
                circ.cx(a, t)
        for layer in range(cfg.density):
            axis = cfg.paulis[layer % len(cfg.paulis)]
            for q in range(cfg.n_qubits):
                if k < len(e):
                    circ.add(_SE_ROTATION[axis], (q,), (cfg.alpha * e[k],))
                    k += 1
    return circ


def _brickwork_stream(n_qubits: int):
    """Endless pair sequence: even sublayer, odd sublayer, repeating."""
    parity = 0
    while True:
        pairs = entanglement_pairs("pairwise", n_qubits, "even" if parity == 0 else "odd")
        yield from pairs
        parity ^= 1


def build_heisenberg(cfg: FeatureMapConfig, x, bank: U3AngleBank, multipliers=None) -> Circuit:
    """Random U3 on every qubit, then one RZZ/RYY/RXX triple per feature on
    pairs taken in brickwork order, sweeping until the features run out."""
    if cfg.family != "heisenberg":
        raise EncodingError(f"config family is {cfg.family}, not heisenberg")
    if bank.n_qubits != cfg.n_qubits:
        raise EncodingError("U3 angle bank size does not match the register")
    e = _effective(x, multipliers)
    circ = Circuit(cfg.n_qubits)
    for q in range(cfg.n_qubits):
        theta, phi, lam = bank.angles[q]
        circ.u3(q, theta, phi, lam)
    stream = _brickwork_stream(cfg.n_qubits)
    for value in e:
        qa, qb = next(stream)
        angle = cfg.alpha * value
        circ.rzz(qa, qb, angle)
        circ.ryy(qa, qb, angle)
        circ.rxx(qa, qb, angle)
    return circ


_RP_PRE = {"X": ("H", ()), "Y": ("RX", (math.pi / 2,)), "Z": None}
_RP_POST = {"X": ("H", ()), "Y": ("RX", (-math.pi / 2,)), "Z": None}


def build_repeated_pauli(cfg: FeatureMapConfig, x, multipliers=None) -> Circuit:
    """Pauli feature map blocks repeated over n_qubits-sized feature chunks.

    Each block: H layer, then per Pauli string either per-qubit phases
    P(alpha * x_i) inside the string's basis sandwich, or per entanglement
    pair CX / P(alpha * x_i * x_j) / CX. All encoded pair products must land
    in [0, 2pi).
    """
    if cfg.family != "repeated_pauli":
        raise EncodingError(f"config family is {cfg.family}, not repeated_pauli")
    e = _effective(x, multipliers)
    n = cfg.n_qubits
    circ = Circuit(n)
    pairs = entanglement_layer(cfg.entanglement, n)
    for start in range(0, len(e), n):
        chunk = e[start : start + n]
        m = len(chunk)
        for q in range(m):
            circ.h(q)
        for pstring in cfg.paulis:
            if len(pstring) == 1:
                op = pstring
                for q in range(m):
                    _sandwich_1q(circ, op, q, cfg.alpha * chunk[q])
            else:
                for (qa, qb) in pairs:
                    if qa >= m or qb >= m:
                        continue
                    angle = cfg.alpha * chunk[qa] * chunk[qb]
                    if not 0.0 <= angle < TWO_PI:
                        raise EncodingError(
                            f"pair angle alpha*x_i*x_j = {angle:.6g} outside [0, 2pi) "
                            f"for features ({chunk[qa]:.6g}, {chunk[qb]:.6g})"
                        )
                    # little-endian string: last char acts on the first qubit
                    op_a, op_b = pstring[1], pstring[0]
                    _basis(circ, _RP_PRE, op_a, qa)
                    _basis(circ, _RP_PRE, op_b, qb)
                    circ.cx(qa, qb)
                    circ.p(qb, angle)
                    circ.cx(qa, qb)
                    _basis(circ, _RP_POST, op_a, qa)
                    _basis(circ, _RP_POST, op_b, qb)
    return circ


def _sandwich_1q(circ, op, q, angle):
    _basis(circ, _RP_PRE, op, q)
    circ.p(q, angle)
    _basis(circ, _RP_POST, op, q)


def _basis(circ, table, op, q):
    entry = table[op]
    if entry is not None:
        kind, angles = entry
        circ.add(kind, (q,), angles)


def apply_data_reloading(x, cfg: FeatureMapConfig):
    """Tile the feature vector next to itself; the second copy carries the
    reload alpha multiplier. Returns (extended features, multipliers)."""
    if not cfg.reload:
        raise EncodingError("data reloading requested on a config with reload=False")
    x = np.asarray(x, dtype=float)
    extended = np.concatenate([x, x])
    multipliers = np.concatenate(
        [np.ones(len(x)), np.full(len(x), cfg.reload_alpha_factor)]
    )
    return extended, multipliers


def build_circuit(cfg: FeatureMapConfig, x, bank: U3AngleBank | None = None, multipliers=None) -> Circuit:
    """Dispatch to the family builder."""
    if cfg.family == "separate_entangled":
        return build_separate_entangled(cfg, x, multipliers)
    if cfg.family == "heisenberg":
        if bank is None:
            bank = U3AngleBank(cfg.n_qubits, cfg.u3_seed)
        return build_heisenberg(cfg, x, bank, multipliers)
    return build_repeated_pauli(cfg, x, multipliers)


def with_qubits(cfg: FeatureMapConfig, n_qubits: int) -> FeatureMapConfig:
    """Copy of the config at a different register size (qubit sweeps)."""
    return replace(cfg, n_qubits=n_qubits)
