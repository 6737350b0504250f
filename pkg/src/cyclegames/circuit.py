"""Quantum-controlled circuit realization of the single-link switch.

Registers, in order: a control of dimension k, a target qubit, and k dummy
qubits D_0..D_{k-1}.  The circuit interleaves three gates:

  increment        control |i> -> |i+1 mod k>
  controlled swap  exchange the target with dummy D_c, c the control value
  party layer      apply party c's operation to the target, c the control

The layout is one party layer, an increment, a second party layer (the
activated link), then k-2 repetitions of {increment, controlled swap,
party layer, controlled swap}.  Every party acts exactly once no matter
which control state is prepared, so for each tuple of one Kraus operator
per party the whole circuit is a single linear branch; summing branches
over all Kraus choices evolves the joint density matrix and stays linear
in every party's Choi matrix.

Wire correspondence with the single-link switch process:
  preparation: P_c <- control, P_t <- target, P_Dj <- D_j
  readout:     F_t <- target, F_Dj <- D_j, and F_c <- control after one
               closing increment (the k-1 in-circuit increments leave the
               control at its predecessor value)
  effects:     a physical effect E on the outputs enters the process
               pairing as its transpose in the computational basis,
               matching the Choi convention of the probability rule.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .choi import ChoiMap, kraus_of_choi, random_cptp, random_density
from .labeled import LabeledOperator, ShapeError
from .processes import Process, sparse_switch


@dataclass(frozen=True)
class Gate:
    """One circuit step; party layers carry the k party operations."""

    kind: str
    maps: tuple = ()

    def __post_init__(self):
        if self.kind not in ("increment", "controlled_swap", "party_layer"):
            raise ValueError(f"unknown gate kind {self.kind!r}")


@dataclass
class CircuitState:
    """Joint state of (control, target, dummies) as a dense density matrix."""

    k: int
    rho: np.ndarray  # shape (k, M, k, M) with M = 2**(k+1)

    @property
    def register_dims(self) -> tuple:
        return (self.k, 2) + (2,) * self.k

    def trace(self) -> float:
        return float(np.einsum("cmcm->", self.rho).real)

    def matrix(self) -> np.ndarray:
        side = self.k * 2 ** (self.k + 1)
        return self.rho.reshape(side, side)

    def reduced(self, keep: tuple) -> np.ndarray:
        """Reduced density matrix on the named registers, in given order.

        Register names: "c" for the control, "t" for the target, "D0".. for
        the dummies.
        """
        names = ["c", "t"] + [f"D{j}" for j in range(self.k)]
        for name in keep:
            if name not in names:
                raise ValueError(f"unknown register {name!r}")
        dims = self.register_dims
        tens = self.rho.reshape(*dims, *dims)
        n = len(dims)
        positions = [names.index(name) for name in keep]
        dropped = [p for p in range(n) if p not in positions]
        # trace from the back so earlier axis positions stay valid
        for offset, p in enumerate(sorted(dropped, reverse=True)):
            tens = np.trace(tens, axis1=p, axis2=p + n - offset)
        remaining = [p for p in range(n) if p in positions]
        order = [remaining.index(p) for p in positions]
        half = len(remaining)
        tens = np.transpose(tens, order + [half + o for o in order])
        d = int(np.prod([dims[p] for p in positions])) if positions else 1
        return tens.reshape(d, d)


def _swap_stack(k: int) -> np.ndarray:
    """Per-control permutation matrices exchanging target and dummy c."""
    m = 2 ** (k + 1)
    stack = np.zeros((k, m, m), dtype=complex)
    for c in range(k):
        for idx in range(m):
            t = idx >> k
            dummies = idx & ((1 << k) - 1)
            bit = (dummies >> (k - 1 - c)) & 1
            new_dummies = dummies & ~(1 << (k - 1 - c)) | (t << (k - 1 - c))
            new_idx = (bit << k) | new_dummies
            stack[c, new_idx, idx] = 1.0
    return stack


def _party_layer_stack(k: int, kraus_pick: list) -> np.ndarray:
    """Per-control operators K_c (x) identity on the dummies."""
    m = 2 ** (k + 1)
    eye_d = np.eye(2 ** k, dtype=complex)
    stack = np.zeros((k, m, m), dtype=complex)
    for c in range(k):
        stack[c] = np.kron(kraus_pick[c], eye_d)
    return stack


def _apply_sector_stack(rho: np.ndarray, stack: np.ndarray) -> np.ndarray:
    # G rho G-dagger for control-block-diagonal G given per sector,
    # contracted pairwise to keep the intermediate small.
    tmp = np.einsum("cpm,cmCn->cpCn", stack, rho)
    return np.einsum("cpCn,Cqn->cpCq", tmp, stack.conj())


def _apply_increment(rho: np.ndarray) -> np.ndarray:
    return np.roll(np.roll(rho, 1, axis=0), 1, axis=2)


def build_sqs_circuit(k: int, party_maps) -> list:
    """Gate sequence for the single-link switch on k parties."""
    if k < 2:
        raise ShapeError(f"need at least two parties, got {k}")
    party_maps = tuple(party_maps)
    if len(party_maps) != k:
        raise ShapeError(f"need {k} party maps, got {len(party_maps)}")
    for cmap in party_maps:
        if cmap.in_dim != 2 or cmap.out_dim != 2:
            raise ShapeError("party maps must take one qubit to one qubit")
    layer = Gate("party_layer", party_maps)
    gates = [layer, Gate("increment"), layer]
    for _ in range(k - 2):
        gates += [
            Gate("increment"),
            Gate("controlled_swap"),
            layer,
            Gate("controlled_swap"),
        ]
    return gates


def run_circuit(
    k: int,
    control_prep: np.ndarray,
    target_prep: np.ndarray,
    dummy_preps,
    party_maps,
) -> CircuitState:
    """Evolve the joint preparation through the circuit.

    Preparations are density matrices per register.  Party maps may be CP
    without being TP, in which case the output trace is the acceptance
    probability of the branch.
    """
    dummy_preps = list(dummy_preps)
    if len(dummy_preps) != k:
        raise ShapeError(f"need {k} dummy preparations, got {len(dummy_preps)}")
    gates = build_sqs_circuit(k, party_maps)
    m = 2 ** (k + 1)
    joint = np.asarray(control_prep, dtype=complex)
    for prep in [target_prep] + dummy_preps:
        joint = np.kron(joint, np.asarray(prep, dtype=complex))
    rho_in = joint.reshape(k, m, k, m)

    kraus_lists = [kraus_of_choi(cmap) for cmap in party_maps]
    swap = _swap_stack(k)
    total = np.zeros_like(rho_in)
    for combo in itertools.product(*[range(len(ks)) for ks in kraus_lists]):
        layer = _party_layer_stack(
            k, [kraus_lists[c][combo[c]] for c in range(k)]
        )
        rho = rho_in
        for gate in gates:
            if gate.kind == "increment":
                rho = _apply_increment(rho)
            elif gate.kind == "controlled_swap":
                rho = _apply_sector_stack(rho, swap)
            else:
                rho = _apply_sector_stack(rho, layer)
        total = total + rho
    return CircuitState(k=k, rho=total)


def _random_effect(rng: np.random.Generator, dim: int) -> np.ndarray:
    gauss = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    unitary, _ = np.linalg.qr(gauss)
    return unitary @ np.diag(rng.uniform(0.0, 1.0, dim)) @ unitary.conj().T


def _readout_probability(state: CircuitState, effects: list) -> float:
    """Tr(rho' E) after the closing increment, E a product over registers."""
    rho = _apply_increment(state.rho)
    k = state.k
    m = 2 ** (k + 1)
    eff = effects[0]
    for e in effects[1:]:
        eff = np.kron(eff, e)
    return float(np.einsum("ab,ba->", rho.reshape(k * m, k * m), eff).real)


def _process_probability(
    process: Process,
    control_prep,
    target_prep,
    dummy_preps,
    party_maps,
    effects,
    dummy_wiring=None,
) -> float:
    """Pair the switch process with the same trial data.

    dummy_wiring optionally reroutes effect j to dummy wire dummy_wiring[j]
    (used to prove the check notices miswired registers).
    """
    k = process.parties
    wiring = dummy_wiring or list(range(k))
    prep = LabeledOperator.from_dense((process.subsystem("P_c"),), control_prep)
    prep = prep.tensor(
        LabeledOperator.from_dense((process.subsystem("P_t"),), target_prep)
    )
    for j in range(k):
        prep = prep.tensor(
            LabeledOperator.from_dense((process.subsystem(f"P_D{j}"),), dummy_preps[j])
        )
    ops = [prep]
    for i in range(k):
        ops.append(
            party_maps[i].matrix.rename(
                {"I": process.party_in[i], "O": process.party_out[i]}
            )
        )
    e_control, e_target = effects[0], effects[1]
    f_op = LabeledOperator.from_dense((process.subsystem("F_c"),), e_control.T)
    f_op = f_op.tensor(
        LabeledOperator.from_dense((process.subsystem("F_t"),), e_target.T)
    )
    for j in range(k):
        f_op = f_op.tensor(
            LabeledOperator.from_dense(
                (process.subsystem(f"F_D{wiring[j]}"),), effects[2 + j].T
            )
        )
    ops.append(f_op)
    val = process.pair(ops)
    if abs(val.imag) > 1e-8:
        raise ArithmeticError(f"probability came out complex: {val}")
    return float(val.real)


@dataclass(frozen=True)
class EquivalenceReport:
    k: int
    trials: int
    max_deviation: float
    passed: bool

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"circuit-equivalence[k={self.k}]: {status} "
            f"(max deviation {self.max_deviation:.3e} over {self.trials} trials)"
        )


def _trial_data(k: int, rng: np.random.Generator):
    control = random_density(k, rng)
    target = random_density(2, rng)
    dummies = [random_density(2, rng) for _ in range(k)]
    party_maps = []
    for i in range(k):
        cmap = random_cptp(2, 2, rng, kraus_rank=2)
        scale = rng.uniform(0.3, 1.0)
        scaled = LabeledOperator.from_dense(
            cmap.matrix.subsystems, scale * cmap.matrix.to_dense()
        )
        party_maps.append(ChoiMap(cmap.input_labels, cmap.output_labels, scaled, "CP"))
    effects = [_random_effect(rng, k), _random_effect(rng, 2)]
    effects += [_random_effect(rng, 2) for _ in range(k)]
    return control, target, dummies, party_maps, effects


def equivalence_check(
    k: int, trials: int = 50, seed: int = 0, dummy_wiring=None
) -> EquivalenceReport:
    """Compare circuit and process probabilities on random trial data.

    Each trial draws preparations for every register (superposed control
    states included), CP party maps, and a product effect over all
    outputs, then evaluates the readout probability both ways.
    """
    if k not in (2, 3, 4):
        raise ShapeError(f"equivalence check supports k in 2..4, got {k}")
    process = sparse_switch(k)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        control, target, dummies, party_maps, effects = _trial_data(k, rng)
        state = run_circuit(k, control, target, dummies, party_maps)
        p_circ = _readout_probability(state, effects)
        p_proc = _process_probability(
            process, control, target, dummies, party_maps, effects,
            dummy_wiring=dummy_wiring,
        )
        worst = max(worst, abs(p_circ - p_proc))
    return EquivalenceReport(
        k=k, trials=trials, max_deviation=worst, passed=worst <= 1e-9
    )
