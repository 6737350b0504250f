"""The built-in process families, stored as sums of rank-one terms.

A process connects a preparing party P (global past), k playing parties
with qubit input/output wires, and a discarding party F (global future).
Each family is represented as a weighted sum of rank-one vectors; the full
process operator W = sum_i w_i |v_i><v_i| is never materialized, since the
wide switch variants live in global dimensions in the hundreds of
thousands.  Probabilities come from pairing the terms with Choi matrices,
one operator per wire group.

Permutation indexing convention: control value i < k selects the i-th
cyclic shift of the party order (party i first), and for the full switches
the remaining k!-k permutations follow in lexicographic order.  This makes
the basis-state control preparations activate the communication link from
party s to its cyclic successor for every family alike.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .choi import discard, party_input, party_output, random_cptp, random_density
from .labeled import (
    LabelError,
    LabeledOperator,
    LabeledVector,
    SubsystemLabel,
    basis_vector,
    contract,
    max_entangled,
    tensor,
    vector_sum,
)


class SizeError(ValueError):
    """Requested party count outside a family's supported range."""


P_CONTROL = "P_c"
P_TARGET = "P_t"
F_CONTROL = "F_c"
F_TARGET = "F_t"


@dataclass(frozen=True)
class Permutation:
    """Order of the playing parties: position j is visited by order[j]."""

    order: tuple

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(i) for i in self.order))
        if sorted(self.order) != list(range(len(self.order))):
            raise ValueError(f"{self.order} is not a permutation")

    def __len__(self):
        return len(self.order)

    def __getitem__(self, j):
        return self.order[j]

    @classmethod
    def cyclic(cls, k: int, shift: int) -> "Permutation":
        return cls(tuple((shift + j) % k for j in range(k)))


def switch_permutations(k: int) -> list:
    """Control ordering for the full switches: cyclic shifts, then the rest
    lexicographically."""
    cyclic = [Permutation.cyclic(k, i) for i in range(k)]
    cyclic_set = {p.order for p in cyclic}
    rest = [
        Permutation(p)
        for p in itertools.permutations(range(k))
        if p not in cyclic_set
    ]
    return cyclic + rest


@dataclass(frozen=True)
class Process:
    """A process as a weighted sum of rank-one labeled vectors.

    terms holds (weight, vector) pairs; all vectors share one canonical
    subsystem order.  The label metadata records which subsystems belong to
    P's output, each party's input/output, and F's input, plus the control
    pair when the family has one.
    """

    name: str
    parties: int
    terms: tuple
    p_labels: tuple
    f_labels: tuple
    party_in: tuple
    party_out: tuple
    control: tuple | None = None

    def __post_init__(self):
        for weight, _ in self.terms:
            if weight < 0:
                raise ValueError("term weights must be non-negative")

    @property
    def subsystems(self) -> tuple:
        return self.terms[0][1].subsystems

    def subsystem(self, name: str) -> SubsystemLabel:
        for sub in self.subsystems:
            if sub.name == name:
                return sub
        raise LabelError(f"process has no subsystem {name!r}")

    def control_dim(self) -> int:
        if self.control is None:
            raise LabelError(f"process {self.name!r} has no control subsystem")
        return self.subsystem(self.control[0]).dim

    def term_count(self) -> int:
        return len(self.terms)

    def amplitude_count(self) -> int:
        return sum(vec.term_count() for _, vec in self.terms)

    def pair(self, ops: Sequence[LabeledOperator]) -> complex:
        """Tr(W . tensor of ops) summed over the rank-one terms."""
        return sum(w * contract(vec, ops) for w, vec in self.terms)


def perm_wire(pi: Permutation) -> LabeledVector:
    """Wiring vector routing P's target through the parties in order pi.

    A chain of unnormalized maximally entangled pairs: P_t to the first
    party's input, each output to the next input, the last output to F_t.
    """
    k = len(pi)
    pieces = [max_entangled(SubsystemLabel(P_TARGET, 2), party_input(pi[0]))]
    for j in range(k - 1):
        pieces.append(max_entangled(party_output(pi[j]), party_input(pi[j + 1])))
    pieces.append(max_entangled(party_output(pi[k - 1]), SubsystemLabel(F_TARGET, 2)))
    wire = pieces[0]
    for piece in pieces[1:]:
        wire = tensor(wire, piece)
    return wire


def _switch_canonical_names(k: int, dummies: bool = False) -> list:
    names = [P_CONTROL, P_TARGET]
    if dummies:
        names += [f"P_D{j}" for j in range(k)]
    for i in range(k):
        names += [party_input(i).name, party_output(i).name]
    names += [F_TARGET]
    if dummies:
        names += [f"F_D{j}" for j in range(k)]
    names += [F_CONTROL]
    return names


def _controlled_wire_term(i: int, control_dim: int, wire: LabeledVector, canonical) -> LabeledVector:
    term = tensor(
        basis_vector([SubsystemLabel(P_CONTROL, control_dim)], (i,)),
        tensor(wire, basis_vector([SubsystemLabel(F_CONTROL, control_dim)], (i,))),
    )
    return term.permute(canonical)


def _switch_metadata(k: int, dummies: bool = False) -> dict:
    p_labels = [P_CONTROL, P_TARGET] + ([f"P_D{j}" for j in range(k)] if dummies else [])
    f_labels = [F_TARGET] + ([f"F_D{j}" for j in range(k)] if dummies else []) + [F_CONTROL]
    return dict(
        parties=k,
        p_labels=tuple(p_labels),
        f_labels=tuple(f_labels),
        party_in=tuple(party_input(i).name for i in range(k)),
        party_out=tuple(party_output(i).name for i in range(k)),
        control=(P_CONTROL, F_CONTROL),
    )


def classical_switch(k: int) -> Process:
    """Classically controlled switch: one term per party permutation."""
    if not 2 <= k <= 5:
        raise SizeError(f"classical switch supports 2 <= k <= 5, got {k}")
    perms = switch_permutations(k)
    canonical = _switch_canonical_names(k)
    terms = tuple(
        (1.0, _controlled_wire_term(i, len(perms), perm_wire(pi), canonical))
        for i, pi in enumerate(perms)
    )
    return Process(name="classical_switch", terms=terms, **_switch_metadata(k))


def quantum_switch(k: int) -> Process:
    """Coherently controlled switch: a single rank-one term over all
    permutations."""
    if not 2 <= k <= 5:
        raise SizeError(f"quantum switch supports 2 <= k <= 5, got {k}")
    perms = switch_permutations(k)
    canonical = _switch_canonical_names(k)
    branches = [
        _controlled_wire_term(i, len(perms), perm_wire(pi), canonical)
        for i, pi in enumerate(perms)
    ]
    return Process(
        name="quantum_switch",
        terms=((1.0, vector_sum(branches)),),
        **_switch_metadata(k),
    )


def cyclic_switch(k: int) -> Process:
    """Coherent switch restricted to the k cyclic party orders."""
    if not 2 <= k <= 6:
        raise SizeError(f"cyclic switch supports 2 <= k <= 6, got {k}")
    canonical = _switch_canonical_names(k)
    branches = [
        _controlled_wire_term(i, k, perm_wire(Permutation.cyclic(k, i)), canonical)
        for i in range(k)
    ]
    return Process(
        name="cyclic_switch",
        terms=((1.0, vector_sum(branches)),),
        **_switch_metadata(k),
    )


def sparse_switch(k: int) -> Process:
    """Switch activating a single link from the selected party to its cyclic
    successor.

    Control value i wires P_t through party i and then party i+1 to F_t.
    Every other party receives its own dummy qubit (routed P_Dj -> I_j and
    O_j -> F_Dj), while the dummies of the two linked parties bypass them
    and run straight from P to F.
    """
    if not 2 <= k <= 6:
        raise SizeError(f"sparse switch supports 2 <= k <= 6, got {k}")
    canonical = _switch_canonical_names(k, dummies=True)
    branches = []
    for i in range(k):
        nxt = (i + 1) % k
        pieces = [
            max_entangled(SubsystemLabel(P_TARGET, 2), party_input(i)),
            max_entangled(party_output(i), party_input(nxt)),
            max_entangled(party_output(nxt), SubsystemLabel(F_TARGET, 2)),
            max_entangled(SubsystemLabel(f"P_D{i}", 2), SubsystemLabel(f"F_D{i}", 2)),
            max_entangled(SubsystemLabel(f"P_D{nxt}", 2), SubsystemLabel(f"F_D{nxt}", 2)),
        ]
        for j in range(k):
            if j in (i, nxt):
                continue
            pieces.append(max_entangled(SubsystemLabel(f"P_D{j}", 2), party_input(j)))
            pieces.append(max_entangled(party_output(j), SubsystemLabel(f"F_D{j}", 2)))
        wire = pieces[0]
        for piece in pieces[1:]:
            wire = tensor(wire, piece)
        branches.append(_controlled_wire_term(i, k, wire, canonical))
    return Process(
        name="sparse_switch",
        terms=((1.0, vector_sum(branches)),),
        **_switch_metadata(k, dummies=True),
    )


def w3_process() -> Process:
    """Three-party process beyond causal order, defined by boolean relations.

    P emits three qubits H_0 H_1 H_2 and F receives three qubits F_0 F_1 F_2
    carrying the party outputs.  Party m's input is the matching P qubit
    XORed with a NOT-AND of the other two parties' outputs, cyclically.
    """
    p_labs = tuple(SubsystemLabel(f"H_{i}", 2) for i in range(3))
    f_labs = tuple(SubsystemLabel(f"F_{i}", 2) for i in range(3))
    subs = (
        *p_labs,
        party_input(0), party_output(0),
        party_input(1), party_output(1),
        party_input(2), party_output(2),
        *f_labs,
    )
    amps = {}
    for i, j, k, l, m, n in itertools.product(range(2), repeat=6):
        a_in = i ^ ((1 - m) & n)
        b_in = j ^ ((1 - n) & l)
        c_in = k ^ ((1 - l) & m)
        amps[(i, j, k, a_in, l, b_in, m, c_in, n, l, m, n)] = 1.0
    vec = LabeledVector(subs, amps)
    return Process(
        name="w3",
        parties=3,
        terms=((1.0, vec),),
        p_labels=tuple(s.name for s in p_labs),
        f_labels=tuple(s.name for s in f_labs),
        party_in=tuple(party_input(i).name for i in range(3)),
        party_out=tuple(party_output(i).name for i in range(3)),
        control=None,
    )


def dephase_control(process: Process) -> Process:
    """Split every term by control value, dropping control coherences.

    Idempotent; the result of dephasing the coherent switch is the
    classically controlled one.
    """
    if process.control is None:
        raise LabelError(f"process {process.name!r} has no control subsystem")
    ctrl_name = process.control[0]
    pos = [s.name for s in process.subsystems].index(ctrl_name)
    terms = []
    for weight, vec in process.terms:
        by_value: dict = {}
        for key, val in vec.amplitudes.items():
            by_value.setdefault(key[pos], {})[key] = val
        for value in sorted(by_value):
            terms.append((weight, LabeledVector(vec.subsystems, by_value[value])))
    return Process(
        name=process.name if process.name.endswith("(dephased)") else f"{process.name}(dephased)",
        parties=process.parties,
        terms=tuple(terms),
        p_labels=process.p_labels,
        f_labels=process.f_labels,
        party_in=process.party_in,
        party_out=process.party_out,
        control=process.control,
    )


@dataclass(frozen=True)
class ValidityReport:
    process: str
    trials: int
    max_deviation: float
    min_weight: float
    passed: bool

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"validity[{self.process}]: {status} "
            f"(max |total-1| = {self.max_deviation:.3e} over {self.trials} trials)"
        )


def validate_process(process: Process, trials: int = 50, seed: int = 0) -> ValidityReport:
    """Monte Carlo normalization check: random CPTP tuples must give total
    probability one.

    Each trial draws a random joint state on P's outputs and an independent
    random CPTP map per party, with F discarded.  Positivity of the process
    holds by construction, so the report only tracks the minimum term
    weight alongside the normalization deviation.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    p_subs = tuple(process.subsystem(n) for n in process.p_labels)
    p_dim = int(np.prod([s.dim for s in p_subs]))
    f_op = LabeledOperator.identity(
        tuple(process.subsystem(n) for n in process.f_labels)
    )
    worst = 0.0
    for _ in range(trials):
        prep = LabeledOperator.from_dense(p_subs, random_density(p_dim, rng))
        ops = [prep]
        for i in range(process.parties):
            cmap = random_cptp(
                2, 2, rng,
                in_name=process.party_in[i], out_name=process.party_out[i],
            )
            ops.append(cmap.matrix)
        ops.append(f_op)
        total = process.pair(ops)
        worst = max(worst, abs(total - 1.0))
    min_weight = min((w for w, _ in process.terms), default=0.0)
    return ValidityReport(
        process=process.name,
        trials=trials,
        max_deviation=worst,
        min_weight=min_weight,
        passed=worst <= 1e-9 and min_weight >= 0.0,
    )
