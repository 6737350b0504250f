"""Choi matrices of channels and the stock party operations.

The Choi matrix of a completely positive map is taken in the convention
M = sum_ij |i><j|_in (x) map(|i><j|)_out, stored over the input labels
followed by the output labels.  A trace-preserving map then satisfies
Tr_out(M) = identity on the inputs, which is checked entrywise on
construction for maps flagged CPTP.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .labeled import (
    LabeledOperator,
    ShapeError,
    SubsystemLabel,
    tensor,
)

HERMITICITY_TOL = 1e-12
# Double-precision eigensolver noise on exact-arithmetic inputs.
POSITIVITY_FLOOR = -1e-10
TP_TOL = 1e-10

PARTY_LETTERS = "ABCDEF"


class StateError(ValueError):
    """A preparation is not a normalized positive state."""


def party_letter(party: int) -> str:
    if not 0 <= party < len(PARTY_LETTERS):
        raise ValueError(f"party index {party} out of supported range")
    return PARTY_LETTERS[party]


def party_input(party: int) -> SubsystemLabel:
    return SubsystemLabel(f"I_{party_letter(party)}", 2)


def party_output(party: int) -> SubsystemLabel:
    return SubsystemLabel(f"O_{party_letter(party)}", 2)


@dataclass(frozen=True)
class ChoiMap:
    """A CP map between labeled spaces, stored as its Choi matrix.

    kind is "CPTP" when the map is trace preserving, plain "CP" otherwise;
    hermiticity and positivity are verified for both kinds.
    """

    input_labels: tuple
    output_labels: tuple
    matrix: LabeledOperator
    kind: str = "CP"

    def __post_init__(self):
        object.__setattr__(self, "input_labels", tuple(self.input_labels))
        object.__setattr__(self, "output_labels", tuple(self.output_labels))
        if self.kind not in ("CP", "CPTP"):
            raise ValueError(f"unknown kind {self.kind!r}")
        expected = set(self.input_labels) | set(self.output_labels)
        if set(self.matrix.subsystems) != expected:
            raise ShapeError("Choi matrix labels do not match input/output labels")
        dense = self.matrix.to_dense()
        if not np.allclose(dense, dense.conj().T, atol=HERMITICITY_TOL):
            raise ShapeError("Choi matrix is not Hermitian")
        if dense.size:
            if np.linalg.eigvalsh(dense).min() < POSITIVITY_FLOOR:
                raise ShapeError("Choi matrix is not positive semidefinite")
        if self.kind == "CPTP":
            if _tp_deviation(self.matrix, self.input_labels, self.output_labels) > TP_TOL:
                raise ShapeError("map flagged CPTP but Tr_out(M) != identity")

    @property
    def in_dim(self) -> int:
        return int(np.prod([s.dim for s in self.input_labels])) if self.input_labels else 1

    @property
    def out_dim(self) -> int:
        return int(np.prod([s.dim for s in self.output_labels])) if self.output_labels else 1


def _tp_deviation(matrix: LabeledOperator, inputs, outputs) -> float:
    reduced = matrix.partial_trace([s.name for s in outputs])
    ident = LabeledOperator.identity(inputs)
    if inputs:
        reduced = reduced.permute([s.name for s in inputs])
    keys = set(reduced.entries) | set(ident.entries)
    return max(
        (abs(reduced.entries.get(k, 0j) - ident.entries.get(k, 0j)) for k in keys),
        default=0.0,
    )


def choi_of_kraus(
    kraus: Sequence[np.ndarray],
    in_label: SubsystemLabel,
    out_label: SubsystemLabel,
) -> ChoiMap:
    """Choi matrix sum_ij |i><j| (x) sum_K K|i><j|K-dagger of a Kraus set.

    The map is flagged CPTP exactly when sum_K K-dagger K is the identity
    within tolerance.
    """
    mats = [np.asarray(k, dtype=complex) for k in kraus]
    if not mats:
        raise ShapeError("need at least one Kraus operator")
    shape = (out_label.dim, in_label.dim)
    for k in mats:
        if k.shape != shape:
            raise ShapeError(f"Kraus shape {k.shape} does not match {shape}")
    d_in, d_out = in_label.dim, out_label.dim
    choi = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for k in mats:
        for i in range(d_in):
            for j in range(d_in):
                block = k[:, i][:, None] @ k[:, j][None, :].conj()
                choi[i * d_out:(i + 1) * d_out, j * d_out:(j + 1) * d_out] += block
    total = sum(k.conj().T @ k for k in mats)
    kind = "CPTP" if np.allclose(total, np.eye(d_in), atol=TP_TOL) else "CP"
    matrix = LabeledOperator.from_dense((in_label, out_label), choi)
    return ChoiMap((in_label,), (out_label,), matrix, kind)


def kraus_of_choi(cmap: ChoiMap) -> list:
    """Kraus operators (out_dim x in_dim) recovered from a Choi matrix."""
    inputs, outputs = cmap.input_labels, cmap.output_labels
    order = [s.name for s in inputs + outputs]
    dense = cmap.matrix.permute(order).to_dense()
    d_in, d_out = cmap.in_dim, cmap.out_dim
    vals, vecs = np.linalg.eigh(dense)
    kraus = []
    for lam, vec in zip(vals, vecs.T):
        if lam < POSITIVITY_FLOOR:
            raise ShapeError("Choi matrix is not positive semidefinite")
        if lam <= 1e-12:
            continue
        kraus.append(np.sqrt(lam) * vec.reshape(d_in, d_out).T)
    return kraus


def _projector(dim: int, value: int) -> np.ndarray:
    mat = np.zeros((dim, dim), dtype=complex)
    mat[value, value] = 1.0
    return mat


def sender_map(x: int, party: int) -> ChoiMap:
    """Identity on the party input, bit x prepared on the party output."""
    if x not in (0, 1):
        raise ValueError(f"sender bit must be 0 or 1, got {x}")
    i_lab, o_lab = party_input(party), party_output(party)
    matrix = tensor(
        LabeledOperator.identity((i_lab,)),
        LabeledOperator((o_lab,), {((x,), (x,)): 1.0}),
    )
    return ChoiMap((i_lab,), (o_lab,), matrix, "CPTP")


def receiver_map(a: int, party: int, reset_output: bool = False) -> ChoiMap:
    """Projective guess a on the party input.

    The default variant emits the maximally mixed state on the output wire;
    with reset_output the output is reset to |0>.  Either way the sum over
    both guesses is trace preserving.
    """
    if a not in (0, 1):
        raise ValueError(f"receiver guess must be 0 or 1, got {a}")
    i_lab, o_lab = party_input(party), party_output(party)
    if reset_output:
        out = LabeledOperator((o_lab,), {((0,), (0,)): 1.0})
    else:
        out = LabeledOperator.identity((o_lab,)).scaled(0.5)
    matrix = tensor(LabeledOperator((i_lab,), {((a,), (a,)): 1.0}), out)
    return ChoiMap((i_lab,), (o_lab,), matrix, "CP")


def bystander_map(party: int, reset_output: bool = False) -> ChoiMap:
    """Do-nothing operation: discard the input, emit a fixed output state."""
    i_lab, o_lab = party_input(party), party_output(party)
    if reset_output:
        out = LabeledOperator((o_lab,), {((0,), (0,)): 1.0})
    else:
        out = LabeledOperator.identity((o_lab,)).scaled(0.5)
    matrix = tensor(LabeledOperator.identity((i_lab,)), out)
    return ChoiMap((i_lab,), (o_lab,), matrix, "CPTP")


def preparation(state: LabeledOperator) -> ChoiMap:
    """State preparation: a Choi map with no input labels.

    The state must be positive semidefinite with unit trace.
    """
    dense = state.to_dense()
    if not np.allclose(dense, dense.conj().T, atol=1e-10):
        raise StateError("preparation state is not Hermitian")
    if np.linalg.eigvalsh(dense).min() < POSITIVITY_FLOOR:
        raise StateError("preparation state is not positive semidefinite")
    tr = dense.trace()
    if abs(tr - 1.0) > 1e-10:
        raise StateError(f"preparation state has trace {tr:.6g}, expected 1")
    return ChoiMap((), tuple(state.subsystems), state, "CPTP")


def discard(labels: Iterable[SubsystemLabel]) -> ChoiMap:
    """Trace out the given labels: Choi matrix is the identity, no outputs."""
    labels = tuple(labels)
    return ChoiMap(labels, (), LabeledOperator.identity(labels), "CPTP")


def random_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Column-orthonormal rows x cols matrix from a complex Gaussian draw."""
    if rows < cols:
        raise ShapeError(f"isometry needs rows >= cols, got {rows} < {cols}")
    gauss = rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))
    q, r = np.linalg.qr(gauss)
    # Fix the QR phase ambiguity so the draw is a deterministic function of
    # the Gaussian sample.
    phases = np.diag(r) / np.abs(np.diag(r))
    return q[:, :cols] * phases.conj()


def random_cptp(
    in_dim: int,
    out_dim: int,
    seed,
    in_name: str = "I",
    out_name: str = "O",
    kraus_rank: int | None = None,
) -> ChoiMap:
    """Random CPTP map from a Stinespring isometry, deterministic in seed."""
    if in_dim < 1 or out_dim < 1:
        raise ShapeError("dimensions must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    env = kraus_rank if kraus_rank is not None else out_dim
    env = max(env, -(-in_dim // out_dim))  # out*env must cover in_dim
    iso = random_isometry(out_dim * env, in_dim, rng)
    kraus = [iso[e::env, :] for e in range(env)]
    return choi_of_kraus(
        kraus, SubsystemLabel(in_name, in_dim), SubsystemLabel(out_name, out_dim)
    )


def random_instrument(
    in_dim: int,
    out_dim: int,
    outcomes: int,
    seed,
    in_name: str = "I",
    out_name: str = "O",
) -> list:
    """Random quantum instrument: CP maps per outcome whose sum is CPTP."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    env = max(outcomes, -(-in_dim // out_dim))
    iso = random_isometry(out_dim * env, in_dim, rng)
    in_lab = SubsystemLabel(in_name, in_dim)
    out_lab = SubsystemLabel(out_name, out_dim)
    maps = [choi_of_kraus([iso[e::env, :]], in_lab, out_lab) for e in range(outcomes)]
    # Any leftover environment branches are folded into the last outcome so
    # the instrument is complete.
    if env > outcomes:
        extra = [iso[e::env, :] for e in range(outcomes - 1, env)]
        maps[-1] = choi_of_kraus(extra, in_lab, out_lab)
    return maps


def random_density(dim: int, seed, rank: int | None = None) -> np.ndarray:
    """Random density matrix from a normalized Wishart draw."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    rank = dim if rank is None else rank
    gauss = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = gauss @ gauss.conj().T
    return rho / np.trace(rho)


def random_pure_state(dim: int, seed) -> np.ndarray:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())
