"""Evaluation of the cyclic communication game on a process.

A referee draws a sender slot s and a bit x uniformly; the cyclic successor
of s must output a guess a.  Probabilities come from pairing the process
terms with the preparation, one Choi matrix per playing party, and a
discard on the global future.  A fixed causal order among k playing
parties caps the winning probability at 1 - 1/(2k); any excess above that
bound (beyond float noise) is flagged.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .choi import (
    ChoiMap,
    StateError,
    bystander_map,
    discard,
    preparation,
    random_cptp,
    random_instrument,
    receiver_map,
    sender_map,
)
from .labeled import LabelError, LabeledOperator, SubsystemLabel
from .processes import Process

# Threshold above the bound before declaring a violation; far below the
# smallest meaningful gap 1/(2k).
VIOLATION_TOL = 1e-9
NORMALIZATION_TOL = 1e-9


def fixed_order_bound(k: int) -> float:
    return 1.0 - 1.0 / (2 * k)


@dataclass
class Strategy:
    """Bundle of the parties' operations for one game.

    preparation maps the announced sender slot to P's preparation; a
    non-adaptive strategy simply ignores the argument.  sender/receiver
    take (party, bit) and bystander takes (party,).
    """

    preparation: Callable[[int], ChoiMap]
    sender: Callable[[int, int], ChoiMap]
    receiver: Callable[[int, int], ChoiMap]
    bystander: Callable[[int], ChoiMap]
    adaptive: bool = True
    description: str = ""


@dataclass
class GameResult:
    probabilities: dict
    p_win: float
    bound: float
    verdict: str
    max_norm_dev: float

    def violates(self) -> bool:
        return self.verdict == "violates-fixed-order"


def evaluate(process: Process, strategy: Strategy, s: int, x: int) -> dict:
    """Distribution over the receiver's guess a for announced (s, x)."""
    k = process.parties
    if not 0 <= s < k:
        raise ValueError(f"sender slot {s} out of range for {k} parties")
    if x not in (0, 1):
        raise ValueError(f"bit x must be 0 or 1, got {x}")
    receiver_slot = (s + 1) % k
    prep = strategy.preparation(s)
    f_op = LabeledOperator.identity(
        tuple(process.subsystem(n) for n in process.f_labels)
    )
    out = {}
    for a in (0, 1):
        ops = [prep.matrix]
        for i in range(k):
            if i == s:
                ops.append(strategy.sender(i, x).matrix)
            elif i == receiver_slot:
                ops.append(strategy.receiver(i, a).matrix)
            else:
                ops.append(strategy.bystander(i).matrix)
        ops.append(f_op)
        val = process.pair(ops)
        if abs(val.imag) > 1e-8:
            raise ArithmeticError(f"probability came out complex: {val}")
        out[a] = val.real
    return out


def win_probability(process: Process, strategy: Strategy) -> GameResult:
    """Uniform average of p(a=x|s,x) over s and x, with the verdict."""
    k = process.parties
    probs = {}
    total = 0.0
    max_dev = 0.0
    for s in range(k):
        for x in (0, 1):
            dist = evaluate(process, strategy, s, x)
            for a, p in dist.items():
                probs[(s, x, a)] = p
            max_dev = max(max_dev, abs(sum(dist.values()) - 1.0))
            total += dist[x]
    p_win = total / (2 * k)
    bound = fixed_order_bound(k)
    verdict = "violates-fixed-order" if p_win > bound + VIOLATION_TOL else "within-bound"
    return GameResult(
        probabilities=probs,
        p_win=p_win,
        bound=bound,
        verdict=verdict,
        max_norm_dev=max_dev,
    )


def _maximally_mixed(labels: Sequence[SubsystemLabel]) -> LabeledOperator:
    op = LabeledOperator.identity(labels)
    dim = int(np.prod([s.dim for s in labels]))
    return op.scaled(1.0 / dim)


def _dummy_names(process: Process) -> list:
    return [n for n in process.p_labels if n.startswith("P_D")]


def switch_preparation(process: Process, control_state: np.ndarray) -> ChoiMap:
    """Preparation sigma_control (x) maximally mixed target and dummies."""
    ctrl = process.subsystem(process.control[0])
    sigma = LabeledOperator.from_dense((ctrl,), control_state)
    rest = [process.subsystem(n) for n in process.p_labels if n != ctrl.name]
    return preparation(sigma.tensor(_maximally_mixed(rest)))


def basis_state(dim: int, value: int) -> np.ndarray:
    mat = np.zeros((dim, dim), dtype=complex)
    mat[value, value] = 1.0
    return mat


def adaptive_switch_strategy(process: Process) -> Strategy:
    """P encodes the announced slot in the control basis; parties use the
    standard encode/guess/do-nothing maps.  Wins every round on all the
    switch families."""
    dim = process.control_dim()

    def prep(s: int) -> ChoiMap:
        return switch_preparation(process, basis_state(dim, s))

    return Strategy(
        preparation=prep,
        sender=lambda i, x: sender_map(x, i),
        receiver=lambda i, a: receiver_map(a, i),
        bystander=lambda i: bystander_map(i),
        adaptive=True,
        description="adaptive basis-state control",
    )


def nonadaptive_switch_strategy(process: Process, control_state: np.ndarray,
                                description: str = "") -> Strategy:
    fixed = switch_preparation(process, np.asarray(control_state, dtype=complex))
    return Strategy(
        preparation=lambda s: fixed,
        sender=lambda i, x: sender_map(x, i),
        receiver=lambda i, a: receiver_map(a, i),
        bystander=lambda i: bystander_map(i),
        adaptive=False,
        description=description or "non-adaptive control state",
    )


def adaptive_w3_preparation(s: int, sigma: np.ndarray | None = None) -> ChoiMap:
    """Preparation for the three-party collaboration strategy.

    Places |0><0| on the qubit feeding the receiver's input and an
    arbitrary two-qubit state sigma on the slots of the sender and its
    predecessor (slot order (s, s-)).
    """
    if s not in (0, 1, 2):
        raise ValueError(f"sender slot must be in 0..2, got {s}")
    sigma = np.eye(4, dtype=complex) / 4.0 if sigma is None else np.asarray(sigma, complex)
    if sigma.shape != (4, 4):
        raise StateError(f"sigma must be a two-qubit state, got shape {sigma.shape}")
    if abs(np.trace(sigma) - 1.0) > 1e-10:
        raise StateError("sigma must have unit trace")
    prev, nxt = (s - 1) % 3, (s + 1) % 3
    pair = LabeledOperator.from_dense(
        (SubsystemLabel(f"H_{s}", 2), SubsystemLabel(f"H_{prev}", 2)), sigma
    )
    zero = LabeledOperator((SubsystemLabel(f"H_{nxt}", 2),), {((0,), (0,)): 1.0})
    state = pair.tensor(zero).permute(["H_0", "H_1", "H_2"])
    return preparation(state)


def w3_strategy(adaptive: bool = True, sigma: np.ndarray | None = None) -> Strategy:
    """Collaboration strategy for the three-party non-causal process.

    The receiver and the third party reset their outputs to |0>, which
    lines the process up with signaling along the cycle.  Non-adaptively, P
    emits |0,0,0>.
    """
    if adaptive:
        prep = lambda s: adaptive_w3_preparation(s, sigma)
        desc = "adaptive two-qubit sigma with |0> on the receiver slot"
    else:
        labs = tuple(SubsystemLabel(f"H_{i}", 2) for i in range(3))
        fixed = preparation(LabeledOperator(labs, {((0, 0, 0), (0, 0, 0)): 1.0}))
        prep = lambda s: fixed
        desc = "non-adaptive |0,0,0>"
    return Strategy(
        preparation=prep,
        sender=lambda i, x: sender_map(x, i),
        receiver=lambda i, a: receiver_map(a, i, reset_output=True),
        bystander=lambda i: bystander_map(i, reset_output=True),
        adaptive=adaptive,
        description=desc,
    )


def control_state_grid(dim: int, n_random: int = 64, seed: int = 0) -> list:
    """Deterministic sweep of control preparations.

    Basis states, the four phase superpositions of every level pair, the
    maximally mixed state, and seeded Haar-random pure states.
    """
    states = [(f"|{i}>", basis_state(dim, i)) for i in range(dim)]
    for i in range(dim):
        for j in range(i + 1, dim):
            for phase, tag in ((1, "+"), (-1, "-"), (1j, "+i"), (-1j, "-i")):
                vec = np.zeros(dim, dtype=complex)
                vec[i] = 1.0
                vec[j] = phase
                vec /= np.sqrt(2)
                states.append((f"(|{i}>{tag}|{j}>)/sqrt2", np.outer(vec, vec.conj())))
    states.append(("maximally mixed", np.eye(dim, dtype=complex) / dim))
    rng = np.random.default_rng(seed)
    for t in range(n_random):
        vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        vec /= np.linalg.norm(vec)
        states.append((f"haar[{t}]", np.outer(vec, vec.conj())))
    return states


def _product_state_grid(labels, n_random: int = 64, seed: int = 0) -> list:
    """Pure product states over qubit labels: the six single-qubit stock
    states per factor, the mixed product, and seeded random products."""
    stock = [
        ("|0>", np.array([1, 0], complex)),
        ("|1>", np.array([0, 1], complex)),
        ("|+>", np.array([1, 1], complex) / np.sqrt(2)),
        ("|->", np.array([1, -1], complex) / np.sqrt(2)),
        ("|+i>", np.array([1, 1j], complex) / np.sqrt(2)),
        ("|-i>", np.array([1, -1j], complex) / np.sqrt(2)),
    ]
    n = len(labels)
    states = []
    for choice in itertools.product(range(len(stock)), repeat=n):
        vec = np.array([1.0 + 0j])
        for c in choice:
            vec = np.kron(vec, stock[c][1])
        name = "".join(stock[c][0] for c in choice)
        states.append((name, np.outer(vec, vec.conj())))
    dim = 2 ** n
    states.append(("maximally mixed", np.eye(dim, dtype=complex) / dim))
    rng = np.random.default_rng(seed)
    for t in range(n_random):
        vec = np.array([1.0 + 0j])
        for _ in range(n):
            q = rng.normal(size=2) + 1j * rng.normal(size=2)
            q /= np.linalg.norm(q)
            vec = np.kron(vec, q)
        states.append((f"product-haar[{t}]", np.outer(vec, vec.conj())))
    return states


@dataclass
class SweepResult:
    p_win: float
    description: str
    state: np.ndarray
    grid_size: int


def optimize_nonadaptive_control(
    process: Process,
    base_strategy: Strategy | None = None,
    n_random: int = 64,
    seed: int = 0,
) -> SweepResult:
    """Best winning probability over a grid of non-adaptive preparations.

    For processes with a control subsystem the grid sweeps control states
    (target and dummies stay maximally mixed); otherwise it sweeps pure
    product preparations over all of P's qubits.
    """
    results = []
    if process.control is not None:
        grid = control_state_grid(process.control_dim(), n_random, seed)
        for name, state in grid:
            strat = nonadaptive_switch_strategy(process, state, description=name)
            if base_strategy is not None:
                strat = Strategy(
                    preparation=strat.preparation,
                    sender=base_strategy.sender,
                    receiver=base_strategy.receiver,
                    bystander=base_strategy.bystander,
                    adaptive=False,
                    description=name,
                )
            results.append((win_probability(process, strat).p_win, name, state))
    else:
        labels = [process.subsystem(n) for n in process.p_labels]
        base = base_strategy or w3_strategy(adaptive=False)
        for name, state in _product_state_grid(labels, n_random, seed):
            prep = preparation(
                LabeledOperator.from_dense(tuple(labels), state)
            )
            strat = Strategy(
                preparation=lambda s, _p=prep: _p,
                sender=base.sender,
                receiver=base.receiver,
                bystander=base.bystander,
                adaptive=False,
                description=name,
            )
            results.append((win_probability(process, strat).p_win, name, state))
    best = max(results, key=lambda r: r[0])
    return SweepResult(
        p_win=best[0], description=best[1], state=best[2], grid_size=len(results)
    )


def random_nonadaptive_strategy(process: Process, seed: int):
    """Fully random non-adaptive strategy, with its raw pieces exposed.

    Draws a random control state, target state, one random CPTP sender per
    bit, a random two-outcome guessing instrument, and a random CPTP
    bystander; the same party-agnostic maps are relabeled onto whichever
    slot plays each role.  Returns (strategy, pieces) where pieces holds
    the dense arrays for independent cross-checks.
    """
    rng = np.random.default_rng(seed)
    dim = process.control_dim()
    sigma = _random_density_local(rng, dim)
    rho = _random_density_local(rng, 2)
    senders = [random_cptp(2, 2, rng) for _ in (0, 1)]
    receivers = random_instrument(2, 2, 2, rng)
    passive = random_cptp(2, 2, rng)

    ctrl = process.subsystem(process.control[0])
    tgt = process.subsystem("P_t")
    state = LabeledOperator.from_dense((ctrl,), sigma).tensor(
        LabeledOperator.from_dense((tgt,), rho)
    )
    dummies = [process.subsystem(n) for n in _dummy_names(process)]
    if dummies:
        state = state.tensor(_maximally_mixed(dummies))
    prep = preparation(state)

    def relabel(cmap: ChoiMap, party: int) -> LabeledOperator:
        return cmap.matrix.rename(
            {"I": process.party_in[party], "O": process.party_out[party]}
        )

    def as_choi(mat: LabeledOperator, party: int, kind: str) -> ChoiMap:
        return ChoiMap(
            (process.subsystem(process.party_in[party]),),
            (process.subsystem(process.party_out[party]),),
            mat,
            kind,
        )

    strategy = Strategy(
        preparation=lambda s: prep,
        sender=lambda i, x: as_choi(relabel(senders[x], i), i, "CPTP"),
        receiver=lambda i, a: as_choi(relabel(receivers[a], i), i, "CP"),
        bystander=lambda i: as_choi(relabel(passive, i), i, "CPTP"),
        adaptive=False,
        description=f"random non-adaptive strategy[seed={seed}]",
    )
    pieces = {
        "sigma": sigma,
        "rho": rho,
        "senders": [c.matrix.to_dense() for c in senders],
        "receivers": [c.matrix.to_dense() for c in receivers],
        "bystander": passive.matrix.to_dense(),
    }
    return strategy, pieces


def _random_density_local(rng: np.random.Generator, dim: int) -> np.ndarray:
    gauss = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = gauss @ gauss.conj().T
    rho /= np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)
