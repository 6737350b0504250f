"""Sparse complex vectors and operators over named tensor-product subsystems.

Every object carries an ordered tuple of (name, dim) subsystem labels and a
mapping from multi-indices to complex amplitudes or matrix entries.  Keeping
the data keyed by multi-index lets us build states living in global
dimensions in the hundreds of thousands (e.g. the wide switch processes)
while storing only a few hundred nonzero amplitudes.

All values are immutable after construction and safe to share across
threads.  Binary operations locate subsystems by name, so the stored axis
order never has to be guessed by callers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

# Amplitudes with |a| below this are dropped on construction.  Every state
# built in this package has exact 0/1/2^-m amplitudes, so pruning only ever
# removes float noise.
PRUNE_TOL = 1e-12

# Refuse to materialize dense matrices beyond this dimension.
_DENSE_LIMIT = 4096

# Switch a contraction chunk to coordinate form once its density of nonzero
# pairs drops below this.
_COO_DENSITY = 0.25


class LabelError(ValueError):
    """A subsystem name is unknown, duplicated, or inconsistently used."""


class DimensionError(ValueError):
    """A basis index or dimension is out of range."""


class ShapeError(ValueError):
    """Subsystem dimensions are incompatible for the requested operation."""


class CoverageError(LabelError):
    """Operators passed to contract() do not partition the vector's labels."""


@dataclass(frozen=True)
class SubsystemLabel:
    """A named tensor factor with a fixed dimension."""

    name: str
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError(f"subsystem {self.name!r} needs dim >= 1, got {self.dim}")


def _check_distinct(subsystems: Sequence[SubsystemLabel]) -> None:
    names = [s.name for s in subsystems]
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise LabelError(f"duplicate subsystem names {dup}")


def _check_key(key: tuple, subsystems: Sequence[SubsystemLabel]) -> tuple:
    if len(key) != len(subsystems):
        raise DimensionError(
            f"multi-index of length {len(key)} for {len(subsystems)} subsystems"
        )
    out = []
    for i, sub in zip(key, subsystems):
        i = int(i)
        if not 0 <= i < sub.dim:
            raise DimensionError(f"index {i} out of range for {sub.name!r} (dim {sub.dim})")
        out.append(i)
    return tuple(out)


class LabeledVector:
    """Sparse complex vector over an ordered list of named subsystems."""

    __slots__ = ("subsystems", "amplitudes")

    def __init__(
        self,
        subsystems: Iterable[SubsystemLabel],
        amplitudes: Mapping[tuple, complex],
        prune: float = PRUNE_TOL,
    ):
        subs = tuple(subsystems)
        _check_distinct(subs)
        amps = {}
        for key, val in amplitudes.items():
            val = complex(val)
            if abs(val) < prune:
                continue
            amps[_check_key(key, subs)] = val
        self.subsystems = subs
        self.amplitudes = amps

    @property
    def names(self) -> tuple:
        return tuple(s.name for s in self.subsystems)

    @property
    def dims(self) -> tuple:
        return tuple(s.dim for s in self.subsystems)

    def term_count(self) -> int:
        return len(self.amplitudes)

    def norm2(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def scaled(self, factor: complex) -> "LabeledVector":
        return LabeledVector(
            self.subsystems,
            {k: factor * v for k, v in self.amplitudes.items()},
        )

    def tensor(self, other: "LabeledVector") -> "LabeledVector":
        return tensor(self, other)

    def permute(self, order: Sequence[str]) -> "LabeledVector":
        perm = _permutation_positions(self.subsystems, order)
        subs = tuple(self.subsystems[p] for p in perm)
        amps = {tuple(k[p] for p in perm): v for k, v in self.amplitudes.items()}
        return LabeledVector(subs, amps)

    def to_dense(self) -> np.ndarray:
        """Dense 1-d array in the stored subsystem order (small systems only)."""
        total = int(np.prod(self.dims)) if self.subsystems else 1
        if total > _DENSE_LIMIT:
            raise ShapeError(f"refusing dense vector of dimension {total}")
        out = np.zeros(total, dtype=complex)
        strides = _strides(self.dims)
        for key, val in self.amplitudes.items():
            out[int(np.dot(key, strides))] = val
        return out

    def __repr__(self):
        return f"LabeledVector({self.names}, {len(self.amplitudes)} terms)"


class LabeledOperator:
    """Sparse complex operator with identical row and column subsystem labels."""

    __slots__ = ("subsystems", "entries", "_dense")

    def __init__(
        self,
        subsystems: Iterable[SubsystemLabel],
        entries: Mapping[tuple, complex],
        prune: float = PRUNE_TOL,
    ):
        subs = tuple(subsystems)
        _check_distinct(subs)
        ents = {}
        for (row, col), val in entries.items():
            val = complex(val)
            if abs(val) < prune:
                continue
            ents[(_check_key(row, subs), _check_key(col, subs))] = val
        self.subsystems = subs
        self.entries = ents
        self._dense = None

    @property
    def names(self) -> tuple:
        return tuple(s.name for s in self.subsystems)

    @property
    def dims(self) -> tuple:
        return tuple(s.dim for s in self.subsystems)

    @classmethod
    def identity(cls, subsystems: Iterable[SubsystemLabel]) -> "LabeledOperator":
        subs = tuple(subsystems)
        keys = _all_keys(tuple(s.dim for s in subs))
        return cls(subs, {(k, k): 1.0 for k in keys})

    @classmethod
    def from_dense(
        cls,
        subsystems: Iterable[SubsystemLabel],
        matrix: np.ndarray,
        prune: float = PRUNE_TOL,
    ) -> "LabeledOperator":
        subs = tuple(subsystems)
        dims = tuple(s.dim for s in subs)
        total = int(np.prod(dims)) if subs else 1
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape != (total, total):
            raise ShapeError(f"matrix shape {matrix.shape} does not match dims {dims}")
        keys = _all_keys(dims)
        ents = {}
        rows, cols = np.nonzero(np.abs(matrix) >= prune)
        for r, c in zip(rows, cols):
            ents[(keys[r], keys[c])] = complex(matrix[r, c])
        return cls(subs, ents)

    def to_dense(self) -> np.ndarray:
        if self._dense is not None:
            return self._dense
        total = int(np.prod(self.dims)) if self.subsystems else 1
        if total > _DENSE_LIMIT:
            raise ShapeError(f"refusing dense operator of dimension {total}")
        out = np.zeros((total, total), dtype=complex)
        strides = _strides(self.dims)
        for (row, col), val in self.entries.items():
            out[int(np.dot(row, strides)), int(np.dot(col, strides))] = val
        self._dense = out
        return out

    def trace(self) -> complex:
        return sum(v for (r, c), v in self.entries.items() if r == c)

    def dagger(self) -> "LabeledOperator":
        return LabeledOperator(
            self.subsystems,
            {(c, r): np.conj(v) for (r, c), v in self.entries.items()},
        )

    def scaled(self, factor: complex) -> "LabeledOperator":
        return LabeledOperator(
            self.subsystems,
            {k: factor * v for k, v in self.entries.items()},
        )

    def tensor(self, other: "LabeledOperator") -> "LabeledOperator":
        return tensor(self, other)

    def permute(self, order: Sequence[str]) -> "LabeledOperator":
        perm = _permutation_positions(self.subsystems, order)
        subs = tuple(self.subsystems[p] for p in perm)
        ents = {
            (tuple(r[p] for p in perm), tuple(c[p] for p in perm)): v
            for (r, c), v in self.entries.items()
        }
        return LabeledOperator(subs, ents)

    def rename(self, mapping: Mapping[str, str]) -> "LabeledOperator":
        """Same entries with subsystems renamed per the mapping."""
        subs = tuple(
            SubsystemLabel(mapping.get(s.name, s.name), s.dim) for s in self.subsystems
        )
        return LabeledOperator(subs, self.entries)

    def partial_trace(self, over: Iterable[str]) -> "LabeledOperator":
        """Trace out the named subsystems; the total trace is preserved."""
        over = set(over)
        known = set(self.names)
        unknown = over - known
        if unknown:
            raise LabelError(f"cannot trace over unknown labels {sorted(unknown)}")
        keep = [i for i, s in enumerate(self.subsystems) if s.name not in over]
        drop = [i for i, s in enumerate(self.subsystems) if s.name in over]
        subs = tuple(self.subsystems[i] for i in keep)
        acc: dict = {}
        for (row, col), val in self.entries.items():
            if all(row[i] == col[i] for i in drop):
                key = (tuple(row[i] for i in keep), tuple(col[i] for i in keep))
                acc[key] = acc.get(key, 0j) + val
        return LabeledOperator(subs, acc)

    def __repr__(self):
        return f"LabeledOperator({self.names}, {len(self.entries)} entries)"


def _strides(dims: Sequence[int]) -> np.ndarray:
    """Row-major mixed-radix strides for flattening multi-indices."""
    n = len(dims)
    strides = np.ones(n, dtype=np.int64)
    for i in range(n - 2, -1, -1):
        strides[i] = strides[i + 1] * dims[i + 1]
    return strides


def _all_keys(dims: Sequence[int]) -> list:
    keys = [()]
    for d in dims:
        keys = [k + (i,) for k in keys for i in range(d)]
    return keys


def _permutation_positions(subsystems: Sequence[SubsystemLabel], order: Sequence[str]) -> list:
    by_name = {s.name: i for i, s in enumerate(subsystems)}
    order = list(order)
    if sorted(order) != sorted(by_name):
        raise LabelError(f"order {order} is not a permutation of {sorted(by_name)}")
    return [by_name[name] for name in order]


def basis_vector(subsystems: Iterable[SubsystemLabel], index: Sequence[int]) -> LabeledVector:
    """Computational-basis vector with a single unit amplitude at `index`."""
    subs = tuple(subsystems)
    return LabeledVector(subs, {tuple(index): 1.0})


def max_entangled(label_a: SubsystemLabel, label_b: SubsystemLabel) -> LabeledVector:
    """Unnormalized pair sum_i |i>|i> over two equal-dimension labels.

    The squared norm equals the common dimension; normalization is left to
    the caller throughout this package.
    """
    if label_a.dim != label_b.dim:
        raise ShapeError(
            f"max_entangled needs equal dims, got {label_a.dim} and {label_b.dim}"
        )
    return LabeledVector(
        (label_a, label_b),
        {(i, i): 1.0 for i in range(label_a.dim)},
    )


def tensor(a, b):
    """Tensor product of two vectors or two operators with disjoint labels."""
    overlap = set(n for n in a.names) & set(b.names)
    if overlap:
        raise LabelError(f"tensor operands share labels {sorted(overlap)}")
    subs = a.subsystems + b.subsystems
    if isinstance(a, LabeledVector) and isinstance(b, LabeledVector):
        amps = {
            ka + kb: va * vb
            for ka, va in a.amplitudes.items()
            for kb, vb in b.amplitudes.items()
        }
        return LabeledVector(subs, amps)
    if isinstance(a, LabeledOperator) and isinstance(b, LabeledOperator):
        ents = {
            (ra + rb, ca + cb): va * vb
            for (ra, ca), va in a.entries.items()
            for (rb, cb), vb in b.entries.items()
        }
        return LabeledOperator(subs, ents)
    raise TypeError("tensor requires two vectors or two operators")


def vector_sum(vectors: Sequence[LabeledVector]) -> LabeledVector:
    """Coherent sum of vectors on the same label set (orders may differ)."""
    if not vectors:
        raise ValueError("vector_sum needs at least one vector")
    first = vectors[0]
    acc = dict(first.amplitudes)
    for v in vectors[1:]:
        aligned = v.permute(first.names)
        for key, val in aligned.amplitudes.items():
            acc[key] = acc.get(key, 0j) + val
    return LabeledVector(first.subsystems, acc)


def outer(v: LabeledVector) -> LabeledOperator:
    """Rank-one operator v v-dagger on v's labels."""
    ents = {
        (kr, kc): vr * np.conj(vc)
        for kr, vr in v.amplitudes.items()
        for kc, vc in v.amplitudes.items()
    }
    return LabeledOperator(v.subsystems, ents)


def partial_trace(op: LabeledOperator, over: Iterable[str]) -> LabeledOperator:
    return op.partial_trace(over)


if _HAVE_NUMBA:

    @_njit(cache=True)
    def _pair_sum(amps, idx, blocks_flat, offsets, dims):
        n = amps.shape[0]
        n_blocks = idx.shape[0]
        total = 0j
        for m in range(n):
            left = np.conj(amps[m])
            for mp in range(n):
                val = left * amps[mp]
                for b in range(n_blocks):
                    if val == 0j:
                        break
                    val *= blocks_flat[offsets[b] + idx[b, m] * dims[b] + idx[b, mp]]
                total += val
        return total

    @_njit(cache=True)
    def _pair_sum_hermitian(amps, idx, blocks_flat, offsets, dims):
        # All blocks Hermitian: the pair matrix is too, so only the upper
        # triangle is evaluated.
        n = amps.shape[0]
        n_blocks = idx.shape[0]
        total = 0.0
        for m in range(n):
            for mp in range(m, n):
                val = np.conj(amps[m]) * amps[mp]
                for b in range(n_blocks):
                    if val == 0j:
                        break
                    val *= blocks_flat[offsets[b] + idx[b, m] * dims[b] + idx[b, mp]]
                if mp == m:
                    total += val.real
                else:
                    total += 2.0 * val.real
        return total


def contract(process_term: LabeledVector, ops: Sequence[LabeledOperator]) -> complex:
    """Expectation <v| (tensor of ops) |v> without a dense global operator.

    The operators must act on pairwise disjoint label subsets that together
    cover every label of the vector.  The sum runs over pairs of stored
    amplitudes; each operator block is gathered with its own flattened
    index.  A jitted kernel walks the pairs when numba is importable;
    otherwise chunks of the pair matrix are gathered with numpy and switch
    to coordinate form as soon as a sparse block (a projector, an identity)
    has zeroed most pairs.
    """
    sub_index = {s.name: i for i, s in enumerate(process_term.subsystems)}
    covered: set = set()
    for op in ops:
        for lab in op.subsystems:
            pos = sub_index.get(lab.name)
            if pos is None:
                raise CoverageError(f"operator label {lab.name!r} not in vector")
            if process_term.subsystems[pos].dim != lab.dim:
                raise CoverageError(
                    f"label {lab.name!r} has dim {lab.dim} in operator but "
                    f"{process_term.subsystems[pos].dim} in vector"
                )
            if lab.name in covered:
                raise CoverageError(f"label {lab.name!r} covered twice")
            covered.add(lab.name)
    if len(covered) != len(process_term.subsystems):
        missing = sorted(set(sub_index) - covered)
        raise CoverageError(f"labels {missing} not covered by any operator")

    n_terms = len(process_term.amplitudes)
    if n_terms == 0:
        return 0j

    keys = list(process_term.amplitudes.keys())
    amps = np.array([process_term.amplitudes[k] for k in keys], dtype=complex)
    keymat = np.array(keys, dtype=np.int64).reshape(n_terms, len(process_term.subsystems))

    blocks = []
    for op in ops:
        cols = [sub_index[lab.name] for lab in op.subsystems]
        dims = [lab.dim for lab in op.subsystems]
        if cols:
            idx = keymat[:, cols] @ _strides(dims)
        else:
            idx = np.zeros(n_terms, dtype=np.int64)
        dense = op.to_dense()
        density = len(op.entries) / dense.size
        blocks.append((density, idx, dense))
    # Sparse blocks first so pairs are zeroed out as early as possible.
    blocks.sort(key=lambda blk: blk[0])

    if _HAVE_NUMBA:
        idx_mat = np.stack([blk[1] for blk in blocks])
        dims = np.array([blk[2].shape[0] for blk in blocks], dtype=np.int64)
        offsets = np.concatenate(([0], np.cumsum(dims * dims)))[:-1]
        flat = np.concatenate([blk[2].ravel() for blk in blocks])
        hermitian = all(
            np.array_equal(blk[2], blk[2].conj().T) for blk in blocks
        )
        if hermitian:
            return complex(_pair_sum_hermitian(amps, idx_mat, flat, offsets, dims))
        return complex(_pair_sum(amps, idx_mat, flat, offsets, dims))

    total = 0j
    chunk = max(1, min(n_terms, (1 << 21) // n_terms))
    for start in range(0, n_terms, chunk):
        stop = min(start + chunk, n_terms)
        rows = np.arange(start, stop)
        _, idx0, dense0 = blocks[0]
        gmat = dense0[idx0[rows][:, None], idx0[None, :]]
        coo = None
        for _, idx, dense in blocks[1:]:
            if coo is None:
                if gmat.size > 4096:
                    nnz = np.count_nonzero(gmat)
                    if nnz < _COO_DENSITY * gmat.size:
                        ii, jj = np.nonzero(gmat)
                        coo = (rows[ii], jj, gmat[ii, jj])
            if coo is None:
                gmat = gmat * dense[idx[rows][:, None], idx[None, :]]
            else:
                gi, gj, vals = coo
                vals = vals * dense[idx[gi], idx[gj]]
                keep = np.nonzero(vals)[0]
                if keep.size < vals.size:
                    gi, gj, vals = gi[keep], gj[keep], vals[keep]
                coo = (gi, gj, vals)
        if coo is None:
            total += np.conj(amps[rows]) @ gmat @ amps
        else:
            gi, gj, vals = coo
            total += np.sum(np.conj(amps[gi]) * vals * amps[gj])
    return complex(total)
