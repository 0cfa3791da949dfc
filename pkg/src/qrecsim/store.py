"""Length-squared sampling trees over streamed matrix entries.

One complete binary tree per row holds squared entries at the leaves and
subtree sums at internal nodes, so a leaf can be drawn with probability
proportional to its squared value in one root-to-leaf walk. A second tree of
the same kind over the squared row norms picks rows proportional to their
share of the squared Frobenius norm. Entry signs are kept beside the leaves;
the trees themselves only ever see squared weights.

Updates recompute each ancestor as the exact sum of its two children rather
than propagating deltas, so the stored floats depend only on the final set of
leaf values, never on arrival order.
"""

from __future__ import annotations

import struct
from typing import Iterable, Iterator

import numpy as np

from .errors import EmptyRowError, MatrixError, StoreFormatError

_MAGIC = b"QRST"
_VERSION = 1
_HEADER = struct.Struct("<4sIQQQ")
_ROW_COUNT = struct.Struct("<Q")
_LEAF_RECORD = struct.Struct("<Qdb")


def _leaf_depth(count: int) -> int:
    """Tree depth for ``count`` leaves padded to the next power of two."""
    if count < 1:
        raise MatrixError(f"leaf count must be >= 1, got {count}")
    return int(count - 1).bit_length()


class RowTree:
    """Prefix-sum tree over one row of squared amplitudes.

    ``levels[t]`` maps a t-bit prefix (as an integer) to the total squared
    weight of leaves whose index starts with that prefix; ``levels[depth]``
    holds the leaves themselves and ``levels[0][0]`` is the row's squared
    norm. Absent nodes weigh zero. An explicitly inserted zero is stored as a
    zero-weight leaf so the set of populated cells is part of the state.
    """

    __slots__ = ("size", "depth", "levels", "signs")

    def __init__(self, size: int):
        self.size = int(size)
        self.depth = _leaf_depth(self.size)
        self.levels: list[dict[int, float]] = [{} for _ in range(self.depth + 1)]
        self.signs: dict[int, int] = {}

    @property
    def root(self) -> float:
        return self.levels[0].get(0, 0.0)

    def leaf_weight(self, j: int) -> float:
        return self.levels[self.depth].get(j, 0.0)

    def sign(self, j: int) -> int:
        return self.signs.get(j, 0)

    def amplitude(self, j: int) -> float:
        """Signed entry value sign_j * sqrt(weight_j)."""
        return self.sign(j) * float(np.sqrt(self.leaf_weight(j)))

    def node_weight(self, t: int, prefix: int) -> float:
        if not 0 <= t <= self.depth:
            raise MatrixError(f"depth {t} outside [0, {self.depth}]")
        if not 0 <= prefix < (1 << t):
            raise MatrixError(f"prefix {prefix} is not a {t}-bit value")
        return self.levels[t].get(prefix, 0.0)

    def update(self, j: int, weight: float, sign: int) -> int:
        """Set leaf j to ``weight`` and refresh its ancestors.

        Returns the number of tree nodes written (depth + 1). Each ancestor
        is recomputed as left child + right child, which keeps stored sums
        independent of the order updates arrive in.
        """
        if not 0 <= j < self.size:
            raise MatrixError(f"leaf index {j} outside [0, {self.size})")
        if not np.isfinite(weight) or weight < 0.0:
            raise MatrixError(f"leaf weight must be finite and >= 0, got {weight}")
        self.levels[self.depth][j] = float(weight)
        self.signs[j] = int(sign)
        for t in range(self.depth - 1, -1, -1):
            prefix = j >> (self.depth - t)
            child = self.levels[t + 1]
            self.levels[t][prefix] = child.get(2 * prefix, 0.0) + child.get(2 * prefix + 1, 0.0)
        return self.depth + 1

    def insert(self, j: int, value: float) -> int:
        if not np.isfinite(value):
            raise MatrixError(f"entry value must be finite, got {value}")
        return self.update(j, value * value, int(np.sign(value)))

    def sample(self, rng: np.random.Generator) -> int:
        """Draw a leaf with probability weight_j / root."""
        if self.root <= 0.0:
            raise EmptyRowError("empty-row sample: row has zero total weight")
        prefix = 0
        for t in range(self.depth):
            child = self.levels[t + 1]
            left = child.get(2 * prefix, 0.0)
            right = child.get(2 * prefix + 1, 0.0)
            if rng.random() * (left + right) < left:
                prefix = 2 * prefix
            else:
                prefix = 2 * prefix + 1
        return prefix

    def populated(self) -> list[int]:
        return sorted(self.levels[self.depth])


class MatrixStore:
    """Streamed m x n matrix with row trees and a row-norm tree.

    ``entry_count`` counts distinct populated cells; re-inserting a cell
    overwrites its value. ``node_touches`` accumulates tree-node writes and
    ``last_insert_touches`` holds the cost of the most recent insert, for
    verifying the logarithmic update bound.
    """

    def __init__(self, m: int, n: int):
        if m < 1 or n < 1:
            raise MatrixError(f"store shape must be >= 1x1, got {m}x{n}")
        self.m = int(m)
        self.n = int(n)
        self.rows = [RowTree(self.n) for _ in range(self.m)]
        self.norm_tree = RowTree(self.m)
        self.node_touches = 0
        self.last_insert_touches = 0
        self._entry_count = 0

    @property
    def entry_count(self) -> int:
        return self._entry_count

    def insert(self, i: int, j: int, value: float) -> int:
        """Record A[i, j] = value, overwriting any previous value there.

        Touches at most ceil(log2 n) + ceil(log2 m) + 2 tree nodes: the leaf
        and its ancestors in the row tree, then the row's leaf and ancestors
        in the norm tree.
        """
        if not 0 <= i < self.m:
            raise MatrixError(f"row index {i} outside [0, {self.m})")
        row = self.rows[i]
        fresh = j not in row.levels[row.depth] if 0 <= j < row.size else False
        touches = row.insert(j, value)
        touches += self.norm_tree.update(i, row.root, 1)
        if fresh:
            self._entry_count += 1
        self.node_touches += touches
        self.last_insert_touches = touches
        return touches

    # -- queries ---------------------------------------------------------

    def row_norm(self, i: int) -> float:
        self._check_row(i)
        return float(np.sqrt(self.rows[i].root))

    def frobenius_sq(self) -> float:
        return self.norm_tree.root

    def frobenius_norm(self) -> float:
        return float(np.sqrt(self.norm_tree.root))

    def subtree_weight(self, i: int, prefix: str) -> float:
        """Squared weight under the row-i subtree addressed by a bit string.

        The empty prefix addresses the row root (the squared row norm).
        """
        self._check_row(i)
        if any(c not in "01" for c in prefix):
            raise MatrixError(f"prefix must be a bit string, got {prefix!r}")
        tree = self.rows[i]
        if len(prefix) > tree.depth:
            raise MatrixError(f"prefix longer than tree depth {tree.depth}: {prefix!r}")
        key = int(prefix, 2) if prefix else 0
        return tree.node_weight(len(prefix), key)

    def entry(self, i: int, j: int) -> float:
        self._check_row(i)
        if not 0 <= j < self.n:
            raise MatrixError(f"column index {j} outside [0, {self.n})")
        return self.rows[i].amplitude(j)

    def row_dense(self, i: int) -> np.ndarray:
        self._check_row(i)
        tree = self.rows[i]
        out = np.zeros(self.n)
        for j in tree.populated():
            out[j] = tree.amplitude(j)
        return out

    def to_dense(self) -> np.ndarray:
        return np.stack([self.row_dense(i) for i in range(self.m)])

    # -- sampling --------------------------------------------------------

    def l2_sample_in_row(self, i: int, rng: np.random.Generator) -> int:
        """Column j with probability A_ij^2 / ||A_i||^2."""
        self._check_row(i)
        return self.rows[i].sample(rng)

    def l2_sample_row_index(self, rng: np.random.Generator) -> int:
        """Row i with probability ||A_i||^2 / ||A||_F^2."""
        if self.norm_tree.root <= 0.0:
            raise EmptyRowError("empty-store sample: no nonzero entries")
        return self.norm_tree.sample(rng)

    def sample_entry(self, rng: np.random.Generator) -> tuple[int, int]:
        i = self.l2_sample_row_index(rng)
        return i, self.l2_sample_in_row(i, rng)

    def _check_row(self, i: int) -> None:
        if not 0 <= i < self.m:
            raise MatrixError(f"row index {i} outside [0, {self.m})")

    # -- construction ----------------------------------------------------

    @classmethod
    def from_dense(cls, a) -> "MatrixStore":
        """Store holding every nonzero cell of a dense matrix."""
        arr = np.asarray(a, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise MatrixError(f"expected a non-empty 2-d matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise MatrixError("matrix entries must be finite")
        store = cls(arr.shape[0], arr.shape[1])
        for i, j in zip(*np.nonzero(arr)):
            store.insert(int(i), int(j), float(arr[i, j]))
        return store

    # -- serialization ---------------------------------------------------

    def serialize(self) -> bytes:
        """Versioned binary snapshot; weights and signs survive bit-exactly.

        Layout (little endian): magic 'QRST', u32 version, u64 m, u64 n,
        u64 entry_count, then per row a u64 leaf count followed by
        (u64 column, f64 squared weight, i8 sign) records in column order.
        Internal nodes are recomputed on load, which reproduces them exactly
        because every stored sum is a pure function of the leaf values.
        """
        parts = [_HEADER.pack(_MAGIC, _VERSION, self.m, self.n, self._entry_count)]
        for tree in self.rows:
            cols = tree.populated()
            parts.append(_ROW_COUNT.pack(len(cols)))
            leaves = tree.levels[tree.depth]
            for j in cols:
                parts.append(_LEAF_RECORD.pack(j, leaves[j], tree.sign(j)))
        return b"".join(parts)

    @classmethod
    def deserialize(cls, blob: bytes) -> "MatrixStore":
        if len(blob) < _HEADER.size:
            raise StoreFormatError("truncated header", offset=len(blob))
        magic, version, m, n, count = _HEADER.unpack_from(blob, 0)
        if magic != _MAGIC:
            raise StoreFormatError(f"bad magic {magic!r}", offset=0)
        if version != _VERSION:
            raise StoreFormatError(f"unsupported version {version}", offset=4)
        if m < 1 or n < 1:
            raise StoreFormatError(f"invalid shape {m}x{n}", offset=8)
        store = cls(m, n)
        offset = _HEADER.size
        for i in range(m):
            if offset + _ROW_COUNT.size > len(blob):
                raise StoreFormatError(f"truncated row header for row {i}", offset=offset)
            (row_count,) = _ROW_COUNT.unpack_from(blob, offset)
            offset += _ROW_COUNT.size
            for _ in range(row_count):
                if offset + _LEAF_RECORD.size > len(blob):
                    raise StoreFormatError(f"truncated leaf record in row {i}", offset=offset)
                j, weight, sign = _LEAF_RECORD.unpack_from(blob, offset)
                if j >= n:
                    raise StoreFormatError(f"column {j} out of range in row {i}", offset=offset)
                if not np.isfinite(weight) or weight < 0.0:
                    raise StoreFormatError(f"invalid weight {weight} in row {i}", offset=offset)
                store.rows[i].update(j, weight, sign)
                store._entry_count += 1
                offset += _LEAF_RECORD.size
            if row_count:
                store.norm_tree.update(i, store.rows[i].root, 1)
        if offset != len(blob):
            raise StoreFormatError("trailing bytes after last row", offset=offset)
        if store._entry_count != count:
            raise StoreFormatError(
                f"entry count mismatch: header says {count}, found {store._entry_count}",
                offset=_HEADER.size - 8,
            )
        store.node_touches = 0
        store.last_insert_touches = 0
        return store

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.serialize())

    @classmethod
    def load(cls, path) -> "MatrixStore":
        with open(path, "rb") as fh:
            return cls.deserialize(fh.read())


# -- triplet text format ---------------------------------------------------


def parse_triplets(lines: Iterable[str]) -> Iterator[tuple[int, int, float]]:
    """Yield (row, column, value) from ``i,j,value`` lines (0-based indices).

    Blank lines and lines starting with '#' are skipped. Malformed lines
    raise StoreFormatError carrying the 1-based line number.
    """
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 3:
            raise StoreFormatError(f"line {lineno}: expected i,j,value, got {raw!r}", offset=lineno)
        try:
            i, j = int(fields[0]), int(fields[1])
            value = float(fields[2])
        except ValueError as exc:
            raise StoreFormatError(f"line {lineno}: {exc}", offset=lineno) from exc
        if i < 0 or j < 0:
            raise StoreFormatError(f"line {lineno}: negative index", offset=lineno)
        if not np.isfinite(value):
            raise StoreFormatError(f"line {lineno}: non-finite value", offset=lineno)
        yield i, j, value


def ingest_triplets(lines: Iterable[str], m: int | None = None, n: int | None = None) -> MatrixStore:
    """Build a store from triplet lines, inferring the shape when absent."""
    triplets = list(parse_triplets(lines))
    if m is None:
        if not triplets:
            raise StoreFormatError("cannot infer shape from an empty triplet stream")
        m = max(t[0] for t in triplets) + 1
    if n is None:
        if not triplets:
            raise StoreFormatError("cannot infer shape from an empty triplet stream")
        n = max(t[1] for t in triplets) + 1
    store = MatrixStore(m, n)
    for i, j, value in triplets:
        if i >= store.m or j >= store.n:
            raise StoreFormatError(f"entry ({i},{j}) outside declared shape {store.m}x{store.n}")
        store.insert(i, j, value)
    return store
