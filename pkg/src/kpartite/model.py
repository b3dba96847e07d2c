"""Color assignments, palettes, sample spaces and the contingency-table machinery.

Colors are stored as integer palette indices ``0..k-1``.  For a real palette the
index ``i`` stands for the value ``values[i]``; for a roots-of-unity palette it
stands for the phase ``exp(2*pi*1j*i/k)``, so products and conjugates of phases
stay exact as integer arithmetic modulo ``k``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

REAL = "real"
ROOTS = "roots"

OMEGA = "omega"
FIXED = "fixed"
MIN_FRACTION = "min_fraction"
THETA = "theta"

PARTITION = "partition"
PHASE = "phase"

DEFAULT_CAP = 10**7


class ModelError(ValueError):
    """Invalid assignment, palette or sample-space input."""


class CapExceededError(ModelError):
    """Enumeration refused because the space is larger than the cap."""

    def __init__(self, count: int, cap: int):
        super().__init__(f"space has {count} states, above the enumeration cap {cap}")
        self.count = count
        self.cap = cap


class NoCycleError(ModelError):
    """Raised by :func:`find_cycle` when the two assignments coincide."""


@dataclass(frozen=True)
class Palette:
    kind: str
    values: tuple

    def __post_init__(self):
        if self.kind not in (REAL, ROOTS):
            raise ModelError(f"unknown palette kind {self.kind!r}")
        if len(self.values) < 2:
            raise ModelError("a palette needs k >= 2 colors")
        if len(set(self.values)) != len(self.values):
            raise ModelError("palette values must be pairwise distinct")
        if self.kind == ROOTS and tuple(self.values) != tuple(range(len(self.values))):
            raise ModelError("roots-of-unity palettes store phase indices 0..k-1")

    @classmethod
    def real(cls, values: Sequence[float]) -> "Palette":
        return cls(REAL, tuple(values))

    @classmethod
    def roots(cls, k: int) -> "Palette":
        return cls(ROOTS, tuple(range(int(k))))

    @property
    def k(self) -> int:
        return len(self.values)

    @property
    def is_roots(self) -> bool:
        return self.kind == ROOTS

    def numeric(self) -> np.ndarray:
        """Color values as an array: reals, or complex k-th roots of unity."""
        if self.is_roots:
            return np.exp(2j * np.pi * np.arange(self.k) / self.k)
        return np.asarray(self.values, dtype=float)

    def to_line(self) -> str:
        if self.is_roots:
            return f"roots {self.k}"
        return " ".join([str(self.k)] + [repr(float(v)) for v in self.values])

    @classmethod
    def from_line(cls, line: str) -> "Palette":
        parts = line.split()
        if not parts:
            raise ModelError("empty palette line")
        if parts[0] == "roots":
            return cls.roots(int(parts[1]))
        k = int(parts[0])
        if len(parts) != k + 1:
            raise ModelError(f"palette line declares {k} colors but lists {len(parts) - 1}")
        return cls.real([float(v) for v in parts[1:]])


@dataclass(frozen=True)
class Assignment:
    colors: tuple
    palette: Palette

    def __post_init__(self):
        colors = tuple(int(c) for c in self.colors)
        object.__setattr__(self, "colors", colors)
        if not colors:
            raise ModelError("an assignment needs at least one vertex")
        k = self.palette.k
        for c in colors:
            if not 0 <= c < k:
                raise ModelError(f"color index {c} outside palette of size {k}")

    @classmethod
    def of(cls, colors: Sequence[int], palette: Palette | None = None) -> "Assignment":
        """Build from indices; without a palette, use roots of unity of order max+1 (at least 2)."""
        if palette is None:
            palette = Palette.roots(max(2, max(colors) + 1))
        return cls(tuple(colors), palette)

    @property
    def n(self) -> int:
        return len(self.colors)

    @property
    def k(self) -> int:
        return self.palette.k

    @cached_property
    def array(self) -> np.ndarray:
        a = np.array(self.colors, dtype=np.int64)
        a.setflags(write=False)
        return a

    @cached_property
    def group_sizes(self) -> tuple:
        return tuple(int(v) for v in np.bincount(self.array, minlength=self.k))

    def values(self) -> np.ndarray:
        """Per-vertex color value (real) or unit phase (complex)."""
        return self.palette.numeric()[self.array]

    def to_line(self, mode: str = "exact") -> str:
        return " ".join([str(self.n), str(self.k), mode] + [str(c) for c in self.colors])

    @classmethod
    def from_line(cls, line: str, palette: Palette) -> tuple["Assignment", str]:
        parts = line.split()
        n, k, mode = int(parts[0]), int(parts[1]), parts[2]
        if k != palette.k or len(parts) != n + 3:
            raise ModelError("assignment line does not match its palette or length")
        return cls(tuple(int(c) for c in parts[3:]), palette), mode


@dataclass(frozen=True)
class SampleSpace:
    kind: str
    n: int
    k: int
    counts: tuple = ()
    fraction: float | None = None

    def __post_init__(self):
        if self.n < 1 or self.k < 2:
            raise ModelError("sample spaces need n >= 1 and k >= 2")
        if self.kind == FIXED:
            counts = tuple(int(c) for c in self.counts)
            object.__setattr__(self, "counts", counts)
            if len(counts) != self.k or sum(counts) != self.n:
                raise ModelError(f"group sizes {counts} do not split n={self.n} into k={self.k} groups")
            if min(counts) < 1 or list(counts) != sorted(counts, reverse=True):
                raise ModelError("group sizes must satisfy n_1 >= ... >= n_k >= 1")
        elif self.kind == THETA:
            if self.n % self.k:
                raise ModelError(f"k={self.k} does not divide n={self.n}")
            object.__setattr__(self, "counts", (self.n // self.k,) * self.k)
        elif self.kind == MIN_FRACTION:
            if self.fraction is None or not 0 <= self.fraction <= 1:
                raise ModelError("min-fraction space needs 0 <= c <= 1")
        elif self.kind != OMEGA:
            raise ModelError(f"unknown sample space kind {self.kind!r}")

    @classmethod
    def omega(cls, n: int, k: int) -> "SampleSpace":
        return cls(OMEGA, n, k)

    @classmethod
    def fixed(cls, counts: Sequence[int]) -> "SampleSpace":
        return cls(FIXED, sum(counts), len(counts), tuple(counts))

    @classmethod
    def min_fraction(cls, n: int, k: int, c: float) -> "SampleSpace":
        return cls(MIN_FRACTION, n, k, fraction=float(c))

    @classmethod
    def theta(cls, n: int, k: int) -> "SampleSpace":
        return cls(THETA, n, k)

    @property
    def min_size(self) -> int:
        return math.ceil(self.fraction * self.n - 1e-12) if self.kind == MIN_FRACTION else 0

    def contains(self, x: Assignment) -> bool:
        if x.n != self.n or x.k != self.k:
            return False
        if self.kind == OMEGA:
            return True
        if self.kind == MIN_FRACTION:
            return min(x.group_sizes) >= self.min_size
        if self.kind == THETA and not x.palette.is_roots:
            return False
        return x.group_sizes == self.counts

    def size(self) -> int:
        if self.kind == OMEGA:
            return self.k**self.n
        if self.kind in (FIXED, THETA):
            return _multinomial(self.counts)
        lo = self.min_size
        return sum(
            _multinomial(c)
            for c in itertools.product(range(lo, self.n + 1), repeat=self.k)
            if sum(c) == self.n
        )


def _multinomial(counts: Sequence[int]) -> int:
    out, total = 1, 0
    for c in counts:
        total += c
        out *= math.comb(total, c)
    return out


@dataclass(frozen=True)
class ContingencyTable:
    t: np.ndarray
    row_marginals: tuple
    col_marginals: tuple

    @property
    def n(self) -> int:
        return int(self.t.sum())


@dataclass(frozen=True)
class Cycle:
    colors: tuple
    representatives: tuple = field(default=())

    @property
    def length(self) -> int:
        return len(self.colors)


def _check_pair(x: Assignment, y: Assignment) -> None:
    if x.n != y.n or x.k != y.k:
        raise ModelError(f"assignments disagree on size: (n={x.n}, k={x.k}) vs (n={y.n}, k={y.k})")


def contingency_array(xs: np.ndarray, ys: np.ndarray, k: int) -> np.ndarray:
    """Batched contingency counts; ``xs`` and ``ys`` broadcast over leading axes."""
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    ox = (xs[..., :, None] == np.arange(k)).astype(np.int64)
    oy = (ys[..., :, None] == np.arange(k)).astype(np.int64)
    return np.einsum("...li,...lj->...ij", ox, oy)


def contingency(x: Assignment, y: Assignment) -> ContingencyTable:
    _check_pair(x, y)
    t = contingency_array(x.array, y.array, x.k)
    t.setflags(write=False)
    return ContingencyTable(t, x.group_sizes, y.group_sizes)


def distance_omega(x: Assignment, y: Assignment) -> int:
    t = contingency(x, y).t
    return x.n - int(np.trace(t))


def distance_theta(x: Assignment, y: Assignment) -> int:
    if not (x.palette.is_roots and y.palette.is_roots):
        raise ModelError("distance_theta needs roots-of-unity assignments")
    t = contingency(x, y).t
    return int(t.sum() - np.trace(t))


def is_equivalent(x: Assignment, y: Assignment, mode: str = PARTITION) -> bool:
    _check_pair(x, y)
    if mode == PARTITION:
        return canonical_representative(x, PARTITION) == canonical_representative(y, PARTITION)
    if mode == PHASE:
        if not (x.palette.is_roots and y.palette.is_roots):
            raise ModelError("phase equivalence needs roots-of-unity palettes")
        shift = (x.array - y.array) % x.k
        return bool(np.all(shift == shift[0]))
    raise ModelError(f"unknown equivalence mode {mode!r}")


def canonical_representative(x: Assignment, mode: str = PARTITION) -> Assignment:
    if mode == PARTITION:
        relabel: dict[int, int] = {}
        out = []
        for c in x.colors:
            if c not in relabel:
                relabel[c] = len(relabel)
            out.append(relabel[c])
        return Assignment(tuple(out), x.palette)
    if mode == PHASE:
        if not x.palette.is_roots:
            raise ModelError("phase canonical form needs a roots-of-unity palette")
        return Assignment(tuple((x.array - x.array[0]) % x.k), x.palette)
    raise ModelError(f"unknown equivalence mode {mode!r}")


def canonical_array(states: np.ndarray, k: int, mode: str) -> np.ndarray:
    """Row-wise canonical forms of a (S, n) array of color indices."""
    states = np.asarray(states)
    if mode == PHASE:
        return (states - states[:, :1]) % k
    if mode != PARTITION:
        raise ModelError(f"unknown equivalence mode {mode!r}")
    S, n = states.shape
    out = np.empty_like(states)
    # first-appearance rank of each color, per row
    first = np.full((S, k), n, dtype=np.int64)
    rows = np.arange(S)
    for v in range(n - 1, -1, -1):
        first[rows, states[:, v]] = v
    rank = np.argsort(np.argsort(first, axis=1, kind="stable"), axis=1, kind="stable")
    out[:] = np.take_along_axis(rank, states, axis=1)
    return out


def space_count(space: SampleSpace) -> int:
    return space.size()


def enumerate_array(space: SampleSpace, cap: int = DEFAULT_CAP) -> np.ndarray:
    """All members of ``space`` as an (S, n) index array, colexicographic order."""
    count = space.size()
    if count > cap:
        raise CapExceededError(count, cap)
    n, k = space.n, space.k
    if space.kind in (OMEGA, MIN_FRACTION):
        # colex: vertex 0 varies fastest
        idx = np.arange(k**n, dtype=np.int64)
        states = (idx[:, None] // (k ** np.arange(n, dtype=np.int64))) % k
        if space.kind == MIN_FRACTION:
            sizes = np.stack([(states == c).sum(axis=1) for c in range(k)], axis=1)
            states = states[sizes.min(axis=1) >= space.min_size]
        return states
    rows = list(_fixed_count_colex(list(space.counts), n))
    return np.array(rows, dtype=np.int64).reshape(len(rows), n)


def _fixed_count_colex(counts: list, n: int) -> Iterator[list]:
    # lexicographic over the reversed vector == colexicographic over the vector
    out = [0] * n

    def rec(pos: int):
        if pos < 0:
            yield list(out)
            return
        for c in range(len(counts)):
            if counts[c]:
                counts[c] -= 1
                out[pos] = c
                yield from rec(pos - 1)
                counts[c] += 1

    yield from rec(n - 1)


def enumerate_space(space: SampleSpace, palette: Palette, cap: int = DEFAULT_CAP) -> Iterator[Assignment]:
    if palette.k != space.k:
        raise ModelError("palette size differs from the sample space's k")
    if space.kind == THETA and not palette.is_roots:
        raise ModelError("theta spaces use the roots-of-unity palette")
    for row in enumerate_array(space, cap):
        yield Assignment(tuple(row), palette)


def find_cycle(x: Assignment, y: Assignment) -> Cycle:
    """Constructive l-cycle for ``(x, y)``: a closed walk i_1 -> ... -> i_l with t[i_{s-1}, i_s] > 0."""
    _check_pair(x, y)
    if x.group_sizes != y.group_sizes:
        raise ModelError("find_cycle needs equal group-size vectors")
    if x.colors == y.colors:
        raise NoCycleError("x equals y; no cycle exists")
    t = contingency(x, y).t
    sizes = x.group_sizes
    k = x.k
    start = next(i for i in range(k) if t[i, i] < sizes[i])
    path = [start]
    while True:
        cur = path[-1]
        if len(path) > 1:
            back = [g for g in range(len(path) - 1) if t[cur, path[g]] > 0]
            if back:
                cyc = tuple(path[max(back):])
                break
        nxt = next(j for j in range(k) if j != cur and t[cur, j] > 0)
        if nxt in path:
            cyc = tuple(path[path.index(nxt):])
            break
        path.append(nxt)
    return Cycle(cyc, _representatives(x, y, cyc))


def _representatives(x: Assignment, y: Assignment, cyc: tuple) -> tuple:
    xa, ya = x.array, y.array
    reps = []
    for s in range(1, len(cyc) + 1):
        a, b = cyc[s - 1], cyc[s % len(cyc)]
        hits = np.flatnonzero((xa == a) & (ya == b))
        reps.append(int(hits[0]))
    return tuple(reps)


def apply_cycle(y: Assignment, cyc: Cycle, x: Assignment | None = None) -> Assignment:
    """Recolor each representative u_s with c_{i_{s-1}}; other vertices keep their color in ``y``."""
    colors = list(y.colors)
    l = len(cyc.colors)
    if len(cyc.representatives) != l:
        raise ModelError("cycle carries no representative vertices")
    for s, u in enumerate(cyc.representatives, start=1):
        prev, cur = cyc.colors[s - 1], cyc.colors[s % l]
        if colors[u] != cur or (x is not None and x.colors[u] != prev):
            raise ModelError(f"vertex {u} is not in S[{prev},{cur}]")
        colors[u] = prev
    return Assignment(tuple(colors), y.palette)
