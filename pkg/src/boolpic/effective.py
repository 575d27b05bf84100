"""Effective number of balls of a picture.

K is the smallest number of the sample's balls whose clipped union equals the
whole picture. Coverage is decided from the :class:`~boolpic.geometry.CoverMap`
of the picture: a kept set reproduces S exactly when it meets every coverage
pattern, so K is a minimum hitting set over those patterns.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .geometry import DEFAULT_RESOLUTION, EPS, CoverMap, norm_rows, cover_map
from .model import BooleanSample

DEFAULT_LIMIT = 20


class TooLargeInstance(RuntimeError):
    """The exhaustive minimum search would exceed the free-ball limit."""

    def __init__(self, free: int, limit: int):
        super().__init__(f"{free} undecided balls exceed the exhaustive-search limit of {limit}")
        self.free = free
        self.limit = limit


class RepresentationKind(str, enum.Enum):
    IRREDUCIBLE = "irreducible"
    MINIMAL = "minimal"
    FULL = "full"


@dataclass(frozen=True, eq=False)
class Representation:
    sample: BooleanSample
    kept: tuple[int, ...]
    kind: RepresentationKind
    resolution: float

    def __len__(self) -> int:
        return len(self.kept)


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _as_mask(indices) -> int:
    m = 0
    for i in indices:
        m |= 1 << int(i)
    return m


def _map(sample: BooleanSample, h: float) -> CoverMap:
    return cover_map(sample.picture, h)


def essential_indices(sample: BooleanSample, h: float = DEFAULT_RESOLUTION) -> list[int]:
    """Balls with a point covered by no other ball; members of every representation."""
    cmap = _map(sample, h)
    return sorted(_bits(m)[0] for m in cmap.masks if m & (m - 1) == 0)


def _irreducible_from_map(sample: BooleanSample, cmap: CoverMap) -> list[int]:
    order = sorted(range(sample.n), key=lambda i: (sample.radii[i], i))
    kept = (1 << sample.n) - 1
    for i in order:
        bit = 1 << i
        # dropping i is allowed iff every pattern containing i still meets another kept ball
        if all((m & kept) != bit for m in cmap.masks if m & bit):
            kept ^= bit
    return _bits(kept)


def reduce_irreducible(sample: BooleanSample, h: float = DEFAULT_RESOLUTION) -> Representation:
    """Greedy deletion by increasing radius (ties by index).

    One pass is enough: deleting a ball can only make the remaining balls
    harder to delete, so a ball kept once stays non-removable.
    """
    kept = _irreducible_from_map(sample, _map(sample, h))
    return Representation(sample, tuple(kept), RepresentationKind.IRREDUCIBLE, h)


def _drop_supersets(masks: list[int]) -> list[int]:
    out: list[int] = []
    for m in sorted(set(masks), key=lambda v: (bin(v).count("1"), v)):
        if not any(o & m == o for o in out):
            out.append(m)
    return out


def _min_hitting_set(masks: list[int], universe: list[int]) -> int:
    """Lexicographically first minimum-cardinality subset of ``universe``
    (sorted ball indices) meeting every mask, returned as a bitmask."""
    masks = _drop_supersets(masks)
    if not masks:
        return 0
    suffix = [0] * (len(universe) + 1)
    for j in range(len(universe) - 1, -1, -1):
        suffix[j] = suffix[j + 1] | (1 << universe[j])

    def search(pos: int, chosen: int, budget: int) -> int | None:
        unhit = [m for m in masks if not m & chosen]
        if not unhit:
            return chosen
        if budget == 0:
            return None
        avail = suffix[pos]
        # patterns pairwise disjoint on the available balls need distinct picks
        used = 0
        need = 0
        for m in unhit:
            ma = m & avail
            if not ma:
                return None
            if not ma & used:
                used |= ma
                need += 1
                if need > budget:
                    return None
        for j in range(pos, len(universe)):
            found = search(j + 1, chosen | (1 << universe[j]), budget - 1)
            if found is not None:
                return found
        return None

    for size in range(1, len(universe) + 1):
        found = search(0, 0, size)
        if found is not None:
            return found
    raise AssertionError("coverage patterns cannot be hit by the sample's own balls")


def minimal_representation(
    sample: BooleanSample, h: float = DEFAULT_RESOLUTION, limit: int = DEFAULT_LIMIT
) -> Representation:
    """A minimum kept set: essential balls plus the lexicographically first
    smallest completion. Raises :class:`TooLargeInstance` when more than
    ``limit`` balls remain undecided after the essential ones are forced in."""
    cmap = _map(sample, h)
    essential = _as_mask(_bits(m)[0] for m in cmap.masks if m & (m - 1) == 0)
    residual = [m for m in cmap.masks if not m & essential]
    free = sorted(_bits(_or_all(residual)))
    if len(free) > limit:
        raise TooLargeInstance(len(free), limit)
    chosen = _min_hitting_set(residual, free)
    kept = tuple(sorted(_bits(essential | chosen)))
    return Representation(sample, kept, RepresentationKind.MINIMAL, h)


def _or_all(masks: list[int]) -> int:
    out = 0
    for m in masks:
        out |= m
    return out


def exact_k(sample: BooleanSample, h: float = DEFAULT_RESOLUTION, limit: int = DEFAULT_LIMIT) -> int:
    """Minimum number of balls reproducing the picture (0 for an empty sample)."""
    if sample.n == 0:
        return 0
    return len(minimal_representation(sample, h, limit))


def k_bracket(sample: BooleanSample, h: float = DEFAULT_RESOLUTION) -> tuple[int, int]:
    """Cheap bounds (#essential, #irreducible) on K from a single cover map."""
    cmap = _map(sample, h)
    lo = sum(1 for m in cmap.masks if m & (m - 1) == 0)
    return lo, len(_irreducible_from_map(sample, cmap))


def exact_k_1d(sample: BooleanSample) -> int:
    """Exact K in one dimension by greedy interval covering per component."""
    if sample.dim != 1:
        raise ValueError("exact_k_1d needs a one-dimensional sample")
    if sample.n == 0:
        return 0
    lo = np.clip(sample.centers[:, 0] - sample.radii, 0.0, 1.0)
    hi = np.clip(sample.centers[:, 0] + sample.radii, 0.0, 1.0)
    order = np.lexsort((-hi, lo))
    lo, hi = lo[order], hi[order]
    count = 0
    i = 0
    n = lo.size
    while i < n:
        # new component starting at lo[i]; lo[i] has the largest hi among ties
        frontier = hi[i]
        count += 1
        i += 1
        while i < n and lo[i] <= frontier + EPS:
            best = frontier
            while i < n and lo[i] <= frontier + EPS:
                best = max(best, hi[i])
                i += 1
            if best > frontier:
                frontier = best
                count += 1
    return count


def _contained_matrix(sample: BooleanSample) -> np.ndarray:
    """C[k, i] is True when ball k lies inside ball i (i != k), unclipped.

    Identical balls contain each other; only the later index is treated as
    contained so that such a pair still counts once.
    """
    c, r = sample.centers, sample.radii
    dist = norm_rows(c[:, None, :] - c[None, :, :], sample.norm)
    inside = dist <= r[None, :] - r[:, None] + EPS
    same = (dist <= EPS) & (np.abs(r[None, :] - r[:, None]) <= EPS)
    idx = np.arange(sample.n)
    inside &= ~same | (idx[None, :] < idx[:, None])
    np.fill_diagonal(inside, False)
    return inside


def kprime(sample: BooleanSample) -> int:
    """Number of balls not contained in any single other ball."""
    if sample.n == 0:
        return 0
    return int(sample.n - _contained_matrix(sample).any(axis=1).sum())


class CollectionAction(str, enum.Enum):
    NEW_BOX = "new-box"
    REPLACE = "replace"
    SKIP = "skip"
    BAND_ADD = "band-add"


@dataclass(frozen=True)
class CollectionStep:
    step: int
    box_id: int
    action: CollectionAction


@dataclass
class CollectionTrace:
    n_boxes: int
    kc: int
    s_m: int
    kprime: int
    log: list[CollectionStep] = field(default_factory=list)
    collection: tuple[int, ...] = ()

    @property
    def invariant_holds(self) -> bool:
        return self.kprime <= self.kc <= self.n_boxes + self.s_m


def cells_per_axis(n: int, d: int) -> int:
    """Smallest q with q^d >= n."""
    q = max(1, int(round(n ** (1.0 / d))))
    while q**d < n:
        q += 1
    while q > 1 and (q - 1) ** d >= n:
        q -= 1
    return q


def collection_run(sample: BooleanSample, n: int) -> CollectionTrace:
    """Online per-box collection over the balls in arrival order.

    The cube is cut into q^d boxes with q = ceil(n^(1/d)). Each box remembers
    the ball of largest radius R* seen so far. A new ball in a non-empty box
    replaces that ball if its radius exceeds R* + band, is skipped if below
    R* - band, and is otherwise added (a band event), with band = di n^(-1/d)
    for the cube diameter di.
    """
    if n < 1:
        raise ValueError("box parameter n must be >= 1")
    d = sample.dim
    q = cells_per_axis(n, d)
    band = sample.norm.cube_diameter(d) * n ** (-1.0 / d)
    cells = np.minimum((sample.centers * q).astype(np.int64), q - 1)
    box_ids = np.ravel_multi_index(cells.T, (q,) * d) if sample.n else np.zeros(0, dtype=np.int64)

    best: dict[int, int] = {}
    collection: set[int] = set()
    log: list[CollectionStep] = []
    s_m = 0
    for k in range(sample.n):
        box = int(box_ids[k])
        r = sample.radii[k]
        if box not in best:
            best[box] = k
            collection.add(k)
            action = CollectionAction.NEW_BOX
        else:
            r_star = sample.radii[best[box]]
            if r > r_star + band:
                collection.discard(best[box])
                collection.add(k)
                best[box] = k
                action = CollectionAction.REPLACE
            elif r < r_star - band:
                action = CollectionAction.SKIP
            else:
                collection.add(k)
                s_m += 1
                if r > r_star:
                    best[box] = k
                action = CollectionAction.BAND_ADD
        log.append(CollectionStep(k, box, action))
    return CollectionTrace(
        n_boxes=q**d,
        kc=len(collection),
        s_m=s_m,
        kprime=kprime(sample),
        log=log,
        collection=tuple(sorted(collection)),
    )
