"""Norms, balls clipped to the unit cube, coverage predicates and Hausdorff distances.

All sets live in [0, 1]^d. Balls are closed; a point at distance exactly r from
a centre belongs to the ball (with an absolute slack of ``EPS`` so that
round-off never flips a boundary verdict).

In d = 1 every predicate here is exact. In d >= 2 coverage and Hausdorff
distances are evaluated on the cell-centre grid ``(k + 1/2) h`` together with a
handful of distinguished points per ball (centre, axis extremes, and for the
max-norm the box corners). A point found uncovered is a certificate; a
"covered" verdict is only as good as the resolution ``h``.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

EPS = 1e-12
DEFAULT_RESOLUTION = 1.0 / 512
MAX_GRID_POINTS = 1 << 25
# bits per mask word; keeps shifts inside int64
_WORD = 62


class NormKind(str, enum.Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"

    @property
    def p(self) -> float:
        """Minkowski exponent, as understood by scipy's KD-tree."""
        return {"l1": 1.0, "l2": 2.0, "linf": math.inf}[self.value]

    def cube_diameter(self, d: int) -> float:
        """Diameter of [0,1]^d, i.e. the norm of (1, ..., 1)."""
        if self is NormKind.L1:
            return float(d)
        if self is NormKind.L2:
            return math.sqrt(d)
        return 1.0

    @property
    def theta(self) -> float:
        # largest theta with ||x|| >= theta * ||x||_inf for all x
        return 1.0

    @classmethod
    def parse(cls, value: "str | NormKind") -> "NormKind":
        if isinstance(value, NormKind):
            return value
        try:
            return cls(value.lower())
        except ValueError:
            raise ValueError(f"unknown norm {value!r}; expected l1, l2 or linf") from None


def norm_rows(diff: np.ndarray, norm: NormKind) -> np.ndarray:
    """Norm of every row (last axis) of ``diff``."""
    a = np.abs(diff)
    if norm is NormKind.L1:
        return a.sum(axis=-1)
    if norm is NormKind.L2:
        return np.sqrt((a * a).sum(axis=-1))
    return a.max(axis=-1)


def norm_dist(x: Sequence[float], y: Sequence[float], norm: NormKind) -> float:
    """Distance between two points in the chosen norm."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.size} vs {y.size}")
    return float(norm_rows(x - y, NormKind.parse(norm)))


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self) -> None:
        c = tuple(float(v) for v in np.atleast_1d(self.center))
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        if any(not 0.0 <= v <= 1.0 for v in c):
            raise ValueError(f"ball centre {c} lies outside the unit cube")

    @property
    def dim(self) -> int:
        return len(self.center)


@dataclass(frozen=True, eq=False)
class Picture:
    """Union of closed balls intersected with [0,1]^d.

    Stored column-wise (``centers`` is (N, d), ``radii`` is (N,)) because every
    consumer works on arrays.
    """

    dim: int
    norm: NormKind
    centers: np.ndarray
    radii: np.ndarray

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        object.__setattr__(self, "norm", NormKind.parse(self.norm))
        c = np.asarray(self.centers, dtype=float).reshape(-1, self.dim)
        r = np.asarray(self.radii, dtype=float).reshape(-1)
        if c.shape[0] != r.shape[0]:
            raise ValueError("centers and radii have different lengths")
        if np.any(r <= 0):
            raise ValueError("radii must be positive")
        if np.any((c < 0) | (c > 1)):
            raise ValueError("centres must lie in the unit cube")
        c.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "radii", r)

    @classmethod
    def from_balls(cls, dim: int, norm: NormKind, balls: Iterable[Ball]) -> "Picture":
        balls = list(balls)
        for b in balls:
            if b.dim != dim:
                raise ValueError(f"ball of dimension {b.dim} in a {dim}-d picture")
        centers = np.array([b.center for b in balls], dtype=float).reshape(-1, dim)
        radii = np.array([b.radius for b in balls], dtype=float)
        return cls(dim, norm, centers, radii)

    @classmethod
    def empty(cls, dim: int, norm: NormKind) -> "Picture":
        return cls(dim, norm, np.zeros((0, dim)), np.zeros(0))

    @classmethod
    def full_cube(cls, dim: int, norm: NormKind) -> "Picture":
        """The whole cube, as one ball at the cube centre."""
        norm = NormKind.parse(norm)
        return cls(dim, norm, np.full((1, dim), 0.5), [norm.cube_diameter(dim) / 2])

    @property
    def balls(self) -> list[Ball]:
        return [Ball(tuple(c), r) for c, r in zip(self.centers, self.radii)]

    def __len__(self) -> int:
        return self.radii.shape[0]

    def subset(self, indices: Iterable[int]) -> "Picture":
        idx = np.fromiter(indices, dtype=int)
        return Picture(self.dim, self.norm, self.centers[idx], self.radii[idx])

    def without(self, i: int) -> "Picture":
        return self.subset(j for j in range(len(self)) if j != i)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Membership of each row of ``points`` (assumed inside the cube)."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        if len(self) == 0:
            return np.zeros(len(pts), dtype=bool)
        return (self._membership(pts)).any(axis=1)

    def _membership(self, pts: np.ndarray) -> np.ndarray:
        diff = pts[:, None, :] - self.centers[None, :, :]
        return norm_rows(diff, self.norm) <= self.radii[None, :] + EPS


def _same_space(a: Picture, b: Picture) -> None:
    if a.dim != b.dim or a.norm is not b.norm:
        raise ValueError("pictures live in different spaces (dimension or norm differ)")


def _check_resolution(h: float) -> None:
    if not h > 0:
        raise ValueError(f"resolution must be positive, got {h}")


def ball_pair_hausdorff(b1: Ball, b2: Ball, norm: NormKind) -> float:
    """Hausdorff distance between two unclipped balls: centre gap plus radius gap."""
    return norm_dist(b1.center, b2.center, norm) + abs(b1.radius - b2.radius)


def point_in_union(x: Sequence[float], pic: Picture) -> bool:
    return bool(pic.contains(np.asarray(x, dtype=float))[0])


# ---------------------------------------------------------------------------
# grid machinery


def grid_axis(h: float) -> np.ndarray:
    """Cell-centre coordinates (k + 1/2) h inside [0, 1]."""
    _check_resolution(h)
    m = max(1, int(math.floor(1.0 / h + 0.5 + 1e-9)))
    return (np.arange(m) + 0.5) * h


def _grid_shape(d: int, h: float) -> tuple[int, ...]:
    m = grid_axis(h).size
    if m**d > MAX_GRID_POINTS:
        raise ValueError(
            f"grid with spacing {h} in dimension {d} has {m**d} points; use a coarser resolution"
        )
    return (m,) * d


def _ball_window(center: np.ndarray, r: float, axis: np.ndarray, h: float):
    """Index slices of the grid points in the bounding box of a ball, and the
    per-axis coordinate offsets from the centre (shaped for broadcasting)."""
    m = axis.size
    d = center.size
    slices, offsets = [], []
    for k in range(d):
        lo = int(np.clip(math.ceil((center[k] - r - EPS) / h - 0.5), 0, m))
        hi = int(np.clip(math.floor((center[k] + r + EPS) / h - 0.5) + 1, 0, m))
        slices.append(slice(lo, max(lo, hi)))
        shape = [1] * d
        shape[k] = -1
        offsets.append((axis[lo:max(lo, hi)] - center[k]).reshape(shape))
    return tuple(slices), offsets


def _window_inside(offsets: list[np.ndarray], r: float, norm: NormKind) -> np.ndarray:
    if norm is NormKind.L1:
        dist = sum(np.abs(o) for o in offsets)
    elif norm is NormKind.L2:
        dist = np.sqrt(sum(o * o for o in offsets))
    else:
        dist = np.abs(offsets[0])
        for o in offsets[1:]:
            dist = np.maximum(dist, np.abs(o))
    return dist <= r + EPS


def rasterize(pic: Picture, h: float) -> np.ndarray:
    """Boolean grid of the cell centres lying in the picture."""
    axis = grid_axis(h)
    out = np.zeros(_grid_shape(pic.dim, h), dtype=bool)
    for c, r in zip(pic.centers, pic.radii):
        sl, off = _ball_window(c, r, axis, h)
        if all(s.stop > s.start for s in sl):
            out[sl] |= _window_inside(off, r, pic.norm)
    return out


def grid_points(flat_index: np.ndarray, d: int, h: float) -> np.ndarray:
    axis = grid_axis(h)
    idx = np.unravel_index(np.asarray(flat_index), (axis.size,) * d)
    return np.stack([axis[i] for i in idx], axis=-1).reshape(-1, d)


def distinguished_points(pic: Picture) -> np.ndarray:
    """Per ball: centre, axis extremes pulled back into the cube, and for the
    max-norm the (clipped) box corners. Every point returned for ball i lies in
    B_i intersected with the cube. Rows are grouped ball by ball."""
    return np.concatenate([_own_points(pic, i) for i in range(len(pic))] or [np.zeros((0, pic.dim))])


def _own_points(pic: Picture, i: int) -> np.ndarray:
    c = pic.centers[i]
    r = pic.radii[i]
    d = pic.dim
    pts = [c.copy()]
    for k in range(d):
        for s in (1.0, -1.0):
            p = c.copy()
            p[k] = min(1.0, max(0.0, c[k] + s * r))
            pts.append(p)
    if pic.norm is NormKind.LINF and d > 1 and d <= 6:
        for signs in itertools.product((1.0, -1.0), repeat=d):
            pts.append(np.clip(c + r * np.array(signs), 0.0, 1.0))
    return np.array(pts)


def _interval_breakpoints(pic: Picture) -> np.ndarray:
    """All points needed to decide coverage exactly in d = 1: clipped
    endpoints and the midpoint of every elementary segment between them."""
    lo = np.clip(pic.centers[:, 0] - pic.radii, 0.0, 1.0)
    hi = np.clip(pic.centers[:, 0] + pic.radii, 0.0, 1.0)
    ends = np.unique(np.concatenate([lo, hi]))
    mids = (ends[:-1] + ends[1:]) / 2
    return np.concatenate([ends, mids]).reshape(-1, 1)


def _pack(member: np.ndarray) -> np.ndarray:
    """Pack a boolean (P, N) membership matrix into (P, W) int64 words."""
    p, n = member.shape
    words = max(1, -(-n // _WORD))
    out = np.zeros((p, words), dtype=np.int64)
    for w in range(words):
        block = member[:, w * _WORD:(w + 1) * _WORD]
        weights = np.left_shift(np.int64(1), np.arange(block.shape[1], dtype=np.int64))
        out[:, w] = block.astype(np.int64) @ weights
    return out


def _to_int(words: np.ndarray) -> int:
    return sum(int(v) << (_WORD * k) for k, v in enumerate(words))


@dataclass
class CoverMap:
    """Distinct coverage patterns of a picture.

    Each entry of ``masks`` is a non-empty set of ball indices (as an int
    bitmask) such that some sample point of the picture is covered by exactly
    those balls; ``points`` holds one such sample point per mask. A ball set T
    reproduces the picture (at the map's resolution) iff it meets every mask.
    """

    n_balls: int
    masks: list[int]
    points: np.ndarray
    exact: bool
    resolution: float

    def hits_all(self, kept_bits: int) -> bool:
        return all(m & kept_bits for m in self.masks)

    def private_point(self, i: int, kept_bits: int) -> np.ndarray | None:
        """A sample point covered by ball i and by no other ball of ``kept_bits``."""
        target = 1 << i
        for m, p in zip(self.masks, self.points):
            if m & kept_bits == target:
                return p
        return None


def cover_map(pic: Picture, h: float = DEFAULT_RESOLUTION) -> CoverMap:
    _check_resolution(h)
    n = len(pic)
    if n == 0:
        return CoverMap(0, [], np.zeros((0, pic.dim)), pic.dim == 1, h)
    cand = distinguished_points(pic)
    if pic.dim == 1:
        cand = np.concatenate([cand, _interval_breakpoints(pic)])
    cand_words = _pack(pic._membership(cand))
    word_blocks = [cand_words]
    grid_flat = np.zeros(0, dtype=np.int64)
    if pic.dim > 1:
        grid_words, grid_flat = _grid_words(pic, h)
        word_blocks.append(grid_words)
    words = np.concatenate(word_blocks)
    nonzero = words.any(axis=1)
    if words.shape[1] == 1:
        uniq, first = np.unique(words[:, 0], return_index=True)
        uniq = uniq.reshape(-1, 1)
    else:
        uniq, first = np.unique(words, axis=0, return_index=True)
    keep = [k for k in range(len(first)) if nonzero[first[k]]]
    # order masks by first occurrence so distinguished points are preferred witnesses
    keep.sort(key=lambda k: first[k])
    masks = [_to_int(uniq[k]) for k in keep]
    pts = []
    nc = cand.shape[0]
    for k in keep:
        f = first[k]
        if f < nc:
            pts.append(cand[f])
        else:
            pts.append(grid_points(grid_flat[f - nc], pic.dim, h)[0])
    points = np.array(pts).reshape(-1, pic.dim)
    return CoverMap(n, masks, points, pic.dim == 1, h)


def _grid_words(pic: Picture, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Coverage words of the covered grid points and their flat indices."""
    axis = grid_axis(h)
    shape = _grid_shape(pic.dim, h)
    n = len(pic)
    words = max(1, -(-n // _WORD))
    grids = [np.zeros(shape, dtype=np.int64) for _ in range(words)]
    for i, (c, r) in enumerate(zip(pic.centers, pic.radii)):
        sl, off = _ball_window(c, r, axis, h)
        if any(s.stop <= s.start for s in sl):
            continue
        inside = _window_inside(off, r, pic.norm)
        w, b = divmod(i, _WORD)
        grids[w][sl] |= inside.astype(np.int64) << np.int64(b)
    flat = [g.reshape(-1) for g in grids]
    covered = np.flatnonzero(np.logical_or.reduce([f != 0 for f in flat]))
    return np.stack([f[covered] for f in flat], axis=1), covered


def covered_by_others(i: int, pic: Picture, h: float = DEFAULT_RESOLUTION) -> np.ndarray | None:
    """Decide whether ball i (clipped) lies inside the union of the other balls.

    Returns ``None`` when covered (exact in d = 1, at resolution ``h`` in
    d >= 2), otherwise a witness point of B_i in the cube that no other ball
    contains.
    """
    _check_resolution(h)
    n = len(pic)
    if not 0 <= i < n:
        raise IndexError(f"ball index {i} out of range for {n} balls")
    others = pic.without(i)
    own = _own_points(pic, i)
    free = ~others.contains(own)
    if free.any():
        return own[np.argmax(free)]
    cmap = cover_map(pic, h)
    return cmap.private_point(i, (1 << n) - 1)


# ---------------------------------------------------------------------------
# Hausdorff distances


def hausdorff_tolerance(norm: NormKind, d: int, h: float) -> float:
    """Error bound of the grid evaluator of :func:`union_hausdorff`."""
    if d == 1:
        return 0.0
    return 2.0 * h * NormKind.parse(norm).cube_diameter(d)


def clipped_intervals(pic: Picture) -> list[tuple[float, float]]:
    """Connected components of a 1-d picture, sorted, touching ones merged."""
    if pic.dim != 1:
        raise ValueError("interval view requires a 1-dimensional picture")
    lo = np.clip(pic.centers[:, 0] - pic.radii, 0.0, 1.0)
    hi = np.clip(pic.centers[:, 0] + pic.radii, 0.0, 1.0)
    return merge_intervals(zip(lo.tolist(), hi.tolist()))


def merge_intervals(intervals: Iterable[tuple[float, float]]) -> list[tuple[float, float]]:
    out: list[list[float]] = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1] + EPS:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def _dist_to_intervals(x: np.ndarray, ivs: np.ndarray) -> np.ndarray:
    gap = np.maximum(ivs[None, :, 0] - x[:, None], x[:, None] - ivs[None, :, 1])
    return np.maximum(gap, 0.0).min(axis=1)


def directed_hausdorff_1d(a: Sequence[tuple[float, float]], b: Sequence[tuple[float, float]]) -> float:
    """sup over x in A of dist(x, B) for finite unions of closed intervals."""
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    cands = [a.reshape(-1)]
    if len(b) > 1:
        g0, g1 = b[:-1, 1], b[1:, 0]
        mid = (g0 + g1) / 2
        # farthest point of each A interval inside each gap of B
        cands.append(np.clip(mid[None, :], a[:, :1], a[:, 1:]).reshape(-1))
    x = np.concatenate(cands)
    return float(_dist_to_intervals(x, b).max())


def interval_hausdorff(a: Sequence[tuple[float, float]], b: Sequence[tuple[float, float]], diameter: float = 1.0) -> float:
    if len(a) == 0 and len(b) == 0:
        return 0.0
    if len(a) == 0 or len(b) == 0:
        return diameter
    return max(directed_hausdorff_1d(a, b), directed_hausdorff_1d(b, a))


def _boundary(mask: np.ndarray) -> np.ndarray:
    """Grid cells of ``mask`` with an axis neighbour outside it (grid edges
    do not count, the cube faces are not part of the relevant boundary)."""
    inner = mask.copy()
    for k in range(mask.ndim):
        fwd = [slice(None)] * mask.ndim
        bwd = [slice(None)] * mask.ndim
        fwd[k] = slice(1, None)
        bwd[k] = slice(None, -1)
        inner[tuple(bwd)] &= mask[tuple(fwd)]
        inner[tuple(fwd)] &= mask[tuple(bwd)]
    return mask & ~inner


def _directed_grid(a: Picture, b: Picture, mask_a: np.ndarray, mask_b: np.ndarray, h: float) -> float:
    d = a.dim
    outside = np.flatnonzero((mask_a & ~mask_b).reshape(-1))
    pts = [grid_points(outside, d, h)]
    cand_a = distinguished_points(a)
    pts.append(cand_a[~b.contains(cand_a)])
    query = np.concatenate(pts)
    if len(query) == 0:
        return 0.0
    targets = np.concatenate([
        grid_points(np.flatnonzero(_boundary(mask_b).reshape(-1)), d, h),
        distinguished_points(b),
    ])
    dist, _ = cKDTree(targets).query(query, p=a.norm.p)
    return float(dist.max())


def union_hausdorff(a: Picture, b: Picture, h: float = DEFAULT_RESOLUTION) -> float:
    """Hausdorff distance between two clipped ball unions.

    Exact in d = 1. In d >= 2 both sets are replaced by their covered grid
    points plus distinguished points, so the result is within
    :func:`hausdorff_tolerance` of the true value. An empty picture is at
    distance ``cube_diameter`` from any non-empty one.
    """
    _check_resolution(h)
    _same_space(a, b)
    if len(a) == 0 and len(b) == 0:
        return 0.0
    if len(a) == 0 or len(b) == 0:
        return a.norm.cube_diameter(a.dim)
    if a.dim == 1:
        return interval_hausdorff(clipped_intervals(a), clipped_intervals(b))
    return grid_hausdorff(a, b, h)


def grid_hausdorff(a: Picture, b: Picture, h: float = DEFAULT_RESOLUTION) -> float:
    """Grid evaluator behind :func:`union_hausdorff`, usable in any dimension."""
    _check_resolution(h)
    _same_space(a, b)
    if len(a) == 0 and len(b) == 0:
        return 0.0
    if len(a) == 0 or len(b) == 0:
        return a.norm.cube_diameter(a.dim)
    mask_a = rasterize(a, h)
    mask_b = rasterize(b, h)
    return max(_directed_grid(a, b, mask_a, mask_b, h), _directed_grid(b, a, mask_b, mask_a, h))
