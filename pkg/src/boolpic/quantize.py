"""Constructive Hausdorff quantizers for Boolean-model pictures.

Two codebooks are built:

* the generic per-ball encoder: take a (minimal when feasible) representation
  with k balls and quantize its k centres and k normalized radii on a product
  grid of at most e^(r-k) points (so the codebook has at most e^r entries);
* the one-dimensional grid codebook for constant radius: unions of intervals
  with endpoints on a grid of step eps, restricted to shapes a picture with
  radius c can actually take.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .effective import DEFAULT_LIMIT, TooLargeInstance, minimal_representation, reduce_irreducible
from .geometry import (
    DEFAULT_RESOLUTION,
    NormKind,
    Picture,
    clipped_intervals,
    interval_hausdorff,
    union_hausdorff,
)
from .model import BooleanSample, Constant, ModelConfig, RadiusLaw, sample_model
from .tails import NoTheoremError


# ---------------------------------------------------------------------------
# product grid on [0,1]^l


@dataclass(frozen=True)
class GridPoint:
    y: np.ndarray
    M: int

    @property
    def grid_error(self) -> float:
        return 0.5 / self.M


def grid_size(ell: int, rho: float) -> int:
    """Largest per-axis count M >= 1 with M^ell <= e^rho (M = 1 always allowed)."""
    if ell < 1:
        raise ValueError("grid dimension must be >= 1")
    if not rho > 0:
        raise ValueError(f"rate budget must be positive, got {rho}")
    m = max(1, int(math.floor(math.exp(min(rho / ell, 700.0)))))
    while m > 1 and ell * math.log(m) > rho + 1e-12:
        m -= 1
    return m


def cube_grid_quantize(x: Sequence[float], rho: float) -> GridPoint:
    """Nearest point of the cell-centre grid with M = floor(e^(rho/l)) points per axis."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if np.any((x < 0) | (x > 1)):
        raise ValueError("point must lie in the unit cube")
    m = grid_size(x.size, rho)
    return GridPoint(_snap(x, m), m)


def _snap(x: np.ndarray, m: int) -> np.ndarray:
    k = np.clip(np.floor(x * m), 0, m - 1)
    return (k + 0.5) / m


# ---------------------------------------------------------------------------
# per-ball encoder


@dataclass(frozen=True, eq=False)
class EncodedPicture:
    picture: Picture
    grid_error: float
    M: int
    representation_size: int
    sentinel: bool = False
    minimal: bool = True

    @property
    def k(self) -> int:
        return len(self.picture)

    @property
    def quantized_balls(self):
        return self.picture.balls


def _representation(sample: BooleanSample, h: float, limit: int) -> tuple[tuple[int, ...], bool]:
    if sample.n == 0:
        return (), True
    try:
        return minimal_representation(sample, h, limit).kept, True
    except TooLargeInstance:
        return reduce_irreducible(sample, h).kept, False


def encode_picture(
    sample: BooleanSample, r: float, h: float = DEFAULT_RESOLUTION, limit: int = DEFAULT_LIMIT
) -> EncodedPicture:
    """Quantize the balls of a representation of the picture at rate r.

    k balls cost k nats for the index plus a product grid of e^(r-k) points
    for the (d+1)k parameters. When k exceeds r the whole cube is returned.
    """
    if not r > 0:
        raise ValueError("rate must be positive")
    d, norm = sample.dim, sample.norm
    kept, minimal = _representation(sample, h, limit)
    k = len(kept)
    if k == 0:
        return EncodedPicture(Picture.empty(d, norm), 0.0, 1, 0, minimal=minimal)
    if k > r:
        return EncodedPicture(Picture.full_cube(d, norm), 0.5, 1, k, sentinel=True, minimal=minimal)
    diam = norm.cube_diameter(d)
    idx = np.array(kept)
    vec = np.concatenate([sample.centers[idx].reshape(-1), np.minimum(sample.radii[idx], diam) / diam])
    m = 1 if r - k <= 0 else grid_size(vec.size, r - k)
    y = _snap(vec, m)
    centers = y[: k * d].reshape(k, d)
    radii = y[k * d:] * diam
    return EncodedPicture(Picture(d, norm, centers, radii), 0.5 / m, m, k, minimal=minimal)


def coding_bound(d: int, norm: NormKind, grid_error: float) -> float:
    """Per-sample guarantee (d+1) * diam * grid_error of the per-ball encoder."""
    return (d + 1) * NormKind.parse(norm).cube_diameter(d) * grid_error


# ---------------------------------------------------------------------------
# one-dimensional grid codebook


def d1_m(c: float) -> float:
    """m = max{k : 2kc < 1} for c < 1/2, and 1/2 otherwise."""
    if not c > 0:
        raise ValueError("radius must be positive")
    if c >= 0.5:
        return 0.5
    m = int(math.floor(1.0 / (2 * c)))
    while 2 * m * c >= 1:
        m -= 1
    return float(m)


def eps_for_rate(c: float, r: float) -> float:
    """eps solving m eps^(-2m) = e^r."""
    m = d1_m(c)
    return m ** (1 / (2 * m)) * math.exp(-r / (2 * m))


def d1_grid(eps: float) -> np.ndarray:
    """{0} together with eps, 2 eps, ..., floor(1/eps) eps, and 1."""
    if not 0 < eps < 1:
        raise ValueError(f"grid step must lie in (0, 1), got {eps}")
    k = int(math.floor(1.0 / eps + 1e-9))
    pts = np.arange(0, k + 1) * eps
    pts = pts[pts < 1 - 1e-12]
    return np.append(pts, 1.0)


@dataclass
class Codebook:
    """Finite family of one-dimensional pictures.

    Entries are the empty set and unions of pairwise separated intervals
    [p_a, p_b] over grid points, where a component touching 0 or 1 has length
    at least c - eps and any other component length at least 2c - eps (so
    every rounding of a realizable picture is an entry). ``entries`` is only
    materialized for small grids; ``size`` is always exact.
    """

    c: float
    eps: float
    grid: np.ndarray
    size: int
    rate: float = math.nan
    entries: list[list[tuple[float, float]]] | None = None
    meta: dict = field(default_factory=dict)

    def contains(self, intervals: Sequence[tuple[float, float]]) -> bool:
        idx = []
        for a, b in intervals:
            ia, ib = _grid_index(self.grid, a), _grid_index(self.grid, b)
            if ia is None or ib is None:
                return False
            idx.append((ia, ib))
        return _valid_components(idx, self.grid, self.c, self.eps)

    def encode(self, intervals: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
        """Round component endpoints to the nearest grid point and merge."""
        g = self.grid
        out: list[list[int]] = []
        for a, b in intervals:
            ia = int(np.argmin(np.abs(g - a)))
            ib = int(np.argmin(np.abs(g - b)))
            if out and ia <= out[-1][1]:
                out[-1][1] = max(out[-1][1], ib)
            else:
                out.append([ia, ib])
        return [(float(g[a]), float(g[b])) for a, b in out]

    def pictures(self, norm: NormKind = NormKind.L2) -> list[Picture]:
        if self.entries is None:
            raise ValueError("codebook too large to materialize")
        return [intervals_to_picture(e, norm) for e in self.entries]


def intervals_to_picture(intervals: Sequence[tuple[float, float]], norm: NormKind = NormKind.L2) -> Picture:
    """A picture whose clipped union is the given list of intervals."""
    if not intervals:
        return Picture.empty(1, norm)
    centers, radii = [], []
    for a, b in intervals:
        centers.append([(a + b) / 2])
        radii.append(max((b - a) / 2, 1e-300))
    return Picture(1, norm, np.array(centers), np.array(radii))


def _grid_index(g: np.ndarray, v: float) -> int | None:
    i = int(np.argmin(np.abs(g - v)))
    return i if abs(g[i] - v) <= 1e-12 else None


def _min_lengths(c: float, eps: float) -> tuple[float, float]:
    return c - eps - 1e-12, 2 * c - eps - 1e-12


def _valid_components(idx: Sequence[tuple[int, int]], g: np.ndarray, c: float, eps: float) -> bool:
    edge, inner = _min_lengths(c, eps)
    last = len(g) - 1
    prev = -2
    for a, b in idx:
        if a > b or a <= prev:
            return False
        need = edge if a == 0 or b == last else inner
        if g[b] - g[a] < need:
            return False
        prev = b
    return True


def _valid_starts(g: np.ndarray, b: int, c: float, eps: float) -> tuple[bool, int]:
    """For a component ending at index b: whether a = 0 is allowed, and the
    largest allowed start among a >= 1 (or a = 0 too when b is the last
    index, since every such component is an edge component)."""
    edge, inner = _min_lengths(c, eps)
    t = len(g) - 1
    need = edge if b == t else inner
    a_max = min(b, int(np.searchsorted(g, g[b] - need, side="right")) - 1)
    return bool(g[b] >= edge), a_max


def _entry_counts(g: np.ndarray, c: float, eps: float) -> list[int]:
    """E[b]: number of non-empty entries whose last component ends at index b."""
    t = len(g) - 1
    ends: list[int] = []
    cum_e = 0  # sum of E[b'] for b' < b
    prefix_w = [0]  # prefix_w[a] = W[0] + ... + W[a-1]
    for b in range(t + 1):
        # W[b]: ways to fill [0, g[b]) before a component starting at index b
        prefix_w.append(prefix_w[-1] + 1 + cum_e)
        zero_ok, a_max = _valid_starts(g, b, c, eps)
        total = 0
        if a_max >= 1:
            total += prefix_w[a_max + 1] - prefix_w[1]
        if zero_ok:
            total += 1
        ends.append(total)
        cum_e += total
    return ends


def codebook_size(g: np.ndarray, c: float, eps: float) -> int:
    return 1 + sum(_entry_counts(g, c, eps))


def _enumerate(g: np.ndarray, c: float, eps: float) -> Iterator[list[tuple[int, int]]]:
    t = len(g) - 1
    starts = [_valid_starts(g, b, c, eps) for b in range(t + 1)]

    def ending_at(b: int) -> Iterator[list[tuple[int, int]]]:
        zero_ok, a_max = starts[b]
        if zero_ok:
            yield [(0, b)]
        for a in range(1, a_max + 1):
            yield [(a, b)]
            for b_prev in range(a):
                for head in ending_at(b_prev):
                    yield head + [(a, b)]

    yield []
    for b in range(t + 1):
        yield from ending_at(b)


MATERIALIZE_LIMIT = 200_000


def d1_codebook(c: float, eps: float, materialize: bool | None = None) -> Codebook:
    """Grid codebook for one-dimensional pictures with constant radius c."""
    if not c > 0:
        raise ValueError("radius must be positive")
    g = d1_grid(eps)
    size = codebook_size(g, c, eps)
    if materialize is None:
        materialize = size <= MATERIALIZE_LIMIT
    entries = None
    if materialize:
        entries = [[(float(g[a]), float(g[b])) for a, b in e] for e in _enumerate(g, c, eps)]
    return Codebook(c, eps, g, size, math.log(size), entries, {"kind": "d1-grid", "m": d1_m(c)})


@lru_cache(maxsize=64)
def d1_codebook_for_rate(c: float, r: float) -> Codebook:
    """Codebook with at most e^r entries, starting from the step
    eps = m^(1/2m) e^(-r/2m) and coarsening it until the count fits."""
    if not r > 0:
        raise ValueError("rate must be positive")
    budget = math.exp(r)
    eps = eps_for_rate(c, r)
    if eps >= 1 or codebook_size(d1_grid(min(eps, 0.999)), c, eps) > budget:
        lo, hi = min(eps, 0.999), 0.999
        if codebook_size(d1_grid(hi), c, hi) > budget:
            raise ValueError(f"rate {r} too small for any grid codebook")
        for _ in range(60):
            mid = math.sqrt(lo * hi)
            if codebook_size(d1_grid(mid), c, mid) <= budget:
                hi = mid
            else:
                lo = mid
        eps = hi
    book = d1_codebook(c, eps, materialize=False)
    book.rate = r
    book.meta["eps_nominal"] = eps_for_rate(c, r)
    return book


# ---------------------------------------------------------------------------
# distortion curves and theory


@dataclass(frozen=True)
class QuantRate:
    log_lower: float
    log_upper: float
    form: str
    coef_lower: float | None
    coef_upper: float | None


def theoretical_quant_rate(d: int, norm: NormKind, law: RadiusLaw, r: float) -> QuantRate:
    """Leading-order envelopes of log D(r) (the (1+o(1)) factors dropped).

    ``form`` names the growth function g(r); the envelopes are
    -coef * g(r), with a missing coefficient meaning no proven bound.
    """
    norm = NormKind.parse(norm)
    if not r > math.e:
        raise ValueError("rate must exceed e")
    if d == 1:
        if isinstance(law, Constant):
            if law.c >= 1:
                raise NoTheoremError("d=1 constant radius needs c < 1")
            coef = 1.0 / (2 * d1_m(law.c))
            return QuantRate(-coef * r, -coef * r, "r", coef, coef)
        coef = math.sqrt(1 + law.alpha)
        return QuantRate(-math.inf, -coef * math.sqrt(r * math.log(r)), "sqrt(r*log(r))", None, coef)
    g = math.sqrt(r * math.log(r))
    if isinstance(law, Constant):
        if law.c >= 1:
            raise NoTheoremError("constant radius results require c < 1")
        up = math.sqrt(2.0 / (d - 1))
        if norm is NormKind.L1:
            return QuantRate(-up * g, -up * g, "sqrt(r*log(r))", up, up)
        if norm is NormKind.L2:
            lo = math.sqrt(4.0 * (d + 1) / (d * (d - 1)))
            return QuantRate(-lo * g, -up * g, "sqrt(r*log(r))", lo, up)
        raise NoTheoremError("no quantization result for sup-norm balls with constant radius")
    b = math.sqrt(2 * (1 + law.alpha / d) / (d + 1))
    b_bar = math.sqrt(2 * (1 + min(law.alpha, 1.0) / d) / (d + 1))
    return QuantRate(-b * g, -b_bar * g, "sqrt(r*log(r))", b, b_bar)


@dataclass(frozen=True)
class DistortionPoint:
    r: float
    trials: int
    mean_dH: float
    std_err: float
    sentinel_count: int
    theory_log_lower: float = math.nan
    theory_log_upper: float = math.nan


def _uses_d1_codebook(config: ModelConfig) -> bool:
    return config.dim == 1 and isinstance(config.radius_law, Constant)


def trial_distortions(
    config: ModelConfig,
    rates: Sequence[float],
    start: int,
    stop: int,
    h: float = DEFAULT_RESOLUTION,
    limit: int = DEFAULT_LIMIT,
) -> tuple[np.ndarray, np.ndarray]:
    """Distortion and sentinel flag per (trial, rate); each trial's sample is
    shared by all rates."""
    dist = np.zeros((stop - start, len(rates)))
    sentinel = np.zeros((stop - start, len(rates)), dtype=bool)
    books = [d1_codebook_for_rate(config.radius_law.c, r) for r in rates] if _uses_d1_codebook(config) else None
    for t in range(start, stop):
        sample = sample_model(config, t)
        if books is not None:
            ivs = clipped_intervals(sample.picture)
            for j, book in enumerate(books):
                dist[t - start, j] = interval_hausdorff(ivs, book.encode(ivs))
            continue
        for j, r in enumerate(rates):
            enc = encode_picture(sample, r, h, limit)
            sentinel[t - start, j] = enc.sentinel
            dist[t - start, j] = union_hausdorff(sample.picture, enc.picture, h)
    return dist, sentinel


def _chunk(args):
    return trial_distortions(*args)


def distortion_curve(
    config: ModelConfig,
    rates: Sequence[float],
    trials: int,
    h: float = DEFAULT_RESOLUTION,
    limit: int = DEFAULT_LIMIT,
    workers: int = 1,
) -> list[DistortionPoint]:
    """Mean Hausdorff distortion of the constructive codebook at each rate."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rates = [float(r) for r in rates]
    if workers <= 1:
        dist, sent = trial_distortions(config, rates, 0, trials, h, limit)
    else:
        from concurrent.futures import ProcessPoolExecutor

        size = max(1, -(-trials // (4 * workers)))
        jobs = [(config, rates, s, min(s + size, trials), h, limit) for s in range(0, trials, size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk, jobs))
        dist = np.concatenate([p[0] for p in parts])
        sent = np.concatenate([p[1] for p in parts])
    out = []
    for j, r in enumerate(rates):
        col = dist[:, j]
        se = float(col.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        try:
            th = theoretical_quant_rate(config.dim, config.norm, config.radius_law, r)
            lo, up = th.log_lower, th.log_upper
        except (NoTheoremError, ValueError):
            lo = up = math.nan
        out.append(DistortionPoint(r, trials, float(col.mean()), se, int(sent[:, j].sum()), lo, up))
    return out
