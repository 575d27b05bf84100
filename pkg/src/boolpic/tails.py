"""Upper tail of K: predicted exponents, scenario events and Monte Carlo.

The tail is expected to behave like P[K >= n] = exp(-a n log n (1 + o(1))).
:func:`predicted_exponent` returns the bracket on ``a`` proven for a
configuration; :func:`scenario_log_prob` evaluates the probability of an
explicit event forcing K >= n (a certified lower bound on the tail);
:func:`sample_scenario` draws from the model conditioned on that event.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .effective import DEFAULT_LIMIT, TooLargeInstance, exact_k, exact_k_1d, k_bracket
from .geometry import DEFAULT_RESOLUTION, NormKind
from .model import BooleanSample, Constant, ModelConfig, PowerLaw, RadiusLaw, sample_model, stream_rng

DEFAULT_LINF_C1 = 0.05


class NoTheoremError(ValueError):
    """No proven result covers the requested configuration."""


class ScenarioKind(str, enum.Enum):
    L2_CONST = "l2const"
    L1_CONST = "l1const"
    LINF_CONST = "linfconst"
    SMALL_BALLS = "smallballs"

    @property
    def norm(self) -> NormKind | None:
        return {
            "l2const": NormKind.L2,
            "l1const": NormKind.L1,
            "linfconst": NormKind.LINF,
            "smallballs": None,
        }[self.value]


@dataclass(frozen=True)
class ExponentBracket:
    lower_exp: float
    upper_exp: float
    note: str = ""

    def __post_init__(self) -> None:
        if not 1.0 <= self.lower_exp <= self.upper_exp:
            raise ValueError(f"invalid exponent bracket [{self.lower_exp}, {self.upper_exp}]")

    @property
    def tight(self) -> bool:
        return self.lower_exp == self.upper_exp


def predicted_exponent(d: int, norm: NormKind, law: RadiusLaw) -> ExponentBracket:
    """Bracket on ``a`` (not on the probability): a bigger probability lower
    bound means a smaller upper end of the bracket."""
    norm = NormKind.parse(norm)
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if d == 1:
        if isinstance(law, PowerLaw):
            a = 1.0 + law.alpha
            return ExponentBracket(a, a)
        raise NoTheoremError("d=1 with constant radius: K is bounded, the tail vanishes")
    if isinstance(law, Constant):
        if law.c >= 1:
            raise NoTheoremError("constant radius results require c < 1")
        one = 1.0 + 1.0 / (d - 1)
        if norm is NormKind.L1:
            return ExponentBracket(one, one)
        if norm is NormKind.L2:
            return ExponentBracket(one, 1.0 + 2.0 / (d - 1))
        return ExponentBracket(1.0, one, "linf: only a probability lower bound is proven; floor a >= 1 is generic")
    alpha_bar = min(law.alpha, 1.0)
    upper = 1.0 + law.alpha / d
    if norm is NormKind.L1:
        upper = min(upper, 1.0 + 1.0 / (d - 1))
    elif norm is NormKind.L2:
        upper = min(upper, 1.0 + 2.0 / (d - 1))
    note = "" if law.alpha >= 1 else "alpha < 1: density unbounded at 0, the lower end assumes a bounded density"
    return ExponentBracket(1.0 + alpha_bar / d, upper, note)


# ---------------------------------------------------------------------------
# scenario events


def _const_constants(kind: ScenarioKind, d: int) -> tuple[float, float]:
    """(slab constant, exponent p) of the slab height const * n^(-p/(d-1))."""
    if kind is ScenarioKind.L2_CONST:
        return 2.0 ** -(4 + 2.0 / (d - 1)), 2.0
    return 2.0 ** -(2 + 1.0 / (d - 1)), 1.0


def small_ball_constants(d: int) -> tuple[float, float]:
    """(c1, c2) for the radius window [c1, c2] n^(-1/d): 2 c2 stays below the
    sup-norm gap between distinct boxes, so balls are pairwise disjoint in
    every norm dominating the sup-norm."""
    c2 = 2.0 ** (-3 - 1.0 / d)
    return c2 / 2, c2


def _check_scenario(kind: ScenarioKind, d: int, n: int, law: RadiusLaw) -> None:
    if n < 2:
        raise ValueError("scenario events need n >= 2")
    if kind is ScenarioKind.SMALL_BALLS:
        if not isinstance(law, PowerLaw):
            raise ValueError("the small-balls scenario needs a power-law radius")
        return
    if d < 2:
        raise ValueError(f"{kind.value} needs d >= 2")
    if not isinstance(law, Constant) or law.c >= 1:
        raise ValueError(f"{kind.value} needs a constant radius c < 1")


def _small_ball_mass(law: PowerLaw, d: int, n: int) -> float:
    c1, c2 = small_ball_constants(d)
    s = n ** (-1.0 / d)
    return float(law.cdf(c2 * s) - law.cdf(c1 * s))


def scenario_log_prob(
    kind: ScenarioKind,
    d: int,
    lam: float,
    n: int,
    law: RadiusLaw,
    linf_c1: float = DEFAULT_LINF_C1,
) -> float:
    """Natural log of P[E_n] (lower bound on log P[K >= n])."""
    kind = ScenarioKind(kind)
    _check_scenario(kind, d, n, law)
    if not lam > 0:
        raise ValueError("lambda must be positive")
    base = n * math.log(lam) - lam
    if kind is ScenarioKind.LINF_CONST:
        c2 = linf_c1 / (8 * d)
        return base + d * n * math.log(c2 * n ** (-1.0 / (d - 1)))
    if kind is ScenarioKind.SMALL_BALLS:
        mass = _small_ball_mass(law, d, n)
        if mass <= 0:
            return -math.inf
        cell = 0.5 / (2 * n) ** (1.0 / d)
        return base + n * (d * math.log(cell) + math.log(mass))
    const, p = _const_constants(kind, d)
    cell = 0.5 / (2 * n) ** (1.0 / (d - 1))
    slab = const * n ** (-p / (d - 1))
    return base + n * ((d - 1) * math.log(cell) + math.log(slab))


def _scenario_boxes(cells: int, axes: int, n: int) -> np.ndarray:
    """Multi-indices of the first n cells in lexicographic order."""
    if cells**axes < n:
        raise ValueError(f"only {cells**axes} boxes available for n={n}")
    idx = np.array(np.unravel_index(np.arange(n), (cells,) * axes)).T
    return idx.reshape(n, axes)


def sample_scenario(
    kind: ScenarioKind,
    d: int,
    n: int,
    law: RadiusLaw,
    stream_index: int,
    norm: NormKind | None = None,
    lam: float = 1.0,
    seed: int = 0,
) -> BooleanSample:
    """The model conditioned on E_n: n balls, ball i centred uniformly in box V_pi(i)."""
    kind = ScenarioKind(kind)
    if kind is ScenarioKind.LINF_CONST:
        raise ValueError("sampling the sup-norm scenario is not supported")
    _check_scenario(kind, d, n, law)
    norm = NormKind.parse(norm) if norm is not None else (kind.norm or NormKind.L2)
    if kind.norm is not None and norm is not kind.norm:
        raise ValueError(f"{kind.value} is defined for the {kind.norm.value} norm")
    config = ModelConfig(d, norm, lam, law, seed)
    rng = stream_rng(seed, stream_index)
    perm = rng.permutation(n)
    u = rng.random((n, d))
    if kind is ScenarioKind.SMALL_BALLS:
        width = (2 * n) ** (-1.0 / d)
        cells = int(math.floor((2 * n) ** (1.0 / d) + 1e-9))
        boxes = _scenario_boxes(cells, d, n)[perm]
        centers = (boxes + 0.25 + 0.5 * u) * width
        c1, c2 = small_ball_constants(d)
        s = n ** (-1.0 / d)
        lo, hi = law.cdf(c1 * s), law.cdf(c2 * s)
        if not hi > lo:
            raise ValueError("radius law puts no mass on the small-ball window")
        radii = law.quantile(lo + (hi - lo) * rng.random(n))
    else:
        width = (2 * n) ** (-1.0 / (d - 1))
        cells = int(math.floor((2 * n) ** (1.0 / (d - 1)) + 1e-9))
        boxes = _scenario_boxes(cells, d - 1, n)[perm]
        const, p = _const_constants(kind, d)
        slab = const * n ** (-p / (d - 1))
        if slab + law.c > 1:
            raise ValueError("n too small: witness points would leave the cube")
        centers = np.empty((n, d))
        centers[:, : d - 1] = (boxes + 0.25 + 0.5 * u[:, : d - 1]) * width
        centers[:, d - 1] = slab * u[:, d - 1]
        radii = np.full(n, law.c)
    return BooleanSample(config, centers, radii)


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class TailEstimate:
    n: int
    trials: int
    hits: int
    ambiguous: int = 0

    @property
    def p_hat(self) -> float:
        return self.hits / self.trials

    @property
    def std_err(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1 - p) / self.trials)

    @property
    def log_p_over_nlogn(self) -> float:
        if self.hits == 0 or self.n < 2:
            return math.nan
        return math.log(self.p_hat) / (self.n * math.log(self.n))


def k_bounds(
    sample: BooleanSample, h: float = DEFAULT_RESOLUTION, limit: int = DEFAULT_LIMIT, n_min: int = 0
) -> tuple[int, int]:
    """Bracket (lo, hi) on K; lo == hi whenever K was computed exactly.

    Trials that cannot reach ``n_min`` (N < n_min) skip the K computation.
    """
    big_n = sample.n
    if big_n == 0:
        return 0, 0
    if big_n < n_min:
        return 1, big_n
    if sample.dim == 1:
        k = exact_k_1d(sample)
        return k, k
    try:
        k = exact_k(sample, h, limit)
        return k, k
    except TooLargeInstance:
        return k_bracket(sample, h)


def _bounds_chunk(args) -> np.ndarray:
    config, start, stop, h, limit, n_min = args
    out = np.empty((stop - start, 2), dtype=np.int64)
    for t in range(start, stop):
        out[t - start] = k_bounds(sample_model(config, t), h, limit, n_min)
    return out


def simulate_k_bounds(
    config: ModelConfig,
    trials: int,
    h: float = DEFAULT_RESOLUTION,
    limit: int = DEFAULT_LIMIT,
    n_min: int = 0,
    workers: int = 1,
    first_stream: int = 0,
) -> np.ndarray:
    """(trials, 2) array of K brackets for streams first_stream.. in order."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    stop = first_stream + trials
    if workers <= 1:
        return _bounds_chunk((config, first_stream, stop, h, limit, n_min))
    size = max(1, -(-trials // (4 * workers)))
    jobs = [
        (config, s, min(s + size, stop), h, limit, n_min) for s in range(first_stream, stop, size)
    ]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return np.concatenate(list(pool.map(_bounds_chunk, jobs)))


def tail_from_bounds(bounds: np.ndarray, n: int) -> TailEstimate:
    lo, hi = bounds[:, 0], bounds[:, 1]
    hits = int(np.count_nonzero(lo >= n))
    ambiguous = int(np.count_nonzero((lo < n) & (hi >= n)))
    return TailEstimate(n, len(bounds), hits, ambiguous)


def estimate_tail_mc(
    config: ModelConfig,
    n: int,
    trials: int,
    h: float = DEFAULT_RESOLUTION,
    limit: int = DEFAULT_LIMIT,
    workers: int = 1,
) -> TailEstimate:
    """Fraction of trials with K >= n. Trials whose K bracket straddles n are
    counted in ``ambiguous`` and not as hits."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if n <= 0:
        return TailEstimate(n, trials, trials)
    if n == 1:
        # K >= 1 exactly when at least one ball was drawn
        hits = sum(1 for t in range(trials) if stream_rng(config.seed, t).poisson(config.lam) >= 1)
        return TailEstimate(n, trials, hits)
    bounds = simulate_k_bounds(config, trials, h, limit, n_min=n, workers=workers)
    return tail_from_bounds(bounds, n)


def fit_exponent(estimates: Sequence[TailEstimate]) -> float:
    """Estimate ``a`` from tail estimates at several n.

    Fits -log p = a n log n + b n + c by least squares and returns a. The
    linear and constant terms absorb the lambda- and geometry-dependent
    factors that would otherwise bias a pure slope at moderate n.
    """
    pts = [(e.n, e.p_hat) for e in estimates if e.hits > 0 and e.n >= 2]
    if len(pts) < 3:
        raise ValueError("need at least 3 estimates with n >= 2 and hits > 0")
    n = np.array([p[0] for p in pts], dtype=float)
    y = -np.log([p[1] for p in pts])
    design = np.column_stack([n * np.log(n), n, np.ones_like(n)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(coef[0])


# ---------------------------------------------------------------------------
# concentration of the radius law


@dataclass(frozen=True)
class ConcentrationResult:
    measure: float
    bound: float
    holds: bool


def concentration_check(law: RadiusLaw, beta: float, delta: float) -> ConcentrationResult:
    """Lebesgue measure of {x in [0,1] : P[R in [x, x+beta]] > delta beta}
    against (1 - 2 c beta - delta) / c, c the density bound.

    Evaluated at the midpoints of a grid of spacing beta/100.
    """
    if not isinstance(law, PowerLaw):
        raise ValueError("concentration check needs a power-law radius")
    if law.alpha < 1:
        raise ValueError("unbounded density: alpha < 1")
    if not (beta > 0 and delta > 0):
        raise ValueError("beta and delta must be positive")
    c = law.density_bound
    step = beta / 100
    cells = int(math.ceil(1.0 / step))
    x = (np.arange(cells) + 0.5) * step
    width = np.minimum(step, 1.0 - (x - step / 2))
    q = law.cdf(x + beta) - law.cdf(x)
    measure = float(width[q > delta * beta].sum())
    bound = (1 - 2 * c * beta - delta) / c
    return ConcentrationResult(measure, bound, measure > bound)
