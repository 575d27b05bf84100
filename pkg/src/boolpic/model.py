"""Sampling the Boolean model on [0,1]^d.

N ~ Poisson(lambda) germs, uniform in the cube, each carrying an i.i.d. radius
from a :data:`RadiusLaw`. Every trial draws from its own child stream
``SeedSequence(seed, spawn_key=(stream_index,))`` so results never depend on
how trials are scheduled across workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Union

import numpy as np

from .geometry import NormKind, Picture


@dataclass(frozen=True)
class Constant:
    c: float

    def __post_init__(self) -> None:
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError(f"constant radius must be positive, got {self.c}")

    def quantile(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.c)

    def cdf(self, z):
        return (np.asarray(z, dtype=float) >= self.c).astype(float)

    @property
    def support_max(self) -> float:
        return self.c

    def to_json(self) -> dict[str, Any]:
        return {"kind": "const", "c": self.c}


@dataclass(frozen=True)
class PowerLaw:
    """Density (alpha / r_max^alpha) z^(alpha-1) on [0, r_max]."""

    alpha: float
    r_max: float

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not (self.r_max > 0 and math.isfinite(self.r_max)):
            raise ValueError(f"r_max must be positive, got {self.r_max}")

    def quantile(self, u):
        return self.r_max * np.asarray(u, dtype=float) ** (1.0 / self.alpha)

    def cdf(self, z):
        z = np.clip(np.asarray(z, dtype=float), 0.0, self.r_max)
        return (z / self.r_max) ** self.alpha

    @property
    def density_bound(self) -> float:
        """sup of the density; finite only for alpha >= 1."""
        if self.alpha < 1:
            return math.inf
        return self.alpha / self.r_max

    @property
    def support_max(self) -> float:
        return self.r_max

    def to_json(self) -> dict[str, Any]:
        return {"kind": "powerlaw", "alpha": self.alpha, "r_max": self.r_max}


RadiusLaw = Union[Constant, PowerLaw]


def parse_radius_law(text: str) -> RadiusLaw:
    """Parse ``const:<c>`` or ``powerlaw:<alpha>:<rmax>``."""
    parts = text.strip().split(":")
    try:
        if parts[0] == "const" and len(parts) == 2:
            return Constant(float(parts[1]))
        if parts[0] == "powerlaw" and len(parts) == 3:
            return PowerLaw(float(parts[1]), float(parts[2]))
    except ValueError as exc:
        raise ValueError(f"bad radius law {text!r}: {exc}") from None
    raise ValueError(f"bad radius law {text!r}; expected const:<c> or powerlaw:<alpha>:<rmax>")


def radius_law_from_json(obj: dict[str, Any]) -> RadiusLaw:
    kind = obj.get("kind")
    if kind == "const":
        return Constant(float(obj["c"]))
    if kind == "powerlaw":
        return PowerLaw(float(obj["alpha"]), float(obj["r_max"]))
    raise ValueError(f"unknown radius law kind {kind!r}")


def radius_quantile(law: RadiusLaw, u: float) -> float:
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"quantile level must lie in [0, 1], got {u}")
    return float(law.quantile(u))


@dataclass(frozen=True)
class ModelConfig:
    dim: int
    norm: NormKind
    lam: float
    radius_law: RadiusLaw
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "norm", NormKind.parse(self.norm))
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dim}")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def to_json(self) -> dict[str, Any]:
        return {
            "dim": self.dim,
            "norm": self.norm.value,
            "lambda": self.lam,
            "radius_law": self.radius_law.to_json(),
            "seed": self.seed,
        }


def stream_rng(seed: int, stream_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream_index,)))


@dataclass(frozen=True, eq=False)
class BooleanSample:
    config: ModelConfig
    centers: np.ndarray
    radii: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.centers, dtype=float).reshape(-1, self.config.dim)
        r = np.asarray(self.radii, dtype=float).reshape(-1)
        if c.shape[0] != r.shape[0]:
            raise ValueError("centers and radii have different lengths")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "radii", r)

    @property
    def n(self) -> int:
        return self.radii.shape[0]

    @property
    def dim(self) -> int:
        return self.config.dim

    @property
    def norm(self) -> NormKind:
        return self.config.norm

    @property
    def picture(self) -> Picture:
        return Picture(self.config.dim, self.config.norm, self.centers, self.radii)

    def to_json(self) -> str:
        obj = self.config.to_json()
        obj["centers"] = self.centers.tolist()
        obj["radii"] = self.radii.tolist()
        return _dump(obj)

    @classmethod
    def from_json(cls, text: str) -> "BooleanSample":
        obj = json.loads(text)
        cfg = ModelConfig(
            dim=int(obj["dim"]),
            norm=NormKind.parse(obj["norm"]),
            lam=float(obj["lambda"]),
            radius_law=radius_law_from_json(obj["radius_law"]),
            seed=int(obj["seed"]),
        )
        return cls(cfg, np.array(obj["centers"], dtype=float), np.array(obj["radii"], dtype=float))


def _dump(obj: Any) -> str:
    """JSON with a fixed key order and every float at 17 significant digits."""

    def enc(v: Any) -> str:
        if isinstance(v, dict):
            return "{" + ", ".join(f"{json.dumps(k)}: {enc(x)}" for k, x in v.items()) + "}"
        if isinstance(v, list):
            return "[" + ", ".join(enc(x) for x in v) + "]"
        if isinstance(v, float):
            if not math.isfinite(v):
                raise ValueError("non-finite value in sample")
            return format(v, ".17g")
        return json.dumps(v)

    return enc(obj) + "\n"


def sample_model(config: ModelConfig, stream_index: int) -> BooleanSample:
    """One realization, deterministic in (config.seed, stream_index)."""
    rng = stream_rng(config.seed, stream_index)
    n = int(rng.poisson(config.lam))
    centers = rng.random((n, config.dim))
    # 1 - U lies in (0, 1], so power-law radii are strictly positive
    u = 1.0 - rng.random(n)
    radii = config.radius_law.quantile(u)
    return BooleanSample(config, centers, radii)
