import json
import math

import numpy as np
import pytest
from scipy import stats

from boolpic.geometry import NormKind
from boolpic.model import (
    BooleanSample,
    Constant,
    ModelConfig,
    PowerLaw,
    parse_radius_law,
    radius_quantile,
    sample_model,
)


def cfg(lam=2.0, law=None, dim=2, seed=123):
    return ModelConfig(dim, NormKind.L2, lam, law or PowerLaw(1, 0.5), seed)


def test_radius_quantile_examples():
    assert radius_quantile(PowerLaw(1, 1), 0.5) == 0.5
    assert radius_quantile(PowerLaw(2, 1), 0.25) == 0.5
    assert radius_quantile(Constant(0.3), 0.9) == 0.3
    with pytest.raises(ValueError):
        radius_quantile(PowerLaw(1, 1), 1.5)
    with pytest.raises(ValueError):
        radius_quantile(Constant(0.3), -0.1)


def test_law_validation():
    for bad in (lambda: Constant(0), lambda: PowerLaw(0, 1), lambda: PowerLaw(1, -1)):
        with pytest.raises(ValueError):
            bad()
    assert PowerLaw(2, 0.5).density_bound == 4.0
    assert PowerLaw(0.5, 1).density_bound == math.inf


def test_parse_radius_law():
    assert parse_radius_law("const:0.3") == Constant(0.3)
    assert parse_radius_law("powerlaw:2:0.5") == PowerLaw(2.0, 0.5)
    for bad in ("const", "const:x", "powerlaw:1", "uniform:1", "const:-1"):
        with pytest.raises(ValueError):
            parse_radius_law(bad)


def test_config_validation():
    with pytest.raises(ValueError):
        cfg(lam=0)
    with pytest.raises(ValueError):
        ModelConfig(0, NormKind.L2, 1.0, Constant(0.1))
    with pytest.raises(ValueError):
        ModelConfig(1, NormKind.L2, 1.0, Constant(0.1), seed=-1)


def test_constant_law_gives_constant_radii():
    for s in range(50):
        smp = sample_model(cfg(lam=5, law=Constant(0.3)), s)
        assert np.all(smp.radii == 0.3)


def test_samples_live_in_cube_and_respect_support():
    law = PowerLaw(1.5, 0.4)
    for s in range(200):
        smp = sample_model(cfg(lam=6, law=law, dim=3), s)
        assert smp.centers.shape == (smp.n, 3)
        assert np.all((smp.centers >= 0) & (smp.centers < 1))
        assert np.all((smp.radii > 0) & (smp.radii <= 0.4))


def test_determinism_per_stream():
    a = sample_model(cfg(), 17)
    b = sample_model(cfg(), 17)
    assert a.to_json() == b.to_json()
    assert a.to_json() != sample_model(cfg(), 18).to_json()
    assert a.to_json() != sample_model(cfg(seed=124), 17).to_json()


def test_poisson_mean():
    n = np.array([sample_model(cfg(lam=2.0), s).n for s in range(100_000)])
    assert abs(n.mean() - 2.0) <= 3 * math.sqrt(2.0 / 100_000)
    # per-bin histogram check against the pmf
    counts = np.bincount(n)
    for k, observed in enumerate(counts):
        expected = 100_000 * stats.poisson.pmf(k, 2.0)
        if expected >= 50:
            se = math.sqrt(expected * (1 - expected / 100_000))
            assert abs(observed - expected) <= 4 * se, k


def test_uniform_radius_mean():
    r = np.concatenate([sample_model(cfg(lam=10, law=PowerLaw(1, 0.5)), s).radii for s in range(10_000)])
    r = r[:100_000]
    se = 0.5 / math.sqrt(12) / math.sqrt(len(r))
    assert abs(r.mean() - 0.25) <= 3 * se


@pytest.mark.parametrize("alpha,rmax", [(1.0, 0.5), (2.0, 1.0), (0.5, 0.3)])
def test_powerlaw_ks(alpha, rmax):
    law = PowerLaw(alpha, rmax)
    r = np.concatenate([sample_model(cfg(lam=5, law=law, seed=99), s).radii for s in range(4000)])[:10_000]
    assert len(r) == 10_000
    res = stats.kstest(r, lambda z: law.cdf(z))
    assert res.pvalue > 1e-3


def test_json_roundtrip_and_schema():
    smp = sample_model(cfg(lam=4, law=PowerLaw(2, 0.5), seed=7), 3)
    text = smp.to_json()
    obj = json.loads(text)
    assert list(obj) == ["dim", "norm", "lambda", "radius_law", "seed", "centers", "radii"]
    assert obj["radius_law"] == {"kind": "powerlaw", "alpha": 2, "r_max": 0.5}
    back = BooleanSample.from_json(text)
    np.testing.assert_array_equal(back.centers, smp.centers)
    np.testing.assert_array_equal(back.radii, smp.radii)
    assert back.to_json() == text
    assert text.endswith("\n")


def test_json_floats_carry_17_digits():
    smp = BooleanSample(cfg(law=Constant(0.1)), [[0.1, 1 / 3]], [0.1])
    text = smp.to_json()
    assert "0.33333333333333331" in text
    assert '"c": 0.10000000000000001' in text


def test_empty_sample_roundtrip():
    smp = BooleanSample(cfg(), np.zeros((0, 2)), [])
    back = BooleanSample.from_json(smp.to_json())
    assert back.n == 0 and back.centers.shape == (0, 2)
