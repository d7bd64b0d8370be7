import numpy as np
import pytest

from memrc.device import DeviceParams
from memrc.encoding import EncodingConfig, encode_batch
from memrc.reservoir import Reservoir
from memrc.variability import (C2CStream, DeviceBank, VariabilityConfig, c2c_stream,
                               sample_device_factors)

P = DeviceParams(tau=6e-9)


def factors(p, n, **kw):
    cfg = VariabilityConfig(d2d_pct=p, vary_lambda_eta=True, **kw)
    rows = [sample_device_factors(cfg, P, d) for d in range(n)]
    x, tau, lam, eta = np.array(rows).T
    return np.concatenate([x / P.x_min, tau / P.tau, lam, eta])


def test_zero_is_exactly_one():
    assert np.all(factors(0.0, 50) == 1.0)


def test_bounds():
    f = factors(0.05, 500)
    assert f.min() >= 0.95 and f.max() <= 1.05


def test_mean_over_draws():
    f = factors(0.2, 2500)
    assert len(f) == 10_000
    assert abs(f.mean() - 1.0) < 0.01


def test_deterministic_per_device():
    cfg = VariabilityConfig(d2d_pct=0.1)
    assert sample_device_factors(cfg, P, 7, run=2) == sample_device_factors(cfg, P, 7, run=2)
    assert sample_device_factors(cfg, P, 7, run=2) != sample_device_factors(cfg, P, 7, run=3)
    assert sample_device_factors(cfg, P, 7) != sample_device_factors(cfg, P, 8)


def test_lambda_eta_fixed_unless_requested():
    f = sample_device_factors(VariabilityConfig(d2d_pct=0.2), P, 0)
    assert (f.lambda_f, f.eta_f) == (1.0, 1.0) and f.tau_eff != P.tau


def test_bank_matches_per_device_draws():
    cfg = VariabilityConfig(d2d_pct=0.2, vary_lambda_eta=True)
    bank = DeviceBank.sample(cfg, P, 10, run=1)
    assert bank.tau_eff[4] == sample_device_factors(cfg, P, 4, 1).tau_eff


def test_gaussian_option():
    cfg = VariabilityConfig(d2d_pct=0.1, distribution="gaussian")
    taus = DeviceBank.sample(cfg, P, 2000).tau_eff / P.tau
    assert taus.std() == pytest.approx(0.1, rel=0.1)


class TestC2C:
    def test_zero_constant(self):
        s = c2c_stream(VariabilityConfig(), 4)
        assert np.all(s.draw(100) == 1.0) and s() == 1.0

    def test_reproducible(self):
        cfg = VariabilityConfig(c2c_pct=0.1)
        assert np.array_equal(c2c_stream(cfg, 1).draw(50), c2c_stream(cfg, 1).draw(50))
        assert not np.array_equal(c2c_stream(cfg, 1).draw(50), c2c_stream(cfg, 2).draw(50))

    def test_support(self):
        d = c2c_stream(VariabilityConfig(c2c_pct=0.2), 0).draw(100_000)
        assert d.max() <= 1.2 and d.min() >= 0.8


@pytest.mark.parametrize("cfg", [VariabilityConfig(), VariabilityConfig(vary_lambda_eta=True)])
def test_zero_percent_path_is_deterministic_path(cfg):
    enc = EncodingConfig("2D", True, 7)
    imgs = np.random.default_rng(0).integers(0, 2, (5, 28, 28), dtype=np.uint8)
    progs = encode_batch(imgs, enc)
    plain = Reservoir(P, progs.shape[1]).run_batch(progs)
    bank = DeviceBank.sample(cfg, P, progs.shape[1])
    c2c = C2CStream(cfg, (0,)).draw(progs.shape)
    assert np.array_equal(Reservoir(P, progs.shape[1], bank=bank).run_batch(progs, c2c), plain)


@pytest.mark.parametrize("kw", [{"d2d_pct": 1.0}, {"c2c_pct": -0.1}, {"runs": 0},
                                {"distribution": "cauchy"}])
def test_invalid(kw):
    with pytest.raises(ValueError):
        VariabilityConfig(**kw)
