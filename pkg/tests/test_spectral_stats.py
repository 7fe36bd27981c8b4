import csv
import math

import numpy as np
import pytest

from egedyn.errors import ArgumentError
from egedyn.spectral_stats import (StatsConfig, overlap_profile_check, elliptic_law_check,
                                   pooled_eigenvalues, semicircle_cdf, semicircle_check,
                                   weak_nonhermiticity_scaling, write_cloud_csv)


def test_semicircle_cdf_values():
    assert semicircle_cdf(-2.0) == 0.0
    assert semicircle_cdf(2.0) == pytest.approx(1.0)
    assert semicircle_cdf(0.0) == pytest.approx(0.5)
    assert semicircle_cdf(1.0) == pytest.approx(0.5 + math.sqrt(3) / (4 * math.pi) + 1 / 6)
    assert semicircle_cdf(5.0) == pytest.approx(1.0)


def test_stats_config_validation():
    for kw in ({"N": 1}, {"samples": 0}, {"t": 0.0}, {"alpha": -1.0}, {"tau": 1.5}):
        with pytest.raises(ArgumentError):
            StatsConfig(**kw)
    with pytest.raises(ArgumentError):
        StatsConfig.from_dict({"N": 10, "foo": 1})
    cfg = StatsConfig(N=10, tau=0.2)
    assert StatsConfig.from_dict(cfg.to_dict()) == cfg


def test_scaled_spectrum_is_time_invariant():
    a = pooled_eigenvalues(StatsConfig(N=30, tau=0.3, t=1.0, samples=2))
    b = pooled_eigenvalues(StatsConfig(N=30, tau=0.3, t=4.0, samples=2))
    assert np.allclose(np.sort_complex(a), np.sort_complex(b), atol=1e-12)


def test_semicircle_hermitian():
    r = semicircle_check(StatsConfig(N=200, tau=1.0, samples=50))
    assert r.passed
    assert r.details["max_abs_imag"] <= 1e-10
    assert r.details["asymptotic_regime"]


def test_semicircle_small_n_flagged():
    r = semicircle_check(StatsConfig(N=2, tau=1.0, samples=5))
    assert r.details["asymptotic_regime"] is False
    with pytest.raises(ArgumentError):
        semicircle_check(StatsConfig(N=10, tau=0.5))


@pytest.mark.parametrize("tau", [0.0, 0.5, -0.5])
def test_elliptic_law(tau):
    r = elliptic_law_check(StatsConfig(N=200, tau=tau, samples=20))
    assert r.passed and r.estimate.real >= 0.99


def test_elliptic_law_mirror():
    # tau -> -tau maps the cloud to i times itself: same inside fraction
    a = elliptic_law_check(StatsConfig(N=100, tau=0.4, samples=5))
    b = elliptic_law_check(StatsConfig(N=100, tau=-0.4, samples=5))
    assert a.estimate == pytest.approx(b.estimate, abs=0.02)


def test_elliptic_law_arguments():
    r = elliptic_law_check(StatsConfig(N=2, tau=0.0, samples=5))
    assert r.details["asymptotic_regime"] is False
    for tau in (1.0, -1.0):
        with pytest.raises(ArgumentError):
            elliptic_law_check(StatsConfig(N=10, tau=tau))


def test_weak_scaling_exponent():
    r = weak_nonhermiticity_scaling(StatsConfig(alpha=1.0, samples=20))
    assert r.passed and abs(r.estimate + 1.0) <= 0.25


def test_fixed_tau_control():
    r = weak_nonhermiticity_scaling(StatsConfig(tau=0.5, samples=20), scaled=False)
    assert r.passed and abs(r.estimate) <= 0.25


def test_weak_scaling_degenerate_alpha():
    r = weak_nonhermiticity_scaling(StatsConfig(alpha=0.0, samples=2), Ns=(20, 40))
    assert r.passed and "degenerate" in r.name


def test_overlap_profile_structure():
    r = overlap_profile_check(StatsConfig(N=50, samples=20))
    centers = [row["center"] for row in r.details["bins"]]
    assert centers == sorted(centers)
    assert all(row["bulk"] == (row["center"] <= 0.8) for row in r.details["bins"])
    with pytest.raises(ArgumentError):
        overlap_profile_check(StatsConfig(N=50, tau=0.1))


def test_cloud_csv(tmp_path):
    eigs = pooled_eigenvalues(StatsConfig(N=10, samples=2))
    p = tmp_path / "cloud.csv"
    write_cloud_csv(p, eigs)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["re", "im"] and len(rows) == 21
    back = np.array([complex(float(a), float(b)) for a, b in rows[1:]])
    assert np.array_equal(back, eigs)
