"""Static-ensemble spectral laws at finite N.

All checks work with the rescaled matrix ``J(t)/sqrt(N t)`` of a process
started from zero, whose law does not depend on ``t``.  The laws are
N -> infinity statements, so these are smoke tests with generous
tolerances and an ``asymptotic_regime`` flag rather than hypothesis tests.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import ArgumentError
from .process import check_tau, increments_from_normals, stream
from .reports import VerificationReport, verdict_report
from .spectral import decompose_batch

__all__ = [
    "StatsConfig",
    "overlap_profile_check",
    "elliptic_law_check",
    "pooled_eigenvalues",
    "semicircle_cdf",
    "semicircle_check",
    "weak_nonhermiticity_scaling",
    "write_cloud_csv",
]

# below this size the limit laws are not expected to be accurate
ASYMPTOTIC_N = 50
INFLATE = 0.05
TAG_STATS = 2**32 + 21


@dataclass(frozen=True)
class StatsConfig:
    N: int = 200
    tau: float = 0.0
    t: float = 1.0
    samples: int = 20
    alpha: float = 1.0
    bins: int = 10
    seed: int = 0

    def __post_init__(self):
        if int(self.N) < 2:
            raise ArgumentError("N must be at least 2")
        if int(self.samples) < 1 or int(self.bins) < 1:
            raise ArgumentError("samples and bins must be positive")
        if not self.t > 0:
            raise ArgumentError("t must be positive")
        if not self.alpha >= 0:
            raise ArgumentError("alpha must be non-negative")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "samples", int(self.samples))
        object.__setattr__(self, "bins", int(self.bins))
        object.__setattr__(self, "tau", check_tau(self.tau))
        object.__setattr__(self, "seed", int(self.seed))

    def with_(self, **kw) -> "StatsConfig":
        return replace(self, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "StatsConfig":
        known = {"N", "tau", "t", "samples", "alpha", "bins", "seed"}
        extra = set(d) - known
        if extra:
            raise ArgumentError(f"unknown StatsConfig keys: {sorted(extra)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {"N": self.N, "tau": self.tau, "t": self.t, "samples": self.samples,
                "alpha": self.alpha, "bins": self.bins, "seed": self.seed}


def _static_matrices(cfg: StatsConfig, s: int) -> np.ndarray:
    rng = stream(cfg.seed, TAG_STATS, cfg.N, s)
    g = rng.standard_normal((2, cfg.N, cfg.N))
    return increments_from_normals(g, cfg.tau, cfg.t)


def pooled_eigenvalues(cfg: StatsConfig, raw: bool = False) -> np.ndarray:
    """Eigenvalues of ``samples`` independent ``J(t)``, pooled.

    Scaled by ``1/sqrt(N t)`` unless ``raw``.  Sample ``s`` draws from its
    own stream keyed by ``(seed, N, s)``.
    """
    eigs = np.concatenate([np.linalg.eigvals(_static_matrices(cfg, s))
                           for s in range(cfg.samples)])
    return eigs if raw else eigs / math.sqrt(cfg.N * cfg.t)


def write_cloud_csv(path, eigenvalues) -> None:
    """Eigenvalue cloud with columns ``re, im`` (17 significant digits)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re", "im"])
        for z in np.asarray(eigenvalues, dtype=np.complex128):
            w.writerow([f"{z.real:.17g}", f"{z.imag:.17g}"])


def elliptic_law_check(cfg: StatsConfig, eigenvalues=None, rings: int = 4,
                       sectors: int = 8) -> VerificationReport:
    """Fraction of scaled eigenvalues inside the 5%-inflated ellipse.

    The ellipse has semiaxes ``1 + tau`` (real) and ``1 - tau`` (imaginary);
    the check passes when the fraction is at least 0.99.  A chi-square
    statistic of uniformity over equal-area elliptical cells (``rings``
    annuli in ``r^2`` times ``sectors`` angles) is attached for information.
    """
    tau = cfg.tau
    if abs(tau) == 1.0:
        raise ArgumentError("the ellipse is degenerate at tau = +-1")
    z = pooled_eigenvalues(cfg) if eigenvalues is None else np.asarray(eigenvalues)
    u = z.real / (1.0 + tau)
    v = z.imag / (1.0 - tau)
    r2 = u * u + v * v
    inside = float(np.mean(r2 <= (1.0 + INFLATE) ** 2))
    ring = np.minimum((np.minimum(r2, 1.0) * rings).astype(int), rings - 1)
    sector = ((np.arctan2(v, u) + math.pi) / (2 * math.pi) * sectors).astype(int) % sectors
    counts = np.bincount(ring * sectors + sector, minlength=rings * sectors)
    chi2, p = stats.chisquare(counts)
    return verdict_report("elliptic law inside fraction", 0.99, inside, inside >= 0.99, z.size,
                          rule="fraction >= 0.99", inflation=INFLATE, chi2=float(chi2),
                          chi2_p_value=float(p), cells=rings * sectors, N=cfg.N, tau=tau,
                          asymptotic_regime=cfg.N >= ASYMPTOTIC_N)


def semicircle_cdf(x):
    """Distribution function of the semicircle law on ``[-2, 2]``."""
    x = np.clip(np.asarray(x, dtype=float), -2.0, 2.0)
    return 0.5 + x * np.sqrt(4.0 - x * x) / (4.0 * math.pi) + np.arcsin(x / 2.0) / math.pi


def semicircle_check(cfg: StatsConfig, eigenvalues=None, tol: float = 0.05) -> VerificationReport:
    """KS distance between scaled Hermitian spectra and the semicircle."""
    if cfg.tau != 1.0:
        raise ArgumentError("the semicircle check needs tau = 1")
    raw = pooled_eigenvalues(cfg, raw=True) if eigenvalues is None else np.asarray(eigenvalues)
    max_imag = float(np.max(np.abs(raw.imag)))
    x = raw.real / math.sqrt(cfg.N * cfg.t)
    ks = stats.kstest(x, semicircle_cdf)
    return verdict_report("semicircle KS distance", 0.0, ks.statistic, ks.statistic <= tol,
                          x.size, tol=tol, p_value=float(ks.pvalue), max_abs_imag=max_imag,
                          real_within_1e_10=max_imag <= 1e-10, N=cfg.N,
                          asymptotic_regime=cfg.N >= ASYMPTOTIC_N)


def weak_nonhermiticity_scaling(cfg: StatsConfig, Ns: Sequence[int] = (50, 100, 200),
                                scaled: bool = True, tol: float = 0.25) -> VerificationReport:
    """Fitted exponent of ``std(Im lambda)`` against N.

    With ``scaled`` the Hermiticity is ``tau = 1 - alpha/N`` for every N
    and the exponent should be -1; otherwise ``cfg.tau`` is kept fixed and
    the exponent should be 0 (strong non-Hermiticity control).
    """
    stds = []
    taus = []
    for n in Ns:
        tau = 1.0 - cfg.alpha / n if scaled else cfg.tau
        sub = cfg.with_(N=int(n), tau=tau)
        stds.append(float(np.std(pooled_eigenvalues(sub).imag)))
        taus.append(sub.tau)
    stds = np.array(stds)
    theory = -1.0 if scaled else 0.0
    name = "weak non-hermiticity exponent" if scaled else "fixed-tau exponent"
    details = dict(Ns=list(Ns), taus=taus, std_imag=stds, alpha=cfg.alpha, tol=tol)
    if np.all(stds < 1e-10):
        # alpha = 0 (or tau = 1): spectra are real and there is nothing to fit
        return verdict_report(name + " (degenerate)", 0.0, float(stds.max()), True,
                              len(Ns), **details)
    if np.any(stds <= 0):
        return verdict_report(name, theory, math.nan, False, len(Ns), **details)
    slope = float(np.polyfit(np.log(Ns), np.log(stds), 1)[0])
    return verdict_report(name, theory, slope, abs(slope - theory) <= tol, len(Ns), **details)


def overlap_profile_check(cfg: StatsConfig, bulk: float = 0.8,
                           tol: float = 0.15) -> VerificationReport:
    """Mean diagonal overlap divided by N, binned by ``|z|``, against ``1 - |z|^2``.

    Bins have width ``1/bins`` on ``[0, 1]``; those whose center is at most
    ``bulk`` enter the pass criterion (relative deviation <= ``tol``).
    The reported estimate is the worst bulk-bin ratio.
    """
    if cfg.tau != 0.0:
        raise ArgumentError("the overlap profile check needs tau = 0")
    zs, Os = [], []
    for s in range(cfg.samples):
        eigs, _, _, O, _ = decompose_batch(_static_matrices(cfg, s)[None])
        zs.append(eigs[0] / math.sqrt(cfg.N * cfg.t))
        Os.append(np.real(np.diagonal(O[0])))
    z = np.abs(np.concatenate(zs))
    o = np.concatenate(Os) / cfg.N
    edges = np.linspace(0.0, 1.0, cfg.bins + 1)
    rows = []
    worst, worst_ratio = 0.0, 1.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = (z >= lo) & (z < hi)
        if not m.any():
            continue
        center = 0.5 * (lo + hi)
        pred = float(np.mean(1.0 - z[m] ** 2))
        ratio = float(np.mean(o[m])) / pred
        is_bulk = center <= bulk
        rows.append({"center": center, "count": int(m.sum()), "mean_O_over_N": float(np.mean(o[m])),
                     "predicted": pred, "ratio": ratio, "bulk": is_bulk})
        if is_bulk and abs(ratio - 1.0) >= worst:
            worst, worst_ratio = abs(ratio - 1.0), ratio
    ok = bool(any(r["bulk"] for r in rows) and worst <= tol)
    return verdict_report("overlap profile (bulk)", 1.0, worst_ratio, ok, z.size, tol=tol,
                          bins=rows, N=cfg.N, asymptotic_regime=cfg.N >= ASYMPTOTIC_N)
