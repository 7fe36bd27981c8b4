"""Report suites run by the command-line interface and the acceptance tests.

Every suite is a pure function of its parameters and seed and returns a
list of :class:`VerificationReport`.  Random matrices are drawn from
streams keyed by ``(seed, tag, ...)`` so that suites never share draws.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import Sequence

import numpy as np

from .linalg import (_squared_minor_terms, _triple_sum_terms, char_poly, compound_det, det,
                     elementary_symmetric, principal_minor_sum, random_cmatrix,
                     twice_cofactor_det)
from .process import Initial, MatrixState, SimConfig, entry_covariance_report, sample_static, stream
from .reports import apply_family_threshold, tolerance_report, verdict_report
from .sde_verify import (QVTarget, non_collision_report, verify_char_poly_derivatives,
                         verify_drift, verify_gradient_inner_products, verify_implicit_derivatives,
                         verify_laplacian, verify_martingale_term, verify_qv,
                         verify_vandermonde_martingale)
from .spectral import decompose, overlap_det_matrix, simulate_ensemble
from .spectral_stats import (StatsConfig, overlap_profile_check, elliptic_law_check,
                             semicircle_check, weak_nonhermiticity_scaling)
from .two_by_two import (closed_form_overlaps, verify_covariation_rate, verify_exponential_law,
                         verify_negative_covariation, verify_o11_drift, verify_o11_qv)

TAG_IDENTITIES = 2**32 + 31
TAG_BRIDGE = 2**32 + 32
TAG_STATES = 2**32 + 33


class _Worst:
    """Track the worst relative error of a family of deterministic checks."""

    def __init__(self, name, tol):
        self.name, self.tol = name, tol
        self.rel, self.theory, self.estimate, self.scale, self.count = -1.0, 0, 0, 1.0, 0

    def add(self, theory, estimate, scale):
        self.count += 1
        scale = max(float(scale), 1e-300)
        rel = abs(complex(estimate) - complex(theory)) / scale
        if rel > self.rel:
            self.rel, self.theory, self.estimate, self.scale = rel, theory, estimate, scale

    def report(self, **details):
        return tolerance_report(self.name, self.theory, self.estimate, self.tol,
                                scale=self.scale, samples=self.count, **details)


def simple_matrix(n: int, rng, min_gap: float = 0.05, max_overlap: float = 50.0,
                  tau=None) -> np.ndarray:
    """Random matrix with a comfortably simple spectrum.

    Standard complex Gaussian entries, or a static sample of the process
    at ``tau`` when given; redrawn until the eigenvalue gap and the
    diagonal overlaps are moderate, which keeps finite differences and
    nearest-eigenvalue matching well conditioned.
    """
    for _ in range(10_000):
        if tau is None:
            J = random_cmatrix(n, rng)
        else:
            J = sample_static(SimConfig(N=n, tau=tau), 1.0, rng).J
        if n == 1:
            return np.array(J)
        frame = decompose(J)
        if frame.min_gap >= min_gap and frame.overlaps.diagonal().real.max() <= max_overlap:
            return np.array(J)
    raise RuntimeError("could not draw a well-conditioned matrix")


# ---------------------------------------------------------------- identities

def identities_suite(seed: int = 0, matrices: int = 100, sizes: Sequence[int] = range(3, 9),
                     tol: float = 1e-8) -> list:
    """Determinant identities on random complex matrices, worst case per size.

    Covers the char-poly derivative routes, principal minor sums against
    elementary symmetric polynomials, the twice-cofactor expansion, the
    Cauchy-Binet formula, the squared minor-sum identity and the vanishing
    triple sum.
    """
    reports = []
    for n in sizes:
        rng = stream(seed, TAG_IDENTITIES, n)
        fam = {key: _Worst(f"{key} N={n}", tol) for key in
               ("char poly routes", "principal minors", "twice cofactor", "cauchy-binet",
                "squared minor sum", "triple sum")}
        for _ in range(matrices):
            A = random_cmatrix(n, rng)
            B = random_cmatrix(n, rng)
            eigs = np.linalg.eigvals(A)
            for i, lam in enumerate(eigs):
                via_minors = char_poly(A, lam)
                via_eigs = char_poly(A, lam, route="eigen", eigenvalues=eigs)
                fam["char poly routes"].add(via_eigs.d1, via_minors.d1, abs(via_eigs.d1))
                fam["char poly routes"].add(via_eigs.d2, via_minors.d2,
                                            max(abs(via_eigs.d2), abs(via_eigs.d1)))
                pair = 2.0 * np.sum(1.0 / (lam - np.delete(eigs, i)))
                fam["char poly routes"].add(pair, via_minors.d2 / via_minors.d1,
                                            max(abs(pair), 1.0))
            for k in range(1, n + 1):
                e = elementary_symmetric(eigs, k)
                bound = elementary_symmetric(np.abs(eigs), k).real
                fam["principal minors"].add(e, principal_minor_sum(A, k), max(abs(e), bound))
            d = det(A)
            for k, l in combinations(range(1, n + 1), 2):
                fam["twice cofactor"].add(d, twice_cofactor_det(A, k, l), abs(d))
            C = A @ B
            alpha = sorted(rng.choice(n, 2, replace=False) + 1)
            beta = sorted(rng.choice(n, 2, replace=False) + 1)
            terms = [compound_det(A, alpha, g) * compound_det(B, g, beta)
                     for g in combinations(range(1, n + 1), 2)]
            fam["cauchy-binet"].add(compound_det(C, alpha, beta), sum(terms),
                                    max(abs(t) for t in terms))
            for lam in (eigs[0], 0.0):
                lhs, rhs, scale = _squared_minor_terms(A, lam, eigs)
                fam["squared minor sum"].add(rhs, lhs, scale)
            total, biggest = _triple_sum_terms(eigs)
            fam["triple sum"].add(0.0, total, biggest)
        reports += [f.report(N=n) for f in fam.values()]
    return reports


def overlap_bridge_suite(seed: int = 0, matrices: int = 100, sizes: Sequence[int] = range(2, 9),
                         tol: float = 1e-7) -> list:
    """Determinant-formula overlaps against biorthogonal eigenvectors.

    Per size: worst relative error over all pairs (scaled by
    ``sqrt(O_ii O_jj)``), smallest diagonal overlap (>= 1 - 1e-8), row sums
    (equal to 1), and ``O = I`` for Hermitian samples.
    """
    reports = []
    for n in sizes:
        rng = stream(seed, TAG_BRIDGE, n)
        bridge = _Worst(f"overlap det vs eigvec N={n}", tol)
        rows = _Worst(f"overlap row sums N={n}", tol)
        herm = _Worst(f"hermitian overlaps = I N={n}", 1e-8)
        smallest = math.inf
        for _ in range(matrices):
            J = random_cmatrix(n, rng)
            frame = decompose(J)
            Od = overlap_det_matrix(J, frame.eigenvalues)
            O = frame.overlaps
            d = O.diagonal().real
            scale = np.sqrt(np.outer(d, d))
            k = np.unravel_index(np.argmax(np.abs(Od - O) / scale), O.shape)
            bridge.add(O[k], Od[k], scale[k])
            rs = O.sum(axis=1)
            w = int(np.argmax(np.abs(rs - 1.0)))
            rows.add(1.0, rs[w], d.max())
            smallest = min(smallest, float(d.min()))
            H = sample_static(SimConfig(N=n, tau=1.0), 1.0, rng)
            Oh = decompose(H).overlaps
            w = np.unravel_index(np.argmax(np.abs(Oh - np.eye(n))), Oh.shape)
            herm.add(float(w[0] == w[1]), Oh[w], 1.0)
        reports += [bridge.report(N=n), rows.report(N=n), herm.report(N=n),
                    verdict_report(f"diagonal overlaps >= 1 N={n}", 1.0, smallest,
                                   smallest >= 1.0 - 1e-8, matrices * n, N=n)]
    return reports


# ---------------------------------------------------------------- derivative checks

def derivative_suite(seed: int = 0, sizes: Sequence[int] = (1, 2, 3, 4),
                     taus: Sequence[float] = (0.0, 0.5, 1.0)) -> list:
    """Implicit derivatives, Laplacians and gradient identities on random states."""
    reports = []
    for n in sizes:
        for tau in taus:
            rng = stream(seed, TAG_STATES, n, int(round(tau * 1000)) % 2**16)
            J = simple_matrix(n, rng, min_gap=0.2, max_overlap=20.0)
            st = MatrixState(0.0, J)
            for i in range(n):
                reports.append(verify_implicit_derivatives(st, tau, i))
                if n > 1:
                    reports.append(verify_laplacian(st, tau, i))
                reports += verify_gradient_inner_products(st, tau, i)
            reports += verify_char_poly_derivatives(st, tau, complex(rng.standard_normal(),
                                                                     rng.standard_normal()))
    return reports


# ---------------------------------------------------------------- SDE checks

def drift_state(cfg: SimConfig, rng) -> MatrixState:
    """Frozen state for one-step checks: a static sample of the process at ``cfg.tau``."""
    return MatrixState(0.0, simple_matrix(cfg.N, rng, min_gap=0.3, max_overlap=10.0,
                                          tau=cfg.tau))


def drift_suite(seed: int = 0, taus: Sequence[float] = (-1.0, -0.5, 0.0, 0.5, 1.0),
                sizes: Sequence[int] = (2, 3, 5), draws: int = 100_000, dt: float = 1e-5,
                labels: Sequence[int] = (0,)) -> list:
    """One-step drift estimates for eigenvalues ``labels`` on frozen random states."""
    reports = []
    for tau in taus:
        for n in sizes:
            cfg = SimConfig(N=n, tau=tau, seed=seed)
            rng = stream(seed, TAG_STATES, 7, n, int(round((tau + 1) * 1000)))
            st = drift_state(cfg, rng)
            for i in labels:
                reports.append(verify_drift(st, cfg, i, draws, dt))
    return reports


def qv_targets(n: int) -> list:
    """Bracket targets without symmetric duplicates."""
    out = []
    for kind in ("RR", "II", "complex_holomorphic", "complex_mixed"):
        out += [QVTarget(kind, (i, j)) for i in range(1, n + 1) for j in range(i, n + 1)]
    out += [QVTarget("RI", (i, j)) for i in range(1, n + 1) for j in range(1, n + 1)]
    return out


def qv_suite(cfg: SimConfig, threads: int = 1, tracks=None) -> list:
    if tracks is None:
        tracks = simulate_ensemble(cfg, store_overlaps=True, threads=threads)
    return [verify_qv(tracks, t) for t in qv_targets(cfg.N)]


def verify_suite(cfg: SimConfig, draws: int = 20_000, vandermonde_replicas: int = 2000,
                 threads: int = 1) -> list:
    """Checks of the eigenvalue dynamics for one configuration.

    Entry covariances, overlap formula and identity (Hermitian case),
    derivative identities at a sampled state, one-step drift and
    linearization for every eigenvalue, realized brackets and non-collision
    along ``cfg.replicas`` paths, and the inverse Vandermonde martingale.
    """
    rng = stream(cfg.seed, TAG_STATES, 99)
    reports = entry_covariance_report(cfg.with_(dt=1.0), max(draws, 1000))
    st = drift_state(cfg, rng)
    frame = decompose(st)
    Od = overlap_det_matrix(st, frame.eigenvalues)
    d = frame.overlaps.diagonal().real
    scale = np.sqrt(np.outer(d, d))
    k = np.unravel_index(np.argmax(np.abs(Od - frame.overlaps) / scale), Od.shape)
    reports.append(tolerance_report("overlap det vs eigvec", frame.overlaps[k], Od[k], 1e-7,
                                    scale=scale[k]))
    if abs(cfg.tau) == 1.0:
        w = np.unravel_index(np.argmax(np.abs(frame.overlaps - np.eye(cfg.N))), Od.shape)
        reports.append(tolerance_report("overlaps identity (normal matrix)", float(w[0] == w[1]),
                                        frame.overlaps[w], 1e-8, scale=1.0))
    reports.append(verdict_report("diagonal overlaps >= 1", 1.0, float(d.min()),
                                  d.min() >= 1.0 - 1e-8, cfg.N))
    for i in range(cfg.N):
        reports.append(verify_implicit_derivatives(st, cfg.tau, i))
        if cfg.N > 1:
            reports.append(verify_laplacian(st, cfg.tau, i))
            reports += verify_gradient_inner_products(st, cfg.tau, i)
        reports.append(verify_drift(st, cfg, i, draws))
        reports.append(verify_martingale_term(st, cfg, i))
    tracks = simulate_ensemble(cfg, store_overlaps=True, threads=threads)
    reports += qv_suite(cfg, tracks=tracks)
    reports.append(non_collision_report(tracks))
    if cfg.N >= 2 and vandermonde_replicas:
        vcfg = cfg.with_(replicas=vandermonde_replicas, dt=1e-3, steps=50,
                         initial=Initial("diagonal", tuple(np.arange(cfg.N) - (cfg.N - 1) / 2)))
        reports += verify_vandermonde_martingale(vcfg, threads=threads)
    return apply_family_threshold(reports)


def non_collision_suite(seed: int = 0, sizes: Sequence[int] = (2, 4),
                        taus: Sequence[float] = (0.0, 0.5, 1.0), replicas: int = 100,
                        T: float = 1.0, dt: float = 1e-3, threads: int = 1) -> list:
    reports = []
    for n in sizes:
        for tau in taus:
            cfg = SimConfig(N=n, tau=tau, dt=dt, steps=int(round(T / dt)), seed=seed,
                            replicas=replicas)
            r = non_collision_report(simulate_ensemble(cfg, store_overlaps=False,
                                                       threads=threads))
            r.name = f"non-collision N={n} tau={tau:g}"
            reports.append(r)
    return reports


def vandermonde_suite(seed: int = 0, taus: Sequence[float] = (0.0, 0.8), N: int = 3,
                      T: float = 0.05, dt: float = 1e-3, replicas: int = 10_000,
                      threads: int = 1) -> list:
    reports = []
    values = tuple(np.arange(N) - (N - 1) / 2)
    for tau in taus:
        cfg = SimConfig(N=N, tau=tau, dt=dt, steps=int(round(T / dt)), seed=seed,
                        replicas=replicas, initial=Initial("diagonal", values))
        for r in verify_vandermonde_martingale(cfg, threads=threads):
            r.name = f"{r.name} tau={tau:g}"
            reports.append(r)
    return reports


# ---------------------------------------------------------------- N = 2

def two_by_two_suite(seed: int = 0, taus: Sequence[float] = (0.0, 0.5, 0.7),
                     draws: int = 100_000, matrices: int = 100, replicas: int = 500,
                     exp_samples: int = 10_000) -> list:
    reports = []
    rng = stream(seed, TAG_STATES, 2)
    fam = _Worst("2x2 closed form vs determinant formula", 1e-10)
    rel = _Worst("2x2 O11 + O12 = 1", 1e-10)
    smallest = math.inf
    for _ in range(matrices):
        J = random_cmatrix(2, rng)
        f = closed_form_overlaps(J)
        Od = overlap_det_matrix(J, np.array([f.lambda1, f.lambda2]))
        fam.add(Od[0, 0], f.O11, f.O11)
        fam.add(Od[0, 1], f.O12, f.O11)
        rel.add(1.0, f.O11 + f.O12, f.O11)
        smallest = min(smallest, f.O11)
    reports += [fam.report(), rel.report(),
                verdict_report("2x2 O11 >= 1", 1.0, smallest, smallest >= 1.0 - 1e-12, matrices)]
    for tau in taus:
        cfg = SimConfig(N=2, tau=tau, seed=seed)
        st = drift_state(cfg, stream(seed, TAG_STATES, 22, int(round(tau * 1000))))
        for fn in (verify_o11_drift, verify_o11_qv, verify_covariation_rate):
            r = fn(st, cfg, draws)
            r.name = f"{r.name} tau={tau:g}"
            reports.append(r)
    for tau in (0.0, 0.5):
        cfg = SimConfig(N=2, tau=tau, dt=1e-4, steps=1000, seed=seed, replicas=replicas,
                        initial=Initial("diagonal", (-1.0, 1.0)))
        for r in verify_negative_covariation(cfg):
            r.name = f"{r.name} tau={tau:g}"
            reports.append(r)
        for r in verify_exponential_law(cfg, 1.0, exp_samples):
            r.name = f"{r.name} tau={tau:g}"
            reports.append(r)
    return reports


# ---------------------------------------------------------------- spectral laws

def stats_suite(cfg: StatsConfig, profile_samples: int = 1000) -> list:
    """Elliptic law at ``cfg.tau`` and its mirror, semicircle, scaling, overlap profile."""
    reports = []
    if abs(cfg.tau) < 1.0:
        reports.append(elliptic_law_check(cfg))
        if cfg.tau != 0.0:
            r = elliptic_law_check(cfg.with_(tau=-cfg.tau))
            r.name += " (mirrored tau)"
            reports.append(r)
    reports.append(semicircle_check(cfg.with_(tau=1.0, samples=max(cfg.samples, 50))))
    reports.append(weak_nonhermiticity_scaling(cfg))
    ctl = weak_nonhermiticity_scaling(cfg.with_(tau=0.5 if abs(cfg.tau) == 1.0 else cfg.tau),
                                      scaled=False)
    reports.append(ctl)
    reports.append(overlap_profile_check(cfg.with_(N=100, tau=0.0, samples=profile_samples)))
    return reports

