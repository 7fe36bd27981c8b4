"""Closed-form overlap dynamics for 2 x 2 matrices.

For N = 2 the diagonal overlap and the squared eigenvalue gap are
symmetric functions of the eigenvalues, so none of the checks here need
eigenvalue labels or eigenvectors:

    O11 = (||J||_F^2 - 2 Re(lambda1 conj lambda2)) / |lambda1 - lambda2|^2
    O12 = (|lambda1|^2 + |lambda2|^2 - ||J||_F^2) / |lambda1 - lambda2|^2
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ArgumentError, DegeneracyError
from .process import MatrixState, SimConfig, check_tau, increments_from_normals, stream
from .reports import VerificationReport, mean_report, statistical_report, verdict_report
from .sde_verify import one_step_increments
from .spectral import DEGENERACY_RTOL, ensemble_paths

__all__ = [
    "TwoByTwoFrame",
    "closed_form_overlaps",
    "o11_drift_theory",
    "o11_qv_theory",
    "overlap_and_gap",
    "verify_covariation_rate",
    "verify_exponential_law",
    "verify_negative_covariation",
    "verify_o11_drift",
    "verify_o11_qv",
]

KS_CAP = 100_000
TAG_O11_DRIFT = 2**32 + 11
TAG_O11_QV = 2**32 + 12
TAG_EXPONENTIAL = 2**32 + 13
TAG_COVARIATION = 2**32 + 14


@dataclass(frozen=True)
class TwoByTwoFrame:
    t: float
    J: np.ndarray
    lambda1: complex
    lambda2: complex
    O11: float
    O12: float
    gap2: float

    @property
    def O22(self) -> float:
        return self.O11

    @property
    def O21(self) -> float:
        return self.O12


def _eigs2(J: np.ndarray):
    """Eigenvalues of 2 x 2 stacks by the quadratic formula."""
    tr = J[..., 0, 0] + J[..., 1, 1]
    dt = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    half = tr / 2.0
    disc = np.sqrt(half * half - dt)
    return half + disc, half - disc


def overlap_and_gap(J):
    """Vectorized ``(O11, gap2)`` for stacks ``J[..., 2, 2]`` (no degeneracy check)."""
    J = np.asarray(J, dtype=np.complex128)
    l1, l2 = _eigs2(J)
    gap2 = np.abs(l1 - l2) ** 2
    fro2 = np.sum(np.abs(J) ** 2, axis=(-2, -1))
    O11 = (fro2 - 2.0 * np.real(l1 * np.conj(l2))) / gap2
    return O11, gap2


def closed_form_overlaps(J, t: float = 0.0) -> TwoByTwoFrame:
    """Overlaps of a 2 x 2 matrix from its eigenvalues and Frobenius norm.

    The relabelled forms (O22 with the eigenvalues swapped, O21 likewise)
    coincide with O11 and O12 algebraically; they are recomputed and
    compared here as a guard against cancellation.
    """
    if isinstance(J, MatrixState):
        t, J = J.t, J.J
    J = np.asarray(J, dtype=np.complex128)
    if J.shape != (2, 2):
        raise ArgumentError("closed forms are for 2 x 2 matrices")
    l1, l2 = (complex(v) for v in _eigs2(J))
    gap2 = abs(l1 - l2) ** 2
    fro2 = float(np.sum(np.abs(J) ** 2))
    if gap2 <= (DEGENERACY_RTOL * math.sqrt(fro2)) ** 2:
        raise DegeneracyError("lambda1 = lambda2", min_gap=math.sqrt(gap2), t=t, state=J)
    O11 = (fro2 - 2.0 * (l1 * l2.conjugate()).real) / gap2
    O22 = (fro2 - 2.0 * (l2 * l1.conjugate()).real) / gap2
    O12 = (abs(l1) ** 2 + abs(l2) ** 2 - fro2) / gap2
    if not math.isclose(O11, O22, rel_tol=1e-12, abs_tol=1e-12):
        raise ArithmeticError("O11 and O22 closed forms disagree")
    return TwoByTwoFrame(t, J, l1, l2, O11, O12, gap2)


def _curvature(l1: complex, l2: complex) -> float:
    """``2 Re(1/(lambda1 - lambda2)^2)``; symmetric in the labels."""
    return 2.0 * (1.0 / (l1 - l2) ** 2).real


def o11_drift_theory(frame: TwoByTwoFrame, tau: float) -> float:
    """``((2 O - 1)^2 + 1)/gap2 - tau (2 O - 1) 2 Re(1/(lambda1 - lambda2)^2)``."""
    O = frame.O11
    return ((2 * O - 1) ** 2 + 1) / frame.gap2 - tau * (2 * O - 1) * _curvature(frame.lambda1,
                                                                             frame.lambda2)


def o11_qv_theory(frame: TwoByTwoFrame, tau: float) -> float:
    """``4 O (2 O - 1)(O - 1)/gap2 - 2 tau O (O - 1) 2 Re(1/(lambda1 - lambda2)^2)``."""
    O = frame.O11
    return (4 * O * (2 * O - 1) * (O - 1) / frame.gap2
            - 2 * tau * O * (O - 1) * _curvature(frame.lambda1, frame.lambda2))


def _one_step_o11(state, cfg, draws, dt, rng):
    st = state if isinstance(state, MatrixState) else MatrixState(0.0, state)
    frame = closed_form_overlaps(st)
    plus, minus = [], []
    for dJ in one_step_increments(2, cfg.tau, dt, draws, rng):
        plus.append(overlap_and_gap(st.J + dJ)[0] - frame.O11)
        minus.append(overlap_and_gap(st.J - dJ)[0] - frame.O11)
    return frame, np.concatenate(plus), np.concatenate(minus)


def verify_o11_drift(state, cfg: SimConfig, draws: int = 100_000, dt: float = 1e-5,
                     rng=None) -> VerificationReport:
    """Frozen-state estimate of ``E[d O11]/dt`` from antithetic pairs."""
    if rng is None:
        rng = stream(cfg.seed, TAG_O11_DRIFT)
    frame, plus, minus = _one_step_o11(state, cfg, draws, dt, rng)
    vals = (plus + minus) / (2.0 * dt)
    return mean_report("O11 drift", o11_drift_theory(frame, cfg.tau), vals, dt=dt,
                       tau=cfg.tau, O11=frame.O11, gap2=frame.gap2)


def verify_o11_qv(state, cfg: SimConfig, draws: int = 100_000, dt: float = 1e-5,
                  rng=None) -> VerificationReport:
    """Frozen-state estimate of ``E[(d O11)^2]/dt``.

    Squares of both members of each antithetic pair are averaged, which
    removes the odd third-order contribution.
    """
    if rng is None:
        rng = stream(cfg.seed, TAG_O11_QV)
    frame, plus, minus = _one_step_o11(state, cfg, draws, dt, rng)
    vals = (plus ** 2 + minus ** 2) / (2.0 * dt)
    theory = o11_qv_theory(frame, cfg.tau)
    return mean_report("O11 quadratic variation", theory, vals, se_floor=1e-12,
                       dt=dt, tau=cfg.tau, O11=frame.O11, gap2=frame.gap2)


def verify_covariation_rate(state, cfg: SimConfig, draws: int = 100_000, dt: float = 1e-5,
                            rng=None) -> VerificationReport:
    """Frozen-state estimate of ``E[d O11 d gap2]/dt`` against ``-8 O11 (O11 - 1)``."""
    if rng is None:
        rng = stream(cfg.seed, TAG_COVARIATION)
    st = state if isinstance(state, MatrixState) else MatrixState(0.0, state)
    frame = closed_form_overlaps(st)
    vals = []
    for dJ in one_step_increments(2, cfg.tau, dt, draws, rng):
        acc = 0.0
        for sgn in (1.0, -1.0):
            O, g2 = overlap_and_gap(st.J + sgn * dJ)
            acc = acc + (O - frame.O11) * (g2 - frame.gap2)
        vals.append(acc / (2.0 * dt))
    theory = -8.0 * frame.O11 * (frame.O11 - 1.0)
    return mean_report("O11-gap2 covariation rate", theory, np.concatenate(vals),
                       se_floor=1e-12, dt=dt, tau=cfg.tau, O11=frame.O11)


def verify_negative_covariation(cfg: SimConfig, replicas: int = None, paths=None) -> list:
    """Realized ``<O11, gap2>`` against ``-8 int O11 (O11 - 1) dt``.

    Uses the closed forms along simulated matrix paths (no labels needed).
    The paired t-statistic is reliable only when paths stay away from
    collisions: near a collision ``O11`` grows like the inverse squared gap
    and the per-replica differences become so heavy tailed that the
    statistic drifts positive.  Start from a well-separated spectrum (gap
    of order 1 or more against ``sqrt(T)``).
    Returns two reports: the match within standard errors, and the sign
    check (realized mean not above zero by more than 3 s.e.).

    Parameters
    ----------
    paths : array (R, S, 2, 2), optional
        Matrix paths to use instead of simulating.
    """
    if cfg.N != 2:
        raise ArgumentError("negative covariation is a 2 x 2 statement")
    if paths is None:
        R = cfg.replicas if replicas is None else int(replicas)
        paths = ensemble_paths(cfg, range(R))
    paths = np.asarray(paths, dtype=np.complex128)
    O, gap2 = overlap_and_gap(paths)
    if np.any(gap2 == 0):
        raise DegeneracyError("lambda1 = lambda2 along a path", min_gap=0.0)
    realized = np.sum(np.diff(O, axis=1) * np.diff(gap2, axis=1), axis=1)
    rate = -8.0 * O * (O - 1.0)
    integral = np.sum(0.5 * (rate[:, 1:] + rate[:, :-1]), axis=1) * cfg.dt
    R = paths.shape[0]
    d = realized - integral
    se = d.std(ddof=1) / math.sqrt(R) if R > 1 else 0.0
    # O11 is identically 1 at tau = +-1; only rounding remains
    floor = 1e-10
    match = statistical_report("<O11, gap2> realized vs integral", integral.mean(),
                               realized.mean(), se, samples=R, se_floor=floor, tau=cfg.tau,
                               T=cfg.T)
    se_r = realized.std(ddof=1) / math.sqrt(R) if R > 1 else 0.0
    sign_ok = realized.mean() <= 3.0 * max(se_r, floor)
    sign = verdict_report("<O11, gap2> sign", 0.0, realized.mean(), sign_ok, R,
                          stderr=se_r, rule="realized <= 3 s.e.")
    return [match, sign]


def verify_exponential_law(cfg: SimConfig, t: float = 1.0, samples: int = 10_000,
                           rng=None) -> list:
    """Law of ``Y = (O11 - 1) gap2 / (t (1 - tau^2))`` for static ``J(t)``.

    ``Y`` should be standard exponential.  Returns the KS report (pass at
    p > 0.01, sample size capped at 1e5) and a z-test of the mean.
    Correlations of ``Y`` with ``Re lambda1``, ``Im lambda1`` and ``gap2``
    are attached as independence diagnostics.
    """
    tau = check_tau(cfg.tau)
    if abs(tau) == 1.0:
        raise ArgumentError("the statistic degenerates at tau = +-1")
    if not t > 0:
        raise ArgumentError("t must be positive")
    if samples < 1000:
        raise ArgumentError("need at least 1000 samples")
    samples = min(int(samples), KS_CAP)
    if rng is None:
        rng = stream(cfg.seed, TAG_EXPONENTIAL)
    g = rng.standard_normal((samples, 2, 2, 2))
    J = increments_from_normals(g, tau, t)
    O, gap2 = overlap_and_gap(J)
    Y = (O - 1.0) * gap2 / (t * (1.0 - tau * tau))
    l1, _ = _eigs2(J)
    corr = {name: float(np.corrcoef(Y, v)[0, 1])
            for name, v in (("re_lambda1", l1.real), ("im_lambda1", l1.imag), ("gap2", gap2))}
    ks = stats.kstest(Y, "expon")
    ks_report = verdict_report("exponential law KS", 0.0, ks.statistic, ks.pvalue > 0.01,
                               samples, p_value=ks.pvalue, correlations=corr, tau=tau, t=t)
    return [ks_report, mean_report("exponential law mean", 1.0, Y, tau=tau, t=t)]
