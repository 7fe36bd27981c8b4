"""Monte-Carlo and finite-difference checks of the eigenvalue SDE.

Three kinds of evidence are produced, all as :class:`VerificationReport`:

* frozen-state one-step ensembles for conditional means (drift) and the
  local linearization (martingale coefficients);
* realized quadratic variations along tracked paths against the
  trapezoid integral of the overlap path;
* deterministic derivative identities in the ``2 N^2`` real coordinates of
  the matrix, cross-checked by central finite differences.

Eigenvalue labels are 0-based array positions; report names are 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .errors import ArgumentError, DegeneracyError
from .linalg import char_poly, first_minors, second_principal_minors
from .process import MatrixState, SimConfig, coefficients, increments_from_normals, stream
from .reports import (VerificationReport, mean_report, statistical_report, tolerance_report,
                      verdict_report)
from .spectral import (EnsembleTracks, Trajectory, decompose, drift_theory,
                       martingale_coefficients, overlap_det, simulate_ensemble)

__all__ = [
    "QVTarget",
    "char_poly_coordinate_derivatives",
    "char_poly_second_derivatives",
    "coordinate_basis",
    "coordinate_names",
    "derivative_error_sweep",
    "eigenvalue_gradient",
    "non_collision_report",
    "one_step_increments",
    "verify_char_poly_derivatives",
    "verify_drift",
    "verify_gradient_inner_products",
    "verify_implicit_derivatives",
    "verify_laplacian",
    "verify_martingale_term",
    "verify_qv",
    "verify_vandermonde_martingale",
    "vandermonde_inverse",
]

ONE_STEP_DT = 1e-5
# draws per batched eigensolver call in one-step ensembles
BATCH = 20000
# stream tags keeping verifier randomness apart from replica streams
TAG_DRIFT = 2**32 + 1
TAG_MARTINGALE = 2**32 + 2
KURTOSIS_WARN = 100.0


def _state(state) -> MatrixState:
    return state if isinstance(state, MatrixState) else MatrixState(0.0, state)


def _label(i: int, n: int) -> int:
    if not 0 <= i < n:
        raise ArgumentError(f"eigenvalue label {i} out of range for N={n}")
    return i


def _nearest(eigs: np.ndarray, target: complex) -> np.ndarray:
    """Pick, row by row, the eigenvalue closest to ``target``."""
    k = np.abs(eigs - target).argmin(axis=-1)
    return np.take_along_axis(eigs, k[..., None], axis=-1)[..., 0]


def one_step_increments(n: int, tau: float, dt: float, draws: int, rng):
    """Yield batches of independent increments ``dJ`` over ``dt``."""
    done = 0
    while done < draws:
        m = min(BATCH, draws - done)
        g = rng.standard_normal((m, 2, n, n))
        yield increments_from_normals(g, tau, dt)
        done += m


# ---------------------------------------------------------------- drift

def verify_drift(state, cfg: SimConfig, i: int, draws: int = 100_000, dt: float = ONE_STEP_DT,
                 rng=None, antithetic: bool = True) -> VerificationReport:
    """One-step estimate of the drift of eigenvalue ``i`` from a frozen state.

    Each draw perturbs ``J`` by ``+dJ`` and ``-dJ`` and averages the two
    eigenvalue displacements; the martingale part cancels exactly at first
    order, leaving ``E[d lambda_i]/dt`` with O(1) variance.

    Parameters
    ----------
    state : MatrixState
    cfg : SimConfig
        Supplies ``tau`` and the seed of the default stream.
    i : int
        0-based label in the eigensolver order of ``state``.
    draws : int
    dt : float
        One-step horizon; its O(dt) bias is far below the standard error.
    """
    st = _state(state)
    n = st.N
    i = _label(i, n)
    frame = decompose(st)
    lam = frame.eigenvalues[i]
    theory = drift_theory(frame.eigenvalues, i, cfg.tau)
    if rng is None:
        rng = stream(cfg.seed, TAG_DRIFT, i)
    vals = []
    for dJ in one_step_increments(n, cfg.tau, dt, draws, rng):
        plus = _nearest(np.linalg.eigvals(st.J + dJ), lam) - lam
        if antithetic:
            minus = _nearest(np.linalg.eigvals(st.J - dJ), lam) - lam
            vals.append((plus + minus) / (2.0 * dt))
        else:
            vals.append(plus / dt)
    vals = np.concatenate(vals)
    # imaginary parts vanish identically at tau = +-1; allow for rounding
    floor = 1e-9 * (1.0 + abs(lam) + abs(theory))
    return mean_report(f"drift lambda{i + 1}", theory, vals, se_floor=floor,
                       dt=dt, tau=cfg.tau, antithetic=antithetic, min_gap=frame.min_gap)


# ---------------------------------------------------------------- martingale term

def verify_martingale_term(state, cfg: SimConfig, i: int, draws: int = 2000,
                           dts: Optional[Sequence[float]] = None, rng=None) -> VerificationReport:
    """Check the local linearization ``d lambda_i = sum c_kl dJ_kl + drift dt``.

    The residual of the linear prediction is of the next Ito order, so its
    RMS scales like ``dt``.  The same normals are reused at every ``dt`` of a
    dyadic sweep; the report compares the fitted log-log slope with 1
    (tolerance 0.15).  For N = 1 the residual is zero up to rounding.
    """
    st = _state(state)
    n = st.N
    i = _label(i, n)
    if dts is None:
        dts = 1e-4 * 0.5 ** np.arange(8)
    dts = np.asarray(dts, dtype=float)
    frame = decompose(st)
    lam = frame.eigenvalues[i]
    c = martingale_coefficients(st, frame.eigenvalues, i)
    drift = drift_theory(frame.eigenvalues, i, cfg.tau)
    if rng is None:
        rng = stream(cfg.seed, TAG_MARTINGALE, i)
    g = rng.standard_normal((draws, 2, n, n))
    rms = np.empty(dts.size)
    max_imag = 0.0
    for a, dt in enumerate(dts):
        dJ = increments_from_normals(g, cfg.tau, dt)
        pred = np.einsum("kl,dkl->d", c, dJ) + drift * dt
        step = _nearest(np.linalg.eigvals(st.J + dJ), lam) - lam
        rms[a] = math.sqrt(np.mean(np.abs(step - pred) ** 2))
        max_imag = max(max_imag, float(np.max(np.abs(pred.imag))))
    details = {"dts": dts, "rms_residual": rms, "max_abs_imag_prediction": max_imag,
               "tau": cfg.tau}
    name = f"martingale residual order lambda{i + 1}"
    # N = 1 (or a frozen linear case): the residual is pure rounding
    floor = 1e-12 * (1.0 + abs(lam))
    if n == 1 or np.all(rms <= floor):
        return verdict_report(name, 0.0, float(rms.max()), bool(np.all(rms <= floor)), draws,
                              rounding_floor=floor, **details)
    slope = np.polyfit(np.log(dts), np.log(rms), 1)[0]
    return tolerance_report(name, 1.0, slope, 0.15, scale=1.0, samples=draws, **details)


# ---------------------------------------------------------------- quadratic variations

QV_KINDS = ("RR", "II", "RI", "complex_holomorphic", "complex_mixed")


@dataclass(frozen=True)
class QVTarget:
    """Bracket ``<X_i, Y_j>`` to verify; ``indices`` are 1-based.

    kind : {"RR", "II", "RI", "complex_holomorphic", "complex_mixed"}
        ``RI`` pairs ``Re lambda_i`` with ``Im lambda_j``;
        ``complex_holomorphic`` is ``<lambda_i, lambda_j>`` and
        ``complex_mixed`` is ``<lambda_i, conj lambda_j>``.  The diagonal
        mixed bracket equals RR + II and does not involve ``tau``.
    """

    kind: str
    indices: tuple

    def __post_init__(self):
        if self.kind not in QV_KINDS:
            raise ArgumentError(f"unknown bracket kind {self.kind!r}")
        i, j = (int(v) for v in self.indices)
        object.__setattr__(self, "indices", (i, j))

    def check(self, n: int) -> None:
        if not all(1 <= v <= n for v in self.indices):
            raise ArgumentError(f"indices {self.indices} out of range for N={n}")

    @property
    def label(self) -> str:
        i, j = self.indices
        return f"{self.kind}({i},{j})"


def _ensemble_arrays(tracks):
    """Stack tracked data into ``(R, S, ...)`` arrays."""
    if isinstance(tracks, EnsembleTracks):
        return tracks.times, tracks.paths, tracks.overlaps, tracks.diag_overlaps, tracks.config
    if isinstance(tracks, Trajectory):
        tracks = [tracks]
    tracks = list(tracks)
    if not tracks:
        raise ArgumentError("need at least one trajectory")
    paths = np.stack([t.paths for t in tracks])
    diag = np.stack([t.diag_overlaps for t in tracks])
    full = None
    if all(t.overlaps is not None for t in tracks):
        full = np.stack([t.overlaps for t in tracks])
    return tracks[0].times, paths, full, diag, tracks[0].config


def _qv_products(dl_i, dl_j, kind):
    if kind == "RR":
        return dl_i.real * dl_j.real
    if kind == "II":
        return dl_i.imag * dl_j.imag
    if kind == "RI":
        return dl_i.real * dl_j.imag
    if kind == "complex_holomorphic":
        return dl_i * dl_j
    return dl_i * np.conj(dl_j)


def _qv_rate(kind, i, j, O_ij, tau):
    """Instantaneous bracket rate given the overlap path ``O_ij``."""
    if kind == "complex_holomorphic":
        return np.full(O_ij.shape, tau if i == j else 0.0, dtype=np.complex128)
    if kind == "complex_mixed":
        return O_ij
    if i == j:
        Oii = O_ij.real
        if kind == "RR":
            return (Oii + tau) / 2.0
        if kind == "II":
            return (Oii - tau) / 2.0
        return np.zeros_like(Oii)
    if kind in ("RR", "II"):
        return O_ij.real / 2.0
    return -O_ij.imag / 2.0


def verify_qv(trajectories, target: QVTarget, tau: Optional[float] = None) -> VerificationReport:
    """Realized bracket along tracked paths against the integrated theory.

    With several replicas the statistic is the per-replica difference
    ``realized - integral`` and its standard error is taken across
    replicas.  A single trajectory uses the per-step differences instead.
    Integrals use the trapezoid rule on the recorded overlap path.
    """
    times, paths, full, diag, config = _ensemble_arrays(trajectories)
    if tau is None:
        if config is None:
            raise ArgumentError("tau is needed when the trajectories carry no config")
        tau = config.tau
    n = paths.shape[-1]
    target.check(n)
    i, j = (v - 1 for v in target.indices)
    if i == j:
        O_ij = diag[..., i].astype(np.complex128)
    elif full is None:
        raise ArgumentError("off-diagonal brackets need stored overlap matrices")
    else:
        O_ij = full[..., i, j]
    dl = np.diff(paths, axis=1)
    realized_steps = _qv_products(dl[..., i], dl[..., j], target.kind)
    rate = _qv_rate(target.kind, i, j, O_ij, tau)
    dt = np.diff(times)
    theory_steps = 0.5 * (rate[:, 1:] + rate[:, :-1]) * dt
    diff_steps = realized_steps - theory_steps
    R = paths.shape[0]
    realized = realized_steps.sum(axis=1)
    integral = theory_steps.sum(axis=1)
    est = complex(np.mean(realized))
    theo = complex(np.mean(integral))
    if R > 1:
        d = realized - integral
        se_re = np.real(d).std(ddof=1) / math.sqrt(R)
        se_im = np.imag(d).std(ddof=1) / math.sqrt(R) if np.iscomplexobj(d) else 0.0
    else:
        se_re = math.sqrt(np.sum(np.real(diff_steps) ** 2))
        se_im = math.sqrt(np.sum(np.imag(diff_steps) ** 2)) if np.iscomplexobj(diff_steps) else 0.0
    # brackets that vanish identically (e.g. <Im lambda> at tau = 1) leave
    # only rounding in the realized sums
    scale = float(np.mean(np.abs(paths))) + 1.0
    floor = 1e-12 * scale ** 2
    return statistical_report(f"qv {target.label}", theo, est, se_re, se_im,
                              R if R > 1 else dl.shape[1], se_floor=floor,
                              replicas=R, T=float(times[-1] - times[0]), tau=tau)


# ---------------------------------------------------------------- real coordinates

def coordinate_names(n: int) -> list:
    """Names of the ``2 N^2`` real coordinates in their canonical order.

    ``x_kl`` (k <= l), ``alpha_kl`` (k <= l), ``y_kl`` (k < l),
    ``beta_kl`` (k < l); indices are 1-based.
    """
    up = [(k, l) for k in range(1, n + 1) for l in range(k, n + 1)]
    strict = [(k, l) for k, l in up if k < l]
    return ([f"x{k},{l}" for k, l in up] + [f"alpha{k},{l}" for k, l in up]
            + [f"y{k},{l}" for k, l in strict] + [f"beta{k},{l}" for k, l in strict])


def _coordinate_pairs(n: int):
    up = [(k, l) for k in range(n) for l in range(k, n)]
    strict = [(k, l) for k, l in up if k < l]
    return ([("x", k, l) for k, l in up] + [("alpha", k, l) for k, l in up]
            + [("y", k, l) for k, l in strict] + [("beta", k, l) for k, l in strict])


def coordinate_basis(n: int, tau: float) -> np.ndarray:
    """Matrices ``dJ/d eta`` for the real coordinates, shape ``(2N^2, N, N)``.

    ``J = a H1 + i b H2`` with ``a = sqrt((1+tau)/2)``, ``b = sqrt((1-tau)/2)``;
    ``H1`` has diagonal ``x_kk`` and upper entries ``(x_kl + i y_kl)/sqrt(2)``,
    ``H2`` has diagonal ``alpha_kk`` and upper entries
    ``(alpha_kl + i beta_kl)/sqrt(2)``.
    """
    a, b = coefficients(tau)
    r2 = math.sqrt(2.0)
    coords = _coordinate_pairs(n)
    E = np.zeros((len(coords), n, n), dtype=np.complex128)
    for m, (kind, k, l) in enumerate(coords):
        if k == l:
            E[m, k, k] = a if kind == "x" else 1j * b
            continue
        if kind == "x":
            E[m, k, l] = E[m, l, k] = a / r2
        elif kind == "y":
            E[m, k, l], E[m, l, k] = 1j * a / r2, -1j * a / r2
        elif kind == "alpha":
            E[m, k, l] = E[m, l, k] = 1j * b / r2
        else:
            E[m, k, l], E[m, l, k] = -b / r2, b / r2
    return E


def char_poly_coordinate_derivatives(J, lam: complex, tau: float) -> np.ndarray:
    """First derivatives of ``f = det(lam I - J)`` in the real coordinates.

    Closed forms in terms of the signed cofactors
    ``C_kl = (-1)^(k+l) det((lam I - J)_{k|l})``::

        x_kk : -sqrt((1+tau)/2) det(..._{k|k})
        x_kl : -(sqrt(1+tau)/2) (C_kl + C_lk)
        y_kl : -i (sqrt(1+tau)/2) (C_kl - C_lk)
        a_kk : -i sqrt((1-tau)/2) det(..._{k|k})
        a_kl : -i (sqrt(1-tau)/2) (C_kl + C_lk)
        b_kl :  (sqrt(1-tau)/2) (C_kl - C_lk)
    """
    J = np.asarray(J, dtype=np.complex128)
    n = J.shape[0]
    a, b = coefficients(tau)
    p, q = math.sqrt(1.0 + tau) / 2.0, math.sqrt(1.0 - tau) / 2.0
    A = complex(lam) * np.eye(n) - J
    sign = (-1.0) ** np.add.outer(np.arange(n), np.arange(n))
    C = sign * first_minors(A)
    out = []
    for kind, k, l in _coordinate_pairs(n):
        if k == l:
            out.append(-a * C[k, k] if kind == "x" else -1j * b * C[k, k])
        elif kind == "x":
            out.append(-p * (C[k, l] + C[l, k]))
        elif kind == "y":
            out.append(-1j * p * (C[k, l] - C[l, k]))
        elif kind == "alpha":
            out.append(-1j * q * (C[k, l] + C[l, k]))
        else:
            out.append(q * (C[k, l] - C[l, k]))
    return np.array(out, dtype=np.complex128)


def char_poly_second_derivatives(J, lam: complex, tau: float) -> np.ndarray:
    """Pure second derivatives ``d^2 f / d eta^2`` in the real coordinates.

    Zero for diagonal coordinates; ``-(1+tau)/2 det(..._{kl|kl})`` for
    ``x_kl``, ``y_kl`` and ``+(1-tau)/2 det(..._{kl|kl})`` for ``alpha_kl``,
    ``beta_kl``.
    """
    J = np.asarray(J, dtype=np.complex128)
    n = J.shape[0]
    M2 = second_principal_minors(complex(lam) * np.eye(n) - J)
    out = []
    for kind, k, l in _coordinate_pairs(n):
        if k == l:
            out.append(0.0)
        elif kind in ("x", "y"):
            out.append(-(1.0 + tau) / 2.0 * M2[k, l])
        else:
            out.append((1.0 - tau) / 2.0 * M2[k, l])
    return np.array(out, dtype=np.complex128)


def eigenvalue_gradient(J, eigenvalues, i: int, tau: float) -> np.ndarray:
    """Complex derivatives ``d lambda_i / d eta = -f_eta / f_lambda``."""
    eigs = np.asarray(eigenvalues, dtype=np.complex128)
    fl = char_poly(J, eigs[i]).d1
    if fl == 0:
        raise DegeneracyError("f'(lambda_i) vanishes", min_gap=0.0)
    return -char_poly_coordinate_derivatives(J, eigs[i], tau) / fl


def _default_h(J, factor):
    return factor * (1.0 + float(np.linalg.norm(J)))


def _shifted_eigs(J, E, h, lam):
    """Eigenvalue closest to ``lam`` of ``J + s h E`` for s in (+1, -1)."""
    plus = _nearest(np.linalg.eigvals(J[None] + h * E), lam)
    minus = _nearest(np.linalg.eigvals(J[None] - h * E), lam)
    return plus, minus


def verify_implicit_derivatives(state, tau: float, i: int, h: Optional[float] = None,
                                tol: float = 1e-5) -> VerificationReport:
    """Closed-form ``d lambda_i / d eta`` against central differences.

    The report holds the worst component; ``stderr`` is ``tol`` times the
    largest analytic derivative.
    """
    st = _state(state)
    i = _label(i, st.N)
    frame = decompose(st)
    lam = frame.eigenvalues[i]
    h = _default_h(st.J, 1e-5) if h is None else float(h)
    E = coordinate_basis(st.N, tau)
    grad = eigenvalue_gradient(st.J, frame.eigenvalues, i, tau)
    plus, minus = _shifted_eigs(st.J, E, h, lam)
    fd = (plus - minus) / (2.0 * h)
    err = np.abs(fd - grad)
    worst = int(err.argmax())
    scale = float(np.abs(grad).max())
    return tolerance_report(f"implicit derivatives lambda{i + 1}", grad[worst], fd[worst], tol,
                            scale=scale, samples=grad.size, h=h, tau=tau,
                            worst_coordinate=coordinate_names(st.N)[worst],
                            max_rel_err=float(err.max() / max(scale, 1e-300)))


def verify_char_poly_derivatives(state, tau: float, lam: complex, h: Optional[float] = None,
                                 tol: float = 1e-6) -> list:
    """Closed-form ``f_eta`` and ``f_eta eta`` against differences of ``det``.

    ``f`` is a polynomial of degree N in ``h``, so central differences are
    accurate to ``O(h^2)`` and the check is tight.
    """
    st = _state(state)
    n = st.N
    h = _default_h(st.J, 1e-4) if h is None else float(h)
    E = coordinate_basis(n, tau)
    A = complex(lam) * np.eye(n) - st.J
    f0 = np.linalg.det(A)
    fp = np.linalg.det(A[None] - h * E)
    fm = np.linalg.det(A[None] + h * E)
    d1_fd = (fp - fm) / (2.0 * h)
    d2_fd = (fp - 2.0 * f0 + fm) / h ** 2
    d1 = char_poly_coordinate_derivatives(st.J, lam, tau)
    d2 = char_poly_second_derivatives(st.J, lam, tau)
    reports = []
    for name, an, fd in (("f_eta", d1, d1_fd), ("f_eta_eta", d2, d2_fd)):
        err = np.abs(fd - an)
        w = int(err.argmax())
        scale = max(float(np.abs(an).max()), float(np.abs(fd).max()), abs(f0))
        reports.append(tolerance_report(f"char poly {name}", an[w], fd[w], tol, scale=scale,
                                        samples=an.size, h=h, tau=tau,
                                        worst_coordinate=coordinate_names(n)[w]))
    return reports


def verify_gradient_inner_products(state, tau: float, i: int, j: Optional[int] = None,
                             tol: float = 1e-7) -> list:
    """Inner products of the real gradients of eigenvalues ``i`` and ``j``.

    Gradients are assembled from the closed forms; the overlaps on the
    right-hand sides come from the determinant formula.  Checks::

        gR_i . gI_i = 0
        gR_i . gR_i = (O_ii + tau)/2        gI_i . gI_i = (O_ii - tau)/2
        gR_i . gR_j = gI_i . gI_j = Re O_ij / 2
        gI_i . gR_j = -gR_i . gI_j = Im O_ij / 2

    plus the bridge ``|grad|^2 = O_ii`` computed from the squared minors.
    Returns a list of deterministic reports.
    """
    st = _state(state)
    n = st.N
    i = _label(i, n)
    if j is None:
        j = (i + 1) % n
    j = _label(j, n)
    frame = decompose(st)
    eigs = frame.eigenvalues
    gi = eigenvalue_gradient(st.J, eigs, i, tau)
    gj = eigenvalue_gradient(st.J, eigs, j, tau)
    Rr_i, Ii_i, Rr_j, Ii_j = gi.real, gi.imag, gj.real, gj.imag
    Oii = overlap_det(st, eigs, i, i).real
    scale = (Oii + abs(tau)) / 2.0
    lab = f"{i + 1}"
    checks = [
        (f"gradR{lab}.gradI{lab}", 0.0, Rr_i @ Ii_i),
        (f"gradR{lab}.gradR{lab}", (Oii + tau) / 2.0, Rr_i @ Rr_i),
        (f"gradI{lab}.gradI{lab}", (Oii - tau) / 2.0, Ii_i @ Ii_i),
    ]
    # sum_{k,l} |det(A_{k|l})|^2 / |f'|^2 against the determinant formula
    minors = first_minors(eigs[i] * np.eye(n) - st.J) if n > 1 else np.ones((1, 1))
    fl = char_poly(st.J, eigs[i]).d1
    checks.append((f"minor-square sum O{lab}{lab}", Oii,
                   float(np.sum(np.abs(minors) ** 2) / abs(fl) ** 2)))
    if j != i:
        Oij = overlap_det(st, eigs, i, j)
        Ojj = overlap_det(st, eigs, j, j).real
        scale = max(scale, (Ojj + abs(tau)) / 2.0, math.sqrt(Oii * Ojj) / 2.0)
        lab2 = f"{i + 1},{j + 1}"
        checks += [
            (f"gradR.gradR ({lab2})", Oij.real / 2.0, Rr_i @ Rr_j),
            (f"gradI.gradI ({lab2})", Oij.real / 2.0, Ii_i @ Ii_j),
            (f"gradI.gradR ({lab2})", Oij.imag / 2.0, Ii_i @ Rr_j),
            (f"-gradR.gradI ({lab2})", Oij.imag / 2.0, -(Rr_i @ Ii_j)),
        ]
    return [tolerance_report(name, th, est, tol, scale=scale, samples=gi.size, tau=tau)
            for name, th, est in checks]


def verify_laplacian(state, tau: float, i: int, h: Optional[float] = None,
                     tol: float = 1e-3) -> VerificationReport:
    """Finite-difference Laplacian of ``lambda_i`` over all real coordinates.

    Theory is ``tau f''(lambda_i)/f'(lambda_i)`` from the minor sums; the
    equivalent ``2 tau sum_j 1/(lambda_i - lambda_j)`` goes into the
    details.  The tolerance is relative to the larger of the theory and
    the biggest single second-difference term, since the terms cancel.
    """
    st = _state(state)
    i = _label(i, st.N)
    frame = decompose(st)
    lam = frame.eigenvalues[i]
    h = _default_h(st.J, 1e-4) if h is None else float(h)
    E = coordinate_basis(st.N, tau)
    plus, minus = _shifted_eigs(st.J, E, h, lam)
    terms = (plus - 2.0 * lam + minus) / h ** 2
    fd = complex(terms.sum())
    cp = char_poly(st.J, lam)
    theory = tau * cp.d2 / cp.d1
    scale = max(abs(theory), float(np.abs(terms).max()))
    return tolerance_report(f"laplacian lambda{i + 1}", theory, fd, tol, scale=scale,
                            samples=terms.size, h=h, tau=tau,
                            pairwise_form=2.0 * drift_theory(frame.eigenvalues, i, tau))


def derivative_error_sweep(state, tau: float, i: int, hs: Sequence[float]) -> np.ndarray:
    """Max abs error of central-difference ``d lambda_i / d eta`` per step size."""
    st = _state(state)
    frame = decompose(st)
    lam = frame.eigenvalues[i]
    E = coordinate_basis(st.N, tau)
    grad = eigenvalue_gradient(st.J, frame.eigenvalues, i, tau)
    out = []
    for h in hs:
        plus, minus = _shifted_eigs(st.J, E, h, lam)
        out.append(float(np.abs((plus - minus) / (2.0 * h) - grad).max()))
    return np.array(out)


# ---------------------------------------------------------------- Vandermonde inverse

def vandermonde_inverse(paths: np.ndarray) -> np.ndarray:
    """``prod_{i<j} 1/(lambda_i - lambda_j)`` along the last axis."""
    paths = np.asarray(paths)
    n = paths.shape[-1]
    out = np.ones(paths.shape[:-1], dtype=np.complex128)
    for a, b in combinations(range(n), 2):
        out = out / (paths[..., a] - paths[..., b])
    return out


def median_of_means(x: np.ndarray, blocks: int) -> tuple:
    """Median of block means and its standard error.

    The error uses the asymptotic efficiency of the median of normal block
    means, ``sqrt(pi/2) sd(block means)/sqrt(blocks)``.
    """
    x = np.asarray(x)
    means = np.array([b.mean() for b in np.array_split(x, blocks)])
    se = math.sqrt(math.pi / 2.0) * means.std(ddof=1) / math.sqrt(blocks)
    return float(np.median(means)), se


def verify_vandermonde_martingale(cfg: SimConfig, replicas: Optional[int] = None,
                                  checkpoints: int = 5, blocks: int = 20,
                                  tracks: Optional[EnsembleTracks] = None,
                                  threads: int = 1) -> list:
    """Time-constancy of the ensemble mean of the inverse Vandermonde product.

    For every checkpoint ``t_c`` the per-replica change ``U(t_c) - U(0)`` is
    summarized by a median of ``blocks`` block means (the pass criterion)
    and by the plain mean (in the details).  The underlying process is only
    known to be a local martingale, so the verdict is a heuristic and is
    flagged as such; a kurtosis above 100 adds a heavy-tail warning.
    """
    if tracks is None:
        if replicas is not None:
            cfg = cfg.with_(replicas=int(replicas))
        tracks = simulate_ensemble(cfg, store_overlaps=False, threads=threads)
    U = vandermonde_inverse(tracks.paths)
    S = U.shape[1]
    idx = np.unique(np.linspace(0, S - 1, checkpoints + 1).round().astype(int))[1:]
    R = U.shape[0]
    reports = []
    for s in idx:
        d = U[:, s] - U[:, 0]
        re_m, re_se = median_of_means(d.real, blocks) if R >= 2 * blocks else (d.real.mean(), 0.0)
        im_m, im_se = median_of_means(d.imag, blocks) if R >= 2 * blocks else (d.imag.mean(), 0.0)
        kurt = max(float(stats.kurtosis(d.real, fisher=False)) if d.real.std() > 0 else 0.0,
                   float(stats.kurtosis(d.imag, fisher=False)) if d.imag.std() > 0 else 0.0)
        plain = mean_report("plain", 0.0, d, se_floor=1e-14)
        details = {"t": float(tracks.times[s]), "heuristic": True,
                   "plain_mean": complex(d.mean()), "plain_z": plain.z_score,
                   "kurtosis": kurt, "mean_U0": complex(U[:, 0].mean())}
        if kurt > KURTOSIS_WARN:
            details["warning"] = "heavy tails: sample kurtosis of U exceeds 100"
        reports.append(statistical_report(
            f"vandermonde inverse drift t={tracks.times[s]:.4g}", 0.0, complex(re_m, im_m),
            re_se, im_se, R, se_floor=1e-14 * (1.0 + float(np.abs(U[:, 0]).mean())), **details))
    return reports


# ---------------------------------------------------------------- non-collision

def non_collision_report(trajectories) -> VerificationReport:
    """Smallest eigenvalue gap over all replicas and recorded times.

    Passes when it is strictly positive everywhere; N = 1 passes vacuously.
    """
    if isinstance(trajectories, EnsembleTracks):
        gaps = trajectories.min_gaps
    else:
        if isinstance(trajectories, Trajectory):
            trajectories = [trajectories]
        trajectories = list(trajectories)
        if not trajectories:
            raise ArgumentError("need at least one trajectory")
        gaps = np.stack([np.asarray(t.min_gaps) for t in trajectories])
    gaps = np.asarray(gaps, dtype=float)
    if np.all(np.isinf(gaps)):
        return verdict_report("non-collision", 0.0, math.inf, True, gaps.size, vacuous=True)
    per_replica = gaps.min(axis=-1) if gaps.ndim > 1 else gaps
    gmin = float(gaps.min())
    ok = bool(gmin > 0 and np.all(np.isfinite(gaps) | np.isinf(gaps)))
    q = np.quantile(per_replica, [0.0, 0.01, 0.5])
    return verdict_report("non-collision", 0.0, gmin, ok, gaps.size,
                          replicas=int(np.atleast_2d(gaps).shape[0]),
                          min_gap_quantiles={"min": q[0], "q01": q[1], "median": q[2]})

