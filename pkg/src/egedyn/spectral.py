"""Eigendecomposition, eigenvector overlaps and eigenvalue tracking.

Overlaps are evaluated in the gauge-invariant orientation

    O_ij = (L_i^* L_j)(R_j^* R_i),

with right eigenvectors ``R_i`` (unit norm) and left eigenvectors ``L_i``
normalized by ``L_i^* R_j = delta_ij``.  This is the orientation that the
minor-sum formula (:func:`overlap_det`) reproduces; see the cross-check in
``tests/test_spectral.py``.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ArgumentError, DegeneracyError
from .linalg import _delete, _det0, first_minors
from .process import MatrixState, SimConfig, sample_path

__all__ = [
    "EnsembleTracks",
    "SpectralFrame",
    "Trajectory",
    "decompose",
    "decompose_batch",
    "drift_theory",
    "martingale_coefficients",
    "match_batch",
    "match_paths",
    "min_gaps",
    "overlap_det",
    "overlap_det_matrix",
    "overlap_eigvec",
    "read_trajectory_csv",
    "simulate_ensemble",
    "simulate_trajectory",
    "track_path",
]

DEGENERACY_RTOL = 1e-8
GAUGE_TOL = 1e-12
AMBIGUITY_RATIO = 1.1
# replicas per work unit; fixed so results never depend on the thread count
CHUNK = 256


def min_gaps(eigs: np.ndarray) -> np.ndarray:
    """Minimum pairwise distance along the last axis (inf when N = 1)."""
    eigs = np.asarray(eigs)
    n = eigs.shape[-1]
    if n < 2:
        return np.full(eigs.shape[:-1], np.inf)
    d = np.abs(eigs[..., :, None] - eigs[..., None, :])
    d[..., np.arange(n), np.arange(n)] = np.inf
    return d.min(axis=(-2, -1))


def _gauge_fix(R: np.ndarray) -> np.ndarray:
    """Unit columns with the first non-negligible component real positive."""
    R = R / np.linalg.norm(R, axis=-2, keepdims=True)
    big = np.abs(R) > GAUGE_TOL
    first = np.argmax(big, axis=-2)
    lead = np.take_along_axis(R, first[..., None, :], axis=-2)
    phase = np.conj(lead) / np.abs(lead)
    return R * phase


def decompose_batch(J: np.ndarray, check: bool = True):
    """Eigendecomposition of a stack of matrices ``J[..., N, N]``.

    Returns
    -------
    eigs : (..., N) complex
    R : (..., N, N) right eigenvectors as columns, gauge fixed
    L : (..., N, N) left eigenvectors as columns, ``L^* R = I``
    O : (..., N, N) overlaps
    gap : (...,) minimum eigenvalue gap
    """
    J = np.asarray(J, dtype=np.complex128)
    eigs, R = np.linalg.eig(J)
    gap = min_gaps(eigs)
    if check:
        norms = np.linalg.norm(J, axis=(-2, -1))
        bad = gap <= DEGENERACY_RTOL * norms
        if np.any(bad):
            where = np.argwhere(np.atleast_1d(bad))[0]
            g = float(np.atleast_1d(gap)[tuple(where)])
            raise DegeneracyError(f"degenerate spectrum (min gap {g:.3g})", min_gap=g,
                                  replica=tuple(int(w) for w in where))
    R = _gauge_fix(R)
    Rinv = np.linalg.inv(R)
    L = np.conj(np.swapaxes(Rinv, -1, -2))
    GL = Rinv @ np.conj(np.swapaxes(Rinv, -1, -2))  # GL[i, j] = L_i^* L_j
    GR = np.conj(np.swapaxes(R, -1, -2)) @ R         # GR[j, i] = R_j^* R_i
    O = GL * np.swapaxes(GR, -1, -2)
    return eigs, R, L, O, gap


@dataclass(frozen=True)
class SpectralFrame:
    t: float
    eigenvalues: np.ndarray
    right_vecs: np.ndarray
    left_vecs: np.ndarray
    overlaps: np.ndarray
    min_gap: float

    @property
    def N(self) -> int:
        return self.eigenvalues.size

    def permuted(self, perm) -> "SpectralFrame":
        """Frame relabelled so that new label ``i`` is old label ``perm[i]``."""
        p = np.asarray(perm)
        return SpectralFrame(self.t, self.eigenvalues[p], self.right_vecs[:, p],
                             self.left_vecs[:, p], self.overlaps[np.ix_(p, p)], self.min_gap)


def decompose(state) -> SpectralFrame:
    """Spectral frame of a :class:`MatrixState` (or bare matrix at t = 0)."""
    if not isinstance(state, MatrixState):
        state = MatrixState(0.0, state)
    try:
        eigs, R, L, O, gap = decompose_batch(state.J[None])
    except DegeneracyError as e:
        e.t = state.t
        e.replica = None
        e.state = np.array(state.J)
        raise
    return SpectralFrame(state.t, eigs[0], R[0], L[0], O[0], float(gap[0]))


def overlap_eigvec(frame: SpectralFrame, i: int, j: int) -> complex:
    """``(L_i^* L_j)(R_j^* R_i)`` for 0-based labels ``i``, ``j``."""
    R, L = frame.right_vecs, frame.left_vecs
    return complex(np.vdot(L[:, i], L[:, j]) * np.vdot(R[:, j], R[:, i]))


def _fprime(eigs: np.ndarray, i: int) -> complex:
    d = eigs[i] - np.delete(eigs, i)
    if np.any(d == 0):
        raise DegeneracyError("repeated eigenvalue", min_gap=0.0)
    return complex(np.prod(d))


def overlap_det(state, eigenvalues, i: int, j: int) -> complex:
    """Overlap from determinants only.

    ``sum_k det(((lam_i I - J)(lam_j I - J)^*)_{k|k})`` divided by
    ``prod_{p != i}(lam_i - lam_p) * conj(prod_{q != j}(lam_j - lam_q))``.
    Labels are 0-based.
    """
    J = state.J if isinstance(state, MatrixState) else np.asarray(state, dtype=np.complex128)
    eigs = np.asarray(eigenvalues, dtype=np.complex128)
    n = J.shape[0]
    denom = _fprime(eigs, i) * np.conj(_fprime(eigs, j))
    I = np.eye(n)
    P = (eigs[i] * I - J) @ np.conj(eigs[j] * I - J).T
    num = sum(_det0(_delete(P, {k}, {k})) for k in range(n))
    return complex(num / denom)


def overlap_det_matrix(state, eigenvalues) -> np.ndarray:
    eigs = np.asarray(eigenvalues)
    n = eigs.size
    return np.array([[overlap_det(state, eigs, i, j) for j in range(n)] for i in range(n)])


def martingale_coefficients(state, eigenvalues, i: int) -> np.ndarray:
    """Coefficients ``c_kl`` of ``dJ_kl`` in the SDE of eigenvalue ``i`` (0-based).

    ``c_kl = (-1)^(k+l) det((lam_i I - J)_{k|l}) / prod_{j != i}(lam_i - lam_j)``.
    """
    J = state.J if isinstance(state, MatrixState) else np.asarray(state, dtype=np.complex128)
    eigs = np.asarray(eigenvalues, dtype=np.complex128)
    n = J.shape[0]
    if n == 1:
        return np.ones((1, 1), dtype=np.complex128)
    fp = _fprime(eigs, i)
    minors = first_minors(eigs[i] * np.eye(n) - J)
    sign = (-1.0) ** np.add.outer(np.arange(n), np.arange(n))
    return sign * minors / fp


def drift_theory(eigenvalues, i: int, tau: float) -> complex:
    """``tau * sum_{j != i} 1/(lam_i - lam_j)``."""
    eigs = np.asarray(eigenvalues, dtype=np.complex128)
    return complex(tau * np.sum(1.0 / (eigs[i] - np.delete(eigs, i))))


# ---------------------------------------------------------------- matching

def _assignment(prev: np.ndarray, nxt: np.ndarray):
    cost = np.abs(prev[:, None] - nxt[None, :]) ** 2
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(prev.size, dtype=int)
    perm[rows] = cols
    best = cost[rows, cols].sum()
    # second best differs from the optimum in at least one edge
    second = math.inf
    if prev.size > 1:
        for r, c in zip(rows, cols):
            forbidden = cost.copy()
            forbidden[r, c] = np.inf
            try:
                rr, cc = linear_sum_assignment(forbidden)
            except ValueError:
                continue
            second = min(second, forbidden[rr, cc].sum())
    ambiguous = bool(second <= AMBIGUITY_RATIO * best)
    return perm, ambiguous


def match_paths(prev: SpectralFrame, nxt: SpectralFrame):
    """Optimal relabelling of ``nxt`` to continue the labels of ``prev``.

    Returns
    -------
    perm : ndarray of int
        ``nxt.eigenvalues[perm[i]]`` continues ``prev.eigenvalues[i]``;
        ``perm`` minimizes ``sum_i |prev_i - next_perm(i)|^2``.
    ambiguous : bool
        True when the second-best assignment costs at most 10% more.
    """
    if prev.N != nxt.N:
        raise ArgumentError("frames differ in size")
    return _assignment(np.asarray(prev.eigenvalues), np.asarray(nxt.eigenvalues))


def match_batch(prev: np.ndarray, nxt: np.ndarray):
    """Row-wise optimal matching for stacks ``prev[B, N]``, ``nxt[B, N]``.

    Rows whose nearest-neighbour map moves every eigenvalue by less than a
    quarter of the previous minimum gap take the nearest-neighbour
    permutation: every other edge then costs more than every kept edge,
    so it is the unique optimum, and for N < 160 the runner-up costs more
    than 10% extra.  Remaining rows go through the assignment solver.
    """
    B, n = prev.shape
    if n == 1:
        return np.zeros((B, 1), dtype=int), np.zeros(B, dtype=bool)
    dist = np.abs(prev[:, :, None] - nxt[:, None, :])
    nearest = dist.argmin(axis=2)
    moved = np.take_along_axis(dist, nearest[:, :, None], axis=2)[:, :, 0]
    is_perm = np.sort(nearest, axis=1) == np.arange(n)
    fast = is_perm.all(axis=1) & (moved.max(axis=1) < 0.25 * min_gaps(prev)) & (n < 160)
    perms = nearest.copy()
    ambiguous = np.zeros(B, dtype=bool)
    for b in np.flatnonzero(~fast):
        perms[b], ambiguous[b] = _assignment(prev[b], nxt[b])
    return perms, ambiguous


# ---------------------------------------------------------------- tracking

@dataclass
class Trajectory:
    """Identity-matched eigenvalue path of one replica.

    Arrays are indexed by grid point ``s = 0..steps`` (``times[s] = s*dt``).
    ``overlaps`` holds the full overlap matrix when it was requested.
    """

    times: np.ndarray
    paths: np.ndarray
    diag_overlaps: np.ndarray
    min_gaps: np.ndarray
    config: Optional[SimConfig] = None
    overlaps: Optional[np.ndarray] = None
    ambiguous: Optional[np.ndarray] = None
    replica: int = 0

    @property
    def N(self) -> int:
        return self.paths.shape[1]

    def csv_header(self) -> list:
        n = self.N
        head = ["t"]
        for i in range(1, n + 1):
            head += [f"re_l{i}", f"im_l{i}"]
        head += [f"o{i}{i}" for i in range(1, n + 1)]
        head.append("min_gap")
        return head

    def to_csv(self, path) -> None:
        """Write one row per grid point; floats with 17 significant digits."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.csv_header())
            for s in range(self.times.size):
                row = [self.times[s]]
                for lam in self.paths[s]:
                    row += [lam.real, lam.imag]
                row += list(self.diag_overlaps[s])
                row.append(self.min_gaps[s])
                w.writerow([_g17(x) for x in row])


def _g17(x) -> str:
    x = float(x)
    if x == 0.0:
        return "0"
    return f"{x:.17g}"


def read_trajectory_csv(path) -> Trajectory:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], np.array(rows[1:], dtype=float)
    n = (len(head) - 2) // 3
    times = body[:, 0]
    paths = body[:, 1:1 + 2 * n:2] + 1j * body[:, 2:2 + 2 * n:2]
    diag = body[:, 1 + 2 * n:1 + 3 * n]
    return Trajectory(times, paths, diag, body[:, -1])


@dataclass
class EnsembleTracks:
    """Tracked arrays of a batch of replicas, ``(R, steps+1, N)`` leading."""

    times: np.ndarray
    paths: np.ndarray
    diag_overlaps: np.ndarray
    min_gaps: np.ndarray
    overlaps: Optional[np.ndarray]
    ambiguous: np.ndarray
    config: Optional[SimConfig] = None
    first_replica: int = 0

    @property
    def replicas(self) -> int:
        return self.paths.shape[0]

    def trajectory(self, r: int) -> Trajectory:
        return Trajectory(self.times, self.paths[r], self.diag_overlaps[r], self.min_gaps[r],
                          self.config, None if self.overlaps is None else self.overlaps[r],
                          self.ambiguous[r], self.first_replica + r)

    def trajectories(self) -> list:
        return [self.trajectory(r) for r in range(self.replicas)]


def track_path(Js: np.ndarray, times: Optional[np.ndarray] = None, store_overlaps: bool = True,
               config: Optional[SimConfig] = None, first_replica: int = 0) -> EnsembleTracks:
    """Decompose and label-match matrix paths ``Js[R, S, N, N]`` (or ``[S, N, N]``).

    Labels at the first grid point follow the eigensolver order; later
    points are matched to the previous point by :func:`match_batch`.
    """
    Js = np.asarray(Js, dtype=np.complex128)
    if Js.ndim == 3:
        Js = Js[None]
    Rn, S, n, _ = Js.shape
    if times is None:
        times = np.arange(S, dtype=float)
    paths = np.empty((Rn, S, n), dtype=np.complex128)
    diag = np.empty((Rn, S, n))
    gaps = np.empty((Rn, S))
    amb = np.zeros((Rn, S), dtype=bool)
    full = np.empty((Rn, S, n, n), dtype=np.complex128) if store_overlaps else None
    prev = None
    for s in range(S):
        try:
            eigs, _, _, O, gap = decompose_batch(Js[:, s])
        except DegeneracyError as e:
            r = e.replica[0] if e.replica else 0
            e.t = float(times[s])
            e.replica = first_replica + r
            e.state = np.array(Js[r, s])
            raise
        if prev is not None:
            perm, amb[:, s] = match_batch(prev, eigs)
            eigs = np.take_along_axis(eigs, perm, axis=1)
            O = np.take_along_axis(np.take_along_axis(O, perm[:, :, None], axis=1),
                                   perm[:, None, :], axis=2)
        paths[:, s] = eigs
        diag[:, s] = O.real[:, np.arange(n), np.arange(n)]
        gaps[:, s] = gap
        if full is not None:
            full[:, s] = O
        prev = eigs
    return EnsembleTracks(np.asarray(times, dtype=float), paths, diag, gaps, full, amb,
                          config, first_replica)


def ensemble_paths(cfg: SimConfig, replicas: Sequence[int]) -> np.ndarray:
    """Matrix paths ``(R, steps+1, N, N)`` for the given replica indices."""
    out = np.empty((len(replicas), cfg.steps + 1, cfg.N, cfg.N), dtype=np.complex128)
    for a, r in enumerate(replicas):
        out[a] = sample_path(cfg, r)
    return out


def _concat(parts: list, cfg: SimConfig) -> EnsembleTracks:
    cat = lambda name: np.concatenate([getattr(p, name) for p in parts])  # noqa: E731
    ov = None if parts[0].overlaps is None else cat("overlaps")
    return EnsembleTracks(parts[0].times, cat("paths"), cat("diag_overlaps"), cat("min_gaps"),
                          ov, cat("ambiguous"), cfg, parts[0].first_replica)


def simulate_ensemble(cfg: SimConfig, store_overlaps: bool = True, threads: int = 1,
                      replicas: Optional[Sequence[int]] = None) -> EnsembleTracks:
    """Simulate and track ``cfg.replicas`` independent replicas.

    Work is split into fixed chunks of replicas that may run on a thread
    pool; each replica draws only from its own stream.
    """
    if replicas is None:
        replicas = range(cfg.replicas)
    replicas = list(replicas)
    times = cfg.times()
    chunks = [replicas[i:i + CHUNK] for i in range(0, len(replicas), CHUNK)]

    def work(chunk):
        return track_path(ensemble_paths(cfg, chunk), times, store_overlaps, cfg, chunk[0])

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    return _concat(parts, cfg)


def simulate_trajectory(cfg: SimConfig, replica: int = 0, store_overlaps: bool = True) -> Trajectory:
    """Track one replica: advance the matrix path, decompose, match, record."""
    return simulate_ensemble(cfg, store_overlaps, replicas=[replica]).trajectory(0)
