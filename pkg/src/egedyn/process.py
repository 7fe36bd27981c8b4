"""Exact sampling of the elliptic Ginibre matrix Brownian motion.

The process is ``J(t) = sqrt((1+tau)/2) H1(t) + i sqrt((1-tau)/2) H2(t)``
with ``H1``, ``H2`` independent Hermitian Brownian motions whose diagonal
entries are real standard Brownian motions and whose upper entries are
``(B^R + i B^I)/sqrt(2)``.  Entries are literal Brownian motions, so the
path is exact at grid points; ``dt`` only sets the observation resolution.

Random streams
--------------
Every replica ``r`` owns a Philox (counter-based) generator keyed by
``(seed, r)``.  The stream of a replica is consumed in a fixed order:
initial condition first, then the ``steps`` increments in one block of
standard normals laid out as ``(steps, 2, N, N)``.  Results therefore do
not depend on how replicas are batched or threaded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ArgumentError
from .reports import statistical_report

__all__ = [
    "Initial",
    "MatrixState",
    "SimConfig",
    "advance",
    "coefficients",
    "entry_covariance_report",
    "hermitian_from_normals",
    "increments_from_normals",
    "initial_matrix",
    "replica_rng",
    "sample_increment",
    "sample_path",
    "sample_static",
    "stream",
]

# the default initial condition is resampled until its spectrum is this simple
SIMPLE_GAP = 1e-6


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent Philox generator identified by ``seed`` and integer keys."""
    if seed < 0 or seed >= 2**64:
        raise ArgumentError("seed must be an unsigned 64-bit integer")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    return stream(seed, replica)


def check_tau(tau: float) -> float:
    tau = float(tau)
    if not (-1.0 <= tau <= 1.0) or math.isnan(tau):
        raise ArgumentError(f"tau must lie in [-1, 1], got {tau}")
    return tau


def coefficients(tau: float) -> tuple:
    """Weights ``(sqrt((1+tau)/2), sqrt((1-tau)/2))`` of ``H1`` and ``i H2``."""
    tau = check_tau(tau)
    return math.sqrt((1.0 + tau) / 2.0), math.sqrt((1.0 - tau) / 2.0)


@dataclass(frozen=True)
class Initial:
    """Initial condition ``J(0)``.

    kind : {"zero", "diagonal", "sampled_simple"}
        ``"sampled_simple"`` draws a static sample with entry variance
        ``scale`` and redraws until the minimum eigenvalue gap exceeds 1e-6.
    """

    kind: str = "sampled_simple"
    values: tuple = ()
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("zero", "diagonal", "sampled_simple"):
            raise ArgumentError(f"unknown initial condition {self.kind!r}")
        vals = tuple(complex(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if self.kind == "sampled_simple" and not self.scale > 0:
            raise ArgumentError("sampled_simple needs a positive scale")

    @classmethod
    def from_dict(cls, d) -> "Initial":
        if isinstance(d, str):
            return cls(kind=d)
        vals = []
        for v in d.get("values", ()):
            vals.append(complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v))
        return cls(kind=d.get("kind", "sampled_simple"), values=tuple(vals),
                   scale=float(d.get("scale", 1.0)))

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "diagonal":
            out["values"] = [[v.real, v.imag] for v in self.values]
        if self.kind == "sampled_simple":
            out["scale"] = self.scale
        return out


@dataclass(frozen=True)
class SimConfig:
    N: int = 3
    tau: float = 0.5
    dt: float = 1e-3
    steps: int = 1000
    seed: int = 0
    replicas: int = 1
    initial: Initial = field(default_factory=Initial)

    def __post_init__(self):
        if int(self.N) < 1:
            raise ArgumentError("N must be positive")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "tau", check_tau(self.tau))
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ArgumentError("dt must be positive and finite")
        if int(self.steps) < 1 or int(self.replicas) < 1:
            raise ArgumentError("steps and replicas must be positive")
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "replicas", int(self.replicas))
        if not (0 <= int(self.seed) < 2**64):
            raise ArgumentError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "seed", int(self.seed))
        if not math.isfinite(self.dt * self.steps):
            raise ArgumentError("dt * steps must be finite")
        if isinstance(self.initial, (dict, str)):
            object.__setattr__(self, "initial", Initial.from_dict(self.initial))
        init = self.initial
        if init.kind == "diagonal":
            if len(init.values) != self.N:
                raise ArgumentError("diagonal initial condition needs N values")
            if len(set(init.values)) != self.N:
                raise ArgumentError("diagonal initial values must be distinct (simple spectrum)")

    @property
    def T(self) -> float:
        return self.dt * self.steps

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.steps + 1)

    def with_(self, **kw) -> "SimConfig":
        return replace(self, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = {"N", "tau", "dt", "steps", "seed", "replicas", "initial"}
        extra = set(d) - known
        if extra:
            raise ArgumentError(f"unknown SimConfig keys: {sorted(extra)}")
        d = dict(d)
        if "initial" in d:
            d["initial"] = Initial.from_dict(d["initial"])
        return cls(**d)

    def to_dict(self) -> dict:
        return {"N": self.N, "tau": self.tau, "dt": self.dt, "steps": self.steps,
                "seed": self.seed, "replicas": self.replicas,
                "initial": self.initial.to_dict()}


@dataclass(frozen=True)
class MatrixState:
    t: float
    J: np.ndarray

    def __post_init__(self):
        J = np.asarray(self.J, dtype=np.complex128)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise ArgumentError("J must be square")
        if not (math.isfinite(self.t) and np.all(np.isfinite(J))):
            raise ArgumentError("state must be finite")
        J.setflags(write=False)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "t", float(self.t))

    @property
    def N(self) -> int:
        return self.J.shape[0]


def hermitian_from_normals(g: np.ndarray) -> np.ndarray:
    """Hermitian matrices from real normals ``g[..., N, N]``.

    Diagonal ``g[k, k]``; upper entry ``(g[k, l] + i g[l, k]) / sqrt(2)``;
    lower entries are exact conjugates.
    """
    n = g.shape[-1]
    iu = np.triu_indices(n, 1)
    H = np.zeros(g.shape, dtype=np.complex128)
    k, l = iu
    upper = (g[..., k, l] + 1j * g[..., l, k]) / math.sqrt(2.0)
    H[..., k, l] = upper
    H[..., l, k] = np.conj(upper)
    d = np.arange(n)
    H[..., d, d] = g[..., d, d]
    return H


def increments_from_normals(g: np.ndarray, tau: float, dt: float) -> np.ndarray:
    """Map standard normals ``g[..., 2, N, N]`` to increments of ``J`` over ``dt``.

    A zero weight drops its term entirely, so tau = 1 (resp. -1) yields
    bitwise Hermitian (resp. anti-Hermitian) increments.
    """
    a, b = coefficients(tau)
    s = math.sqrt(dt)
    out = np.zeros(g.shape[:-3] + g.shape[-2:], dtype=np.complex128)
    if a != 0.0:
        out = out + (a * s) * hermitian_from_normals(g[..., 0, :, :])
    if b != 0.0:
        out = out + (1j * (b * s)) * hermitian_from_normals(g[..., 1, :, :])
    return out


def sample_increment(cfg: SimConfig, rng) -> np.ndarray:
    """One increment ``dJ`` over ``cfg.dt``."""
    g = np.asarray(rng.standard_normal((2, cfg.N, cfg.N)), dtype=float)
    return increments_from_normals(g, cfg.tau, cfg.dt)


def advance(state: MatrixState, cfg: SimConfig, rng) -> MatrixState:
    """``J(t + dt) = J(t) + dJ``."""
    if state.N != cfg.N:
        raise ArgumentError("state dimension does not match config")
    dJ = sample_increment(cfg, rng)
    return MatrixState(state.t + cfg.dt, state.J + dJ)


def sample_static(cfg: SimConfig, t: float, rng) -> MatrixState:
    """Sample ``J(t)`` started from zero with a single Gaussian draw per entry."""
    if not t > 0:
        raise ArgumentError("t must be positive")
    g = np.asarray(rng.standard_normal((2, cfg.N, cfg.N)), dtype=float)
    return MatrixState(t, increments_from_normals(g, cfg.tau, t))


def _min_gap(eigs: np.ndarray) -> float:
    if eigs.size < 2:
        return math.inf
    d = np.abs(eigs[:, None] - eigs[None, :])
    d[np.diag_indices(eigs.size)] = np.inf
    return float(d.min())


def initial_matrix(cfg: SimConfig, rng) -> np.ndarray:
    init = cfg.initial
    if init.kind == "zero":
        return np.zeros((cfg.N, cfg.N), dtype=np.complex128)
    if init.kind == "diagonal":
        return np.diag(np.array(init.values, dtype=np.complex128))
    for _ in range(1000):
        J = sample_static(cfg, init.scale, rng).J
        if _min_gap(np.linalg.eigvals(J)) > SIMPLE_GAP:
            return np.array(J)
    raise RuntimeError("could not draw an initial matrix with simple spectrum")


def sample_path(cfg: SimConfig, replica: int = 0, rng=None) -> np.ndarray:
    """Matrix path at the ``steps + 1`` grid points, shape ``(steps+1, N, N)``.

    Accumulation is sequential from ``J(0)``, so the result equals repeated
    :func:`advance` calls on the same stream bit for bit.
    """
    if rng is None:
        rng = replica_rng(cfg.seed, replica)
    J0 = initial_matrix(cfg, rng)
    g = np.asarray(rng.standard_normal((cfg.steps, 2, cfg.N, cfg.N)), dtype=float)
    dJ = increments_from_normals(g, cfg.tau, cfg.dt)
    return np.cumsum(np.concatenate([J0[None], dJ]), axis=0)


def entry_covariance_report(cfg: SimConfig, draws: int, rng=None,
                            threshold: Optional[float] = None) -> list:
    """Empirical complex quadratic variations of the entries of ``J``.

    For every index quadruple, ``E[dJ_ij conj(dJ_kl)]/dt`` is compared with
    ``delta_ik delta_jl`` and ``E[dJ_ij dJ_kl]/dt`` with
    ``tau delta_il delta_jk``.

    Returns
    -------
    list of VerificationReport
        Named ``"<J_ij, conj J_kl>"`` and ``"<J_ij, J_kl>"`` with 1-based
        indices.
    """
    if draws < 1000:
        raise ArgumentError("need at least 1000 draws")
    if rng is None:
        rng = stream(cfg.seed, 2**32 - 1)
    g = np.asarray(rng.standard_normal((draws, 2, cfg.N, cfg.N)), dtype=float)
    dJ = increments_from_normals(g, cfg.tau, cfg.dt).reshape(draws, -1) / math.sqrt(cfg.dt)
    n = cfg.N
    reports = []
    idx = [(i, j) for i in range(n) for j in range(n)]
    for a, (i, j) in enumerate(idx):
        for b, (k, l) in enumerate(idx):
            lab = f"{i+1}{j+1},{k+1}{l+1}"
            mixed = dJ[:, a] * np.conj(dJ[:, b])
            holo = dJ[:, a] * dJ[:, b]
            th_mixed = float(i == k and j == l)
            th_holo = cfg.tau * float(i == l and j == k)
            for name, vals, th in ((f"<J{lab[:2]}, conj J{lab[3:]}>", mixed, th_mixed),
                                   (f"<J{lab[:2]}, J{lab[3:]}>", holo, th_holo)):
                se_re = vals.real.std(ddof=1) / math.sqrt(draws)
                se_im = vals.imag.std(ddof=1) / math.sqrt(draws)
                reports.append(statistical_report(
                    name, th, vals.mean(), se_re, se_im, draws, se_floor=1e-12,
                    indices=[i + 1, j + 1, k + 1, l + 1]))
    if threshold is not None:
        for r in reports:
            r.threshold = threshold
    return reports
