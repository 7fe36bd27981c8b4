"""Verification reports and their JSON serialization.

A :class:`VerificationReport` compares one estimated quantity with its
theoretical value.  Two flavours share the same record:

* statistical checks: ``stderr`` is the Monte-Carlo standard error and
  ``z_score`` the normalized deviation, passing when ``|z| <= threshold``;
* deterministic checks: ``stderr`` carries the tolerance (an absolute
  error budget already multiplied by the problem scale) and ``threshold``
  is 1, so ``z_score`` is the error in units of that budget.

For complex quantities the real and imaginary parts are tested separately
and the report keeps the component with the larger ``|z|``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

DEFAULT_Z = 3.0
WIDE_Z = 4.0
# more simultaneous reports than this widen the z threshold
BONFERRONI_COUNT = 50


@dataclass
class VerificationReport:
    name: str
    theory: complex
    estimate: complex
    stderr: float
    z_score: float
    samples: int
    threshold: float = DEFAULT_Z
    details: dict = field(default_factory=dict)
    # explicit verdict for checks that are not z-tests (KS p-values, bounds)
    ok: Optional[bool] = None

    @property
    def passed(self) -> bool:
        if self.ok is not None:
            return bool(self.ok)
        return bool(np.isfinite(self.z_score) and abs(self.z_score) <= self.threshold)

    def with_threshold(self, threshold: float) -> "VerificationReport":
        self.threshold = float(threshold)
        return self

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "theory": _pair(self.theory),
            "estimate": _pair(self.estimate),
            "stderr": _num(self.stderr),
            "z": _num(self.z_score),
            "samples": int(self.samples),
            "pass": self.passed,
            "details": _jsonable(self.details),
        }

    def __str__(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (
            f"[{flag}] {self.name}: estimate={_fmt(self.estimate)} "
            f"theory={_fmt(self.theory)} z={self.z_score:.3g} (n={self.samples})"
        )


def _fmt(x) -> str:
    x = complex(x)
    if x.imag == 0:
        return f"{x.real:.6g}"
    return f"{x.real:.6g}{x.imag:+.6g}j"


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _pair(x):
    x = complex(x)
    return [_num(x.real), _num(x.imag)]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return _pair(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _component_z(diff: float, se: float) -> float:
    if se > 0:
        return diff / se
    return 0.0 if diff == 0 else math.copysign(math.inf, diff)


def statistical_report(name, theory, estimate, se_re, se_im=0.0, samples=1,
                       threshold=DEFAULT_Z, se_floor=0.0, **details) -> VerificationReport:
    """Build a z-test report for a real or complex estimate.

    ``se_floor`` bounds the standard error from below; it accounts for the
    floating-point resolution of quantities that are exactly zero in
    theory (e.g. imaginary parts of Hermitian spectra).
    """
    theory = complex(theory)
    estimate = complex(estimate)
    se_re = max(float(se_re), se_floor)
    se_im = max(float(se_im), se_floor)
    z_re = _component_z(estimate.real - theory.real, se_re)
    z_im = _component_z(estimate.imag - theory.imag, se_im)
    if abs(z_im) > abs(z_re):
        z, se = z_im, se_im
    else:
        z, se = z_re, se_re
    details.setdefault("z_re", z_re)
    details.setdefault("z_im", z_im)
    return VerificationReport(name, theory, estimate, se, z, int(samples), threshold, details)


def mean_report(name, theory, values, threshold=DEFAULT_Z, se_floor=0.0, **details):
    """z-test of ``mean(values)`` against ``theory`` with the naive standard error."""
    values = np.asarray(values).ravel()
    n = values.size
    re, im = values.real, values.imag
    se_re = re.std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
    se_im = im.std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
    return statistical_report(name, theory, values.mean(), se_re, se_im, n,
                              threshold, se_floor, **details)


def tolerance_report(name, theory, estimate, tol, scale=None, samples=1, **details):
    """Deterministic check ``|estimate - theory| <= tol * scale``.

    ``scale`` defaults to ``max(|theory|, |estimate|, 1e-300)``.
    """
    theory = complex(theory)
    estimate = complex(estimate)
    if scale is None:
        scale = max(abs(theory), abs(estimate))
    scale = max(float(scale), 1e-300)
    budget = tol * scale
    err = abs(estimate - theory)
    details.setdefault("rel_err", err / scale)
    details.setdefault("tol", tol)
    return VerificationReport(name, theory, estimate, budget, err / budget,
                              int(samples), 1.0, details)


def verdict_report(name, theory, estimate, ok, samples=1, **details) -> VerificationReport:
    """Report whose verdict is decided by the caller (e.g. a KS p-value)."""
    return VerificationReport(name, complex(theory), complex(estimate), 0.0,
                              0.0 if ok else math.inf, int(samples), DEFAULT_Z,
                              details, ok=bool(ok))


def apply_family_threshold(reports: Sequence[VerificationReport]) -> list:
    """Widen statistical thresholds to 4 when more than 50 reports run together."""
    reports = list(reports)
    if len(reports) > BONFERRONI_COUNT:
        for r in reports:
            if r.threshold == DEFAULT_Z:
                r.threshold = WIDE_Z
    return reports


def reports_to_json(reports: Iterable[VerificationReport]) -> str:
    payload = [r.to_dict() for r in reports]
    return json.dumps(payload, indent=2, sort_keys=False, allow_nan=False) + "\n"


def summary_line(reports: Sequence[VerificationReport]) -> str:
    reports = list(reports)
    failed = [r.name for r in reports if not r.passed]
    if failed:
        return f"FAIL: {len(failed)}/{len(reports)} reports failed ({', '.join(failed[:5])}{'...' if len(failed) > 5 else ''})"
    return f"PASS: {len(reports)}/{len(reports)} reports passed"
