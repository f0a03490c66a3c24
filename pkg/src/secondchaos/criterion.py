"""Finite-cumulant convergence test against a finite-rank limit target.

A target is a Gaussian/semicircular component of size mu0 plus finitely many
distinct nonzero eigenvalues with multiplicities.  Convergence in law of a
second-chaos sequence to the target is equivalent to three cumulant
conditions:

  (a) the order-2 cumulant converges to the target's;
  (b) a fixed linear combination of cumulants of orders 3..deg(Q) converges,
      with weights read off a polynomial Q built from the target's distinct
      eigenvalues (multiplicities do not enter Q);
  (c) cumulants at `a` consecutive orders converge, where `a` is the number
      of distinct eigenvalues; these pin down the multiplicities through a
      Vandermonde system in the power sums.

A finite sequence can only support or contradict a limit statement, so the
verdict is three-valued: consistent / inconsistent / insufficient_data.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import cumulants as cm
from .cumulants import CLASSICAL, FREE, CumulantVector
from .errors import IllConditionedError, InputError
from .spectral import Spectrum

_COND_LIMIT = 1e12


class LimitTarget:
    """Candidate limit law: component size mu0 plus distinct eigenvalues with multiplicities.

    The zero target (mu0 == 0 and no eigenvalues) is allowed explicitly; for
    every other target the standing assumption |mu0| + sum m_i mu_i^2 > 0
    holds automatically.
    """

    __slots__ = ("flavor", "mu0", "distinct_values", "multiplicities")

    def __init__(self, flavor, mu0, distinct_values=(), multiplicities=()):
        cm._check_flavor(flavor)
        if mu0 < 0 or not math.isfinite(mu0):
            raise InputError("mu0 must be a nonnegative real")
        dv = tuple(float(x) for x in distinct_values)
        mult = tuple(int(m) for m in multiplicities)
        if len(dv) != len(mult):
            raise InputError("distinct_values and multiplicities must align")
        if any(m <= 0 for m in mult):
            raise InputError("multiplicities must be positive integers")
        if any(x == 0 or not math.isfinite(x) for x in dv):
            raise InputError("distinct eigenvalues must be nonzero finite reals")
        if len(set(dv)) != len(dv):
            raise InputError("distinct eigenvalues must be pairwise distinct")
        object.__setattr__(self, "flavor", flavor)
        object.__setattr__(self, "mu0", float(mu0))
        object.__setattr__(self, "distinct_values", dv)
        object.__setattr__(self, "multiplicities", mult)

    def __setattr__(self, name, value):
        raise AttributeError("LimitTarget is immutable")

    @property
    def a(self):
        return len(self.distinct_values)

    @property
    def rank(self):
        return sum(self.multiplicities)

    def is_zero(self):
        return self.mu0 == 0.0 and not self.distinct_values

    def expanded_spectrum(self):
        out = []
        for v, m in zip(self.distinct_values, self.multiplicities):
            out.extend([v] * m)
        return Spectrum(out)

    def cumulants(self, r_max):
        """Analytic cumulants of the target law, in the target's own flavor."""
        if self.flavor == CLASSICAL:
            return cm.classical_cumulants(self.expanded_spectrum(), self.mu0, r_max)
        return cm.free_cumulants(self.expanded_spectrum(), self.mu0, r_max)

    def to_dict(self):
        return {"flavor": self.flavor, "mu0": self.mu0,
                "values": list(self.distinct_values), "mults": list(self.multiplicities)}

    def __repr__(self):
        return (f"LimitTarget({self.flavor!r}, mu0={self.mu0!r}, "
                f"values={self.distinct_values!r}, mults={self.multiplicities!r})")


def gaussian_target(sd=1.0):
    return LimitTarget(CLASSICAL, sd)


def semicircular_target(sd=1.0):
    return LimitTarget(FREE, sd)


def chisq_target(r=1):
    """Centered chi-square with r degrees of freedom: spectrum {1} with multiplicity r."""
    if r < 1:
        raise InputError("degrees of freedom must be a positive integer")
    return LimitTarget(CLASSICAL, 0.0, (1.0,), (int(r),))


def free_poisson_target(r=1):
    """Centered free Poisson with rate r: the free twin of chisq_target(r)."""
    if r < 1:
        raise InputError("rate must be a positive integer")
    return LimitTarget(FREE, 0.0, (1.0,), (int(r),))


def tetilla_target():
    """Difference of two free squares: spectrum {1, -1}."""
    return LimitTarget(FREE, 0.0, (1.0, -1.0), (1, 1))


class QPolynomial:
    """Criterion polynomial, coefficients in ascending powers, leading coefficient 1."""

    __slots__ = ("coefficients",)

    def __init__(self, coefficients):
        coeffs = tuple(float(c) for c in coefficients)
        if not coeffs or coeffs[-1] != 1.0:
            raise InputError("Q must be monic")
        object.__setattr__(self, "coefficients", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("QPolynomial is immutable")

    @property
    def degree(self):
        return len(self.coefficients) - 1

    @property
    def lowest_power(self):
        return next(i for i, c in enumerate(self.coefficients) if c != 0.0)

    def coefficient(self, r):
        return self.coefficients[r] if 0 <= r <= self.degree else 0.0

    def __call__(self, x):
        y = np.zeros_like(np.asarray(x, dtype=float))
        for c in reversed(self.coefficients):
            y = y * x + c
        return y if y.ndim else float(y)

    def __repr__(self):
        return f"QPolynomial({list(self.coefficients)!r})"


def build_q(target):
    """Q(x) = x^(2(1+[mu0 != 0])) * prod_i (x - mu_i)^2, expanded.

    Q depends on the target only through the distinct eigenvalues, never the
    multiplicities.
    """
    coeffs = np.array([1.0])
    for mu in target.distinct_values:
        coeffs = np.convolve(coeffs, [-mu, 1.0])
        coeffs = np.convolve(coeffs, [-mu, 1.0])
    shift = 2 * (1 + (1 if target.mu0 != 0.0 else 0))
    coeffs = np.concatenate([np.zeros(shift), coeffs])
    q = QPolynomial(coeffs)
    for mu in target.distinct_values:
        if abs(q(mu)) > 1e-12 * max(1.0, abs(mu) ** q.degree):
            raise ArithmeticError(f"expanded Q fails to vanish at {mu!r}")
    return q


def b_multiplier(q, flavor):
    """Scale that turns the normalized (b) value into the integer-weight form.

    Classically the (b) combination divides each cumulant by (r-1)! 2^(r-1);
    multiplying by (degQ-1)! 2^(degQ-1) restores the form quoted with integer
    weights (e.g. k4 - 12 k3).  Free cumulants enter unnormalized already.
    """
    if flavor == FREE:
        return 1.0
    d = q.degree
    return float(math.factorial(d - 1) * 2 ** (d - 1))


@dataclass(frozen=True)
class ConditionValues:
    v_a: float
    v_b: float
    v_c: tuple


def default_start_order(target):
    return 2 * (1 + (1 if target.mu0 != 0.0 else 0))


def required_order(target, start_order=None):
    """Smallest cumulant order that condition evaluation needs."""
    q_degree = 2 * (1 + (1 if target.mu0 != 0.0 else 0)) + 2 * target.a
    start = default_start_order(target) if start_order is None else start_order
    return max(q_degree, start + target.a - 1, 2)


def condition_values(cumulants, target, q=None, start_order=None):
    """Evaluate the three condition functionals on a cumulant vector.

    v_a is the order-2 cumulant.  v_b weights cumulants of orders 3..deg(Q)
    by the coefficients of Q (classically divided by (r-1)! 2^(r-1)).  v_c
    lists the cumulants at the `a` consecutive orders starting at
    start_order.  The target's own condition values are obtained by feeding
    target.cumulants(...) through this same function.
    """
    if cumulants.flavor != target.flavor:
        raise InputError(f"cumulant flavor {cumulants.flavor!r} does not match "
                         f"target flavor {target.flavor!r}")
    if q is None:
        q = build_q(target)
    start = default_start_order(target) if start_order is None else int(start_order)
    if start < default_start_order(target):
        raise InputError(f"start_order must be at least {default_start_order(target)}")
    need = max(q.degree, start + target.a - 1, 2)
    if cumulants.r_max < need:
        raise InputError(f"cumulants up to order {need} required, got r_max={cumulants.r_max}")
    v_a = cumulants[2]
    v_b = 0.0
    for r in range(3, q.degree + 1):
        c = q.coefficient(r)
        if c == 0.0:
            continue
        if target.flavor == CLASSICAL:
            v_b += c * cumulants[r] / (math.factorial(r - 1) * 2.0 ** (r - 1))
        else:
            v_b += c * cumulants[r]
    v_c = tuple(cumulants[r] for r in range(start, start + target.a))
    return ConditionValues(v_a, v_b, v_c)


@dataclass(frozen=True)
class CriterionReport:
    """Final residuals, their trends over the sequence, and the verdict."""

    residual_a: float
    residual_b: float
    residuals_c: tuple
    consecutive_orders: tuple
    verdict: str
    trend: dict = field(repr=False)
    target_values: ConditionValues = field(repr=False, default=None)
    b_multiplier: float = 1.0
    tol: float = 0.0

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "residual_a": self.residual_a,
            "residual_b": self.residual_b,
            "residuals_c": list(self.residuals_c),
            "consecutive_orders": list(self.consecutive_orders),
            "trend": {k: [list(x) if isinstance(x, tuple) else x for x in v]
                      for k, v in self.trend.items()},
            "target_values": {
                "a": self.target_values.v_a,
                "b": self.target_values.v_b,
                "b_multiplied": self.target_values.v_b * self.b_multiplier,
                "c": list(self.target_values.v_c),
            },
            "b_multiplier": self.b_multiplier,
            "tol": self.tol,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _nonincreasing(seq):
    return all(seq[i + 1] <= seq[i] for i in range(len(seq) - 1))


def _nondecreasing(seq):
    return all(seq[i + 1] >= seq[i] for i in range(len(seq) - 1))


def assess_sequence(spectra, sds, target, tol, start_order=None):
    """Compare a sequence of spectra against the target's condition values.

    Verdict semantics: `consistent` when every residual at the final index is
    below tol and every residual series is non-increasing over the last
    max(3, ceil(len/4)) entries; `inconsistent` when some residual exceeds
    10*tol at the final index while its tail is non-decreasing; otherwise
    `insufficient_data`.
    """
    spectra = list(spectra)
    if not spectra:
        raise InputError("need at least one spectrum")
    sds = list(sds)
    if len(sds) != len(spectra):
        raise InputError(f"got {len(spectra)} spectra but {len(sds)} component sds")
    if any(sd < 0 for sd in sds):
        raise InputError("component sds must be nonnegative")
    if tol <= 0:
        raise InputError("tol must be positive")
    q = build_q(target)
    start = default_start_order(target) if start_order is None else int(start_order)
    r_max = max(q.degree, start + target.a - 1, 2)
    target_cv = condition_values(target.cumulants(r_max), target, q, start)
    series_a, series_b, series_c = [], [], []
    for spectrum, sd in zip(spectra, sds):
        if target.flavor == CLASSICAL:
            kappa = cm.classical_cumulants(spectrum, sd, r_max)
        else:
            kappa = cm.free_cumulants(spectrum, sd, r_max)
        cv = condition_values(kappa, target, q, start)
        series_a.append(abs(cv.v_a - target_cv.v_a))
        series_b.append(abs(cv.v_b - target_cv.v_b))
        series_c.append(tuple(abs(x - y) for x, y in zip(cv.v_c, target_cv.v_c)))
    window = min(len(spectra), max(3, math.ceil(len(spectra) / 4)))
    all_series = [series_a, series_b] + [[row[i] for row in series_c] for i in range(target.a)]
    finals = [s[-1] for s in all_series]
    tails = [s[-window:] for s in all_series]
    if all(f < tol for f in finals) and all(_nonincreasing(t) for t in tails):
        verdict = "consistent"
    elif any(f > 10.0 * tol and _nondecreasing(t) for f, t in zip(finals, tails)):
        verdict = "inconsistent"
    else:
        verdict = "insufficient_data"
    return CriterionReport(
        residual_a=series_a[-1],
        residual_b=series_b[-1],
        residuals_c=series_c[-1],
        consecutive_orders=tuple(range(start, start + target.a)),
        verdict=verdict,
        trend={"a": series_a, "b": series_b, "c": series_c},
        target_values=target_cv,
        b_multiplier=b_multiplier(q, target.flavor),
        tol=float(tol),
    )


def recover_multiplicities(power_sums, orders, candidate_values):
    """Solve sum_i mu_i^r m_i = p_r for the multiplicities m_i.

    The system matrix has a Vandermonde factorization and is nonsingular for
    pairwise-distinct nonzero candidate values; it is solved by standard
    partial-pivoting elimination.  Returns real values; integrality is the
    caller's check.
    """
    p = np.asarray(power_sums, dtype=float).ravel()
    orders = list(orders)
    mu = np.asarray(candidate_values, dtype=float).ravel()
    a = mu.size
    if a < 1 or p.size != a or len(orders) != a:
        raise InputError("power_sums, orders and candidate_values must share length a >= 1")
    if any(orders[i + 1] - orders[i] != 1 for i in range(a - 1)):
        raise InputError("orders must be consecutive integers")
    if np.any(mu == 0.0) or len(set(mu.tolist())) != a:
        raise InputError("candidate values must be nonzero and pairwise distinct")
    m = mu[None, :] ** np.array(orders, dtype=float)[:, None]
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise IllConditionedError(f"power-sum system condition estimate {cond:.3e} exceeds {_COND_LIMIT:.0e}")
    return np.linalg.solve(m, p).tolist()


@dataclass(frozen=True)
class TransferResult:
    classical: CriterionReport
    free: CriterionReport
    agree: bool

    def to_dict(self):
        return {"classical": self.classical.to_dict(),
                "free": self.free.to_dict(),
                "agree": self.agree}


def transfer_check(spectra, lambda0, classical_target, tol, start_order=None):
    """Assess the same spectra against the paired classical and free targets.

    The pairing puts a Gaussian of variance 2*lambda0^2 on the classical side
    and a semicircular of variance lambda0^2 on the free side, with the same
    eigenvalues and multiplicities; the two verdicts agree in the limit.
    """
    if lambda0 < 0:
        raise InputError("lambda0 must be nonnegative")
    if classical_target.flavor != CLASSICAL:
        raise InputError("classical_target must have classical flavor")
    want_mu0 = math.sqrt(2.0) * lambda0
    if abs(classical_target.mu0 - want_mu0) > 1e-12 * max(1.0, want_mu0):
        raise InputError(f"classical target mu0 must be sqrt(2)*lambda0 = {want_mu0!r}, "
                         f"got {classical_target.mu0!r}")
    free_target = LimitTarget(FREE, lambda0, classical_target.distinct_values,
                              classical_target.multiplicities)
    spectra = list(spectra)
    sds = [0.0] * len(spectra)
    classical_report = assess_sequence(spectra, sds, classical_target, tol, start_order)
    free_report = assess_sequence(spectra, sds, free_target, tol, start_order)
    return TransferResult(classical_report, free_report,
                          classical_report.verdict == free_report.verdict)
