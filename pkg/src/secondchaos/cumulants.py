"""Classical and free cumulants of second-chaos elements, and moment conversion.

For an element with spectrum {lambda_k} plus an independent Gaussian (or
freely independent semicircular) component of standard deviation sd:

    classical:  k_1 = 0,  k_2 = sd^2 + 2*sum lambda_k^2,
                k_r = 2^(r-1) (r-1)! sum lambda_k^r          (r >= 3)
    free:       k_1 = 0,  k_2 = sd^2 + sum lambda_k^2,
                k_r = sum lambda_k^r                         (r >= 3)

The extra component contributes at order 2 only, in both flavors, because
cumulants are additive over (freely) independent summands.
"""

import csv
import math

import numpy as np

from .errors import InputError
from .spectral import Spectrum

CLASSICAL = "classical"
FREE = "free"


def _check_flavor(flavor):
    if flavor not in (CLASSICAL, FREE):
        raise InputError(f"flavor must be {CLASSICAL!r} or {FREE!r}, got {flavor!r}")


class CumulantVector:
    """Cumulants values[r] for r = 1..r_max, tagged classical or free."""

    __slots__ = ("flavor", "r_max", "values")

    def __init__(self, flavor, values):
        _check_flavor(flavor)
        vals = {int(r): float(v) for r, v in dict(values).items()}
        r_max = max(vals) if vals else 0
        if r_max < 2 or sorted(vals) != list(range(1, r_max + 1)):
            raise InputError("cumulant orders must be exactly 1..r_max with r_max >= 2")
        if vals[2] < 0:
            raise InputError(f"order-2 cumulant is a variance and cannot be {vals[2]!r}")
        object.__setattr__(self, "flavor", flavor)
        object.__setattr__(self, "r_max", r_max)
        object.__setattr__(self, "values", vals)

    def __setattr__(self, name, value):
        raise AttributeError("CumulantVector is immutable")

    def __getitem__(self, r):
        return self.values[r]

    def __repr__(self):
        return f"CumulantVector({self.flavor!r}, {self.values!r})"


class MomentVector:
    """Raw moments values[r] for r = 0..r_max, with values[0] == 1."""

    __slots__ = ("r_max", "values")

    def __init__(self, values):
        vals = {int(r): float(v) for r, v in dict(values).items()}
        r_max = max(vals) if vals else -1
        if r_max < 0 or sorted(vals) != list(range(r_max + 1)):
            raise InputError("moment orders must be exactly 0..r_max")
        if vals[0] != 1.0:
            raise InputError("zeroth moment must be 1")
        if r_max >= 2 and vals[2] < vals[1] ** 2 - 1e-12 * max(1.0, vals[1] ** 2):
            raise InputError("moments violate variance nonnegativity")
        object.__setattr__(self, "r_max", r_max)
        object.__setattr__(self, "values", vals)

    def __setattr__(self, name, value):
        raise AttributeError("MomentVector is immutable")

    def __getitem__(self, r):
        return self.values[r]

    def __repr__(self):
        return f"MomentVector({self.values!r})"


def _as_spectrum(spectrum):
    if isinstance(spectrum, Spectrum):
        return spectrum
    return Spectrum(spectrum)


def classical_cumulants(spectrum, gaussian_sd=0.0, r_max=4):
    """Cumulants of gaussian_sd * N0 + sum lambda_k (N_k^2 - 1)."""
    if r_max < 2:
        raise InputError("r_max must be at least 2")
    if gaussian_sd < 0:
        raise InputError("gaussian_sd must be nonnegative")
    spectrum = _as_spectrum(spectrum)
    vals = {1: 0.0, 2: gaussian_sd ** 2 + 2.0 * spectrum.power_sum(2)}
    for r in range(3, r_max + 1):
        vals[r] = 2.0 ** (r - 1) * math.factorial(r - 1) * spectrum.power_sum(r)
    return CumulantVector(CLASSICAL, vals)


def free_cumulants(spectrum, semicircular_sd=0.0, r_max=4):
    """Free cumulants of semicircular_sd * S0 + sum lambda_k (S_k^2 - 1)."""
    if r_max < 2:
        raise InputError("r_max must be at least 2")
    if semicircular_sd < 0:
        raise InputError("semicircular_sd must be nonnegative")
    spectrum = _as_spectrum(spectrum)
    vals = {1: 0.0, 2: semicircular_sd ** 2 + spectrum.power_sum(2)}
    for r in range(3, r_max + 1):
        vals[r] = spectrum.power_sum(r)
    return CumulantVector(FREE, vals)


def moments_from_classical_cumulants(c):
    """m_n = sum_{k=1..n} C(n-1, k-1) k_k m_{n-k}, the classical recursion."""
    if c.flavor != CLASSICAL:
        raise InputError("expected a classical CumulantVector")
    m = {0: 1.0}
    for n in range(1, c.r_max + 1):
        m[n] = sum(math.comb(n - 1, k - 1) * c[k] * m[n - k] for k in range(1, n + 1))
    return MomentVector(m)


def _nc_powers(m, n_max, k_max):
    """table[k][s] = sum over compositions of s into k parts of m_{i1}...m_{ik}."""
    table = [[0.0] * (n_max + 1) for _ in range(k_max + 1)]
    table[0][0] = 1.0
    for k in range(1, k_max + 1):
        for s in range(n_max + 1):
            table[k][s] = sum(m[j] * table[k - 1][s - j] for j in range(s + 1))
    return table


def moments_from_free_cumulants(c):
    """Free moment recursion over non-crossing partitions.

    m_n = sum_{k=1..n} k_k * sum_{i1+...+ik = n-k, ij >= 0} m_{i1} ... m_{ik},
    obtained by splitting a non-crossing partition at the block containing 1.
    """
    if c.flavor != FREE:
        raise InputError("expected a free CumulantVector")
    m = [1.0]
    for n in range(1, c.r_max + 1):
        table = _nc_powers(m, n - 1, n)
        m.append(sum(c[k] * table[k][n - k] for k in range(1, n + 1)))
    return MomentVector(dict(enumerate(m)))


def classical_cumulants_from_moments(m):
    """Invert the classical recursion: k_n = m_n - sum_{k<n} C(n-1,k-1) k_k m_{n-k}."""
    if m.r_max < 2:
        raise InputError("need moments up to order 2 at least")
    k = {}
    for n in range(1, m.r_max + 1):
        k[n] = m[n] - sum(math.comb(n - 1, j - 1) * k[j] * m[n - j] for j in range(1, n))
    return CumulantVector(CLASSICAL, k)


def free_cumulants_from_moments(m):
    """Invert the non-crossing recursion order by order."""
    if m.r_max < 2:
        raise InputError("need moments up to order 2 at least")
    mom = [m[r] for r in range(m.r_max + 1)]
    k = {}
    for n in range(1, m.r_max + 1):
        table = _nc_powers(mom, n - 1, n)
        k[n] = mom[n] - sum(k[j] * table[j][n - j] for j in range(1, n))
    return CumulantVector(FREE, k)


def empirical_cumulants(samples, r_max=4):
    """Plug-in cumulant estimates from raw sample moments.

    Uses the same inversion as classical_cumulants_from_moments, so the
    estimator is the plug-in one (bias O(1/n); no k-statistics correction).
    Requires at least 10 * r_max samples.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if r_max < 2:
        raise InputError("r_max must be at least 2")
    if x.size < 10 * r_max:
        raise InputError(f"need at least {10 * r_max} samples for r_max={r_max}, got {x.size}")
    mom = {0: 1.0}
    p = np.ones_like(x)
    for r in range(1, r_max + 1):
        p = p * x
        mom[r] = float(np.mean(p))
    k = {}
    for n in range(1, r_max + 1):
        k[n] = mom[n] - sum(math.comb(n - 1, j - 1) * k[j] * mom[n - j] for j in range(1, n))
    # sample variance can round to a tiny negative for constant data
    if abs(k[2]) < 1e-12 * max(1.0, mom[2]):
        k[2] = max(k[2], 0.0)
    return CumulantVector(CLASSICAL, k)


def write_cumulants_csv(c, fh):
    """CSV export with header ``r,value,flavor``."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["r", "value", "flavor"])
    for r in range(1, c.r_max + 1):
        writer.writerow([r, repr(c[r]), c.flavor])
