"""Symmetric kernels, their spectra, and spectral profiles.

A square-integrable symmetric kernel is represented by a real symmetric
matrix (its discretized integral operator).  Everything downstream depends
on the kernel only through its eigenvalues, so this module's job is to
produce them reliably and to summarize them as (rank, distinct nonzero
values, multiplicities).
"""

import csv
import json
import math

import numpy as np

from .errors import ClusterAmbiguityError, ConvergenceError, InputError

_OFF_TOL = 1e-14      # stop sweeping when off-diagonal mass < _OFF_TOL * ||A||_F
_MAX_SWEEPS = 100
_RECON_TOL = 1e-10    # reconstruction contract ||Q L Q^T - A||_F <= _RECON_TOL * ||A||_F


class SymmetricKernel:
    """A dim x dim real symmetric matrix; construction symmetrizes exactly."""

    __slots__ = ("dim", "entries")

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InputError(f"kernel must be square, got shape {a.shape}")
        if a.size and not np.all(np.isfinite(a)):
            raise InputError("kernel entries must be finite")
        a = (a + a.T) / 2.0
        a.flags.writeable = False
        object.__setattr__(self, "dim", a.shape[0])
        object.__setattr__(self, "entries", a)

    def __setattr__(self, name, value):
        raise AttributeError("SymmetricKernel is immutable")

    def __repr__(self):
        return f"SymmetricKernel(dim={self.dim})"


class Spectrum:
    """Eigenvalue list sorted by descending |value|, positive before negative on ties.

    ``zero_tol`` marks which entries count as numerically zero for profile
    extraction; the values themselves are all retained.
    """

    __slots__ = ("eigenvalues", "zero_tol")

    def __init__(self, eigenvalues, zero_tol=0.0):
        v = np.array(eigenvalues, dtype=float).ravel()
        if v.size and not np.all(np.isfinite(v)):
            raise InputError("eigenvalues must be finite")
        if zero_tol < 0:
            raise InputError("zero_tol must be nonnegative")
        order = sorted(range(v.size), key=lambda i: (-abs(v[i]), -math.copysign(1.0, v[i])))
        v = v[order] if v.size else v
        v.flags.writeable = False
        object.__setattr__(self, "eigenvalues", v)
        object.__setattr__(self, "zero_tol", float(zero_tol))

    def __setattr__(self, name, value):
        raise AttributeError("Spectrum is immutable")

    def __len__(self):
        return self.eigenvalues.size

    def __iter__(self):
        return iter(self.eigenvalues)

    def power_sum(self, r):
        """sum_k lambda_k^r over the full eigenvalue list."""
        if not self.eigenvalues.size:
            return 0.0
        return float(np.sum(self.eigenvalues ** r))

    def nonzero_values(self):
        """Eigenvalues exceeding zero_tol in absolute value."""
        return self.eigenvalues[np.abs(self.eigenvalues) > self.zero_tol]

    def __repr__(self):
        return f"Spectrum({self.eigenvalues.tolist()!r}, zero_tol={self.zero_tol!r})"


class SpectralProfile:
    """rank, distinct nonzero eigenvalues, multiplicities, and their count a."""

    __slots__ = ("rank", "distinct_values", "multiplicities", "a")

    def __init__(self, distinct_values, multiplicities):
        dv = tuple(float(x) for x in distinct_values)
        mult = tuple(int(m) for m in multiplicities)
        if len(dv) != len(mult):
            raise InputError("distinct_values and multiplicities must align")
        if any(m <= 0 for m in mult):
            raise InputError("multiplicities must be positive")
        object.__setattr__(self, "distinct_values", dv)
        object.__setattr__(self, "multiplicities", mult)
        object.__setattr__(self, "rank", sum(mult))
        object.__setattr__(self, "a", len(dv))

    def __setattr__(self, name, value):
        raise AttributeError("SpectralProfile is immutable")

    def expanded(self):
        """The eigenvalue list with each distinct value repeated by multiplicity."""
        out = []
        for v, m in zip(self.distinct_values, self.multiplicities):
            out.extend([v] * m)
        return out

    def __repr__(self):
        return (f"SpectralProfile(rank={self.rank}, distinct_values={self.distinct_values}, "
                f"multiplicities={self.multiplicities})")


def diag_kernel(values):
    """Kernel with the given diagonal; eigen_decompose recovers the multiset."""
    v = np.asarray(values, dtype=float).ravel()
    return SymmetricKernel(np.diag(v))


def _jacobi(a):
    """Cyclic Jacobi diagonalization of a symmetric matrix.

    Sweeps plane rotations over all (p, r) pairs until the off-diagonal
    Frobenius mass drops below _OFF_TOL * ||A||_F.  The off-diagonal mass is
    accumulated directly from the off-diagonal entries: the textbook
    ||A||_F^2 - sum(diag^2) form cancels catastrophically near convergence
    and can report zero while the true mass is still ~1e-10.

    Returns (diagonal, rotation matrix Q) with A = Q diag Q^T.
    """
    n = a.shape[0]
    q = np.eye(n)
    if n < 2:
        return np.diag(a).copy(), q
    a = a.copy()
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return np.zeros(n), q
    skip = 0.5 * _OFF_TOL * norm / n
    for _ in range(_MAX_SWEEPS):
        off = a.copy()
        np.fill_diagonal(off, 0.0)
        if np.linalg.norm(off) < _OFF_TOL * norm:
            return np.diag(a).copy(), q
        for p in range(n - 1):
            live = np.nonzero(np.abs(a[p, p + 1:]) > skip)[0]
            for r in live + p + 1:
                apr = a[p, r]
                if abs(apr) <= skip:
                    continue
                tau = (a[r, r] - a[p, p]) / (2.0 * apr)
                if tau == 0.0:
                    t = 1.0
                else:
                    t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                app, arr = a[p, p], a[r, r]
                vp = a[p, :].copy()
                vr = a[r, :].copy()
                a[p, :] = c * vp - s * vr
                a[r, :] = s * vp + c * vr
                vp = a[:, p].copy()
                vr = a[:, r].copy()
                a[:, p] = c * vp - s * vr
                a[:, r] = s * vp + c * vr
                a[p, p] = app - t * apr
                a[r, r] = arr + t * apr
                a[p, r] = 0.0
                a[r, p] = 0.0
                vp = q[:, p].copy()
                vr = q[:, r].copy()
                q[:, p] = c * vp - s * vr
                q[:, r] = s * vp + c * vr
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    if np.linalg.norm(off) >= _OFF_TOL * norm:
        raise ConvergenceError(f"Jacobi sweeps did not converge in {_MAX_SWEEPS} sweeps")
    return np.diag(a).copy(), q


def eigen_decompose(kernel, zero_tol=None):
    """All eigenvalues of the kernel matrix, as a Spectrum.

    zero_tol defaults to 1e-10 * max|eigenvalue| so the threshold survives
    rescaling of the kernel.  The internal decomposition is checked against
    the reconstruction contract before the spectrum is returned.
    """
    if not isinstance(kernel, SymmetricKernel):
        kernel = SymmetricKernel(kernel)
    w, q = _jacobi(kernel.entries)
    if kernel.dim:
        norm = np.linalg.norm(kernel.entries)
        resid = np.linalg.norm((q * w) @ q.T - kernel.entries)
        if norm > 0 and resid > _RECON_TOL * norm:
            raise ConvergenceError(
                f"eigendecomposition residual {resid:.3e} exceeds {_RECON_TOL:.0e} * ||A||")
    if zero_tol is None:
        zero_tol = 1e-10 * (float(np.max(np.abs(w))) if w.size else 0.0)
    if zero_tol < 0:
        raise InputError("zero_tol must be nonnegative")
    return Spectrum(w, zero_tol=zero_tol)


def spectral_profile(spectrum, cluster_tol=None):
    """Group the nonzero eigenvalues into clusters of nearby values.

    Eigenvalues with |value| <= spectrum.zero_tol are discarded.  Survivors
    are chained into clusters wherever the gap between sorted neighbours is
    <= cluster_tol; each cluster contributes its mean as a distinct value
    and its size as the multiplicity.  An eigenvalue within cluster_tol of
    two different cluster means is ambiguous and raises.
    """
    v = np.sort(spectrum.nonzero_values())
    if cluster_tol is None:
        top = float(np.max(np.abs(spectrum.eigenvalues))) if len(spectrum) else 0.0
        cluster_tol = 1e-8 * top
    if cluster_tol < 0:
        raise InputError("cluster_tol must be nonnegative")
    if v.size == 0:
        return SpectralProfile((), ())
    clusters = [[v[0]]]
    for x in v[1:]:
        if x - clusters[-1][-1] <= cluster_tol:
            clusters[-1].append(x)
        else:
            clusters.append([x])
    means = [float(np.mean(c)) for c in clusters]
    for x in v:
        near = sum(1 for m in means if abs(x - m) <= cluster_tol)
        if near > 1:
            raise ClusterAmbiguityError(
                f"eigenvalue {x!r} lies within {cluster_tol!r} of two cluster means")
    # report in |value|-descending order to match the spectrum convention
    order = sorted(range(len(means)), key=lambda i: (-abs(means[i]), -math.copysign(1.0, means[i])))
    return SpectralProfile([means[i] for i in order], [len(clusters[i]) for i in order])


def load_kernel(path):
    """Read a kernel from JSON: {"dim": n, "entries": [[...], ...]} or {"diag": [...]}."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed kernel JSON in {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"kernel JSON must be an object, got {type(doc).__name__}")
    if "diag" in doc:
        return diag_kernel(doc["diag"])
    if "entries" not in doc:
        raise InputError("kernel JSON needs either 'entries' or 'diag'")
    kernel = SymmetricKernel(doc["entries"])
    if "dim" in doc and int(doc["dim"]) != kernel.dim:
        raise InputError(f"kernel JSON declares dim={doc['dim']} but entries are {kernel.dim}x{kernel.dim}")
    return kernel


def write_spectrum_csv(spectrum, fh):
    """CSV export with header ``index,eigenvalue``."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["index", "eigenvalue"])
    for i, val in enumerate(spectrum.eigenvalues):
        writer.writerow([i, repr(float(val))])


def read_spectrum_csv(path, zero_tol=0.0):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["index", "eigenvalue"]:
        raise InputError(f"{path} is not an index,eigenvalue CSV")
    try:
        values = [float(row[1]) for row in rows[1:] if row]
    except (IndexError, ValueError) as exc:
        raise InputError(f"malformed spectrum CSV {path}: {exc}") from exc
    return Spectrum(values, zero_tol=zero_tol)
