"""Quadrature covariance matrices and the symplectic toolkit built on them.

Conventions
-----------
* Shot-noise units: the vacuum quadrature variance is 1.
* Interleaved ordering ``(x1, p1, x2, p2, ...)``. Grouped orderings are
  produced on demand with :func:`permute_modes` and never stored.
* Entropies are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InvalidArgumentError,
    NumericFailureError,
    UnphysicalEigenvalueError,
)

SYMMETRY_TOL = 1e-10
SYMPLECTIC_TOL = 1e-9
EIGENVALUE_CLAMP = 1e-9
PINV_CUTOFF = 1e-12

_QUADRATURE_INDEX = {"x": 0, "p": 1}


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class QuadratureCovariance:
    """Covariance matrix of ``n_modes`` bosonic modes in shot-noise units.

    Parameters
    ----------
    matrix : array_like, shape (2n, 2n)
        Real symmetric matrix in interleaved ``(x, p)`` ordering.
    labels : sequence of str, optional
        One name per mode. Defaults to ``m0, m1, ...``.
    """

    matrix: np.ndarray
    labels: tuple = field(default=())

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2 or m.shape[0] == 0:
            raise InvalidArgumentError(f"covariance must be a non-empty even square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidArgumentError("covariance contains non-finite entries")
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - m.T)) > SYMMETRY_TOL * scale:
            raise InvalidArgumentError("covariance matrix is not symmetric")
        # remove rounding asymmetry so downstream Hermitian solvers see an exact symmetric input
        m = _frozen(0.5 * (m + m.T))
        n = m.shape[0] // 2
        labels = tuple(self.labels) if self.labels else tuple(f"m{i}" for i in range(n))
        if len(labels) != n:
            raise InvalidArgumentError(f"expected {n} labels, got {len(labels)}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "labels", labels)

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def mode_block(self, i: int, j: int | None = None) -> np.ndarray:
        """2x2 block between modes ``i`` and ``j`` (``j`` defaults to ``i``)."""
        j = i if j is None else j
        return self.matrix[2 * i:2 * i + 2, 2 * j:2 * j + 2]

    def index(self, label: str) -> int:
        return self.labels.index(label)


@dataclass(frozen=True)
class SymplecticTransform:
    """Real linear map on quadratures that preserves the symplectic form."""

    matrix: np.ndarray
    description: str = ""

    def __post_init__(self):
        s = _frozen(self.matrix)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2 or s.shape[0] == 0:
            raise InvalidArgumentError(f"transform must be a non-empty even square matrix, got shape {s.shape}")
        om = symplectic_form(s.shape[0] // 2)
        if np.max(np.abs(s @ om @ s.T - om)) > SYMPLECTIC_TOL:
            raise InvalidArgumentError(f"matrix is not symplectic: {self.description or 'unnamed'}")
        object.__setattr__(self, "matrix", s)

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def __matmul__(self, other: "SymplecticTransform") -> "SymplecticTransform":
        desc = " . ".join(d for d in (self.description, other.description) if d)
        return SymplecticTransform(self.matrix @ other.matrix, desc)


def as_covariance(gamma) -> QuadratureCovariance:
    if isinstance(gamma, QuadratureCovariance):
        return gamma
    return QuadratureCovariance(np.asarray(gamma, dtype=float))


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form with ``n_modes`` copies of [[0, 1], [-1, 0]]."""
    if int(n_modes) != n_modes or n_modes < 1:
        raise InvalidArgumentError(f"n_modes must be a positive integer, got {n_modes!r}")
    return np.kron(np.eye(int(n_modes)), np.array([[0.0, 1.0], [-1.0, 0.0]]))


# ---------------------------------------------------------------- constructors

def vacuum(n_modes: int = 1) -> QuadratureCovariance:
    return QuadratureCovariance(np.eye(2 * n_modes))


def thermal(v: float) -> QuadratureCovariance:
    return QuadratureCovariance(v * np.eye(2))


def tmsv(v: float, labels: Sequence[str] = ()) -> QuadratureCovariance:
    """Two-mode squeezed vacuum with per-mode quadrature variance ``v``."""
    if v < 1:
        raise InvalidArgumentError(f"TMSV variance must be >= 1, got {v}")
    c = np.sqrt(v * v - 1.0)
    z = np.diag([1.0, -1.0])
    m = np.block([[v * np.eye(2), c * z], [c * z, v * np.eye(2)]])
    return QuadratureCovariance(m, tuple(labels))


def direct_sum(*covs: QuadratureCovariance) -> QuadratureCovariance:
    covs = [as_covariance(c) for c in covs]
    dim = sum(c.matrix.shape[0] for c in covs)
    out = np.zeros((dim, dim))
    i = 0
    for c in covs:
        d = c.matrix.shape[0]
        out[i:i + d, i:i + d] = c.matrix
        i += d
    labels = tuple(lab for c in covs for lab in c.labels)
    if len(set(labels)) != len(labels):
        labels = ()
    return QuadratureCovariance(out, labels)


# ---------------------------------------------------------------- spectra

def symplectic_eigenvalues(gamma) -> np.ndarray:
    """Symplectic spectrum of ``gamma``, sorted descending.

    These are the moduli of the eigenvalues of ``i Omega gamma``; each value
    appears there as a +/- pair and is returned once. For a positive-definite
    input the spectrum is taken from the Hermitian matrix ``i L^T Omega L``
    (``gamma = L L^T``), which is similar to ``i Omega gamma`` and keeps pure
    states at 1 to roughly machine precision times the largest variance.
    """
    g = as_covariance(gamma)
    n = g.n_modes
    om = symplectic_form(n)
    try:
        try:
            chol = np.linalg.cholesky(g.matrix)
        except np.linalg.LinAlgError:
            ev = np.abs(np.linalg.eigvals(1j * om @ g.matrix))
            return np.sort(ev)[::-1][::2].copy()
        h = 1j * chol.T @ om @ chol
        ev = np.linalg.eigvalsh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError(f"eigen-solver failed: {exc}") from exc
    return ev[n:][::-1].copy()


def entropy_g(lam):
    """Entropy function of one symplectic eigenvalue, in bits.

    ``G(l) = (l+1)/2 log2((l+1)/2) - (l-1)/2 log2((l-1)/2)``, evaluated as
    ``[log1p(b) + b log1p(1/b)] / ln 2`` with ``b = (l-1)/2`` to avoid
    cancellation at both ends of the range. Accepts scalars or arrays.
    """
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(~np.isfinite(lam_arr)):
        raise UnphysicalEigenvalueError(f"non-finite symplectic eigenvalue: {lam}")
    if np.any(lam_arr < 1.0 - EIGENVALUE_CLAMP):
        raise UnphysicalEigenvalueError(f"symplectic eigenvalue below 1: {np.min(lam_arr)!r}")
    b = 0.5 * (np.maximum(lam_arr, 1.0) - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(b > 0, b * np.log1p(1.0 / np.where(b > 0, b, 1.0)), 0.0)
    out = (np.log1p(b) + tail) / np.log(2.0)
    return float(out) if np.ndim(out) == 0 else out


def von_neumann_entropy(gamma) -> float:
    """Entropy in bits of the Gaussian state with covariance ``gamma``."""
    return float(np.sum(entropy_g(symplectic_eigenvalues(gamma))))


# ---------------------------------------------------------------- transforms

def apply_symplectic(s: SymplecticTransform, gamma, labels: Sequence[str] | None = None) -> QuadratureCovariance:
    g = as_covariance(gamma)
    if s.matrix.shape != g.matrix.shape:
        raise InvalidArgumentError(f"transform acts on {s.n_modes} modes, state has {g.n_modes}")
    return QuadratureCovariance(s.matrix @ g.matrix @ s.matrix.T, g.labels if labels is None else tuple(labels))


def _check_mode(i, n):
    if int(i) != i or not 0 <= i < n:
        raise InvalidArgumentError(f"mode index {i!r} out of range for {n} modes")
    return int(i)


def beam_splitter(transmittance: float, mode_a: int, mode_b: int, n_modes: int) -> SymplecticTransform:
    """Beam splitter mixing two modes.

    Acts on each quadrature pair as ``a' = sqrt(T) a + sqrt(1-T) b`` and
    ``b' = -sqrt(1-T) a + sqrt(T) b``; identity on all other modes.
    """
    if not 0.0 <= transmittance <= 1.0:
        raise InvalidArgumentError(f"transmittance must lie in [0, 1], got {transmittance}")
    a = _check_mode(mode_a, n_modes)
    b = _check_mode(mode_b, n_modes)
    if a == b:
        raise InvalidArgumentError("beam splitter needs two distinct modes")
    t = np.sqrt(transmittance)
    r = np.sqrt(1.0 - transmittance)
    s = np.eye(2 * n_modes)
    for q in (0, 1):
        i, j = 2 * a + q, 2 * b + q
        s[i, i] = t
        s[i, j] = r
        s[j, i] = -r
        s[j, j] = t
    return SymplecticTransform(s, f"BS(T={transmittance:g}; {a},{b})")


def squeezer(r: float, mode: int, n_modes: int) -> SymplecticTransform:
    m = _check_mode(mode, n_modes)
    s = np.eye(2 * n_modes)
    s[2 * m, 2 * m] = np.exp(-r)
    s[2 * m + 1, 2 * m + 1] = np.exp(r)
    return SymplecticTransform(s, f"S(r={r:g}; {m})")


def phase_rotation(theta: float, mode: int, n_modes: int) -> SymplecticTransform:
    m = _check_mode(mode, n_modes)
    s = np.eye(2 * n_modes)
    c, sn = np.cos(theta), np.sin(theta)
    s[2 * m:2 * m + 2, 2 * m:2 * m + 2] = [[c, sn], [-sn, c]]
    return SymplecticTransform(s, f"R(theta={theta:g}; {m})")


def embed(s: SymplecticTransform, modes: Sequence[int], n_modes: int) -> SymplecticTransform:
    """Lift a transform on ``len(modes)`` modes into an ``n_modes`` system."""
    modes = [_check_mode(i, n_modes) for i in modes]
    if len(set(modes)) != len(modes) or len(modes) != s.n_modes:
        raise InvalidArgumentError("embed needs distinct modes matching the transform size")
    idx = [2 * i + q for i in modes for q in (0, 1)]
    out = np.eye(2 * n_modes)
    out[np.ix_(idx, idx)] = s.matrix
    return SymplecticTransform(out, s.description)


def permute_modes(gamma, permutation: Sequence[int]) -> QuadratureCovariance:
    """Reorder modes so that output mode ``i`` is input mode ``permutation[i]``."""
    g = as_covariance(gamma)
    perm = list(permutation)
    if sorted(perm) != list(range(g.n_modes)):
        raise InvalidArgumentError(f"{permutation!r} is not a permutation of {g.n_modes} modes")
    idx = [2 * i + q for i in perm for q in (0, 1)]
    return QuadratureCovariance(g.matrix[np.ix_(idx, idx)], tuple(g.labels[i] for i in perm))


# ---------------------------------------------------------------- measurement

def _parse_measurement(meas, n):
    mode, quad = meas
    if quad not in _QUADRATURE_INDEX:
        raise InvalidArgumentError(f"quadrature must be 'x' or 'p', got {quad!r}")
    return _check_mode(mode, n), quad


def condition_on_quadratures(gamma, measurements: Iterable[tuple[int, str]]) -> QuadratureCovariance:
    """Covariance of the unmeasured modes after homodyne detection.

    Each entry of ``measurements`` is ``(mode, 'x' | 'p')``; every measured
    mode is dropped from the result. The update is the Schur complement of
    the measured quadratures, applied one quadrature at a time with the
    Moore-Penrose inverse of the scalar measured variance (variances below
    ``PINV_CUTOFF`` carry no information and contribute nothing).
    """
    g = as_covariance(gamma)
    n = g.n_modes
    meas = [_parse_measurement(m, n) for m in measurements]
    modes = [m for m, _ in meas]
    if len(set(modes)) != len(modes):
        raise InvalidArgumentError("each mode can be homodyned at most once")
    if len(modes) == n:
        raise InvalidArgumentError("cannot measure every mode; nothing would remain")

    m = g.matrix.copy()
    for mode, quad in meas:
        r = 2 * mode + _QUADRATURE_INDEX[quad]
        var = m[r, r]
        if var > PINV_CUTOFF:
            col = m[:, r].copy()
            m -= np.outer(col, col) / var
    keep_modes = [i for i in range(n) if i not in modes]
    idx = [2 * i + q for i in keep_modes for q in (0, 1)]
    return QuadratureCovariance(m[np.ix_(idx, idx)], tuple(g.labels[i] for i in keep_modes))


def heterodyne_split(gamma, mode: int) -> QuadratureCovariance:
    """Prepare mode ``mode`` for heterodyne detection.

    A vacuum ancilla is appended and mixed with the target on a balanced beam
    splitter. The target position then carries the x-measurement port
    (label suffix ``X``) and the appended last mode the p-measurement port
    (suffix ``P``); homodyning x on one and p on the other is heterodyne
    detection of the original mode.
    """
    g = as_covariance(gamma)
    n = g.n_modes
    i = _check_mode(mode, n)
    ext = direct_sum(g, vacuum(1))
    bs = beam_splitter(0.5, i, n, n + 1)
    labels = list(g.labels) + [g.labels[i] + "P"]
    labels[i] = g.labels[i] + "X"
    if len(set(labels)) != len(labels):
        labels = [f"m{j}" for j in range(n + 1)]
    return apply_symplectic(bs, ext, labels)


def heterodyne_condition(gamma, mode: int) -> QuadratureCovariance:
    """Condition the remaining modes on heterodyne detection of ``mode``."""
    g = as_covariance(gamma)
    split = heterodyne_split(g, mode)
    return condition_on_quadratures(split, [(mode, "x"), (g.n_modes, "p")])
