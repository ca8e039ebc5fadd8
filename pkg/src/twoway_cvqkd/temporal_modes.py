"""Temporal modes of the receiver: DSP kernel, SNU factor and mode matching.

Waveforms are sampled on uniform grids and integrated with the trapezoidal
rule. Two waveforms on the same grid (equal spacing, start times an integer
number of samples apart) are aligned exactly; otherwise they are linearly
interpolated onto the finer grid. Values outside a waveform's support are 0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from .errors import (
    DegenerateCalibrationError,
    DegenerateComplementError,
    InvalidArgumentError,
)

DEFAULT_POINTS = 2 ** 12
DEFAULT_SPAN = 8.0
NORM_TOL = 1e-10
BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class Wavepacket:
    """Complex temporal envelope sampled at ``t0 + k dt``.

    ``carrier`` is an optional angular frequency (rad/s) carried alongside
    the envelope; it does not modify ``samples``.
    """

    samples: np.ndarray
    dt: float
    t0: float = 0.0
    carrier: float = 0.0

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex, copy=True).ravel()
        if s.size < 2:
            raise InvalidArgumentError("a wavepacket needs at least two samples")
        if not self.dt > 0:
            raise InvalidArgumentError(f"dt must be positive, got {self.dt}")
        if not np.all(np.isfinite(s)):
            raise InvalidArgumentError("wavepacket samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        if not self.norm_sq > 0:
            raise InvalidArgumentError("wavepacket has zero energy")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def norm_sq(self) -> float:
        return float(trapezoid(np.abs(self.samples) ** 2, dx=self.dt))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm_sq - 1.0) <= tol

    def normalize(self) -> "Wavepacket":
        return Wavepacket(self.samples / math.sqrt(self.norm_sq), self.dt, self.t0, self.carrier)

    def shifted(self, delay: float) -> "Wavepacket":
        return Wavepacket(self.samples, self.dt, self.t0 + delay, self.carrier)

    def with_phase(self, phi: float) -> "Wavepacket":
        return Wavepacket(self.samples * np.exp(1j * phi), self.dt, self.t0, self.carrier)


@dataclass(frozen=True)
class DetectorResponse:
    """Real impulse response ``g(t)`` sampled at ``t0 + k dt``."""

    samples: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        s = np.array(self.samples, dtype=float, copy=True).ravel()
        if s.size < 1 or not np.all(np.isfinite(s)):
            raise InvalidArgumentError("detector response needs finite samples")
        if not self.dt > 0:
            raise InvalidArgumentError(f"dt must be positive, got {self.dt}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    def __call__(self, t) -> np.ndarray:
        """Linear interpolation, zero outside the sampled support."""
        return np.interp(np.asarray(t, dtype=float), self.times, self.samples, left=0.0, right=0.0)


@dataclass(frozen=True)
class DspKernel:
    """DSP tap weights ``f_k`` applied at sample times ``t_k``.

    ``time_offset`` shifts every sample time and selects the symbol window.
    """

    taps: np.ndarray
    sample_times: np.ndarray
    sampling_interval: float
    time_offset: float = 0.0

    def __post_init__(self):
        taps = np.array(self.taps, dtype=float, copy=True).ravel()
        times = np.array(self.sample_times, dtype=float, copy=True).ravel()
        if taps.size == 0:
            raise InvalidArgumentError("DSP kernel needs at least one tap")
        if taps.size != times.size:
            raise InvalidArgumentError("taps and sample_times must have equal length")
        if taps.size > 1 and np.any(np.diff(times) <= 0):
            raise InvalidArgumentError("sample_times must be strictly increasing")
        if not self.sampling_interval > 0:
            raise InvalidArgumentError("sampling_interval must be positive")
        taps.setflags(write=False)
        times.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "sample_times", times)


@dataclass(frozen=True)
class SnuCalibration:
    sigma_snu: float
    mu_lo: float

    def __post_init__(self):
        if not self.sigma_snu > 0:
            raise DegenerateCalibrationError(f"sigma_snu must be positive, got {self.sigma_snu}")


# ---------------------------------------------------------------- generators

def time_grid(center: float, width: float, n_points: int = DEFAULT_POINTS, span: float = DEFAULT_SPAN):
    """``(t0, dt)`` of a grid covering ``center +/- span*width`` with ``n_points`` samples."""
    dt = 2.0 * span * width / (n_points - 1)
    return center - span * width, dt


def _grid(center, width, n_points, span, grid):
    if grid is None:
        t0, dt = time_grid(center, width, n_points, span)
    else:
        t0, dt, n_points = grid
    return t0, dt, t0 + dt * np.arange(n_points)


def gaussian(width: float, center: float = 0.0, *, n_points: int = DEFAULT_POINTS,
             span: float = DEFAULT_SPAN, grid=None, carrier: float = 0.0) -> Wavepacket:
    """Unit-energy Gaussian whose intensity ``|xi|^2`` has standard deviation ``width``.

    ``grid=(t0, dt, n)`` overrides the default grid, so that several pulses
    can share one set of sample times.
    """
    t0, dt, t = _grid(center, width, n_points, span, grid)
    amp = (2.0 * math.pi * width ** 2) ** -0.25 * np.exp(-((t - center) ** 2) / (4.0 * width ** 2))
    return Wavepacket(amp, dt, t0, carrier).normalize()


def raised_cosine(width: float, center: float = 0.0, *, n_points: int = DEFAULT_POINTS,
                  span: float = DEFAULT_SPAN, grid=None, carrier: float = 0.0) -> Wavepacket:
    """Unit-energy ``cos^2`` pulse of full width ``2*width``."""
    t0, dt, t = _grid(center, width, n_points, span, grid)
    u = (t - center) / width
    amp = np.where(np.abs(u) <= 1.0, np.cos(0.5 * math.pi * u) ** 2, 0.0)
    return Wavepacket(amp, dt, t0, carrier).normalize()


def rectangular(width: float, center: float = 0.0, *, n_points: int = DEFAULT_POINTS,
                span: float = DEFAULT_SPAN, grid=None, carrier: float = 0.0) -> Wavepacket:
    """Unit-energy flat-top pulse of full width ``2*width``."""
    t0, dt, t = _grid(center, width, n_points, span, grid)
    amp = np.where(np.abs(t - center) <= width, 1.0, 0.0)
    return Wavepacket(amp, dt, t0, carrier).normalize()


# ---------------------------------------------------------------- file I/O

def read_waveform(path, carrier: float = 0.0) -> Wavepacket:
    """Read a ``# t re im`` whitespace-separated file on a uniform grid."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header.split() != ["#", "t", "re", "im"]:
            raise InvalidArgumentError(f"{path}: expected header '# t re im', got {header!r}")
        try:
            data = np.loadtxt(fh, ndmin=2)
        except ValueError as exc:
            raise InvalidArgumentError(f"{path}: {exc}") from exc
    if data.shape[1] != 3 or data.shape[0] < 2:
        raise InvalidArgumentError(f"{path}: need at least two rows of three columns")
    t = data[:, 0]
    steps = np.diff(t)
    dt = float(np.mean(steps))
    if dt <= 0 or np.max(np.abs(steps - dt)) > 1e-9 * max(abs(dt), np.max(np.abs(t))):
        raise InvalidArgumentError(f"{path}: time column is not a uniform increasing grid")
    return Wavepacket(data[:, 1] + 1j * data[:, 2], dt, float(t[0]), carrier)


def write_waveform(wp: Wavepacket, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("# t re im\n")
        for t, s in zip(wp.times, wp.samples):
            fh.write(f"{float(t)!r} {float(s.real)!r} {float(s.imag)!r}\n")


# ---------------------------------------------------------------- grid alignment

def _aligned(a: Wavepacket, b: Wavepacket):
    """Put two wavepackets on one grid; returns ``(dt, ya, yb, t0)``."""
    if abs(a.dt - b.dt) <= 1e-12 * a.dt:
        shift = (b.t0 - a.t0) / a.dt
        k = round(shift)
        if abs(shift - k) < 1e-9:
            start = min(0, k)
            stop = max(a.samples.size, k + b.samples.size)
            ya = np.zeros(stop - start, dtype=complex)
            yb = np.zeros(stop - start, dtype=complex)
            ya[-start:-start + a.samples.size] = a.samples
            yb[k - start:k - start + b.samples.size] = b.samples
            return a.dt, ya, yb, a.t0 + start * a.dt
    dt = min(a.dt, b.dt)
    lo = min(a.t0, b.t0)
    hi = max(a.times[-1], b.times[-1])
    n = int(math.ceil((hi - lo) / dt - 1e-9)) + 1
    t = lo + dt * np.arange(n)
    return dt, _interp(a, t), _interp(b, t), lo


def _interp(wp: Wavepacket, t):
    re = np.interp(t, wp.times, wp.samples.real, left=0.0, right=0.0)
    im = np.interp(t, wp.times, wp.samples.imag, left=0.0, right=0.0)
    return re + 1j * im


def inner_product(a: Wavepacket, b: Wavepacket) -> complex:
    """``<a, b> = integral conj(a(t)) b(t) dt``."""
    dt, ya, yb, _ = _aligned(a, b)
    return complex(trapezoid(np.conj(ya) * yb, dx=dt))


def _ensure_normalized(wp: Wavepacket, name: str) -> Wavepacket:
    if not wp.is_normalized():
        warnings.warn(f"{name} is not normalized (norm^2 = {wp.norm_sq:.6g}); normalizing", stacklevel=3)
        return wp.normalize()
    return wp


# ---------------------------------------------------------------- receiver model

def dsp_kernel_eval(kernel: DspKernel, g: DetectorResponse, tau) -> np.ndarray:
    """``G_DSP(tau) = sum_k f_k g(t_k - tau)`` on the given ``tau`` values."""
    tau = np.asarray(tau, dtype=float)
    if kernel.taps.size == 0:
        raise InvalidArgumentError("DSP kernel needs at least one tap")
    out = np.zeros_like(tau)
    for f, tk in zip(kernel.taps, kernel.sample_times + kernel.time_offset):
        out += f * g(tk - tau)
    return out


def _check_on_grid(lo: Wavepacket, g_dsp):
    g_dsp = np.asarray(g_dsp, dtype=float).ravel()
    if g_dsp.size != lo.samples.size:
        raise InvalidArgumentError("G_DSP must be sampled on the LO grid")
    return g_dsp


def snu_factor(lo: Wavepacket, g_dsp, dts: float, mu_lo: float) -> SnuCalibration:
    """Shot-noise normalisation factor of the receiver output.

    ``sigma_SNU = sqrt(mu_LO / dts^2 * integral |xi_LO|^2 G_DSP^2 dtau)`` with
    the LO envelope normalised to unit energy and ``g_dsp`` sampled on the
    LO grid.
    """
    if not dts > 0 or not mu_lo > 0:
        raise InvalidArgumentError("dts and mu_lo must be positive")
    lo = lo.normalize()
    g_dsp = _check_on_grid(lo, g_dsp)
    integral = float(trapezoid(np.abs(lo.samples) ** 2 * g_dsp ** 2, dx=lo.dt))
    if not integral > 0:
        raise DegenerateCalibrationError("LO envelope and DSP kernel do not overlap")
    return SnuCalibration(math.sqrt(mu_lo / dts ** 2 * integral), mu_lo)


def receiver_mode(lo: Wavepacket, g_dsp, omega_lo: float = 0.0) -> Wavepacket:
    """Effective temporal mode defined by the LO and the DSP chain."""
    g_dsp = _check_on_grid(lo, g_dsp)
    t = lo.times
    num = lo.samples * g_dsp * np.exp(-1j * omega_lo * t)
    denom = float(trapezoid(np.abs(lo.samples) ** 2 * g_dsp ** 2, dx=lo.dt))
    if not denom > 0:
        raise DegenerateCalibrationError("LO envelope and DSP kernel do not overlap")
    # renormalise once more so the result is unit norm to rounding, not just to quadrature error
    return Wavepacket(num / math.sqrt(denom), lo.dt, lo.t0, omega_lo).normalize()


def mode_match(a: Wavepacket, b: Wavepacket) -> float:
    """Mode-matching coefficient ``|<a, b>|^2`` of two unit-energy modes.

    Unnormalised inputs are normalised with a warning. Results within
    ``BOUNDARY_TOL`` of 0 or 1 are clamped onto the boundary.
    """
    a = _ensure_normalized(a, "first wavepacket")
    b = _ensure_normalized(b, "second wavepacket")
    eta = abs(inner_product(a, b)) ** 2
    if eta > 1.0 - BOUNDARY_TOL:
        return 1.0
    if eta < BOUNDARY_TOL:
        return 0.0
    return float(eta)


def orthogonal_complement(receiver: Wavepacket, signal: Wavepacket):
    """Gram-Schmidt split of the receiver mode against the signal mode.

    Returns ``(eta, psi_perp)`` with
    ``receiver = sqrt(eta) e^{i phi} signal + sqrt(1 - eta) psi_perp`` and
    ``<signal, psi_perp> = 0``; both outputs live on the common grid.
    """
    receiver = _ensure_normalized(receiver, "receiver mode")
    signal = _ensure_normalized(signal, "signal mode")
    dt, yr, ys, t0 = _aligned(receiver, signal)
    c = complex(trapezoid(np.conj(ys) * yr, dx=dt))
    eta = abs(c) ** 2
    if eta >= 1.0 - 1e-12:
        raise DegenerateComplementError(f"modes are identical up to phase (eta = {eta!r})")
    resid = yr - c * ys
    norm = math.sqrt(float(trapezoid(np.abs(resid) ** 2, dx=dt)))
    if norm == 0.0:
        raise DegenerateComplementError("orthogonal complement vanishes")
    return float(eta), Wavepacket(resid / norm, dt, t0, receiver.carrier)


def mode_match_matrix(xi_a: Wavepacket, xi_b: Wavepacket, rx_a: Wavepacket, rx_b: Wavepacket):
    """All four transmitter/receiver overlaps as a ``ModeMatchMatrix``.

    ``xi_*`` are the transmitted modes and ``rx_*`` the receivers' effective
    modes of Alice and Bob.
    """
    from .protocols import ModeMatchMatrix

    return ModeMatchMatrix(
        aa=mode_match(rx_a, xi_a),
        ab=mode_match(rx_b, xi_a),
        ba=mode_match(rx_a, xi_b),
        bb=mode_match(rx_b, xi_b),
    )
