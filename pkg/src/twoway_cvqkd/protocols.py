"""Key rates of the improved two-way protocol and the one-way baseline.

Mode bookkeeping for the two-way protocol follows the entanglement-based
picture: Bob keeps ``B1`` of his TMSV and sends the other half through the
channel; Alice mixes it with her retained mode on a beam splitter of
transmittance ``t_a``, keeps ``A2`` and returns the other output, which
arrives at Bob as ``B2``. ``A1`` is Alice's heterodyned TMSV half. All
covariance matrices are ordered ``(B2, B1, A2, A1)``.

Worst-case channel bounds enter only Eve's information; the mutual
information uses the estimated transmittance and excess noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import finite_size as fs
from .errors import InvalidArgumentError, NumericFailureError, UnphysicalStateError
from .gaussian_core import (
    EIGENVALUE_CLAMP,
    QuadratureCovariance,
    SymplecticTransform,
    apply_symplectic,
    condition_on_quadratures,
    heterodyne_split,
    permute_modes,
    symplectic_eigenvalues,
    von_neumann_entropy,
)

TWO_WAY_LABELS = ("B2", "B1", "A2", "A1")
HOLEVO_TOL = 1e-9

_I2 = np.eye(2)
_Z = np.diag([1.0, -1.0])


@dataclass(frozen=True)
class ModeMatchMatrix:
    """Transmitter/receiver temporal-mode overlaps.

    The first letter names the transmitter, the second the detector:
    ``ab`` is Alice's signal mode seen by Bob's receiver mode.
    """

    aa: float = 1.0
    ab: float = 1.0
    ba: float = 1.0
    bb: float = 1.0

    def __post_init__(self):
        for name in ("aa", "ab", "ba", "bb"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidArgumentError(f"eta_{name} must lie in [0, 1], got {v}")

    @classmethod
    def uniform(cls, eta: float) -> "ModeMatchMatrix":
        return cls(eta, eta, eta, eta)


@dataclass(frozen=True)
class TwoWayParams:
    """Physical parameters of one operating point (defaults: the reference settings)."""

    v_a: float = 20.0
    v_b: float = 20.0
    t_a: float = 0.8
    alpha: float = 0.2
    length_km: float = 0.0
    excess_noise: float = 0.1
    beta: float = 0.95
    eta: ModeMatchMatrix = field(default_factory=ModeMatchMatrix)

    def __post_init__(self):
        if self.v_a < 1 or self.v_b < 1:
            raise InvalidArgumentError(f"TMSV variances must be >= 1, got v_a={self.v_a}, v_b={self.v_b}")
        if not 0.0 <= self.t_a <= 1.0:
            raise InvalidArgumentError(f"t_a must lie in [0, 1], got {self.t_a}")
        if self.alpha < 0 or self.length_km < 0:
            raise InvalidArgumentError("alpha and length_km must be >= 0")
        if self.excess_noise < 0:
            raise InvalidArgumentError(f"excess_noise must be >= 0, got {self.excess_noise}")
        if not 0.0 < self.beta <= 1.0:
            raise InvalidArgumentError(f"beta must lie in (0, 1], got {self.beta}")
        if not isinstance(self.eta, ModeMatchMatrix):
            raise InvalidArgumentError("eta must be a ModeMatchMatrix")

    @property
    def transmittance(self) -> float:
        return channel_transmittance(self.alpha, self.length_km)


@dataclass(frozen=True)
class KeyRateBreakdown:
    i_ab: float
    s_e: float
    s_e_cond: float
    holevo: float
    delta_n: float
    key_rate: float
    t_min: float
    sigma2_max: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def channel_transmittance(alpha: float, length_km: float) -> float:
    """Fibre transmittance ``10**(-alpha L / 10)``."""
    if alpha < 0 or length_km < 0:
        raise InvalidArgumentError("alpha and length_km must be >= 0")
    return 10.0 ** (-alpha * length_km / 10.0)


def chi(transmittance: float, excess_noise: float) -> float:
    """Input-referred total channel noise ``(1 - T)/T + eps``."""
    if transmittance <= 0:
        raise InvalidArgumentError(f"transmittance must be > 0, got {transmittance}")
    return (1.0 - transmittance) / transmittance + excess_noise


def _assemble(v_b2, v_b1, v_a2, v_a1, c_b2b1, c_b1a2, c_b2a2, c_b2a1, c_a2a1) -> np.ndarray:
    o = np.zeros((2, 2))
    return np.block([
        [v_b2 * _I2, c_b2b1 * _Z, c_b2a2 * _I2, c_b2a1 * _Z],
        [c_b2b1 * _Z, v_b1 * _I2, c_b1a2 * _Z, o],
        [c_b2a2 * _I2, c_b1a2 * _Z, v_a2 * _I2, c_a2a1 * _Z],
        [c_b2a1 * _Z, o, c_a2a1 * _Z, v_a1 * _I2],
    ])


def _require_physical(gamma: QuadratureCovariance, what: str, params) -> QuadratureCovariance:
    nu = symplectic_eigenvalues(gamma)
    if nu.min() < 1.0 - EIGENVALUE_CLAMP:
        raise UnphysicalStateError(
            f"{what} is unphysical (min symplectic eigenvalue {nu.min():.12g})",
            min_eigenvalue=float(nu.min()), parameters=params)
    return gamma


def cov_ideal(params: TwoWayParams) -> QuadratureCovariance:
    """Covariance of ``(B2, B1, A2, A1)`` with perfect mode matching and exact channel knowledge."""
    t = params.transmittance
    x = chi(t, params.excess_noise)
    va, vb, ta = params.v_a, params.v_b, params.t_a
    m = _assemble(
        v_b2=t * ((1 - ta) * va + x + t * ta * (vb + x)),
        v_b1=vb,
        v_a2=ta * va + t * (1 - ta) * (vb + x),
        v_a1=va,
        c_b2b1=t * math.sqrt(ta * (vb ** 2 - 1)),
        c_b1a2=-math.sqrt(t * (1 - ta) * (vb ** 2 - 1)),
        c_b2a2=math.sqrt(t * (1 - ta) * ta) * (va - t * (vb + x)),
        c_b2a1=math.sqrt(t * (1 - ta) * (va ** 2 - 1)),
        c_a2a1=math.sqrt(ta * (va ** 2 - 1)),
    )
    try:
        g = QuadratureCovariance(m, TWO_WAY_LABELS)
        return _require_physical(g, "ideal covariance", params)
    except UnphysicalStateError as exc:
        raise InvalidArgumentError(str(exc)) from exc


def default_v_mod(params: TwoWayParams) -> float:
    """Modulation variance used for estimation: ``v_a - 1``."""
    return params.v_a - 1.0


def worst_case_for(params: TwoWayParams, budget: fs.EstimationBudget | None,
                   v_mod: float | None = None, transmittance: float | None = None) -> fs.WorstCaseChannel:
    """Bounds for the physical channel; expectation values when ``budget`` is None."""
    t = params.transmittance if transmittance is None else transmittance
    if budget is None:
        return fs.WorstCaseChannel(math.sqrt(t), 1.0 + t * params.excess_noise)
    v_mod = default_v_mod(params) if v_mod is None else v_mod
    return fs.worst_case_channel(t, params.excess_noise, v_mod, budget.m, budget.eps_pe)


def cov_fan_from_bounds(params: TwoWayParams, t_min_sq: float, sigma2_max: float) -> QuadratureCovariance:
    """Mode-mismatch corrected covariance for given worst-case ``T_min`` and ``sigma2_max``."""
    va, vb, ta = params.v_a, params.v_b, params.t_a
    e = params.eta
    tm = t_min_sq
    # (sigma2_max - T_min) plays the role of T chi in the ideal matrix
    noise = sigma2_max - tm
    m = _assemble(
        v_b1=vb,
        v_b2=(tm * (1 - ta) * (e.ab * va + (1 - e.ab)) + noise
              + tm * ta * (tm * e.bb * vb + tm * (1 - e.bb) + noise)),
        v_a2=(ta * (e.aa * va + 1 - e.aa)
              + (1 - ta) * (tm * e.ba * vb + tm * (1 - e.ba) + noise)),
        v_a1=va,
        c_b2b1=tm * math.sqrt(ta * e.bb * (vb ** 2 - 1)),
        c_b1a2=-math.sqrt(tm * (1 - ta) * e.ba * (vb ** 2 - 1)),
        c_b2a2=math.sqrt(tm * (1 - ta) * ta) * (
            math.sqrt(e.ab * e.aa) * va + math.sqrt(1 - e.ab) * math.sqrt(1 - e.aa)
            - (tm * math.sqrt(e.bb * e.ba) * vb + tm * math.sqrt(1 - e.bb) * math.sqrt(1 - e.ba) + noise)),
        c_b2a1=math.sqrt(tm * (1 - ta) * e.ab * (va ** 2 - 1)),
        c_a2a1=math.sqrt(ta * e.aa * (va ** 2 - 1)),
    )
    g = QuadratureCovariance(m, TWO_WAY_LABELS)
    return _require_physical(g, "FAN covariance", params)


def cov_fan(params: TwoWayParams, budget: fs.EstimationBudget | None = None,
            v_mod: float | None = None) -> QuadratureCovariance:
    """Covariance with mode mismatch and worst-case channel bounds.

    With ``budget=None`` the bounds collapse to the expectation values
    (``T_min = T``, ``sigma2_max = 1 + T eps``).
    """
    wc = worst_case_for(params, budget, v_mod)
    if wc.t_min <= 0:
        raise InvalidArgumentError(f"worst-case t_min = {wc.t_min:g} is not positive; the budget is too small")
    return cov_fan_from_bounds(params, wc.transmittance_min, wc.sigma2_max)


def mutual_information(params: TwoWayParams) -> float:
    """Alice-Bob mutual information for heterodyne detection with reverse reconciliation."""
    t = params.transmittance
    x = chi(t, params.excess_noise)
    ta, eab = params.t_a, params.eta.ab
    base = t * t * ta * (x + 1) + t * x + 1
    num = base + t * (1 - ta) * (eab * params.v_a + 1 - eab)
    den = base + t * (1 - ta)
    ratio = num / den
    if not ratio > 0:
        raise NumericFailureError(f"non-positive variance ratio {ratio!r}")
    return math.log2(ratio)


def k_gain(params: TwoWayParams, transmittance: float | None = None) -> float:
    """Weight of Bob's retained mode in his combined estimate."""
    t = params.transmittance if transmittance is None else transmittance
    vb = params.v_b
    return t * math.sqrt(params.t_a) * math.sqrt(params.eta.bb) * math.sqrt((vb - 1) / (vb + 1))


def k_combination(k: float) -> SymplecticTransform:
    """Two-mode map ``x1 -> x1 - k x2``, ``p2 -> p2 + k p1``."""
    s = np.eye(4)
    s[0, 2] = -k
    s[3, 1] = k
    return SymplecticTransform(s, f"gamma_k(k={k:g})")


def bob_conditional_cov(gamma_fan: QuadratureCovariance, k: float) -> QuadratureCovariance:
    """State of the unmeasured modes after Bob's heterodyne data processing.

    Both of Bob's modes are heterodyne-split with vacuum ancillas, regrouped
    as ``(B2X, B1X, B1P, B2P, A2, A1)``, combined with ``gamma_k`` on each of
    the two pairs, and the results ``x_B = x_B2 - k x_B1`` (x of ``B4``) and
    ``p_B = p_B2 + k p_B1`` (p of ``B6``) are conditioned on. Returns the
    covariance of ``(B3, B5, A2, A1)``.
    """
    g = gamma_fan
    if g.n_modes != 4:
        raise InvalidArgumentError(f"expected the 4-mode (B2, B1, A2, A1) matrix, got {g.n_modes} modes")
    g = heterodyne_split(g, 0)  # B2X, B1, A2, A1, B2P
    g = heterodyne_split(g, 1)  # B2X, B1X, A2, A1, B2P, B1P
    g = permute_modes(g, [0, 1, 5, 4, 2, 3])
    gk = k_combination(k).matrix
    s = np.zeros((12, 12))
    s[0:4, 0:4] = gk
    s[4:8, 4:8] = gk
    s[8:12, 8:12] = np.eye(4)
    g = apply_symplectic(SymplecticTransform(s, "gamma_k + gamma_k + I"), g,
                         labels=("B4", "B3", "B5", "B6", "A2", "A1"))
    return condition_on_quadratures(g, [(0, "x"), (3, "p")])


def holevo_leakage(params: TwoWayParams, budget: fs.EstimationBudget | None = None,
                   v_mod: float | None = None) -> tuple[float, float, float]:
    """Return ``(S(E), S(E|x_B, p_B), S(E) - S(E|x_B, p_B))`` in bits."""
    gamma = cov_fan(params, budget, v_mod)
    s_e = von_neumann_entropy(gamma)
    s_cond = von_neumann_entropy(bob_conditional_cov(gamma, k_gain(params)))
    holevo = s_e - s_cond
    if holevo < -HOLEVO_TOL:
        raise NumericFailureError(f"negative Holevo information {holevo!r} at {params}")
    return s_e, s_cond, max(holevo, 0.0)


def key_rate_two_way(params: TwoWayParams, budget: fs.EstimationBudget | None = None,
                     v_mod: float | None = None) -> KeyRateBreakdown:
    """Secret key rate of the improved two-way protocol.

    ``budget=None`` gives the asymptotic rate: no ``n/N`` prefactor, no
    ``Delta(n)`` and no worst-case penalty. The mode-mismatch coefficients
    are honoured in both regimes.
    """
    i_ab = mutual_information(params)
    wc = worst_case_for(params, budget, v_mod)
    s_e, s_cond, holevo = holevo_leakage(params, budget, v_mod)
    if budget is None:
        d = 0.0
        k = params.beta * i_ab - holevo
    else:
        d = fs.delta_n(budget.n, budget.eps_bar, budget.eps_pa)
        k = fs.finite_key_rate(i_ab, holevo, budget, params.beta)
    return KeyRateBreakdown(i_ab, s_e, s_cond, holevo, d, k, wc.t_min, wc.sigma2_max)


# ---------------------------------------------------------------- one-way baseline

def one_way_channel(params: TwoWayParams) -> float:
    """Effective transmittance of the one-way link, mode mismatch included as loss."""
    return params.eta.ab * params.transmittance


def cov_one_way(params: TwoWayParams, budget: fs.EstimationBudget | None = None,
                v_mod: float | None = None) -> QuadratureCovariance:
    """Covariance of ``(A, B)`` for the coherent-state one-way protocol.

    Alice's TMSV of variance ``v_a`` is sent through the fibre; mode
    mismatch at Bob's receiver is an extra untrusted loss ``eta_ab``.
    """
    v = params.v_a
    t_eff = one_way_channel(params)
    v_mod = v - 1.0 if v_mod is None else v_mod
    wc = worst_case_for(params, budget, v_mod, transmittance=t_eff)
    if wc.t_min <= 0:
        raise InvalidArgumentError(f"worst-case t_min = {wc.t_min:g} is not positive; the budget is too small")
    tm = wc.transmittance_min
    b = tm * v + (wc.sigma2_max - tm)
    c = math.sqrt(tm * (v * v - 1))
    m = np.block([[v * _I2, c * _Z], [c * _Z, b * _I2]])
    return _require_physical(QuadratureCovariance(m, ("A", "B")), "one-way covariance", params)


def mutual_information_one_way(params: TwoWayParams) -> float:
    t = one_way_channel(params)
    total = chi(t, params.excess_noise) + 1.0 / t
    v = params.v_a
    return math.log2((v + total) / (1.0 + total))


def key_rate_one_way(params: TwoWayParams, budget: fs.EstimationBudget | None = None,
                     v_mod: float | None = None) -> KeyRateBreakdown:
    """Coherent-state heterodyne protocol with reverse reconciliation."""
    i_ab = mutual_information_one_way(params)
    v_mod = params.v_a - 1.0 if v_mod is None else v_mod
    gamma = cov_one_way(params, budget, v_mod)
    s_e = von_neumann_entropy(gamma)
    s_cond = von_neumann_entropy(condition_on_quadratures(heterodyne_split(gamma, 1), [(1, "x"), (2, "p")]))
    holevo = s_e - s_cond
    if holevo < -HOLEVO_TOL:
        raise NumericFailureError(f"negative Holevo information {holevo!r} at {params}")
    holevo = max(holevo, 0.0)
    wc = worst_case_for(params, budget, v_mod, transmittance=one_way_channel(params))
    if budget is None:
        d = 0.0
        k = params.beta * i_ab - holevo
    else:
        d = fs.delta_n(budget.n, budget.eps_bar, budget.eps_pa)
        k = fs.finite_key_rate(i_ab, holevo, budget, params.beta)
    return KeyRateBreakdown(i_ab, s_e, s_cond, holevo, d, k, wc.t_min, wc.sigma2_max)
