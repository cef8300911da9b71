"""Diode rectifier model: I-V curve, implicit DC equation, and inversion.

The rectifier's steady-state DC output voltage v solves

    psi_lhs(v) = psi_rhs(y)

where the left side depends only on circuit constants and the right side is
the period mean of exp(sqrt(R_s) y(t) / (eta V0)) over the incident signal
y.  psi_lhs is strictly increasing on [0, v_max) and blows up at v_max, so
the root is unique and bisection suffices.  All psi comparisons can be done
in log scale, which is the only safe representation once the incident
signal's coherent peak drives the exponent past roughly 700.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .quadrature import QuadratureConfig, period_log_mean_exp

# exp argument beyond which float64 overflows; used as a clamp in the raw
# I-V evaluation only (the psi pipeline never exponentiates unguarded).
_EXP_CLAMP = 700.0


@dataclass(frozen=True)
class DiodeParams:
    """Forward + reverse-breakdown diode constants.

    i0_a is the reverse-bias saturation current, ibv_a the breakdown
    saturation current, v0_v the thermal voltage, eta the ideality factor,
    and vb_v the reverse breakdown voltage.
    """

    i0_a: float
    ibv_a: float
    v0_v: float
    eta: float
    vb_v: float

    def __post_init__(self) -> None:
        for name in ("i0_a", "ibv_a", "v0_v", "eta", "vb_v"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.eta > 1:
            raise ValueError("eta must exceed 1")
        if self.i0_a >= self.ibv_a:
            warnings.warn(
                "i0_a >= ibv_a is atypical; breakdown term will dominate early",
                stacklevel=2,
            )

    @property
    def thermal_scale_v(self) -> float:
        """eta * V0, the voltage scale of both exponentials."""
        return self.eta * self.v0_v


@dataclass(frozen=True)
class RectennaParams:
    """Diode plus the surrounding circuit: source, load, LPF capacitor."""

    diode: DiodeParams
    rs_ohm: float
    rl_ohm: float
    c_f: float

    def __post_init__(self) -> None:
        for name in ("rs_ohm", "rl_ohm", "c_f"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def lpf_holds_dc(self, period_s: float) -> bool:
        """True when C * R_L >= 50 * T, the ripple-free operating regime."""
        return self.c_f * self.rl_ohm >= 50.0 * period_s

    def to_json_dict(self) -> dict:
        return {
            "I0_A": self.diode.i0_a,
            "IBV_A": self.diode.ibv_a,
            "V0_V": self.diode.v0_v,
            "eta": self.diode.eta,
            "VB_V": self.diode.vb_v,
            "Rs_ohm": self.rs_ohm,
            "RL_ohm": self.rl_ohm,
            "C_F": self.c_f,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "RectennaParams":
        diode = DiodeParams(
            i0_a=float(d["I0_A"]),
            ibv_a=float(d["IBV_A"]),
            v0_v=float(d["V0_V"]),
            eta=float(d["eta"]),
            vb_v=float(d["VB_V"]),
        )
        return cls(diode, float(d["Rs_ohm"]), float(d["RL_ohm"]), float(d["C_F"]))


def default_params(c_f: float = 1e-7) -> RectennaParams:
    """HSMS-285x-class diode with a 50 ohm source and 10 kohm load."""
    diode = DiodeParams(i0_a=3e-6, ibv_a=3e-4, v0_v=25.86e-3, eta=1.05, vb_v=3.8)
    return RectennaParams(diode=diode, rs_ohm=50.0, rl_ohm=1e4, c_f=c_f)


def diode_current(v_d, d: DiodeParams):
    """Two-exponential I-V curve: forward conduction minus breakdown leak.

    i(v) = I0 (exp(v / etaV0) - 1) - IBV exp(-(v + VB) / etaV0).
    Arguments large enough to overflow exp are clamped with a warning.
    """
    v = np.asarray(v_d, dtype=float)
    scale = d.thermal_scale_v
    fwd_arg = v / scale
    rev_arg = -(v + d.vb_v) / scale
    if np.any(fwd_arg > _EXP_CLAMP) or np.any(rev_arg > _EXP_CLAMP):
        warnings.warn("diode_current exponent clamped to avoid overflow", stacklevel=2)
        fwd_arg = np.clip(fwd_arg, None, _EXP_CLAMP)
        rev_arg = np.clip(rev_arg, None, _EXP_CLAMP)
    out = d.i0_a * np.expm1(fwd_arg) - d.ibv_a * np.exp(rev_arg)
    return float(out) if np.isscalar(v_d) else out


def max_dc_voltage(p: RectennaParams) -> float:
    """Supremum of attainable DC voltage: (etaV0/2) ln(I0/IBV) + VB/2."""
    d = p.diode
    return 0.5 * d.thermal_scale_v * math.log(d.i0_a / d.ibv_a) + 0.5 * d.vb_v


def max_dc_voltage_approx(p: RectennaParams) -> float:
    """VB/2, the usual shorthand; the log correction is a few percent."""
    return 0.5 * p.diode.vb_v


def log_psi_lhs(v_out, p: RectennaParams):
    """log of the circuit-side function of the implicit DC equation.

    psi_lhs(v) = exp(v/etaV0) (1 + v/(R_L I0)) / (1 - (IBV/I0) e^{(2v-VB)/etaV0})

    evaluated as a sum of logs so it stays finite arbitrarily close to the
    blow-up voltage.  Domain is 0 <= v < max_dc_voltage.
    """
    d = p.diode
    v = np.asarray(v_out, dtype=float)
    vmax = max_dc_voltage(p)
    if np.any(v < 0) or np.any(v >= vmax):
        raise ValueError(f"v_out must lie in [0, {vmax:.6f}) V")
    scale = d.thermal_scale_v
    # denominator 1 - (IBV/I0) exp((2v - VB)/etaV0) is positive on the domain
    denom_term = (d.ibv_a / d.i0_a) * np.exp((2.0 * v - d.vb_v) / scale)
    out = v / scale + np.log1p(v / (p.rl_ohm * d.i0_a)) - np.log1p(-denom_term)
    return float(out) if np.isscalar(v_out) else out


def psi_lhs(v_out, p: RectennaParams):
    """Circuit-side function itself; overflows to inf only past exp(709)."""
    out = np.exp(log_psi_lhs(v_out, p))
    return float(out) if np.isscalar(v_out) else out


def exponent_scale(p: RectennaParams) -> float:
    """kappa = sqrt(R_s) / (eta V0): psi_rhs integrand is exp(kappa y(t))."""
    return math.sqrt(p.rs_ohm) / p.diode.thermal_scale_v


def log_psi_rhs(
    y: Callable[[np.ndarray], np.ndarray],
    period_s: float,
    p: RectennaParams,
    cfg: QuadratureConfig | None = None,
) -> float:
    """log of the signal-side mean (1/T) integral of exp(kappa y(t)) dt.

    Overflow-safe for any incident amplitude; this is the quantity every
    optimizer in the package compares and maximizes.
    """
    kappa = exponent_scale(p)
    return period_log_mean_exp(lambda t: kappa * np.asarray(y(t)), period_s, cfg).value


def psi_rhs(
    y: Callable[[np.ndarray], np.ndarray],
    period_s: float,
    p: RectennaParams,
    cfg: QuadratureConfig | None = None,
) -> float:
    """Signal-side mean itself; inf when the log exceeds float range.

    For any zero-mean periodic y this is >= 1 (Jensen), with equality only
    at y = 0.
    """
    return float(np.exp(log_psi_rhs(y, period_s, p, cfg)))


def solve_output_voltage_log(
    log_psi_value: float,
    p: RectennaParams,
    tol_v: float = 1e-9,
    max_iter: int = 200,
) -> float:
    """Invert the implicit DC equation given log(psi) of the incident side.

    Bisection on [0, v_max): log_psi_lhs is strictly increasing from 0 and
    unbounded, so any log_psi_value >= 0 has a unique root.  Values within
    one tolerance of saturation return the near-ceiling bracket endpoint.
    """
    if not log_psi_value >= 0:
        raise ValueError("log psi must be >= 0 (psi >= 1); smaller has no DC solution")
    if log_psi_value == 0.0:
        return 0.0
    vmax = max_dc_voltage(p)
    lo, hi = 0.0, vmax * (1.0 - 1e-13)
    if log_psi_lhs(hi, p) <= log_psi_value:
        return hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if log_psi_lhs(mid, p) < log_psi_value:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol_v:
            break
    return 0.5 * (lo + hi)


def solve_output_voltage(
    psi_value: float,
    p: RectennaParams,
    tol_v: float = 1e-9,
    max_iter: int = 200,
) -> float:
    """Unique v in [0, v_max) with psi_lhs(v) = psi_value, to within tol_v."""
    if not psi_value >= 1.0:
        raise ValueError("psi must be >= 1; smaller would mean negative DC voltage")
    if math.isinf(psi_value):
        return max_dc_voltage(p) * (1.0 - 1e-13)
    return solve_output_voltage_log(math.log(psi_value), p, tol_v, max_iter)


def output_dc_power(v_out: float, p: RectennaParams) -> float:
    """DC power delivered to the load: v^2 / R_L."""
    if v_out < 0:
        raise ValueError("v_out must be nonnegative")
    return v_out * v_out / p.rl_ohm


def saturation_power_ceiling(p: RectennaParams) -> float:
    """Hard upper bound on harvested DC power: v_max^2 / R_L."""
    v = max_dc_voltage(p)
    return v * v / p.rl_ohm


def breakdown_amplitude_limit(p: RectennaParams) -> float:
    """Peak incident amplitude keeping the diode out of reverse breakdown.

    |y(t)| <= VB / (2 sqrt(R_s)) guarantees the reverse swing never reaches
    the breakdown knee.
    """
    return p.diode.vb_v / (2.0 * math.sqrt(p.rs_ohm))


def harvested_dc_power(
    y: Callable[[np.ndarray], np.ndarray],
    period_s: float,
    p: RectennaParams,
    cfg: QuadratureConfig | None = None,
    tol_v: float = 1e-9,
) -> float:
    """End-to-end: incident signal -> implicit equation -> DC watts."""
    log_psi = log_psi_rhs(y, period_s, p, cfg)
    v = solve_output_voltage_log(log_psi, p, tol_v)
    return output_dc_power(v, p)
