"""Subcarrier grids, multisine waveforms, and time-domain synthesis.

A waveform is a complex coefficient matrix over (antenna, subcarrier).  The
transmit signal on antenna m is

    x_m(t) = Re{ sum_u sqrt(2) c_{m,u} exp(j w_u t) },

so |c_{m,u}|^2 is the average power the tone contributes and the total
transmit power is the squared Frobenius norm of the matrix.  All indices are
0-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform subcarrier lattice f_u = f0 + u * delta, u = 0..U-1.

    The waveform period is T = 1/delta.  f0 must be an integer multiple of
    delta so every subcarrier completes a whole number of cycles per period;
    that integer ratio (not the absolute carrier frequency) is what sets the
    cost of passband integrals.
    """

    f0_hz: float
    delta_u_hz: float
    num_subcarriers: int

    def __post_init__(self) -> None:
        if not self.delta_u_hz > 0:
            raise ValueError("delta_u_hz must be positive")
        if self.num_subcarriers < 1:
            raise ValueError("num_subcarriers must be >= 1")
        ratio = self.f0_hz / self.delta_u_hz
        if not math.isfinite(ratio) or abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("f0_hz must be a positive integer multiple of delta_u_hz")

    @property
    def period_s(self) -> float:
        return 1.0 / self.delta_u_hz

    @property
    def frequencies_hz(self) -> np.ndarray:
        return self.f0_hz + self.delta_u_hz * np.arange(self.num_subcarriers)

    @property
    def omegas(self) -> np.ndarray:
        """Angular frequencies w_u = 2 pi f_u."""
        return 2.0 * np.pi * self.frequencies_hz

    @property
    def cycles_per_period(self) -> int:
        """Whole cycles the fastest subcarrier completes in one period."""
        return round(self.f0_hz / self.delta_u_hz) + self.num_subcarriers - 1

    def to_json_dict(self) -> dict:
        return {"f0_hz": self.f0_hz, "delta_u_hz": self.delta_u_hz, "U": self.num_subcarriers}

    @classmethod
    def from_json_dict(cls, d: dict) -> "FrequencyGrid":
        return cls(float(d["f0_hz"]), float(d["delta_u_hz"]), int(d["U"]))


@dataclass(frozen=True)
class MultisineWaveform:
    """Complex sinewave coefficients, shape (antennas M, subcarriers U).

    Moduli are amplitudes in sqrt(watts); phases live in the complex angle.
    The matrix is stored read-only so instances can be shared freely.
    """

    grid: FrequencyGrid
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        c = np.array(self.coefficients, dtype=complex)
        if c.ndim != 2:
            raise ValueError("coefficients must be a 2-D (M, U) matrix")
        if c.shape[1] != self.grid.num_subcarriers:
            raise ValueError(
                f"coefficient columns ({c.shape[1]}) must match grid subcarriers "
                f"({self.grid.num_subcarriers})"
            )
        if not np.all(np.isfinite(c.view(float))):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def num_antennas(self) -> int:
        return self.coefficients.shape[0]

    @property
    def amplitudes(self) -> np.ndarray:
        """Per-tone moduli s_{m,u} (nonnegative by construction)."""
        return np.abs(self.coefficients)

    @property
    def phases(self) -> np.ndarray:
        return np.angle(self.coefficients)

    def to_json_dict(self) -> dict:
        return {
            "grid": self.grid.to_json_dict(),
            "coefficients": [
                [{"re": float(z.real), "im": float(z.imag)} for z in row]
                for row in self.coefficients
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "MultisineWaveform":
        grid = FrequencyGrid.from_json_dict(d["grid"])
        coeffs = np.array(
            [[complex(e["re"], e["im"]) for e in row] for row in d["coefficients"]],
            dtype=complex,
        )
        return cls(grid, coeffs)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "MultisineWaveform":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class TimeSamples:
    """Real samples on the uniform grid t_q = period * q / Q, q = 0..Q-1."""

    values: np.ndarray
    period_s: float

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("values must be a 1-D array with Q >= 2 samples")
        if not self.period_s > 0:
            raise ValueError("period_s must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def num_samples(self) -> int:
        return self.values.size

    @property
    def sample_times(self) -> np.ndarray:
        return self.period_s * np.arange(self.num_samples) / self.num_samples


def synthesize_transmit(w: MultisineWaveform, m: int, t) -> np.ndarray | float:
    """Transmit signal x_m(t) = Re{sum_u sqrt(2) c_{m,u} e^{j w_u t}}.

    ``t`` may be a scalar or an array of times; the result matches its shape.
    """
    if not 0 <= m < w.num_antennas:
        raise IndexError(f"antenna index {m} out of range for M={w.num_antennas}")
    t_arr = np.asarray(t, dtype=float)
    phase = np.multiply.outer(t_arr, w.grid.omegas)
    out = math.sqrt(2.0) * np.real(np.exp(1j * phase) @ w.coefficients[m])
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def received_signal(
    w: MultisineWaveform,
    response: np.ndarray,
    k: int,
    t,
    *,
    form: str = "polar",
) -> np.ndarray | float:
    """Incident signal y_k(t) after the per-subcarrier channel response.

    Parameters
    ----------
    w
        Transmit waveform with coefficients (M, U).
    response
        Complex frequency response, shape (K, M, U).
    k
        Receiver index, 0-based.
    t
        Scalar or array of times.
    form
        ``"polar"`` multiplies complex channel and coefficient directly;
        ``"cartesian"`` evaluates the equivalent real basis-function
        expansion in the coefficients' real and imaginary parts.  Both give
        the same value; the second exists because the multi-receiver
        optimizer works in that basis.
    """
    h = np.asarray(response, dtype=complex)
    if h.ndim != 3 or h.shape[1:] != w.coefficients.shape:
        raise ValueError(
            f"response shape {h.shape} incompatible with coefficients {w.coefficients.shape}"
        )
    if not 0 <= k < h.shape[0]:
        raise IndexError(f"receiver index {k} out of range for K={h.shape[0]}")
    t_arr = np.asarray(t, dtype=float)
    scalar = np.isscalar(t) or t_arr.ndim == 0
    phase = np.multiply.outer(t_arr, w.grid.omegas)

    if form == "polar":
        eff = np.sum(h[k] * w.coefficients, axis=0)
        out = math.sqrt(2.0) * np.real(np.exp(1j * phase) @ eff)
    elif form == "cartesian":
        hbar, hhat = h[k].real, h[k].imag
        sbar, shat = w.coefficients.real, w.coefficients.imag
        cos_t, sin_t = np.cos(phase), np.sin(phase)
        gbar = cos_t[..., None, :] * hbar - sin_t[..., None, :] * hhat
        ghat = -(sin_t[..., None, :] * hbar + cos_t[..., None, :] * hhat)
        out = math.sqrt(2.0) * np.sum(gbar * sbar + ghat * shat, axis=(-2, -1))
    else:
        raise ValueError(f"form must be 'polar' or 'cartesian', got {form!r}")
    return float(out) if scalar else out


def total_power(w: MultisineWaveform) -> float:
    """Average transmit power sum_m ||c_m||^2 in watts."""
    return float(np.sum(np.abs(w.coefficients) ** 2))


def with_total_power(w: MultisineWaveform, power_w: float) -> MultisineWaveform:
    """Rescale all coefficients so total_power equals ``power_w``."""
    if power_w < 0:
        raise ValueError("power_w must be nonnegative")
    cur = total_power(w)
    if cur == 0.0:
        raise ValueError("cannot rescale an all-zero waveform to positive power")
    return MultisineWaveform(w.grid, w.coefficients * math.sqrt(power_w / cur))


def cardinality_epsilon(total_power_w: float, m: int, u: int) -> float:
    """Threshold separating live subcarriers from solver residue.

    Scale-aware: 1e-7 times the amplitude of an equal split of the power
    over all M*U tones.
    """
    if m < 1 or u < 1:
        raise ValueError("m and u must be positive counts")
    return 1e-7 * math.sqrt(max(total_power_w, 0.0) / (m * u))


def cardinality(w: MultisineWaveform, m: int, *, epsilon: float | None = None) -> int:
    """Number of subcarriers on antenna m with amplitude above threshold.

    With ``epsilon=None`` the threshold is :func:`cardinality_epsilon` at
    the waveform's own total power; amplitudes must strictly exceed it.
    """
    if not 0 <= m < w.num_antennas:
        raise IndexError(f"antenna index {m} out of range for M={w.num_antennas}")
    if epsilon is None:
        epsilon = cardinality_epsilon(
            total_power(w), w.num_antennas, w.grid.num_subcarriers
        )
    return int(np.count_nonzero(np.abs(w.coefficients[m]) > epsilon))


def papr_db(samples: TimeSamples) -> float:
    """Peak-to-average power ratio 10 log10(max v^2 / mean v^2) in dB."""
    v = samples.values
    mean_sq = float(np.mean(v * v))
    if mean_sq == 0.0:
        raise ValueError("PAPR undefined for an all-zero signal")
    return 10.0 * math.log10(float(np.max(v * v)) / mean_sq)


def sample_period(
    source: MultisineWaveform | Callable[[np.ndarray], np.ndarray],
    q: int,
    *,
    grid: FrequencyGrid | None = None,
    antenna: int = 0,
) -> TimeSamples:
    """Sample one period of a waveform antenna or an arbitrary callable.

    Parameters
    ----------
    source
        A waveform (sampled on the given antenna) or a vectorized callable
        of time.
    q
        Number of equally spaced samples over [0, T); at least 2.
    grid
        Required for callables; defaults to the waveform's own grid.
    antenna
        Which antenna row to sample when ``source`` is a waveform.
    """
    if q < 2:
        raise ValueError("q must be >= 2")
    if isinstance(source, MultisineWaveform):
        g = grid or source.grid
        times = g.period_s * np.arange(q) / q
        vals = synthesize_transmit(source, antenna, times)
    else:
        if grid is None:
            raise ValueError("grid is required when sampling a callable")
        g = grid
        times = g.period_s * np.arange(q) / q
        vals = np.asarray(source(times), dtype=float)
        if vals.shape != times.shape:
            vals = np.broadcast_to(vals, times.shape).copy()
    return TimeSamples(vals, g.period_s)
