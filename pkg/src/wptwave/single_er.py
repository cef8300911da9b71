"""Single-receiver waveform optimization.

The chain factors into independent closed forms plus one iteration:

1. spatial step: for a fixed per-subcarrier power split, amplitudes across
   antennas follow the channel (matched/MRT ratio) with conjugate phases,
   collapsing the problem to one amplitude x_u per subcarrier against the
   combined gain b_u;
2. subcarrier selection: keep the N largest gains;
3. frequency-matched split x = sqrt(P) b/||b|| as a cheap closed form and
   as the benchmark initializer;
4. successive convex refinement: linearize the exponential period mean at
   the current iterate, which reduces each round to maximizing a linear
   functional over the power ball, again closed form.

Everything here works on the exponent's log scale internally so saturated
instances (exponents in the thousands) stay finite.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .quadrature import QuadratureConfig, config_for_cycles, period_mean_array
from .rectenna import RectennaParams
from .signals import FrequencyGrid, MultisineWaveform


@dataclass(frozen=True)
class SubcarrierSelection:
    """Chosen subcarrier indices and the gain vector masked onto them."""

    selected: tuple
    masked_gains: np.ndarray

    def __post_init__(self) -> None:
        sel = tuple(int(i) for i in self.selected)
        g = np.array(self.masked_gains, dtype=float)
        if g.ndim != 1:
            raise ValueError("masked_gains must be a vector over subcarriers")
        if sorted(set(sel)) != list(sel):
            raise ValueError("selected must be strictly increasing indices")
        if sel and (sel[0] < 0 or sel[-1] >= g.size):
            raise ValueError("selected indices out of range")
        off = np.ones(g.size, dtype=bool)
        off[list(sel)] = False
        if np.any(g[off] != 0.0) or np.any(g < 0):
            raise ValueError("masked_gains must be nonnegative and zero off-selection")
        g.setflags(write=False)
        object.__setattr__(self, "selected", sel)
        object.__setattr__(self, "masked_gains", g)

    @property
    def count(self) -> int:
        return len(self.selected)


@dataclass(frozen=True)
class PowerAllocation:
    """Per-subcarrier amplitudes x_u >= 0 with ||x||^2 within budget."""

    x: np.ndarray
    budget_w: float

    def __post_init__(self) -> None:
        x = np.array(self.x, dtype=float)
        if x.ndim != 1 or np.any(x < 0) or not np.all(np.isfinite(x)):
            raise ValueError("x must be a finite nonnegative vector")
        if not self.budget_w >= 0:
            raise ValueError("budget_w must be nonnegative")
        if float(x @ x) > self.budget_w * (1.0 + 1e-9):
            raise ValueError("allocation exceeds the power budget")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def used_power_w(self) -> float:
        return float(self.x @ self.x)


@dataclass(frozen=True)
class ScpTrace:
    """Iteration history of the successive convex refinement.

    Objective values are stored as log(beta0); beta0 itself overflows
    float64 on saturated instances.  rel_changes[i] is the relative growth
    of beta0 between iterates i and i+1.
    """

    log_beta0: tuple
    rel_changes: tuple
    allocations: tuple
    iterations: int
    converged: bool
    used_fallback: bool


def spatial_mrt(h_mag: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Amplitude split across antennas matched to the channel magnitudes.

    s[m, u] = sqrt(p_u) h[m, u] / b_u with b_u the per-subcarrier combined
    gain, so each subcarrier spends exactly p_u.
    """
    h = np.asarray(h_mag, dtype=float)
    pw = np.asarray(p, dtype=float)
    if h.ndim != 2 or pw.shape != (h.shape[1],):
        raise ValueError("h_mag must be (M, U) and p a length-U vector")
    if np.any(pw < 0):
        raise ValueError("powers must be nonnegative")
    b = np.sqrt(np.sum(h * h, axis=0))
    dead = (b == 0) & (pw > 0)
    if np.any(dead):
        raise ValueError(f"cannot beamform power onto dead subcarriers {np.where(dead)[0]}")
    scale = np.zeros_like(b)
    live = b > 0
    scale[live] = np.sqrt(pw[live]) / b[live]
    return h * scale


def select_subcarriers(b: np.ndarray, n: int) -> SubcarrierSelection:
    """Keep the n largest gains (ties to the lowest index, zeros never)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = np.asarray(b, dtype=float)
    if g.ndim != 1 or np.any(g < 0) or not np.all(np.isfinite(g)):
        raise ValueError("gains must be a finite nonnegative vector")
    order = np.argsort(-g, kind="stable")
    keep = [int(i) for i in order if g[i] > 0][: min(n, g.size)]
    masked = np.zeros_like(g)
    masked[keep] = g[keep]
    return SubcarrierSelection(tuple(sorted(keep)), masked)


def frequency_mrt(sel: SubcarrierSelection, budget_w: float) -> PowerAllocation:
    """Amplitudes proportional to the selected gains, spending the budget."""
    norm = float(np.linalg.norm(sel.masked_gains))
    if norm == 0.0:
        raise ValueError("selection has no live subcarriers")
    return PowerAllocation(math.sqrt(budget_w) * sel.masked_gains / norm, budget_w)


def epa_allocation(sel: SubcarrierSelection, budget_w: float) -> PowerAllocation:
    """Equal power split over the selected subcarriers."""
    if sel.count == 0:
        raise ValueError("selection has no live subcarriers")
    x = np.zeros_like(sel.masked_gains)
    x[list(sel.selected)] = math.sqrt(budget_w / sel.count)
    return PowerAllocation(x, budget_w)


def coherent_exponent_scale(p: RectennaParams) -> float:
    """kappa' = sqrt(2 R_s)/(eta V0); exponent per unit (gain * amplitude)."""
    return math.sqrt(2.0 * p.rs_ohm) / p.diode.thermal_scale_v


def coherent_signal(
    gains: np.ndarray, x: np.ndarray, grid: FrequencyGrid
) -> Callable[[np.ndarray], np.ndarray]:
    """Received signal sqrt(2) sum_u b_u x_u cos(w_u t) of a matched design."""
    amps = math.sqrt(2.0) * np.asarray(gains, float) * np.asarray(x, float)
    omegas = grid.omegas

    def y(t):
        return np.cos(np.multiply.outer(np.asarray(t, float), omegas)) @ amps

    return y


def scp_qclp(
    sel: SubcarrierSelection,
    budget_w: float,
    params: RectennaParams,
    grid: FrequencyGrid,
    init: PowerAllocation | None = None,
    qcfg: QuadratureConfig | None = None,
    eps: float = 1e-3,
    max_iter: int = 100,
) -> tuple[PowerAllocation, ScpTrace]:
    """Successive linearization of the exponential period mean.

    Each round evaluates, at the current allocation x, the period means

        beta0   = mean of z(t),
        beta_u  = mean of kappa' b_u cos(w_u t) z(t),

    with z(t) = exp(kappa' sum_u b_u x_u cos(w_u t)), then jumps to the
    maximizer of the linearized surrogate on the power sphere,
    x <- sqrt(P) beta/||beta||.  beta0 equals the true objective at x, so
    the recorded trace is non-decreasing.  Integrals are computed with the
    exact coherent peak subtracted from the exponent, which keeps every
    intermediate finite at any power level.

    Stops once the relative growth of beta0 drops to ``eps`` or after
    ``max_iter`` updates.  A degenerate all-zero linearization (only
    possible at x = 0) falls back to the frequency-matched direction.
    """
    if sel.count == 0:
        raise ValueError("selection has no live subcarriers")
    if qcfg is None:
        qcfg = config_for_cycles(grid.cycles_per_period)
    kappa2 = coherent_exponent_scale(params)
    b = sel.masked_gains
    idx = np.array(sel.selected, dtype=int)
    omegas = grid.omegas[idx]
    period = grid.period_s

    def coefficients(x: np.ndarray) -> tuple[float, np.ndarray, float]:
        amps = kappa2 * b[idx] * x[idx]
        peak = float(amps.sum())

        def integrand(t):
            c = np.cos(np.multiply.outer(omegas, np.asarray(t, float)))
            z = np.exp(amps @ c - peak)
            return np.vstack([z[None, :], (kappa2 * b[idx])[:, None] * c * z])

        vals, _ = period_mean_array(integrand, period, qcfg)
        beta = np.zeros_like(b)
        beta[idx] = vals[1:]
        return peak + math.log(vals[0]), beta, float(vals[0])

    x = (init or epa_allocation(sel, budget_w)).x
    if x.shape != b.shape:
        raise ValueError("init allocation length must match the gain vector")
    if np.any(x[np.setdiff1d(np.arange(b.size), idx)] != 0):
        raise ValueError("init allocation must be zero off-selection")

    logs: list[float] = []
    rels: list[float] = []
    allocs: list[np.ndarray] = [x.copy()]
    converged = False
    used_fallback = False
    iterations = 0
    for _ in range(max_iter):
        log_b0, beta, beta0_shifted = coefficients(x)
        logs.append(log_b0)
        if len(logs) >= 2:
            rel = math.expm1(logs[-1] - logs[-2])
            rels.append(rel)
            if rel <= eps:
                converged = True
                break
        # amplitudes cannot go negative, so the linear step maximizes over
        # the positive part of beta; a direction indistinguishable from
        # integration noise (only happens at x = 0) falls back
        beta = np.clip(beta, 0.0, None)
        norm = float(np.linalg.norm(beta))
        noise = 1e-9 * kappa2 * float(np.linalg.norm(b[idx])) * beta0_shifted
        if norm <= noise:
            warnings.warn(
                "degenerate linearization (beta ~ 0); using frequency-matched direction",
                stacklevel=2,
            )
            used_fallback = True
            x = frequency_mrt(sel, budget_w).x
        else:
            x = math.sqrt(budget_w) * beta / norm
        allocs.append(x.copy())
        iterations += 1
    return (
        PowerAllocation(x, budget_w),
        ScpTrace(
            log_beta0=tuple(logs),
            rel_changes=tuple(rels),
            allocations=tuple(allocs),
            iterations=iterations,
            converged=converged,
            used_fallback=used_fallback,
        ),
    )


def _gains_of(response_k: np.ndarray) -> np.ndarray:
    h = np.asarray(response_k, dtype=complex)
    if h.ndim != 2:
        raise ValueError("response_k must be an (M, U) complex matrix")
    return np.sqrt(np.sum(np.abs(h) ** 2, axis=0))


def assemble_waveform(
    alloc: PowerAllocation,
    response_k: np.ndarray,
    grid: FrequencyGrid,
) -> MultisineWaveform:
    """Lift per-subcarrier amplitudes to full antenna coefficients.

    Amplitudes follow the channel magnitudes (matched ratio across
    antennas), phases conjugate the channel so every tone arrives in phase;
    the received signal peaks at t = 0 with value sqrt(2) sum_u b_u x_u.
    """
    h = np.asarray(response_k, dtype=complex)
    b = _gains_of(h)
    x = alloc.x
    if x.shape != b.shape:
        raise ValueError("allocation length must match the response subcarriers")
    if np.any((b == 0) & (x > 0)):
        raise ValueError("allocation puts power on dead subcarriers")
    scale = np.zeros_like(b)
    live = b > 0
    scale[live] = x[live] / b[live]
    return MultisineWaveform(grid, np.conj(h) * scale)


def epa_cpc(
    response_k: np.ndarray,
    sel: SubcarrierSelection,
    budget_w: float,
    grid: FrequencyGrid,
) -> MultisineWaveform:
    """Equal power per (antenna, selected tone) with conjugate phases."""
    h = np.asarray(response_k, dtype=complex)
    if sel.count == 0:
        raise ValueError("selection has no live subcarriers")
    amp = math.sqrt(budget_w / (h.shape[0] * sel.count))
    phases = np.exp(-1j * np.angle(h))
    coeff = np.zeros_like(h)
    coeff[:, list(sel.selected)] = amp * phases[:, list(sel.selected)]
    return MultisineWaveform(grid, coeff)


def single_tone(
    response_k: np.ndarray,
    budget_w: float,
    grid: FrequencyGrid,
) -> MultisineWaveform:
    """All power on the single best subcarrier, matched across antennas."""
    b = _gains_of(np.asarray(response_k, dtype=complex))
    sel = select_subcarriers(b, 1)
    return assemble_waveform(frequency_mrt(sel, budget_w), response_k, grid)
