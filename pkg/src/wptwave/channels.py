"""Multipath channel generation, frequency response, and persistence.

Each (receiver k, antenna m) pair sees a finite set of paths, each with an
amplitude, a delay, and a phase.  The per-subcarrier response is the phased
sum of the paths, and everything downstream of this module works with that
(K, M, U) complex tensor.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .signals import FrequencyGrid

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PathComponent:
    """One propagation path: gain alpha, delay tau, phase xi.

    Zero-amplitude paths are inert and permitted; they make algebraic
    identities (adding a dead path changes nothing) testable.
    """

    alpha: float
    tau_s: float
    xi_rad: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError("alpha must be finite and nonnegative")
        if not (math.isfinite(self.tau_s) and self.tau_s >= 0):
            raise ValueError("tau_s must be finite and nonnegative")
        if not (0.0 <= self.xi_rad < TWO_PI):
            raise ValueError("xi_rad must lie in [0, 2*pi)")


@dataclass(frozen=True)
class MultipathChannel:
    """Paths indexed [receiver k][antenna m] -> tuple of PathComponent."""

    paths: tuple

    def __post_init__(self) -> None:
        norm = tuple(
            tuple(tuple(p if isinstance(p, PathComponent) else PathComponent(*p) for p in per_m)
                  for per_m in per_k)
            for per_k in self.paths
        )
        if not norm:
            raise ValueError("channel needs at least one receiver")
        m = len(norm[0])
        for per_k in norm:
            if len(per_k) != m or m == 0:
                raise ValueError("every receiver needs the same positive antenna count")
            for per_m in per_k:
                if not per_m:
                    raise ValueError("every (receiver, antenna) pair needs at least one path")
        object.__setattr__(self, "paths", norm)

    @property
    def num_receivers(self) -> int:
        return len(self.paths)

    @property
    def num_antennas(self) -> int:
        return len(self.paths[0])

    def to_json_dict(self) -> dict:
        return {
            "K": self.num_receivers,
            "M": self.num_antennas,
            "paths": [
                [
                    [{"alpha": p.alpha, "tau_s": p.tau_s, "xi_rad": p.xi_rad} for p in per_m]
                    for per_m in per_k
                ]
                for per_k in self.paths
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "MultipathChannel":
        paths = tuple(
            tuple(
                tuple(PathComponent(float(p["alpha"]), float(p["tau_s"]), float(p["xi_rad"]))
                      for p in per_m)
                for per_m in per_k
            )
            for per_k in d["paths"]
        )
        ch = cls(paths)
        if ch.num_receivers != int(d["K"]) or ch.num_antennas != int(d["M"]):
            raise ValueError("K/M header disagrees with the path table")
        return ch

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "MultipathChannel":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class ChannelResponse:
    """Per-subcarrier complex response h[k, m, u] on a given grid."""

    values: np.ndarray
    grid: FrequencyGrid

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=complex)
        if v.ndim != 3:
            raise ValueError("values must be a 3-D (K, M, U) tensor")
        if v.shape[2] != self.grid.num_subcarriers:
            raise ValueError("subcarrier axis must match the grid")
        if not np.all(np.isfinite(v.view(float))):
            raise ValueError("response values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def num_receivers(self) -> int:
        return self.values.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ChannelSpec:
    """Recipe for one random channel draw.

    path_loss_db may be a single float shared by all receivers or a
    per-receiver sequence of length K.  delay_range is the (low, high)
    support of the uniform path delays in seconds.
    """

    num_receivers: int
    num_antennas: int
    num_paths: int
    path_loss_db: float | Sequence[float]
    delay_range: tuple[float, float]
    seed: int

    def __post_init__(self) -> None:
        if self.num_receivers < 1 or self.num_antennas < 1:
            raise ValueError("num_receivers and num_antennas must be >= 1")
        if self.num_paths < 1:
            raise ValueError("num_paths must be >= 1")
        lo, hi = self.delay_range
        if not (0 <= lo <= hi):
            raise ValueError("delay_range must satisfy 0 <= low <= high")
        pl = self.loss_db_per_receiver
        if len(pl) != self.num_receivers:
            raise ValueError("path_loss_db must be scalar or length K")

    @property
    def loss_db_per_receiver(self) -> tuple[float, ...]:
        if isinstance(self.path_loss_db, (int, float)):
            return (float(self.path_loss_db),) * self.num_receivers
        return tuple(float(x) for x in self.path_loss_db)


def generate_channel(spec: ChannelSpec) -> MultipathChannel:
    """Draw one channel realization.

    Each path carries an equal share of the post-loss power, so its
    amplitude is sqrt(10^(-PL/10) / L).  Delays are uniform over
    delay_range and phases uniform over [0, 2*pi).  The draw order is fixed
    (per receiver, per antenna, per path: delay then phase) so a seed pins
    the realization exactly.
    """
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.delay_range
    out = []
    for pl_db in spec.loss_db_per_receiver:
        alpha = math.sqrt(10.0 ** (-pl_db / 10.0) / spec.num_paths)
        per_k = []
        for _ in range(spec.num_antennas):
            per_m = []
            for _ in range(spec.num_paths):
                tau = float(rng.uniform(lo, hi))
                xi = float(rng.uniform(0.0, TWO_PI))
                per_m.append(PathComponent(alpha, tau, xi))
            per_k.append(tuple(per_m))
        out.append(tuple(per_k))
    return MultipathChannel(tuple(out))


def frequency_response(ch: MultipathChannel, grid: FrequencyGrid) -> ChannelResponse:
    """h[k, m, u] = sum over paths of alpha * exp(j(-w_u tau + xi))."""
    w = grid.omegas
    h = np.zeros((ch.num_receivers, ch.num_antennas, grid.num_subcarriers), dtype=complex)
    for k, per_k in enumerate(ch.paths):
        for m, per_m in enumerate(per_k):
            for p in per_m:
                h[k, m] += p.alpha * np.exp(1j * (-w * p.tau_s + p.xi_rad))
    return ChannelResponse(h, grid)


def effective_gain(response: ChannelResponse, k: int) -> np.ndarray:
    """Combined-antenna gain per subcarrier: b_u = sqrt(sum_m |h[k,m,u]|^2)."""
    if not 0 <= k < response.num_receivers:
        raise IndexError(f"receiver index {k} out of range for K={response.num_receivers}")
    return np.sqrt(np.sum(np.abs(response.values[k]) ** 2, axis=0))


def write_response_csv(response: ChannelResponse, path) -> None:
    """Dump the response as rows (k, m, u, re, im) with lossless floats."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "m", "u", "re", "im"])
        v = response.values
        for k in range(v.shape[0]):
            for m in range(v.shape[1]):
                for u in range(v.shape[2]):
                    writer.writerow(
                        [k, m, u, format(v[k, m, u].real, ".17g"), format(v[k, m, u].imag, ".17g")]
                    )


def read_response_csv(path, grid: FrequencyGrid) -> ChannelResponse:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError("empty response table")
    kk = max(int(r["k"]) for r in rows) + 1
    mm = max(int(r["m"]) for r in rows) + 1
    uu = max(int(r["u"]) for r in rows) + 1
    v = np.zeros((kk, mm, uu), dtype=complex)
    for r in rows:
        v[int(r["k"]), int(r["m"]), int(r["u"])] = complex(float(r["re"]), float(r["im"]))
    return ChannelResponse(v, grid)
