"""Trapping diagnostics for the three-state walk.

A flat eigenphase branch means the walk propagator has a point spectrum, so
part of the wave packet overlaps bound states and stays near the origin.
The origin probability p(0, t) oscillates rather than converging, so the
trapped fraction is estimated by Cesaro (time window) averaging; the flat
band itself is detected directly from the tracked dispersion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .coins import Coin
from .spectral import FLAT_BAND_TOL, dispersion_numeric
from .walk import initial_state, step

__all__ = [
    "TrappingEstimate",
    "LocalizationReport",
    "origin_series",
    "trapping_estimate",
    "flat_band_detect",
    "localization_report",
]

# Window averages closer than this count as converged.
CONVERGENCE_TOL = 1e-3


class TrappingEstimate(NamedTuple):
    value: float
    converged: bool
    windows: tuple[float, float]


def origin_series(coin: Coin, psi_c, t_max: int) -> np.ndarray:
    """Origin probability p(0, t) for t = 0 .. t_max."""
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    state = initial_state(psi_c)
    series = np.empty(t_max + 1)
    series[0] = float(np.sum(np.abs(state.amplitudes[0]) ** 2))
    for t in range(1, t_max + 1):
        state = step(state, coin)
        series[t] = float(np.sum(np.abs(state.site_amplitudes(0)) ** 2))
    return series


def trapping_estimate(series) -> TrappingEstimate:
    """Cesaro-averaged trapping probability from an origin series.

    Averages the last two quarters of the series separately; the estimate is
    the final-quarter mean and the run counts as converged when the two
    window means differ by less than ``CONVERGENCE_TOL``.
    """
    p = np.asarray(series, dtype=float)
    if p.ndim != 1 or p.size < 200:
        raise ValueError("trapping estimate needs a series of at least 200 points")
    half = p.size // 2
    three_quarters = (3 * p.size) // 4
    w1 = float(p[half:three_quarters].mean())
    w2 = float(p[three_quarters:].mean())
    return TrappingEstimate(w2, abs(w1 - w2) < CONVERGENCE_TOL, (w1, w2))


def flat_band_detect(
    coin: Coin,
    n_samples: int = 1024,
    tol: float = FLAT_BAND_TOL,
) -> tuple[bool, complex | None]:
    """Whether some eigenphase branch is constant in k (point spectrum).

    Returns (True, eigenvalue) with the point-spectrum eigenvalue
    exp(i mean phase) when a branch varies by less than ``tol`` across the
    grid, else (False, None).
    """
    if n_samples < 256:
        raise ValueError("flat band detection needs at least 256 samples")
    table = dispersion_numeric(coin, n_samples)
    for j in range(3):
        omega = table.branches[j]
        mean = omega.mean()
        if np.max(np.abs(omega - mean)) < tol:
            return True, complex(np.exp(1j * mean))
    return False, None


@dataclass(frozen=True)
class LocalizationReport:
    """Origin-probability series with its trapping and flat-band summary."""

    series: np.ndarray
    cesaro_windows: tuple[float, float]
    trapping_estimate: float
    converged: bool
    flat_band: bool
    flat_band_eigenvalue: complex | None

    def __post_init__(self) -> None:
        s = np.array(self.series, dtype=float)
        s.setflags(write=False)
        object.__setattr__(self, "series", s)

    def to_json(self) -> str:
        lam = self.flat_band_eigenvalue
        return json.dumps(
            {
                "series": [float(p) for p in self.series],
                "cesaro_windows": list(self.cesaro_windows),
                "trapping_estimate": self.trapping_estimate,
                "converged": self.converged,
                "flat_band": self.flat_band,
                "flat_band_eigenvalue": None if lam is None
                else [lam.real, lam.imag],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "LocalizationReport":
        data = json.loads(text)
        lam = data["flat_band_eigenvalue"]
        return cls(
            np.array(data["series"]),
            (float(data["cesaro_windows"][0]), float(data["cesaro_windows"][1])),
            float(data["trapping_estimate"]),
            bool(data["converged"]),
            bool(data["flat_band"]),
            None if lam is None else complex(lam[0], lam[1]),
        )

    def series_to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,p0\n")
            for t, p in enumerate(self.series):
                fh.write(f"{t},{p:.17g}\n")


def localization_report(
    coin: Coin,
    psi_c,
    t_max: int = 1000,
    *,
    n_samples: int = 1024,
    tol: float = FLAT_BAND_TOL,
) -> LocalizationReport:
    """Run the walk and assemble the full localization summary.

    A flat band with a zero trapping estimate is not a contradiction: the
    chosen initial state may simply have no overlap with the bound states,
    which is why the flat-band flag is reported alongside the estimate
    instead of being inferred from it.
    """
    series = origin_series(coin, psi_c, t_max)
    est = trapping_estimate(series)
    flat, eigenvalue = flat_band_detect(coin, n_samples, tol)
    return LocalizationReport(series, est.windows, est.value, est.converged,
                              flat, eigenvalue)
