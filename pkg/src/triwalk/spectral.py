"""Momentum-space analysis of the three-state walk.

Each Fourier mode evolves under the 3x3 unitary
``U(k) = diag(exp(-ik), 1, exp(ik)) . C``.  Its eigenphases omega_j(k) are
the dispersion relations of the walk; their derivatives are group
velocities, and the ballistic probability fronts travel at the extremal
group velocity, attained where the second derivative of omega vanishes.

Branches are tracked across the momentum grid by phase continuation against
a linear prediction (unwrapped, so a branch may wind out of (-pi, pi]
across the zone).  The flat branch, when present, is moved to index 2.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np
import scipy.linalg
import scipy.optimize

from .coins import Coin, CoinFamily, InvariantViolation

__all__ = [
    "DEFAULT_GRID",
    "BRANCH_JUMP_THRESHOLD",
    "FLAT_BAND_TOL",
    "BranchTrackingError",
    "DispersionTable",
    "VelocityMethod",
    "PeakVelocityResult",
    "momentum_propagator",
    "dispersion_numeric",
    "dispersion_analytic",
    "group_velocity",
    "stationary_point",
    "peak_velocities_numeric",
    "peak_velocity_c1",
    "peak_velocity_c2",
    "linear_approx_deviation",
]

logger = logging.getLogger(__name__)

DEFAULT_GRID = 4096
# Largest allowed phase step between consecutive grid samples of one branch.
BRANCH_JUMP_THRESHOLD = math.pi / 4
# A branch whose total phase variation stays below this is considered flat.
FLAT_BAND_TOL = 1e-8

_PERMS = np.array(list(permutations(range(3))))
_TWO_PI = 2.0 * math.pi


class BranchTrackingError(Exception):
    """Eigenphase branches could not be continued across the grid."""

    def __init__(self, message: str, k: float):
        super().__init__(message)
        self.k = k


def _wrap(x):
    """Reduce phase differences to the principal interval around zero."""
    return x - _TWO_PI * np.round(x / _TWO_PI)


def momentum_propagator(coin: Coin, k: float) -> np.ndarray:
    """The 3x3 unitary diag(exp(-ik), 1, exp(ik)) . C for one Fourier mode."""
    if not math.isfinite(k):
        raise ValueError("momentum k must be finite")
    phase = np.array([np.exp(-1j * k), 1.0, np.exp(1j * k)])
    return phase[:, None] * coin.matrix


def _propagator_batch(matrix: np.ndarray, ks: np.ndarray) -> np.ndarray:
    phase = np.empty((ks.size, 3), dtype=np.complex128)
    phase[:, 0] = np.exp(-1j * ks)
    phase[:, 1] = 1.0
    phase[:, 2] = np.exp(1j * ks)
    return phase[:, :, None] * matrix[None, :, :]


@dataclass(frozen=True)
class DispersionTable:
    """Tracked eigenphase branches omega_j(k) over a uniform momentum grid.

    ``branches[j]`` is a continuous (unwrapped) phase sequence;
    ``exp(i branches[:, n])`` reproduces the eigenvalue set of U(k_n).
    ``eigenvectors[n, :, j]``, when present, is the unit eigenvector of
    branch j at sample n.  The source coin is kept for off-grid refinement.
    """

    k_grid: np.ndarray
    branches: np.ndarray
    coin: Coin
    eigenvectors: np.ndarray | None = None

    def __post_init__(self) -> None:
        ks = np.asarray(self.k_grid, dtype=float)
        br = np.asarray(self.branches, dtype=float)
        if ks.ndim != 1 or br.shape != (3, ks.size):
            raise ValueError("need a 1-d k grid and (3, n) branch array")
        ks.setflags(write=False)
        br.setflags(write=False)
        object.__setattr__(self, "k_grid", ks)
        object.__setattr__(self, "branches", br)

    @property
    def n_samples(self) -> int:
        return self.k_grid.size

    @property
    def spacing(self) -> float:
        return float(self.k_grid[1] - self.k_grid[0])

    def branch_steps(self, branch: int) -> np.ndarray:
        """Consecutive phase increments, with the seam step wrapped.

        The branch value is 2pi-periodic only up to winding, so the step
        from the last sample back to k=0 is reduced to its principal value.
        """
        omega = self.branches[branch]
        steps = np.empty_like(omega)
        steps[:-1] = np.diff(omega)
        steps[-1] = _wrap(omega[0] - omega[-1])
        return steps

    def is_flat(self, branch: int, tol: float = FLAT_BAND_TOL) -> bool:
        omega = self.branches[branch]
        return bool(np.max(np.abs(omega - omega.mean())) < tol)

    def to_csv(self, path) -> None:
        vs = [group_velocity(self, j) for j in range(3)]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("k,omega1,omega2,omega3,v1,v2,v3\n")
            for n in range(self.n_samples):
                row = [self.k_grid[n]] + [self.branches[j][n] for j in range(3)]
                row += [vs[j][n] for j in range(3)]
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")

    def to_json(self) -> str:
        return json.dumps(
            {
                "k": [float(k) for k in self.k_grid],
                "omega": [[float(w) for w in self.branches[j]] for j in range(3)],
                "coin": json.loads(self.coin.to_json()),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "DispersionTable":
        data = json.loads(text)
        coin = Coin.from_json(json.dumps(data["coin"]))
        return cls(np.array(data["k"]), np.array(data["omega"]), coin)


def dispersion_numeric(
    coin: Coin,
    n_samples: int = DEFAULT_GRID,
    *,
    branch_jump_threshold: float = BRANCH_JUMP_THRESHOLD,
    include_eigenvectors: bool = False,
) -> DispersionTable:
    """Sample and track the eigenphase branches of U(k) on [0, 2pi).

    Branches are continued sample to sample by the permutation of phases
    (each shifted by a multiple of 2pi) closest to the linear extrapolation
    of the branch.  A step larger than ``branch_jump_threshold`` aborts with
    the offending k.  After tracking, the branch of least phase variance is
    moved to index 2, so a flat band always sits there; the other two are
    ordered by descending mean phase.
    """
    if n_samples < 16:
        raise ValueError("dispersion grid needs at least 16 samples")
    ks = np.arange(n_samples) * (_TWO_PI / n_samples)
    raw = np.angle(np.linalg.eigvals(_propagator_batch(coin.matrix, ks)))

    branches = np.empty((3, n_samples))
    branches[:, 0] = np.sort(raw[0])
    prev2 = prev = branches[:, 0]
    for n in range(1, n_samples):
        # Matching against the linear extrapolation (not the last value)
        # carries each branch straight through an exact band crossing,
        # where all assignments are equally near the previous sample.
        pred = 2.0 * prev - prev2
        cand = raw[n][_PERMS]                       # (6, 3) phase orderings
        cand = cand + _TWO_PI * np.round((pred - cand) / _TWO_PI)
        costs = np.max(np.abs(cand - pred), axis=1)
        best = int(np.argmin(costs))
        jump = float(np.max(np.abs(cand[best] - prev)))
        if jump > branch_jump_threshold:
            raise BranchTrackingError(
                f"branch jump {jump:.3g} rad exceeds threshold "
                f"{branch_jump_threshold:.3g} at k = {ks[n]:.6f}",
                k=float(ks[n]),
            )
        branches[:, n] = cand[best]
        prev2, prev = prev, branches[:, n]

    spread = np.max(np.abs(branches - branches.mean(axis=1, keepdims=True)), axis=1)
    flat = int(np.argmin(spread))
    rest = sorted((j for j in range(3) if j != flat),
                  key=lambda j: -branches[j].mean())
    order = [*rest, flat]
    branches = branches[order]

    vectors = None
    if include_eigenvectors:
        vectors = _eigenvector_pass(coin.matrix, ks, branches)
    return DispersionTable(ks, branches, coin, vectors)


def _eigenvector_pass(matrix: np.ndarray, ks: np.ndarray,
                      branches: np.ndarray) -> np.ndarray:
    """Orthonormal eigenvectors per sample, columns aligned with branches."""
    vectors = np.empty((ks.size, 3, 3), dtype=np.complex128)
    for n, k in enumerate(ks):
        phase = np.array([np.exp(-1j * k), 1.0, np.exp(1j * k)])
        t, q = scipy.linalg.schur(phase[:, None] * matrix, output="complex")
        lam = np.diag(t)
        taken = [False, False, False]
        for j in range(3):
            target = np.exp(1j * branches[j, n])
            dist = np.abs(lam - target)
            dist[taken] = np.inf
            pick = int(np.argmin(dist))
            taken[pick] = True
            vectors[n, :, j] = q[:, pick]
    return vectors


def dispersion_analytic(family: CoinFamily, parameter: float | None, k):
    """Closed-form dispersion (omega1, omega2, omega3) for the named families.

    omega1 carries the +arccos sheet, omega2 the -arccos sheet, and the flat
    band omega3 is identically zero.  ``k`` may be a scalar or an array.
    """
    k = np.asarray(k, dtype=float)
    if family is CoinFamily.GROVER:
        arg = -(2.0 + np.cos(k)) / 3.0
        acos = np.arccos(np.clip(arg, -1.0, 1.0))
        return acos, -acos, np.zeros_like(k)
    if family is CoinFamily.C1:
        phi = float(parameter)
        arg = -(2.0 + np.cos(k)) * math.cos(phi) / 3.0
        acos = np.arccos(np.clip(arg, -1.0, 1.0))
        return phi + acos, phi - acos, np.zeros_like(k)
    if family is CoinFamily.C2:
        rho = float(parameter)
        arg = rho * rho - 1.0 - rho * rho * np.cos(k)
        acos = np.arccos(np.clip(arg, -1.0, 1.0))
        return acos, -acos, np.zeros_like(k)
    raise ValueError(
        f"no closed-form dispersion for family {family.value!r}; "
        "use dispersion_numeric"
    )


def group_velocity(table: DispersionTable, branch: int) -> np.ndarray:
    """d omega/dk per sample via central differences with periodic seam."""
    h = table.spacing
    if np.max(np.abs(np.diff(table.k_grid) - h)) > 1e-9 * h:
        raise ValueError("group velocity requires a uniform momentum grid")
    steps = table.branch_steps(branch)
    return (steps + np.roll(steps, 1)) / (2.0 * h)


class _BranchEvaluator:
    """Off-grid evaluation of one tracked branch.

    The continuation anchor at an arbitrary k is the linear interpolation of
    the tracked branch (seam steps wrapped, so winding branches interpolate
    correctly); its O(h^2 omega'') error is far smaller than the separation
    of neighboring branches everywhere except a vanishing neighborhood of a
    band touching, where either assignment is a valid continuation and the
    finite-difference velocity stays bounded by the one-sided slopes.
    """

    def __init__(self, table: DispersionTable, branch: int):
        self.matrix = table.coin.matrix
        self.values = table.branches[branch]
        self.steps = table.branch_steps(branch)
        self.h = table.spacing
        self.n = table.n_samples

    def ref(self, k: float) -> float:
        pos = (k / self.h) % self.n
        i = int(pos) % self.n
        frac = pos - math.floor(pos)
        return float(self.values[i] + frac * self.steps[i])

    def phase(self, k: float) -> float:
        ref = self.ref(k)
        col = np.array([np.exp(-1j * k), 1.0, np.exp(1j * k)])
        ph = np.angle(np.linalg.eigvals(col[:, None] * self.matrix))
        cand = ph + _TWO_PI * np.round((ref - ph) / _TWO_PI)
        return float(cand[np.argmin(np.abs(cand - ref))])

    def velocity(self, k: float, delta: float) -> float:
        return (self.phase(k + delta) - self.phase(k - delta)) / (2.0 * delta)

    def second_difference(self, k: float, delta: float) -> float:
        """Raw second difference omega(k+d) - 2 omega(k) + omega(k-d)."""
        mid = self.phase(k)
        return (self.phase(k + delta) - mid) + (self.phase(k - delta) - mid)


def _refine_corner(table: DispersionTable, branch: int, spike: int) -> float:
    """Locate a band-touching corner as the crossing of one-sided secants.

    At a conical touching the branch is piecewise smooth with a slope jump;
    the straight lines through the two grid samples on either side intersect
    at the corner.  The residual curvature bias is O(h^2 omega'' / dslope),
    far below the grid spacing because omega'' itself vanishes at the corner.
    """
    omega = table.branches[branch]
    steps = table.branch_steps(branch)
    h = table.spacing
    n = table.n_samples
    k_s = table.k_grid[spike]
    # Unwrapped branch values at spike-2 .. spike+2 via the step chain.
    vals = np.empty(5)
    vals[2] = omega[spike]
    vals[3] = vals[2] + steps[spike % n]
    vals[4] = vals[3] + steps[(spike + 1) % n]
    vals[1] = vals[2] - steps[(spike - 1) % n]
    vals[0] = vals[1] - steps[(spike - 2) % n]
    slope_l = (vals[1] - vals[0]) / h
    slope_r = (vals[4] - vals[3]) / h
    if abs(slope_l - slope_r) < 1e-9:
        return float(k_s % _TWO_PI)
    # Lines through (k_s - 1.5h, midpoint of left pair) and the right mirror.
    y_l = 0.5 * (vals[0] + vals[1])
    y_r = 0.5 * (vals[3] + vals[4])
    x_l = -1.5 * h
    x_r = 1.5 * h
    x = (y_r - y_l + slope_l * x_l - slope_r * x_r) / (slope_l - slope_r)
    return float((k_s + x) % _TWO_PI)


def stationary_point(
    table: DispersionTable,
    branch: int,
    *,
    flat_tol: float = FLAT_BAND_TOL,
) -> float | None:
    """Wavenumber where the branch curvature d^2 omega/dk^2 vanishes.

    Grid sign changes of the second difference are refined: smooth
    inflections by bisection on a fresh finite-difference second derivative,
    band-touching corners (a localized negative spike in the grid curvature)
    by secant-line intersection.  Returns None for flat branches and when no
    sign change exists.  When several stationary points survive, the
    smallest one in [0, pi] is reported (the spectrum is symmetric about pi
    for the parity-symmetric families).
    """
    if table.n_samples < 256:
        raise ValueError("stationary point search needs at least 256 samples")
    if table.is_flat(branch, flat_tol):
        return None
    h = table.spacing
    steps = table.branch_steps(branch)
    curv = (steps - np.roll(steps, 1)) / (h * h)

    sign = np.sign(curv)
    flips = [n for n in range(table.n_samples)
             if sign[n] != 0 and sign[n] * sign[(n + 1) % table.n_samples] < 0]
    if not flips:
        logger.debug("no curvature sign change on the grid for branch %d", branch)
        return None

    spike_level = 0.1 / h
    candidates: list[float] = []
    for n in flips:
        m = (n + 1) % table.n_samples
        pair = {n: abs(curv[n]), m: abs(curv[m])}
        spike = max(pair, key=pair.get)
        if pair[spike] > spike_level:
            k = _refine_corner(table, branch, spike)
        else:
            k = _bisect_curvature(table, branch, n, m)
        k = k % _TWO_PI
        if _TWO_PI - k < 1e-9:
            k = 0.0
        candidates.append(k)

    # Deduplicate modulo 2pi and prefer the representative in [0, pi].
    unique: list[float] = []
    for k in sorted(candidates):
        if not any(abs(_wrap(k - u)) < 1e-6 for u in unique):
            unique.append(k)
    in_half = [k for k in unique if k <= math.pi + 1e-9]
    return min(in_half) if in_half else min(unique)


def _bisect_curvature(table: DispersionTable, branch: int,
                      n_lo: int, n_hi: int) -> float:
    """Bisection root of the finite-difference second derivative."""
    h = table.spacing
    delta = min(3e-4, h / 4.0)
    a = float(table.k_grid[n_lo])
    b = a + h  # n_hi may be the wrapped sample 0
    ev = _BranchEvaluator(table, branch)

    def curvature(k: float) -> float:
        return ev.second_difference(k, delta) / (delta * delta)

    fa = curvature(a)
    fb = curvature(b)
    if fa == 0.0:
        return float(a % _TWO_PI)
    if fb == 0.0 or fa * fb > 0.0:
        return float(b % _TWO_PI)
    lo, hi = a, b
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fm = curvature(mid)
        if abs(fm) < 1e-8 or (hi - lo) < 1e-10:
            return float(mid % _TWO_PI)
        if fa * fm < 0.0:
            hi = mid
        else:
            lo, fa = mid, fm
    return float(0.5 * (lo + hi) % _TWO_PI)


class VelocityMethod(enum.Enum):
    ANALYTIC = "analytic"
    NUMERIC = "numeric"


@dataclass(frozen=True)
class PeakVelocityResult:
    """Velocities of the ballistic probability fronts.

    ``v_right``/``v_left`` are the extremal group velocities in sites per
    step; ``k0`` is the stationary wavenumber they are attained at, when one
    was identified.
    """

    v_left: float
    v_right: float
    k0: float | None
    method: VelocityMethod

    def __post_init__(self) -> None:
        if abs(self.v_right) > 1.0 + 1e-9 or abs(self.v_left) > 1.0 + 1e-9:
            raise InvariantViolation(
                f"peak velocity ({self.v_left}, {self.v_right}) breaks the "
                "one-site-per-step light cone"
            )

    def to_json(self) -> str:
        return json.dumps(
            {
                "v_left": self.v_left,
                "v_right": self.v_right,
                "k0": self.k0,
                "method": self.method.value,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "PeakVelocityResult":
        data = json.loads(text)
        k0 = data["k0"]
        return cls(float(data["v_left"]), float(data["v_right"]),
                   None if k0 is None else float(k0),
                   VelocityMethod(data["method"]))


def _refined_extremum(table: DispersionTable, branch: int,
                      k_center: float, sign: float) -> float:
    """Extremal group velocity near k_center via a small-step stencil.

    The stencil step 1e-5 balances truncation (omega''' delta^2 / 6 ~ 1e-11)
    against phase rounding noise (eps/delta ~ 1e-10).  At a band-touching
    corner the two-sided difference is a convex combination of the one-sided
    slopes, so the estimate never overshoots the light cone.
    """
    delta = 1e-5
    h = table.spacing
    ev = _BranchEvaluator(table, branch)
    res = scipy.optimize.minimize_scalar(
        lambda k: -sign * ev.velocity(k, delta),
        bounds=(k_center - h, k_center + h),
        method="bounded",
        options={"xatol": 1e-8},
    )
    return float(-sign * res.fun)


def peak_velocities_numeric(coin: Coin,
                            n_samples: int = DEFAULT_GRID) -> PeakVelocityResult:
    """Peak velocities from the numerically tracked dispersion.

    For each dispersive branch the grid group velocity is scanned for its
    extrema, which are then refined off-grid; v_right is the maximum over
    branches, v_left the minimum.  A coin whose branches are all flat does
    not spread: the velocities are zero and k0 is absent.
    """
    table = dispersion_numeric(coin, n_samples)
    best_max: tuple[float, int] | None = None
    best_min: tuple[float, int] | None = None
    for j in range(3):
        if table.is_flat(j):
            continue
        v = group_velocity(table, j)
        i_max = int(np.argmax(v))
        i_min = int(np.argmin(v))
        v_hi = _refined_extremum(table, j, float(table.k_grid[i_max]), +1.0)
        v_lo = _refined_extremum(table, j, float(table.k_grid[i_min]), -1.0)
        if best_max is None or v_hi > best_max[0]:
            best_max = (v_hi, j)
        if best_min is None or v_lo < best_min[0]:
            best_min = (v_lo, j)

    if best_max is None or best_min is None:
        return PeakVelocityResult(0.0, 0.0, None, VelocityMethod.NUMERIC)
    k0 = None
    if n_samples >= 256:
        k0 = stationary_point(table, best_max[1])
    return PeakVelocityResult(best_min[0], best_max[0], k0,
                              VelocityMethod.NUMERIC)


def peak_velocity_c1(phi: float) -> float:
    """Closed-form peak velocity of the eigenvalue-deformed walk.

    Decreases from 1/sqrt(3) at phi = 0 to zero at phi = pi/2.
    """
    if not 0.0 <= phi <= math.pi / 2.0:
        raise ValueError(f"phi must lie in [0, pi/2], got {phi}")
    c2 = math.cos(phi) ** 2
    inner = 3.0 - c2 - math.sin(phi) * math.sqrt(9.0 - c2)
    return math.sqrt(max(inner, 0.0) / 6.0)


def peak_velocity_c2(rho: float) -> float:
    """Closed-form peak velocity of the eigenvector-deformed walk: rho itself."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    return float(rho)


def linear_approx_deviation(phi: float) -> float:
    """Deviation of the C1 peak velocity from the straight-line approximation.

    The velocity falls almost linearly between its endpoint values; this
    returns peak_velocity_c1(phi) - (1 - 2 phi/pi)/sqrt(3), which vanishes
    at both endpoints.
    """
    if not 0.0 <= phi <= math.pi / 2.0:
        raise ValueError(f"phi must lie in [0, pi/2], got {phi}")
    return peak_velocity_c1(phi) - (1.0 - 2.0 * phi / math.pi) / math.sqrt(3.0)
