"""Plane-wave eikonal travel times by Godunov upwind fast sweeping.

Solves |grad phi| = n = 1 + beta with phi = x.nu imposed on the inflow
band x.nu <= -R (exact there, since beta vanishes off the ball and n >= 1
makes the straight plane wave the first arrival).  Also provides the
straight-ray linearization tau = integral of beta along the chord and the
geometric amplitude transported along the incident ray.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConvergenceError, GeometryError, ParameterError
from .medium import Chord, Geometry, Medium, chord_for, eval_beta, interp_grid, line_sample

_BIG = 1.0e300


@njit(cache=True)
def _sweep2d(phi, nvals, frozen, h):
    """One set of four directional sweeps in place; returns max decrease."""
    n = phi.shape[0]
    worst = 0.0
    for sx in range(2):
        for sy in range(2):
            for ii in range(n):
                i = ii if sx == 0 else n - 1 - ii
                for jj in range(n):
                    j = jj if sy == 0 else n - 1 - jj
                    if frozen[i, j]:
                        continue
                    a = _BIG
                    if i > 0 and phi[i - 1, j] < a:
                        a = phi[i - 1, j]
                    if i < n - 1 and phi[i + 1, j] < a:
                        a = phi[i + 1, j]
                    b = _BIG
                    if j > 0 and phi[i, j - 1] < b:
                        b = phi[i, j - 1]
                    if j < n - 1 and phi[i, j + 1] < b:
                        b = phi[i, j + 1]
                    if a >= _BIG and b >= _BIG:
                        continue
                    f = nvals[i, j] * h
                    d = a - b
                    if d < 0.0:
                        d = -d
                    if d >= f:
                        new = (a if a < b else b) + f
                    else:
                        new = 0.5 * (a + b + np.sqrt(2.0 * f * f - d * d))
                    if new < phi[i, j]:
                        dec = phi[i, j] - new
                        if dec > worst:
                            worst = dec
                        phi[i, j] = new
    return worst


@njit(cache=True)
def _residual2d(phi, nvals, frozen, h):
    """Max norm of the Godunov discretization residual off the inflow band."""
    n = phi.shape[0]
    worst = 0.0
    for i in range(n):
        for j in range(n):
            if frozen[i, j]:
                continue
            a = _BIG
            if i > 0 and phi[i - 1, j] < a:
                a = phi[i - 1, j]
            if i < n - 1 and phi[i + 1, j] < a:
                a = phi[i + 1, j]
            b = _BIG
            if j > 0 and phi[i, j - 1] < b:
                b = phi[i, j - 1]
            if j < n - 1 and phi[i, j + 1] < b:
                b = phi[i, j + 1]
            gx = phi[i, j] - a
            if gx < 0.0 or a >= _BIG:
                gx = 0.0
            gy = phi[i, j] - b
            if gy < 0.0 or b >= _BIG:
                gy = 0.0
            r = np.sqrt(gx * gx + gy * gy) / h - nvals[i, j]
            if r < 0.0:
                r = -r
            if r > worst:
                worst = r
    return worst


@dataclass(frozen=True, eq=False)
class TravelTimeField:
    """Eikonal solve for one incident direction."""

    nu: np.ndarray
    phi: np.ndarray
    amp: np.ndarray | None
    residual: float
    sweeps: int
    lap: np.ndarray = None  # central-difference Laplacian of phi, zero on the rim


def _laplacian(phi: np.ndarray, h: float) -> np.ndarray:
    lap = np.zeros_like(phi)
    lap[1:-1, 1:-1] = (
        phi[2:, 1:-1] + phi[:-2, 1:-1] + phi[1:-1, 2:] + phi[1:-1, :-2]
        - 4.0 * phi[1:-1, 1:-1]
    ) / h**2
    return lap


def _unit(nu) -> np.ndarray:
    nu = np.asarray(nu, dtype=float)
    if abs(np.linalg.norm(nu) - 1.0) > 1e-12:
        raise GeometryError("nu must be a unit vector (1e-12)")
    return nu


def solve_eikonal(
    medium: Medium,
    nu,
    sweep_tol: float = 1e-8,
    max_sweeps: int = 500,
    with_amp: bool = True,
) -> TravelTimeField:
    """Godunov fast-sweeping solve of |grad phi| = 1 + beta for direction nu.

    Raises ConvergenceError when the discretization residual stays above
    ``sweep_tol`` after ``max_sweeps`` sweep sets.
    """
    if medium.dim != 2:
        raise ParameterError("eikonal solver supports dim = 2")
    nu = _unit(nu)
    ax = medium.axis
    dots = ax[:, None] * nu[0] + ax[None, :] * nu[1]
    # phi = x.nu is exact wherever the straight backward ray misses the open
    # ball (n = 1 along it and n >= 1 everywhere), so Dirichlet data covers
    # the whole unscattered region, not just the inflow band x.nu <= -R.
    # The margin-2h box is too tight for oblique nu otherwise: lateral-edge
    # characteristics would leave the grid before reaching any frozen node.
    perp = ax[:, None] * (-nu[1]) + ax[None, :] * nu[0]
    r2 = medium.radius_R**2
    shadow = (perp**2 < r2) & (dots > -np.sqrt(np.maximum(r2 - perp**2, 0.0)))
    frozen = ~shadow
    nvals = 1.0 + medium.beta
    phi = np.where(frozen, dots, _BIG)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        delta = _sweep2d(phi, nvals, frozen, medium.spacing)
        if delta <= 1e-15:
            break
    residual = float(_residual2d(phi, nvals, frozen, medium.spacing))
    if residual > sweep_tol:
        raise ConvergenceError(
            f"eikonal residual {residual:.3e} above tolerance {sweep_tol:.1e} "
            f"after {sweeps} sweep sets; raise --sweep-tol or max_sweeps"
        )
    lap = _laplacian(phi, medium.spacing)
    amp = _amp_field(medium, lap, nu) if with_amp else None
    return TravelTimeField(nu, phi, amp, residual, sweeps, lap)


def _amp_integrand(medium: Medium, lap: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """n^-2 * laplacian(phi) at sample points, zero outside the grid."""
    lap_v = interp_grid(medium, lap, pts, fill=0.0)
    beta_v = interp_grid(medium, medium.beta, pts, fill=0.0)
    return lap_v / (1.0 + beta_v) ** 2


def _amp_field(medium: Medium, lap: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """Amplitude at every grid node, transported along the parallel rays.

    The transport integral runs from the inflow side to each node with a
    trapezoid step equal to the grid spacing; the integrand vanishes off
    the ball, so truncating the first partial step is harmless.
    """
    h = medium.spacing
    pts0 = medium.grid_points()
    dots = pts0 @ nu
    lo = -(medium.radius_R + 2.0 * h)
    m_max = int(np.ceil((dots.max() - lo) / h)) + 1
    acc = np.zeros(pts0.shape[0])
    q_prev = _amp_integrand(medium, lap, pts0)
    for m in range(1, m_max + 1):
        pts_m = pts0 - (m * h) * nu
        q_m = _amp_integrand(medium, lap, pts_m)
        seg = (dots - m * h) >= lo
        acc[seg] += 0.5 * h * (q_m[seg] + q_prev[seg])
        q_prev = q_m
    return np.exp(-0.5 * acc).reshape(medium.beta.shape)


def amplitude(medium: Medium, field: TravelTimeField, geometry: Geometry) -> float:
    """Geometric amplitude exp(-1/2 int n^-2 lap(phi)) at the observation point.

    The transport curve is approximated by the straight segment from the
    inflow plane x.nu = -B to x_obs, sampled with step = spacing.
    """
    nu = field.nu
    x = np.asarray(geometry.x_obs, dtype=float)
    start = x - (float(x @ nu) + geometry.B) * nu
    pts, w = line_sample(start, x, medium.spacing)
    q = _amp_integrand(medium, field.lap, pts)
    out = float(np.exp(-0.5 * np.dot(w, q)))
    # rays missing the support pick up only quadrature noise; snap so the
    # scattered field cancels exactly on such chords
    return 1.0 if abs(out - 1.0) < 1e-9 else out


def linearized_travel_time(
    medium: Medium,
    geometry: Geometry,
    step: float | None = None,
) -> float:
    """Straight-ray travel-time perturbation: integral of beta along the chord.

    Composite trapezoid with step <= spacing/2 over the interpolated beta.
    """
    chord = chord_for(geometry)
    return chord_travel_time(medium, chord, step)


def chord_travel_time(medium: Medium, chord: Chord, step: float | None = None) -> float:
    if step is None:
        step = 0.5 * medium.spacing
    if step > 0.5 * medium.spacing:
        raise ParameterError("quadrature step must be <= spacing/2")
    pts, w = line_sample(chord.p0, chord.p1, step)
    vals = interp_grid(medium, medium.beta, pts, fill=0.0)
    return float(np.dot(w, vals))


def field_to_csv(medium: Medium, field: TravelTimeField, path) -> None:
    """Dump the solve on the grid (columns x, y, phi, amp)."""
    pts = medium.grid_points()
    amp = field.amp if field.amp is not None else np.ones_like(field.phi)
    data = np.column_stack([pts, field.phi.ravel(), amp.ravel()])
    np.savetxt(path, data, delimiter=",", header="x,y,phi,amp", comments="", fmt="%.12g")
