"""Media, phantoms, and chord geometry on uniform Cartesian grids.

The refractive index is ``n = 1 + beta`` with ``beta >= 0`` supported
inside the ball ``Omega = {|x| < R}``.  Grids cover ``[-R-m, R+m]^dim``
with margin ``m = 2*spacing`` so the plane-wave inflow band of the
eikonal solver lies on grid nodes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    GeometryError,
    ParameterError,
    SupportViolationError,
)

# Gaussian phantoms are multiplied by a C^2 radial bump: identically 1 on
# the inner plateau, identically 0 for |x| >= CUTOFF_END_FRAC * R.
CUTOFF_START_FRAC = 0.80
CUTOFF_END_FRAC = 0.95

PHANTOM_KINDS = ("zero", "gaussian", "two_balls")


def _smootherstep_down(t: np.ndarray) -> np.ndarray:
    """C^2 ramp equal to 1 at t <= 0 and 0 at t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    return 1.0 - t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def radial_cutoff(r, radius_R: float):
    """Cutoff factor applied to gaussian phantoms at radius ``r`` from the origin."""
    r0 = CUTOFF_START_FRAC * radius_R
    r1 = CUTOFF_END_FRAC * radius_R
    return _smootherstep_down((np.asarray(r, dtype=float) - r0) / (r1 - r0))


@dataclass(frozen=True)
class Phantom:
    """Analytic perturbation descriptor; retained for oracle evaluation.

    params layout:
      zero       -- ()
      gaussian   -- (c_1..c_dim, sigma, beta0)
      two_balls  -- (c_1..c_dim, radius, height) twice
    """

    kind: str
    params: tuple
    dim: int
    radius_R: float

    def value(self, points) -> np.ndarray:
        """Evaluate the analytic beta at an (N, dim) array of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "zero":
            return np.zeros(pts.shape[0])
        if self.kind == "gaussian":
            center = np.asarray(self.params[: self.dim])
            sigma, beta0 = self.params[self.dim], self.params[self.dim + 1]
            d2 = ((pts - center) ** 2).sum(axis=1)
            bare = beta0 * np.exp(-d2 / sigma**2)
            return bare * radial_cutoff(np.linalg.norm(pts, axis=1), self.radius_R)
        if self.kind == "two_balls":
            out = np.zeros(pts.shape[0])
            step = self.dim + 2
            for b in range(2):
                chunk = self.params[b * step : (b + 1) * step]
                center = np.asarray(chunk[: self.dim])
                radius, height = chunk[self.dim], chunk[self.dim + 1]
                inside = ((pts - center) ** 2).sum(axis=1) < radius**2
                out[inside] += height
            return out
        raise ParameterError(f"unknown phantom kind {self.kind!r}")

    @property
    def beta0(self) -> float:
        """Peak height scale used by support checks."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "gaussian":
            return float(self.params[self.dim + 1])
        step = self.dim + 2
        return float(max(self.params[step - 1], self.params[2 * step - 1]))


@dataclass(frozen=True, eq=False)
class Medium:
    """A sampled perturbation field on a uniform grid around the ball |x| < R."""

    dim: int
    radius_R: float
    grid_n: int
    spacing: float
    axis: np.ndarray          # per-axis node coordinates, shared by all axes
    beta: np.ndarray          # shape (grid_n,) * dim
    phantom: Phantom | None = None

    @property
    def margin(self) -> float:
        return 2.0 * self.spacing

    def grid_points(self) -> np.ndarray:
        """All node coordinates as an (grid_n**dim, dim) array in C order."""
        mesh = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def outside_ball_mask(self) -> np.ndarray:
        """Boolean grid mask of nodes with |x| >= R."""
        r2 = np.zeros((self.grid_n,) * self.dim)
        for d in range(self.dim):
            shape = [1] * self.dim
            shape[d] = self.grid_n
            r2 = r2 + (self.axis.reshape(shape)) ** 2
        return r2 >= self.radius_R**2


def grid_axis(radius_R: float, grid_n: int) -> tuple[np.ndarray, float]:
    """Node coordinates and spacing for a margin-2h grid over [-R-m, R+m]."""
    if grid_n < 9:
        raise ParameterError("grid_n must be at least 9")
    spacing = 2.0 * radius_R / (grid_n - 5)
    lo = -(radius_R + 2.0 * spacing)
    return lo + spacing * np.arange(grid_n), spacing


def _validate_phantom(phantom: Phantom) -> None:
    kind, params, dim, R = phantom.kind, phantom.params, phantom.dim, phantom.radius_R
    if kind not in PHANTOM_KINDS:
        raise ParameterError(f"unknown phantom kind {kind!r}")
    if kind == "zero":
        return
    if kind == "gaussian":
        if len(params) != dim + 2:
            raise ParameterError("gaussian params must be (center..., sigma, beta0)")
        center = np.asarray(params[:dim])
        sigma, beta0 = params[dim], params[dim + 1]
        if sigma <= 0:
            raise ParameterError("sigma must be positive")
        if beta0 < 0:
            raise ParameterError("beta0 must be nonnegative")
        if np.linalg.norm(center) >= CUTOFF_END_FRAC * R:
            raise SupportViolationError(
                "gaussian center lies outside the cutoff support"
            )
        return
    step = dim + 2
    if len(params) != 2 * step:
        raise ParameterError("two_balls params must be (center..., radius, height) x2")
    beta0 = phantom.beta0
    for b in range(2):
        chunk = params[b * step : (b + 1) * step]
        center = np.asarray(chunk[:dim])
        radius, height = chunk[dim], chunk[dim + 1]
        if radius <= 0:
            raise ParameterError("ball radius must be positive")
        if height < 0:
            raise ParameterError("ball height must be nonnegative")
        # Indicator bumps carry no designed cutoff: a ball reaching the
        # boundary leaves more than 1e-6*beta0 on d(Omega).
        if np.linalg.norm(center) + radius >= R and height > 1e-6 * beta0:
            raise SupportViolationError("ball support reaches the domain boundary")


def make_phantom(
    kind: str,
    params,
    dim: int = 2,
    radius_R: float = 1.0,
    grid_n: int = 129,
) -> Medium:
    """Sample an analytic phantom onto the standard grid.

    The analytic descriptor is retained on the returned Medium so oracle
    quadratures can bypass grid interpolation.
    """
    if dim not in (2, 3):
        raise ParameterError("dim must be 2 or 3")
    if radius_R <= 0:
        raise ParameterError("radius_R must be positive")
    params_tuple = tuple(float(p) for p in np.asarray(params, dtype=float).ravel())
    phantom = Phantom(kind, params_tuple, dim, float(radius_R))
    _validate_phantom(phantom)
    axis, spacing = grid_axis(radius_R, grid_n)
    medium = Medium(dim, float(radius_R), grid_n, spacing, axis,
                    np.zeros((grid_n,) * dim), phantom)
    values = phantom.value(medium.grid_points()).reshape((grid_n,) * dim)
    if values.min() < 0:
        raise ParameterError("phantom produced negative beta")
    return Medium(dim, float(radius_R), grid_n, spacing, axis, values, phantom)


def _locate(medium: Medium, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cell indices and fractional offsets for points inside the bounding box."""
    lo, hi = medium.axis[0], medium.axis[-1]
    eps = 1e-9 * medium.spacing
    if np.any(pts < lo - eps) or np.any(pts > hi + eps):
        raise DomainError("point outside the grid bounding box")
    s = (pts - lo) / medium.spacing
    i0 = np.clip(np.floor(s).astype(np.int64), 0, medium.grid_n - 2)
    t = np.clip(s - i0, 0.0, 1.0)
    return i0, t


def interp_grid(medium: Medium, values: np.ndarray, points, fill: float | None = None):
    """Multilinear interpolation of a grid field sampled like medium.beta.

    ``fill`` substitutes for points outside the bounding box; with
    ``fill=None`` such points raise DomainError.
    """
    arr = np.asarray(points, dtype=float)
    single = arr.ndim == 1
    pts = np.atleast_2d(arr)
    if pts.shape[1] != medium.dim:
        raise ParameterError(f"points must have dim {medium.dim}")
    if fill is None:
        inside = slice(None)
        i0, t = _locate(medium, pts)
        out = np.zeros(pts.shape[0])
    else:
        eps = 1e-9 * medium.spacing
        ok = np.all((pts >= medium.axis[0] - eps) & (pts <= medium.axis[-1] + eps), axis=1)
        out = np.full(pts.shape[0], float(fill))
        inside = np.nonzero(ok)[0]
        if inside.size == 0:
            return float(out[0]) if single else out
        i0, t = _locate(medium, pts[inside])
    acc = np.zeros(i0.shape[0])
    if medium.dim == 2:
        ix, iy = i0[:, 0], i0[:, 1]
        tx, ty = t[:, 0], t[:, 1]
        acc = (
            (1 - tx) * (1 - ty) * values[ix, iy]
            + tx * (1 - ty) * values[ix + 1, iy]
            + (1 - tx) * ty * values[ix, iy + 1]
            + tx * ty * values[ix + 1, iy + 1]
        )
    else:
        ix, iy, iz = i0[:, 0], i0[:, 1], i0[:, 2]
        tx, ty, tz = t[:, 0], t[:, 1], t[:, 2]
        for dx, wx in ((0, 1 - tx), (1, tx)):
            for dy, wy in ((0, 1 - ty), (1, ty)):
                for dz, wz in ((0, 1 - tz), (1, tz)):
                    acc = acc + wx * wy * wz * values[ix + dx, iy + dy, iz + dz]
    out[inside] = acc
    return float(out[0]) if single else out


def eval_beta(medium: Medium, points) -> np.ndarray | float:
    """Multilinear interpolation of beta; exact at grid nodes.

    Accepts one point of shape (dim,) or a batch (N, dim).  Points outside
    the bounding box raise DomainError.
    """
    return interp_grid(medium, medium.beta, points)


@dataclass(frozen=True, eq=False)
class Geometry:
    """One observation setup: incident direction and receiver on the sphere."""

    nu: np.ndarray
    x_obs: np.ndarray
    radius_R: float
    B: float

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=float)
        x = np.asarray(self.x_obs, dtype=float)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "x_obs", x)
        if abs(np.linalg.norm(nu) - 1.0) > 1e-12:
            raise GeometryError("nu must be a unit vector (1e-12)")
        if abs(np.linalg.norm(x) - self.radius_R) > 1e-9:
            raise GeometryError("x_obs must lie on |x| = R (1e-9)")
        if self.B < self.radius_R - 1e-12:
            raise GeometryError("inflow plane offset B must satisfy B >= R")


@dataclass(frozen=True, eq=False)
class Chord:
    """Straight segment between two boundary points of the ball."""

    p0: np.ndarray
    p1: np.ndarray

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.p1 - self.p0))

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.p0 + self.p1)


def chord_for(geometry: Geometry) -> Chord:
    """The chord traversed by the ray reaching x_obs: x to x - 2(x.nu)nu."""
    s = float(np.dot(geometry.x_obs, geometry.nu))
    if s <= 0.0:
        raise GeometryError("x_obs.nu must be positive for a forward chord")
    p1 = geometry.x_obs - 2.0 * s * geometry.nu
    return Chord(np.asarray(geometry.x_obs, dtype=float), p1)


def observation_geometry(
    radius_R: float,
    angle: float,
    offset: float,
    B: float | None = None,
) -> Geometry:
    """2D helper: direction at ``angle``, receiver above the chord at ``offset``.

    The chord runs parallel to nu at signed perpendicular distance
    ``offset`` (|offset| < R).
    """
    if abs(offset) >= radius_R:
        raise GeometryError("offset must satisfy |offset| < R")
    nu = np.array([np.cos(angle), np.sin(angle)])
    nu_perp = np.array([-nu[1], nu[0]])
    x_obs = offset * nu_perp + np.sqrt(radius_R**2 - offset**2) * nu
    return Geometry(nu, x_obs, radius_R, radius_R if B is None else B)


def line_sample(p0, p1, max_step: float) -> tuple[np.ndarray, np.ndarray]:
    """Uniform sample points and composite-trapezoid weights along a segment."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    length = float(np.linalg.norm(p1 - p0))
    if length == 0.0:
        return p0[None, :], np.zeros(1)
    n = max(2, int(np.ceil(length / max_step)) + 1)
    t = np.linspace(0.0, 1.0, n)
    pts = p0[None, :] + t[:, None] * (p1 - p0)[None, :]
    w = np.full(n, length / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return pts, w


# -- serialization ----------------------------------------------------------

def phantom_config(medium: Medium) -> dict:
    """JSON-ready descriptor: kind, params, dim, R, grid_n."""
    if medium.phantom is None:
        raise ParameterError("medium carries no analytic phantom descriptor")
    return {
        "kind": medium.phantom.kind,
        "params": list(medium.phantom.params),
        "dim": medium.dim,
        "R": medium.radius_R,
        "grid_n": medium.grid_n,
    }


def medium_from_config(obj: dict) -> Medium:
    """Rebuild a Medium from a phantom_config dictionary."""
    try:
        return make_phantom(obj["kind"], obj["params"], obj["dim"],
                            obj["R"], obj["grid_n"])
    except KeyError as exc:
        raise ParameterError(f"phantom config missing key {exc}") from exc


def save_phantom_config(medium: Medium, path) -> None:
    with open(path, "w") as fh:
        json.dump(phantom_config(medium), fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_phantom_config(path) -> Medium:
    with open(path) as fh:
        return medium_from_config(json.load(fh))


def medium_to_csv(medium: Medium, path) -> None:
    """Dump node coordinates and beta values (columns x, y[, z], beta)."""
    pts = medium.grid_points()
    cols = ["x", "y", "z"][: medium.dim]
    header = ",".join(cols + ["beta"])
    data = np.column_stack([pts, medium.beta.ravel()])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.12g")
