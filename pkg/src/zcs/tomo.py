"""Sinogram assembly and algebraic inversion of travel-time data.

Chord travel times are line integrals of beta, so the collected records
form a parallel-beam sinogram and beta is recovered by algebraic
methods.  The system matrix reuses the bilinear line quadrature of the
forward travel times; nonnegativity of beta and its confinement to the
ball are enforced as projections.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import (
    DivergenceError,
    GridMismatchError,
    ParameterError,
    ZcsError,
)
from .medium import Medium, grid_axis, line_sample
from .zerocount import estimate_tau

_METHODS = ("kaczmarz", "cgls")


@dataclass(frozen=True, eq=False)
class Sinogram:
    """Travel-time records on a (direction, offset) grid.

    angles are the directions nu = (cos a, sin a); offsets are signed
    distances along nu-perp = (-sin a, cos a).
    """

    angles: np.ndarray
    offsets: np.ndarray
    tau: np.ndarray
    weight: np.ndarray
    radius_R: float

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float)
        offsets = np.asarray(self.offsets, dtype=float)
        tau = np.asarray(self.tau, dtype=float)
        weight = np.asarray(self.weight, dtype=float)
        for name, arr in (("angles", angles), ("offsets", offsets)):
            if arr.ndim != 1 or arr.size == 0:
                raise ParameterError(f"{name} must be a nonempty 1-D array")
        shape = (angles.size, offsets.size)
        if tau.shape != shape or weight.shape != shape:
            raise ParameterError("tau and weight must have shape (n_dirs, n_offsets)")
        if np.any(tau < 0):
            raise ParameterError("travel times must be nonnegative")
        if np.any((weight <= 0) | (weight > 1)):
            raise ParameterError("weights must lie in (0, 1]")
        if np.any(np.abs(offsets) >= self.radius_R) and np.any(
            tau[:, np.abs(offsets) >= self.radius_R] != 0
        ):
            raise ParameterError("chords outside the ball must carry tau = 0")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "weight", weight)

    @property
    def n_dirs(self) -> int:
        return self.angles.size

    @property
    def n_offsets(self) -> int:
        return self.offsets.size

    def records(self):
        """Yield (nu, offset, tau, weight) rows in grid order."""
        for i, a in enumerate(self.angles):
            nu = np.array([np.cos(a), np.sin(a)])
            for j, p in enumerate(self.offsets):
                yield nu, float(p), float(self.tau[i, j]), float(self.weight[i, j])


@dataclass(frozen=True, eq=False)
class Reconstruction:
    """Recovered beta on the standard grid, with solver diagnostics."""

    beta_hat: np.ndarray
    radius_R: float
    grid_n: int
    iterations: int
    residual_history: np.ndarray
    rel_l2_error: float | None = None


def uniform_protocol(radius_R: float, n_dirs: int, n_offsets: int, angle_span: float = np.pi):
    """Default chord layout: uniform directions, cell-centered offsets.

    angle_span < pi gives the exploratory limited-angle mode.
    """
    if n_dirs < 1 or n_offsets < 1:
        raise ParameterError("need n_dirs >= 1 and n_offsets >= 1")
    if not 0 < angle_span <= np.pi:
        raise ParameterError("angle_span must lie in (0, pi]")
    angles = angle_span * np.arange(n_dirs) / n_dirs
    offsets = (np.arange(n_offsets) + 0.5) * 2.0 * radius_R / n_offsets - radius_R
    return angles, offsets


def _chord_endpoints(radius_R: float, angle: float, offset: float):
    nu = np.array([np.cos(angle), np.sin(angle)])
    perp = np.array([-nu[1], nu[0]])
    half = np.sqrt(max(radius_R**2 - offset**2, 0.0))
    base = offset * perp
    return base + half * nu, base - half * nu


def xray_forward(
    medium: Medium,
    n_dirs: int,
    n_offsets: int,
    angle_span: float = np.pi,
) -> Sinogram:
    """Exact (quadrature) sinogram of the medium's sampled beta."""
    if medium.dim != 2:
        raise ParameterError("sinogram assembly is 2-D only")
    from .eikonal import chord_travel_time
    from .medium import Chord

    angles, offsets = uniform_protocol(medium.radius_R, n_dirs, n_offsets, angle_span)
    tau = np.zeros((n_dirs, n_offsets))
    for i, a in enumerate(angles):
        for j, p in enumerate(offsets):
            p0, p1 = _chord_endpoints(medium.radius_R, a, p)
            tau[i, j] = chord_travel_time(medium, Chord(p0, p1))
    return Sinogram(angles, offsets, tau, np.ones_like(tau), medium.radius_R)


def estimate_record(geom, signal):
    """One sinogram record (angle, offset, tau, weight) from a chord signal.

    Estimation failures are re-raised with the chord identified.  The
    weight encodes estimator agreement, 1 = both methods agree; records
    flagged low-confidence are kept but weighted down to 1e-3.
    """
    nu = geom.nu
    perp = np.array([-nu[1], nu[0]])
    angle = float(np.arctan2(nu[1], nu[0])) % (2.0 * np.pi)
    offset = float(np.dot(geom.x_obs, perp))
    try:
        est = estimate_tau(signal)
    except ZcsError as exc:
        raise type(exc)(
            f"chord angle={angle:.6g} offset={offset:.6g}: {exc}"
        ) from exc
    weight = 1.0 / (1.0 + min(est.method_agreement, 1e6))
    if est.low_confidence:
        weight = min(weight, 1e-3)
    return round(angle, 12), round(offset, 12), est.tau_hat, weight


def sinogram_from_records(records, radius_R: float) -> Sinogram:
    """Assemble (angle, offset, tau, weight) rows into a complete grid."""
    recs = list(records)
    if not recs:
        raise ParameterError("no records supplied")
    angles = np.array(sorted({r[0] for r in recs}))
    offsets = np.array(sorted({r[1] for r in recs}))
    tau = np.full((angles.size, offsets.size), np.nan)
    weight = np.ones((angles.size, offsets.size))
    ai = {a: i for i, a in enumerate(angles)}
    oj = {p: j for j, p in enumerate(offsets)}
    for a, p, t, w in recs:
        tau[ai[a], oj[p]] = t
        weight[ai[a], oj[p]] = w
    if np.any(np.isnan(tau)):
        raise ParameterError("records do not tile a complete (angle, offset) grid")
    return Sinogram(angles, offsets, tau, weight, radius_R)


def sinogram_from_signals(signals, radius_R: float | None = None) -> Sinogram:
    """Estimate tau for each (Geometry, PhaselessSignal) pair and collect.

    The geometries must tile a complete (direction, offset) grid.
    """
    recs = []
    R = radius_R
    for geom, sig in signals:
        if R is None:
            R = geom.radius_R
        elif abs(geom.radius_R - R) > 1e-12:
            raise ParameterError("mixed radii in one sinogram")
        recs.append(estimate_record(geom, sig))
    return sinogram_from_records(recs, R)


# -- system matrix -------------------------------------------------------------

def system_matrix(
    radius_R: float,
    angles: np.ndarray,
    offsets: np.ndarray,
    grid_n: int,
) -> sparse.csr_matrix:
    """Discrete X-ray transform on the standard grid.

    Row (i, j) integrates bilinear nodal hats along chord (angles[i],
    offsets[j]) with the trapezoid step spacing/2, matching the forward
    travel-time quadrature.
    """
    axis, h = grid_axis(radius_R, grid_n)
    lo = axis[0]
    rows, cols, vals = [], [], []
    n_offsets = len(offsets)
    for i, a in enumerate(angles):
        for j, p in enumerate(offsets):
            if abs(p) >= radius_R:
                continue
            p0, p1 = _chord_endpoints(radius_R, a, p)
            pts, w = line_sample(p0, p1, 0.5 * h)
            s = (pts - lo) / h
            i0 = np.clip(np.floor(s).astype(np.int64), 0, grid_n - 2)
            t = np.clip(s - i0, 0.0, 1.0)
            row = i * n_offsets + j
            for dx in (0, 1):
                wx = t[:, 0] if dx else 1.0 - t[:, 0]
                for dy in (0, 1):
                    wy = t[:, 1] if dy else 1.0 - t[:, 1]
                    cols.append((i0[:, 0] + dx) * grid_n + (i0[:, 1] + dy))
                    vals.append(w * wx * wy)
                    rows.append(np.full(pts.shape[0], row, dtype=np.int64))
    mat = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(len(angles) * n_offsets, grid_n * grid_n),
    )
    mat.sum_duplicates()
    return mat


def _support_projection(x: np.ndarray, outside: np.ndarray) -> np.ndarray:
    x = np.maximum(x, 0.0)
    x[outside] = 0.0
    return x


def _warm_start(mat, b, row_weight, outside):
    # scaled back-projection of the confidence-weighted data: deterministic,
    # so the row-order seed only affects the (small) transient on top of it
    x = mat.T @ (row_weight * b)
    mx = mat @ x
    denom = float(row_weight @ (mx * mx))
    scale = float((row_weight * b) @ mx) / denom if denom > 0 else 0.0
    return _support_projection(scale * x, outside)


def _weighted_residual(mat, x, b, row_weight):
    r = mat @ x - b
    return float(np.sqrt(row_weight @ (r * r)))


def _kaczmarz(mat, b, row_weight, outside, sweeps, relax, seed):
    indptr, indices, data = mat.indptr, mat.indices, mat.data
    norms = np.asarray(mat.multiply(mat).sum(axis=1)).ravel()
    active = np.flatnonzero(norms > 0)
    x = _warm_start(mat, b, row_weight, outside)
    # one random row order, fixed by the seed, reused every sweep: the
    # iteration is then a fixed map and the residual settles monotonically
    order = np.random.default_rng(seed).permutation(active)
    resid0 = _weighted_residual(mat, x, b, row_weight)
    history = []
    for _ in range(sweeps):
        for r in order:
            sl = slice(indptr[r], indptr[r + 1])
            cidx = indices[sl]
            a = data[sl]
            upd = relax * row_weight[r] * (b[r] - a @ x[cidx]) / norms[r]
            x[cidx] += upd * a
        x = _support_projection(x, outside)
        res = _weighted_residual(mat, x, b, row_weight)
        history.append(res)
        if res > 10.0 * max(resid0, 1e-300):
            raise DivergenceError(
                f"kaczmarz residual {res:.3e} exceeds 10x initial {resid0:.3e}"
            )
    return x, history


def _cgls(mat, b, row_weight, outside, sweeps):
    # row weights fold into a scaled least-squares problem
    scale = np.sqrt(row_weight)
    bw = b * scale
    matw = sparse.diags(scale) @ mat
    x = np.zeros(mat.shape[1])
    r = bw.copy()
    s = matw.T @ r
    p = s.copy()
    gamma = float(s @ s)
    resid0 = float(np.linalg.norm(bw))
    history = []
    for _ in range(sweeps):
        q = matw @ p
        denom = float(q @ q)
        if denom == 0.0 or gamma == 0.0:
            history.append(float(np.linalg.norm(matw @ x - bw)))
            break
        alpha = gamma / denom
        x = x + alpha * p
        r = r - alpha * q
        res = float(np.linalg.norm(r))
        history.append(res)
        if res > 10.0 * max(resid0, 1e-300):
            raise DivergenceError(
                f"cgls residual {res:.3e} exceeds 10x initial {resid0:.3e}"
            )
        s = matw.T @ r
        gamma_new = float(s @ s)
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
    return _support_projection(x, outside), history


def reconstruct(
    sinogram: Sinogram,
    grid_n: int,
    method: str = "kaczmarz",
    sweeps: int = 20,
    relax: float = 0.25,
    seed: int = 0,
    truth: Medium | None = None,
) -> Reconstruction:
    """Invert the sinogram on a grid_n^2 grid.

    kaczmarz applies the support projection after every sweep; cgls at
    output only.  Divergence (residual above 10x initial) raises.
    """
    if method not in _METHODS:
        raise ParameterError(f"method must be one of {_METHODS}")
    if sweeps < 1:
        raise ParameterError("sweeps must be at least 1")
    if not 0 < relax <= 2:
        raise ParameterError("relaxation must lie in (0, 2]")
    R = sinogram.radius_R
    axis, _ = grid_axis(R, grid_n)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    outside = (xx**2 + yy**2 >= R**2).ravel()
    mat = system_matrix(R, sinogram.angles, sinogram.offsets, grid_n)
    b = sinogram.tau.ravel()
    wts = sinogram.weight.ravel()
    if method == "kaczmarz":
        x, history = _kaczmarz(mat, b, wts, outside, sweeps, relax, seed)
    else:
        x, history = _cgls(mat, b, wts, outside, sweeps)
    beta_hat = x.reshape(grid_n, grid_n)
    rel_err = None
    if truth is not None:
        if truth.phantom is not None:
            pts = np.column_stack([xx.ravel(), yy.ravel()])
            ref = truth.phantom.value(pts).reshape(grid_n, grid_n)
        else:
            if truth.grid_n != grid_n:
                raise GridMismatchError("truth grid does not match reconstruction")
            ref = truth.beta
        denom = float(np.linalg.norm(ref))
        rel_err = float(np.linalg.norm(beta_hat - ref)) / denom if denom else float(
            np.linalg.norm(beta_hat) > 0
        )
    return Reconstruction(beta_hat, R, grid_n, len(history), np.asarray(history), rel_err)


def compare_media(recon1: Reconstruction, recon2: Reconstruction):
    """(max difference, relative L2 difference) between two reconstructions."""
    if recon1.grid_n != recon2.grid_n or recon1.radius_R != recon2.radius_R:
        raise GridMismatchError("reconstructions live on different grids")
    diff = recon1.beta_hat - recon2.beta_hat
    linf = float(np.max(np.abs(diff)))
    denom = max(
        float(np.linalg.norm(recon1.beta_hat)), float(np.linalg.norm(recon2.beta_hat))
    )
    rel = float(np.linalg.norm(diff)) / denom if denom > 0 else 0.0
    return linf, rel


# -- serialization --------------------------------------------------------------

def sinogram_to_csv(sinogram: Sinogram, path) -> None:
    rows = []
    for i, a in enumerate(sinogram.angles):
        for j, p in enumerate(sinogram.offsets):
            rows.append((a, p, sinogram.tau[i, j], sinogram.weight[i, j]))
    np.savetxt(
        path,
        np.asarray(rows),
        delimiter=",",
        header="angle,offset,tau,weight",
        comments="",
        fmt="%.17g",
    )


def sinogram_from_csv(path, radius_R: float) -> Sinogram:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    angles = np.unique(data[:, 0])
    offsets = np.unique(data[:, 1])
    tau = np.full((angles.size, offsets.size), np.nan)
    weight = np.ones((angles.size, offsets.size))
    ai = {a: i for i, a in enumerate(angles)}
    oj = {p: j for j, p in enumerate(offsets)}
    for a, p, t, w in data:
        tau[ai[a], oj[p]] = t
        weight[ai[a], oj[p]] = w
    if np.any(np.isnan(tau)):
        raise ParameterError("sinogram csv does not tile a complete grid")
    return Sinogram(angles, offsets, tau, weight, radius_R)


def reconstruction_to_csv(recon: Reconstruction, path) -> None:
    axis, _ = grid_axis(recon.radius_R, recon.grid_n)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    data = np.column_stack([xx.ravel(), yy.ravel(), recon.beta_hat.ravel()])
    np.savetxt(path, data, delimiter=",", header="x,y,beta_hat", comments="", fmt="%.12g")
