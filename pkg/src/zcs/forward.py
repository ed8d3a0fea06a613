"""Two-term high-energy scattering model and phaseless data synthesis.

The leading-order scattered wave for one chord is
``u(k) = A e^{i k phi} - e^{i k x.nu}``; the measured datum is the
phaseless combination ``f(k) = |u(k) + tail|^2`` where the optional tail
models the unresolved O(1/k) remainder.  On the real axis with no tail,
``f(k) = A^2 + 1 - 2 A cos(k tau)`` with ``tau = phi - x.nu``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

_TAIL_MODES = 6


@dataclass(frozen=True)
class TwoTermModel:
    """Leading-order model parameters for one chord."""

    amp_A: float
    phase_phi: float
    phase_inc: float     # x.nu of the observation point

    def __post_init__(self):
        if self.amp_A <= 0:
            raise ParameterError("amp_A must be positive")
        if self.phase_phi < self.phase_inc - 1e-12:
            raise ParameterError("phase_phi must be >= phase_inc (tau >= 0)")

    @property
    def tau(self) -> float:
        return max(0.0, self.phase_phi - self.phase_inc)


def leading_term(model: TwoTermModel, k):
    """A e^{i k phi} - e^{i k x.nu}, valid for complex k (vectorized)."""
    k = np.asarray(k)
    return model.amp_A * np.exp(1j * k * model.phase_phi) - np.exp(
        1j * k * model.phase_inc
    )


class TailPhase:
    """Smooth pseudo-random phase theta(k), fixed by the seed.

    A short random Fourier series: per-sample evaluable (deterministic
    under any parallel schedule) and entire in k, so the perturbed field
    stays analytic for contour work.
    """

    def __init__(self, seed: int, freq_scale: float):
        rng = np.random.default_rng(np.random.SeedSequence([7791, int(seed) & 0xFFFFFFFF]))
        amps = rng.normal(0.0, np.pi / 4 / np.sqrt(_TAIL_MODES), _TAIL_MODES)
        # cap sum |a_j| so |Im theta| stays O(1) on the zero-counting strips
        total = np.abs(amps).sum()
        if total > 0.5 * np.pi:
            amps *= 0.5 * np.pi / total
        self.amps = amps
        scale = freq_scale if freq_scale > 0 else 1.0
        self.freqs = rng.uniform(0.02, 0.10, _TAIL_MODES) * scale
        self.shifts = rng.uniform(0.0, 2.0 * np.pi, _TAIL_MODES)

    def __call__(self, k):
        k = np.asarray(k)
        acc = np.zeros(k.shape, dtype=complex) if np.iscomplexobj(k) else np.zeros(k.shape)
        for a, b, c in zip(self.amps, self.freqs, self.shifts):
            acc = acc + a * np.sin(b * k + c)
        return acc


def perturbed_field(model: TwoTermModel, tail_c: float, seed: int = 0):
    """Callable k -> u(k) + tail_c e^{i theta(k)} / k (analytic off k = 0)."""
    if tail_c < 0:
        raise ParameterError("tail_c must be nonnegative")
    theta = TailPhase(seed, model.tau)

    def field(k):
        k = np.asarray(k)
        out = leading_term(model, k)
        if tail_c != 0.0:
            out = out + tail_c * np.exp(1j * theta(k)) / k
        return out

    return field


@dataclass(frozen=True, eq=False)
class PhaselessSignal:
    """Sampled |u|^2 data on a uniform k grid."""

    k_grid: np.ndarray
    values: np.ndarray
    model: TwoTermModel | None = None
    tail_c: float = 0.0
    seed: int = 0

    def __post_init__(self):
        k = np.asarray(self.k_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "k_grid", k)
        object.__setattr__(self, "values", v)
        if k.ndim != 1 or v.shape != k.shape:
            raise ParameterError("k_grid and values must be matching 1-D arrays")
        if k.size and k[0] <= 0:
            raise ParameterError("k_min must be positive")
        if k.size > 1 and np.any(np.diff(k) <= 0):
            raise ParameterError("k_grid must be strictly increasing")
        if np.any(v < 0):
            raise ParameterError("phaseless values must be nonnegative")

    @property
    def k_min(self) -> float:
        return float(self.k_grid[0])

    @property
    def k_max(self) -> float:
        return float(self.k_grid[-1])


def synth_phaseless(
    model: TwoTermModel,
    k_min: float,
    k_max: float,
    n_k: int,
    tail_c: float = 0.0,
    seed: int = 0,
) -> PhaselessSignal:
    """Sample f(k) = |u(k) + tail|^2 on a uniform k grid."""
    if not (0 < k_min < k_max):
        raise ParameterError("need 0 < k_min < k_max")
    if n_k < 2:
        raise ParameterError("n_k must be at least 2")
    k = np.linspace(k_min, k_max, n_k)
    u = perturbed_field(model, tail_c, seed)(k)
    values = np.abs(u) ** 2
    return PhaselessSignal(k, values, model, tail_c, seed)


def default_k_min(model: TwoTermModel, factor: float = 10.0) -> float:
    """Asymptotic-regime floor: k_min = factor / tau."""
    if model.tau <= 0:
        raise ParameterError("tau must be positive for a k window")
    return factor / model.tau


def analytic_zeros(model: TwoTermModel, m_range) -> np.ndarray:
    """Zeros of the leading term: k_m = (2 pi m + i ln A) / tau + branch shift.

    Solving A e^{i k tau} = 1 gives k_m = (2 pi m)/tau + i ln(A)/tau for the
    model written with phase_inc = 0; a nonzero x.nu factors out of the
    leading term and leaves the zeros unchanged.
    """
    if model.tau <= 0:
        raise ParameterError("leading term has no zeros when tau = 0")
    m = np.asarray(list(m_range), dtype=float)
    return (2.0 * np.pi * m + 1j * np.log(model.amp_A)) / model.tau


def mirror_zero_check(
    model: TwoTermModel,
    m_range=range(1, 6),
    tol: float = 1e-10,
) -> dict:
    """Pair each zero with its mirror across the real axis and verify both.

    The phaseless continuation F(k) = u(k) * conj(u(conj k)) vanishes at
    every zero k_m of u and at its mirror conj(k_m).  Returns the pairs,
    the worst |F| over all points, and a flag for the degenerate amp_A = 1
    case (zeros already real, pairs coincide).
    """
    zeros = analytic_zeros(model, m_range)
    degenerate = abs(model.amp_A - 1.0) < 1e-12

    def continuation(k):
        k = np.asarray(k, dtype=complex)
        return leading_term(model, k) * np.conj(leading_term(model, np.conj(k)))

    pairs = [(z, np.conj(z)) for z in zeros]
    worst = 0.0
    for z, zbar in pairs:
        worst = max(worst, abs(continuation(z)), abs(continuation(zbar)))
    if worst > tol:
        raise ParameterError(
            f"mirror check failed: |F| = {worst:.3e} exceeds {tol:.1e}"
        )
    return {"pairs": pairs, "max_abs_F": worst, "degenerate": degenerate}


# -- serialization ----------------------------------------------------------

def signal_to_csv(signal: PhaselessSignal, path) -> None:
    data = np.column_stack([signal.k_grid, signal.values])
    np.savetxt(path, data, delimiter=",", header="k,f", comments="", fmt="%.17g")


def signal_from_csv(path, model: TwoTermModel | None = None) -> PhaselessSignal:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return PhaselessSignal(data[:, 0], data[:, 1], model)


def signal_to_json(signal: PhaselessSignal, path) -> None:
    obj = {
        "model": None
        if signal.model is None
        else {
            "amp_A": signal.model.amp_A,
            "phase_phi": signal.model.phase_phi,
            "phase_inc": signal.model.phase_inc,
        },
        "tail_c": signal.tail_c,
        "seed": signal.seed,
        "k": signal.k_grid.tolist(),
        "f": signal.values.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True)
        fh.write("\n")


def signal_from_json(path) -> PhaselessSignal:
    with open(path) as fh:
        obj = json.load(fh)
    model = None
    if obj.get("model"):
        model = TwoTermModel(**obj["model"])
    return PhaselessSignal(
        np.asarray(obj["k"]), np.asarray(obj["f"]), model,
        obj.get("tail_c", 0.0), obj.get("seed", 0),
    )
