"""End-to-end orchestration: phantom to signals to estimates to inversion.

run_forward synthesizes a reproducible data bundle on disk (manifest with
content hashes plus CSV payloads); run_recover re-estimates travel times
from the phaseless signals alone and inverts them; uniqueness_test
compares two experiments at the data level and turns the outcome into a
verdict.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .eikonal import amplitude, chord_travel_time, solve_eikonal
from .errors import IntegrityError, ParameterError, PreconditionError
from .forward import PhaselessSignal, TwoTermModel, perturbed_field, synth_phaseless
from .medium import (
    Medium,
    chord_for,
    medium_from_config,
    medium_to_csv,
    observation_geometry,
)
from .tomo import (
    Reconstruction,
    Sinogram,
    compare_media,
    estimate_record,
    reconstruct,
    reconstruction_to_csv,
    sinogram_from_records,
    sinogram_to_csv,
    uniform_protocol,
)

_FORMAT = "zcs-bundle-1"
_MIN_DIPS = 5
# two reconstructions of identical data with different row orders agree to
# this level; used as the verdict floor
_SOLVER_FLOOR = 0.02
# largest window magnification for short chords; past this the evaluation
# phase k*phi would eat the float64 mantissa, and the chord is noise anyway
_SCALE_CAP = 1e4

_VERDICTS = (
    "indistinguishable_data_identical_media",
    "distinguishable_data",
    "inconsistent",
)


def worker_count() -> int:
    """Parallelism cap: ZCS_THREADS when set, else a small multiple of cores."""
    env = os.environ.get("ZCS_THREADS", "")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ParameterError(f"ZCS_THREADS must be an integer, got {env!r}")
        if n < 1:
            raise ParameterError("ZCS_THREADS must be >= 1")
        return n
    return min(os.cpu_count() or 1, 8)


def _parallel_map(fn, items):
    """Order-preserving map over items, threaded when it pays off."""
    items = list(items)
    workers = worker_count()
    if workers <= 1 or len(items) < 4:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- configuration ---------------------------------------------------------------

@dataclass(frozen=True)
class GeometrySpec:
    n_dirs: int = 60
    n_offsets: int = 64
    radius_R: float = 1.0
    B: float = 1.0

    def __post_init__(self):
        if self.n_dirs < 1 or self.n_offsets < 1:
            raise ParameterError("need n_dirs >= 1 and n_offsets >= 1")
        if self.B < self.radius_R:
            raise ParameterError("observation plane must lie outside the ball")


@dataclass(frozen=True)
class SignalSpec:
    """Acquisition window for the deepest chord.

    The stated (k_min, k_max) apply to the chord with the largest travel
    time; every other chord is sampled on the window scaled by
    tau_max/tau, so the k*tau range (hence dip count and estimator
    difficulty) is the same on every chord.
    """

    k_min: float = 1000.0
    k_max: float = 37000.0
    n_k: int = 512
    tail_c: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.k_min < self.k_max:
            raise ParameterError("need 0 < k_min < k_max")
        if self.n_k < 64:
            raise ParameterError("need at least 64 samples per signal")
        if self.tail_c < 0:
            raise ParameterError("tail_c must be nonnegative")


@dataclass(frozen=True)
class SolverSpec:
    method: str = "kaczmarz"
    sweeps: int = 20
    relax: float = 0.25
    grid_n: int = 64

    def __post_init__(self):
        if self.method not in ("kaczmarz", "cgls"):
            raise ParameterError("method must be kaczmarz or cgls")
        if self.sweeps < 1:
            raise ParameterError("sweeps must be at least 1")
        if self.grid_n < 9:
            raise ParameterError("grid_n must be at least 9")


@dataclass(frozen=True)
class Tolerances:
    eq_tol: float | None = None  # None: two-regime default from the data
    tau_tol: float = 1e-12

    def __post_init__(self):
        if self.eq_tol is not None and self.eq_tol <= 0:
            raise ParameterError("eq_tol must be positive")
        if self.tau_tol <= 0:
            raise ParameterError("tau_tol must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    phantom: dict
    geometry: GeometrySpec = field(default_factory=GeometrySpec)
    signal: SignalSpec = field(default_factory=SignalSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        med = medium_from_config(self.phantom)  # validates the descriptor
        if abs(med.radius_R - self.geometry.radius_R) > 1e-12:
            raise ParameterError("geometry radius differs from the phantom ball")

    def to_dict(self) -> dict:
        return {
            "phantom": dict(self.phantom),
            "geometry": asdict(self.geometry),
            "signal": asdict(self.signal),
            "solver": asdict(self.solver),
            "tolerances": asdict(self.tolerances),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        try:
            return cls(
                phantom=dict(obj["phantom"]),
                geometry=GeometrySpec(**obj.get("geometry", {})),
                signal=SignalSpec(**obj.get("signal", {})),
                solver=SolverSpec(**obj.get("solver", {})),
                tolerances=Tolerances(**obj.get("tolerances", {})),
            )
        except (KeyError, TypeError) as exc:
            raise ParameterError(f"bad experiment config: {exc}") from exc


def default_config(kind: str = "gaussian", params=(0.0, 0.0, 0.5, 0.01)) -> ExperimentConfig:
    return ExperimentConfig(
        phantom={"kind": kind, "params": list(params), "dim": 2, "R": 1.0, "grid_n": 129}
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ParameterError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"config {path} is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(raw)


def save_config(config: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(config.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")


# -- forward synthesis ------------------------------------------------------------

def _chord_models(medium: Medium, config: ExperimentConfig, sweep_tol: float = 1e-8):
    """True (geometry, model) per chord: quadrature tau, transport amplitude."""
    geo = config.geometry
    angles, offsets = uniform_protocol(geo.radius_R, geo.n_dirs, geo.n_offsets)

    def solve_dir(angle):
        nu = np.array([np.cos(angle), np.sin(angle)])
        return solve_eikonal(medium, nu, sweep_tol=sweep_tol)

    fields = _parallel_map(solve_dir, angles)

    def chord_entry(args):
        angle, fld, offset = args
        geom = observation_geometry(geo.radius_R, angle, offset, geo.B)
        tau = chord_travel_time(medium, chord_for(geom))
        amp = amplitude(medium, fld, geom)
        inc = float(np.dot(geom.x_obs, geom.nu))
        return geom, TwoTermModel(amp_A=amp, phase_phi=inc + tau, phase_inc=inc)

    jobs = [(a, f, p) for a, f in zip(angles, fields) for p in offsets]
    entries = _parallel_map(chord_entry, jobs)
    return angles, offsets, entries


def _max_tau_check(angles, offsets, entries, signal: SignalSpec):
    taus = np.array([m.tau for _, m in entries])
    i = int(np.argmax(taus))
    tau_max = taus[i]
    if tau_max <= 0:
        return  # unperturbed medium: flat signals are legitimate
    dips = (signal.k_max - signal.k_min) * tau_max / (2.0 * np.pi)
    n_off = len(offsets)
    where = f"(angle={angles[i // n_off]:.6g} offset={offsets[i % n_off]:.6g})"
    if dips < _MIN_DIPS:
        raise PreconditionError(
            f"k window covers {dips:.2f} dips at the longest chord {where}; "
            f"need at least {_MIN_DIPS}"
        )
    # dip detection needs ~8 samples per period; beyond this the counter
    # starts skipping dips and the two estimators drift apart
    limit = (signal.n_k - 1) / 8.0
    if dips > limit:
        raise PreconditionError(
            f"k window covers {dips:.1f} dips at the longest chord {where}, "
            f"more than the {limit:.1f} resolvable with n_k={signal.n_k}; "
            f"raise n_k or narrow the window"
        )


def _chord_seed(signal: SignalSpec, idx: int) -> int:
    return (signal.seed * 1_000_003 + idx) & 0xFFFFFFFF


def _chord_window(signal: SignalSpec, tau: float, tau_max: float):
    """Acquisition window for one chord.

    The configured window belongs to the deepest chord; shorter chords get it
    magnified by tau_max/tau so each sees the same dip count.  Chords shorter
    than tau_max/_SCALE_CAP are left unmagnified: they read as dipless
    low-confidence records instead of demanding k values whose phase cannot
    be evaluated in double precision.
    """
    scale = tau_max / tau if tau > 0 else 1.0
    if scale > _SCALE_CAP:
        scale = 1.0
    return signal.k_min * scale, signal.k_max * scale


def _synth_all(entries, signal: SignalSpec, tau_max: float):
    def synth(args):
        idx, (geom, model) = args
        k_lo, k_hi = _chord_window(signal, model.tau, tau_max)
        sig = synth_phaseless(
            model, k_lo, k_hi, signal.n_k, signal.tail_c, _chord_seed(signal, idx)
        )
        return geom, sig

    return _parallel_map(synth, enumerate(entries))


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def run_forward(config: ExperimentConfig, out_dir, sweep_tol: float = 1e-8) -> Path:
    """Synthesize the experiment and write a hashed bundle; returns its path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    medium = medium_from_config(config.phantom)
    angles, offsets, entries = _chord_models(medium, config, sweep_tol)
    _max_tau_check(angles, offsets, entries, config.signal)
    tau_max = max(m.tau for _, m in entries)
    signals = _synth_all(entries, config.signal, tau_max)

    medium_to_csv(medium, out / "medium.csv")

    n_off = len(offsets)
    rows = []
    for idx, (geom, model) in enumerate(entries):
        rows.append((angles[idx // n_off], offsets[idx % n_off], model.tau, model.amp_A))
    np.savetxt(out / "chords.csv", np.asarray(rows), delimiter=",",
               header="angle,offset,tau,amp", comments="", fmt="%.17g")

    tau = np.array([m.tau for _, m in entries]).reshape(len(angles), n_off)
    sino = Sinogram(angles, offsets, tau, np.ones_like(tau), config.geometry.radius_R)
    sinogram_to_csv(sino, out / "sinogram.csv")

    with open(out / "signals.csv", "w") as fh:
        fh.write("chord,k,f\n")
        for idx, (_, sig) in enumerate(signals):
            for k, f in zip(sig.k_grid, sig.values):
                fh.write(f"{idx},{k:.17g},{f:.17g}\n")

    payloads = ["medium.csv", "chords.csv", "sinogram.csv", "signals.csv"]
    manifest = {
        "format": _FORMAT,
        "config": config.to_dict(),
        "files": {name: _sha256(out / name) for name in payloads},
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return out


# -- recovery ---------------------------------------------------------------------

def load_bundle(bundle_dir):
    """Verify hashes and parse the bundle; returns (config, signals)."""
    bundle = Path(bundle_dir)
    try:
        with open(bundle / "manifest.json") as fh:
            manifest = json.load(fh)
    except FileNotFoundError as exc:
        raise IntegrityError(f"bundle has no manifest: {bundle}") from exc
    if manifest.get("format") != _FORMAT:
        raise IntegrityError(f"unknown bundle format {manifest.get('format')!r}")
    for name, digest in sorted(manifest["files"].items()):
        path = bundle / name
        if not path.exists():
            raise IntegrityError(f"bundle payload missing: {name}")
        actual = _sha256(path)
        if actual != digest:
            raise IntegrityError(f"checksum mismatch for {name}")
    config = ExperimentConfig.from_dict(manifest["config"])

    geo = config.geometry
    data = np.loadtxt(bundle / "signals.csv", delimiter=",", skiprows=1, ndmin=2)
    n_chords = geo.n_dirs * geo.n_offsets
    n_k = config.signal.n_k
    if data.shape != (n_chords * n_k, 3):
        raise IntegrityError("signals payload does not match the declared protocol")
    angles, offsets = uniform_protocol(geo.radius_R, geo.n_dirs, geo.n_offsets)
    signals = []
    for idx in range(n_chords):
        block = data[idx * n_k : (idx + 1) * n_k]
        if np.any(block[:, 0] != idx):
            raise IntegrityError("signals payload rows out of order")
        geom = observation_geometry(
            geo.radius_R, angles[idx // geo.n_offsets], offsets[idx % geo.n_offsets], geo.B
        )
        signals.append((geom, PhaselessSignal(block[:, 1], block[:, 2])))
    return config, signals


def run_recover(bundle_dir, out_dir=None) -> tuple[Reconstruction, dict]:
    """Estimate travel times from the bundle's signals and invert them."""
    config, signals = load_bundle(bundle_dir)
    out = Path(out_dir) if out_dir is not None else Path(bundle_dir)
    out.mkdir(parents=True, exist_ok=True)

    records = _parallel_map(lambda gs: estimate_record(*gs), signals)
    sino = sinogram_from_records(records, config.geometry.radius_R)
    truth = medium_from_config(config.phantom)
    sol = config.solver
    recon = reconstruct(
        sino, sol.grid_n, method=sol.method, sweeps=sol.sweeps, relax=sol.relax,
        truth=truth,
    )
    reconstruction_to_csv(recon, out / "reconstruction.csv")
    report = {
        "grid_n": recon.grid_n,
        "iterations": recon.iterations,
        "method": sol.method,
        "rel_l2_error": recon.rel_l2_error,
        "final_residual": float(recon.residual_history[-1]),
    }
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return recon, report


# -- uniqueness -------------------------------------------------------------------

@dataclass(frozen=True)
class UniquenessReport:
    data_equal: bool
    max_f_discrepancy: float
    tau_discrepancy: float
    recon_discrepancy: float
    verdict: str

    def __post_init__(self):
        if self.verdict not in _VERDICTS:
            raise ParameterError(f"verdict must be one of {_VERDICTS}")
        if self.verdict == _VERDICTS[0] and not (
            self.data_equal and self.recon_discrepancy <= _SOLVER_FLOOR
        ):
            raise ParameterError(
                "indistinguishable verdict requires equal data and a "
                "reconstruction gap within the solver floor"
            )


def _protocols_match(c1: ExperimentConfig, c2: ExperimentConfig) -> bool:
    s1, s2 = c1.signal, c2.signal
    return c1.geometry == c2.geometry and (
        (s1.k_min, s1.k_max, s1.n_k, s1.tail_c) == (s2.k_min, s2.k_max, s2.n_k, s2.tail_c)
    )


def _experiment_data(config: ExperimentConfig):
    medium = medium_from_config(config.phantom)
    angles, offsets, entries = _chord_models(medium, config)
    _max_tau_check(angles, offsets, entries, config.signal)
    tau_max = max(m.tau for _, m in entries)
    signals = _synth_all(entries, config.signal, tau_max)
    return entries, signals


def _cross_discrepancy(entries1, signals1, entries2, signals2, spec1, spec2):
    """Largest |f1 - f2| over every chord, on both experiments' k grids."""
    worst = 0.0
    scale = 0.0
    for idx, ((_, m1), (_, m2)) in enumerate(zip(entries1, entries2)):
        u1 = perturbed_field(m1, spec1.tail_c, _chord_seed(spec1, idx))
        u2 = perturbed_field(m2, spec2.tail_c, _chord_seed(spec2, idx))
        for k in (signals1[idx][1].k_grid, signals2[idx][1].k_grid):
            f1 = np.abs(u1(k)) ** 2
            f2 = np.abs(u2(k)) ** 2
            worst = max(worst, float(np.max(np.abs(f1 - f2))))
            scale = max(scale, float(f1.max()), float(f2.max()))
    return worst, scale


def uniqueness_test(config1: ExperimentConfig, config2: ExperimentConfig) -> UniquenessReport:
    """Compare two experiments at the data level and render a verdict.

    Equal phaseless data (within eq_tol over every chord and k) must lead
    to equal travel-time estimates and reconstructions; anything else on
    equal data is reported as inconsistent.
    """
    if not _protocols_match(config1, config2):
        raise ParameterError("geometry/signal protocols differ between configs")
    entries1, signals1 = _experiment_data(config1)
    entries2, signals2 = _experiment_data(config2)

    max_disc, scale = _cross_discrepancy(
        entries1, signals1, entries2, signals2, config1.signal, config2.signal
    )
    eq_tol = config1.tolerances.eq_tol
    if eq_tol is None:
        exact = config1.signal.tail_c == 0.0 and config2.signal.tail_c == 0.0
        eq_tol = (1e-12 if exact else 1e-3) * max(scale, 1e-300)
    data_equal = max_disc <= eq_tol

    def estimate(signals):
        records = _parallel_map(lambda gs: estimate_record(*gs), signals)
        return sinogram_from_records(records, config1.geometry.radius_R)

    sino1 = estimate(signals1)
    sino2 = estimate(signals2)
    tau_disc = float(np.max(np.abs(sino1.tau - sino2.tau)))

    sol = config1.solver
    rec1 = reconstruct(sino1, sol.grid_n, method=sol.method, sweeps=sol.sweeps,
                       relax=sol.relax)
    rec2 = reconstruct(sino2, sol.grid_n, method=sol.method, sweeps=sol.sweeps,
                       relax=sol.relax)
    _, recon_disc = compare_media(rec1, rec2)

    if not data_equal:
        verdict = "distinguishable_data"
    elif tau_disc <= config1.tolerances.tau_tol and recon_disc <= _SOLVER_FLOOR:
        verdict = "indistinguishable_data_identical_media"
    else:
        verdict = "inconsistent"
    return UniquenessReport(data_equal, max_disc, tau_disc, recon_disc, verdict)


def report_to_dict(report: UniquenessReport) -> dict:
    return asdict(report)
