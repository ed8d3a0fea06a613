import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zcs.errors import ParameterError
from zcs.forward import (
    PhaselessSignal,
    TwoTermModel,
    analytic_zeros,
    default_k_min,
    leading_term,
    mirror_zero_check,
    perturbed_field,
    signal_from_csv,
    signal_from_json,
    signal_to_csv,
    signal_to_json,
    synth_phaseless,
)

AMPS = st.floats(min_value=0.1, max_value=2.0).filter(lambda a: abs(a - 1) > 1e-3)
TAUS = st.floats(min_value=0.5, max_value=5.0)


def model(amp_A=0.5, tau=np.pi, inc=0.0):
    return TwoTermModel(amp_A, inc + tau, inc)


# -- leading term ---------------------------------------------------------------

def test_unperturbed_medium_cancels():
    m = TwoTermModel(1.0, 0.37, 0.37)
    for k in (0.5, 2.0, 7.3, 2 + 1j):
        assert leading_term(m, k) == 0


def test_leading_term_known_value():
    assert leading_term(model(), 2.0) == pytest.approx(-0.5, abs=1e-12)


def test_leading_term_vanishes_at_analytic_zero():
    k = 2.0 + 1j * np.log(0.5) / np.pi
    assert abs(leading_term(model(), k)) <= 1e-12


def test_model_validation():
    with pytest.raises(ParameterError):
        TwoTermModel(0.0, 1.0, 0.0)
    with pytest.raises(ParameterError):
        TwoTermModel(0.5, 0.0, 1.0)     # tau < 0
    assert TwoTermModel(0.5, 1.0, 1.0).tau == 0.0


# -- phaseless synthesis ----------------------------------------------------------

def test_synth_known_values():
    s = synth_phaseless(model(), 1.0, 2.0, 2)
    assert s.values[0] == pytest.approx(2.25, rel=1e-14)   # k=1: cos(pi) = -1
    assert s.values[1] == pytest.approx(0.25, rel=1e-14)   # k=2: the minimum


def test_zero_scattering_gives_zero_signal():
    s = synth_phaseless(TwoTermModel(1.0, 0.2, 0.2), 1.0, 5.0, 64)
    assert np.all(s.values == 0.0)


def test_synth_grid_validation():
    with pytest.raises(ParameterError):
        synth_phaseless(model(), -1.0, 2.0, 16)
    with pytest.raises(ParameterError):
        synth_phaseless(model(), 2.0, 1.0, 16)
    with pytest.raises(ParameterError):
        synth_phaseless(model(), 1.0, 2.0, 1)
    with pytest.raises(ParameterError):
        synth_phaseless(model(), 1.0, 2.0, 16, tail_c=-0.1)


@settings(max_examples=150, deadline=None)
@given(amp=AMPS, tau=TAUS, k0=st.floats(min_value=0.5, max_value=20.0))
def test_closed_form_identity(amp, tau, k0):
    m = model(amp, tau)
    s = synth_phaseless(m, k0, k0 + 30.0, 512)
    closed = amp**2 + 1 - 2 * amp * np.cos(s.k_grid * tau)
    assert np.max(np.abs(s.values - closed)) <= 1e-14 * (amp + 1) ** 2


@settings(max_examples=100, deadline=None)
@given(amp=AMPS, tau=TAUS)
def test_bounds_hold(amp, tau):
    s = synth_phaseless(model(amp, tau), 1.0, 60.0, 2048)
    assert np.all(s.values >= (amp - 1) ** 2 - 1e-12)
    assert np.all(s.values <= (amp + 1) ** 2 + 1e-12)


def test_dip_spacing_is_signal_period():
    tau = 1.7
    s = synth_phaseless(model(0.6, tau), 5.0, 5.0 + 12 * 2 * np.pi / tau, 4096)
    v = s.values
    mins = np.flatnonzero((v[1:-1] <= v[:-2]) & (v[1:-1] <= v[2:])) + 1
    gaps = np.diff(s.k_grid[mins])
    assert np.allclose(gaps, 2 * np.pi / tau, rtol=5e-3)


def test_tail_determinism_and_decay():
    m = model(0.7, 2.0)
    a = synth_phaseless(m, 10.0, 40.0, 512, tail_c=0.05, seed=9)
    b = synth_phaseless(m, 10.0, 40.0, 512, tail_c=0.05, seed=9)
    assert np.array_equal(a.values, b.values)
    c = synth_phaseless(m, 10.0, 40.0, 512, tail_c=0.05, seed=10)
    assert not np.array_equal(a.values, c.values)
    # perturbation of f is bounded by the tail envelope 2(1+A)c/k + (c/k)^2
    base = synth_phaseless(m, 10.0, 40.0, 512)
    env = 2 * 1.7 * 0.05 / a.k_grid + (0.05 / a.k_grid) ** 2
    assert np.all(np.abs(a.values - base.values) <= env + 1e-12)


def test_tail_preserves_dip_count():
    # Rouche-style budget: tail_c = 0.1 * A * (1-A) * k_min
    amp, tau = 0.8, 2.0
    m = model(amp, tau)
    k_min = default_k_min(m)
    span = 20.5 * 2 * np.pi / tau
    base = synth_phaseless(m, k_min, k_min + span, 4096)

    def dips(v):
        mean, vmin = v.mean(), v.min()
        thr = mean - 0.9 * (mean - vmin)
        mask = (v[1:-1] < thr) & (v[1:-1] <= v[:-2]) & (v[1:-1] <= v[2:])
        return int(mask.sum())

    n0 = dips(base.values)
    assert n0 >= 20
    for seed in range(8):
        tc = 0.1 * amp * (1 - amp) * k_min
        s = synth_phaseless(m, k_min, k_min + span, 4096, tail_c=tc, seed=seed)
        assert dips(s.values) == n0


def test_perturbed_field_matches_synth():
    m = model(0.7, 2.0)
    s = synth_phaseless(m, 10.0, 40.0, 256, tail_c=0.02, seed=3)
    u = perturbed_field(m, 0.02, seed=3)
    assert np.allclose(np.abs(u(s.k_grid)) ** 2, s.values, rtol=0, atol=1e-15)


# -- mirror symmetry --------------------------------------------------------------

def test_mirror_pairs_canonical():
    chk = mirror_zero_check(model())
    z, zbar = chk["pairs"][0]
    assert z == pytest.approx(2 - 0.2206j, abs=1e-4)
    assert zbar == pytest.approx(np.conj(z))
    assert chk["max_abs_F"] <= 1e-10
    assert not chk["degenerate"]


def test_mirror_degenerate_amp_one():
    chk = mirror_zero_check(TwoTermModel(1.0, np.pi, 0.0))
    assert chk["degenerate"]
    for m, (z, _) in enumerate(chk["pairs"], start=1):
        assert z == pytest.approx(2.0 * m, abs=1e-12)
        assert z.imag == 0.0


def test_mirror_no_zeros_for_tau_zero():
    with pytest.raises(ParameterError):
        mirror_zero_check(TwoTermModel(0.5, 0.3, 0.3))


@settings(max_examples=50, deadline=None)
@given(amp=AMPS, tau=TAUS, inc=st.floats(min_value=-1.0, max_value=1.0))
def test_mirror_randomized(amp, tau, inc):
    chk = mirror_zero_check(model(amp, tau, inc))
    assert chk["max_abs_F"] <= 1e-10


def test_analytic_zeros_match_formula():
    zs = analytic_zeros(model(), range(1, 4))
    assert np.allclose(zs.real, [2, 4, 6], atol=1e-12)
    assert np.allclose(zs.imag, np.log(0.5) / np.pi, atol=1e-12)


# -- serialization ----------------------------------------------------------------

def test_signal_csv_round_trip(tmp_path):
    s = synth_phaseless(model(0.7, 2.0), 10.0, 40.0, 64)
    path = tmp_path / "signal.csv"
    signal_to_csv(s, path)
    with open(path) as fh:
        assert fh.readline().strip() == "k,f"
    s2 = signal_from_csv(path)
    assert np.array_equal(s.k_grid, s2.k_grid)
    assert np.array_equal(s.values, s2.values)


def test_signal_json_round_trip(tmp_path):
    s = synth_phaseless(model(0.7, 2.0), 10.0, 40.0, 64, tail_c=0.01, seed=4)
    path = tmp_path / "signal.json"
    signal_to_json(s, path)
    s2 = signal_from_json(path)
    assert np.array_equal(s.values, s2.values)
    assert s2.model.amp_A == s.model.amp_A
    assert s2.tail_c == 0.01 and s2.seed == 4


def test_signal_validation():
    with pytest.raises(ParameterError):
        PhaselessSignal(np.array([-1.0, 1.0]), np.array([0.0, 0.0]))
    with pytest.raises(ParameterError):
        PhaselessSignal(np.array([1.0, 2.0]), np.array([0.1, -0.1]))
    with pytest.raises(ParameterError):
        PhaselessSignal(np.array([1.0, 1.0]), np.array([0.1, 0.1]))
