import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from polariton_rc.encoder import (
    ProjectionMatrix,
    build_projection,
    checkerboard_phase,
    encode,
    load_projection,
    make_mask_family,
    pump_scale,
    save_projection,
    to_pump,
)
from polariton_rc.errors import ParameterError


@pytest.mark.parametrize("in_dim", [16, 49])
def test_projection_shapes(in_dim):
    W = build_projection(0, in_dim, 64, 0.5)
    assert W.entries.shape == (64, in_dim)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(1, 70), st.floats(0.01, 1.0))
def test_projection_invariants(seed, in_dim, out_dim, density):
    W = build_projection(seed, in_dim, out_dim, density)
    nz = W.entries[W.entries != 0]
    assert np.all(W.entries >= 0)
    assert np.all((nz > 0) & (nz <= 1))
    assert abs(len(nz) - density * in_dim * out_dim) <= in_dim
    assert np.array_equal(W.entries, build_projection(seed, in_dim, out_dim, density).entries)


@pytest.mark.parametrize("density", [0.0, -0.1, 1.5])
def test_projection_bad_density(density):
    with pytest.raises(ParameterError):
        build_projection(0, 4, 4, density)


def test_encode_examples():
    W = build_projection(3, 16, 64)
    assert not encode(np.zeros(16), W).any()
    a = np.random.default_rng(0).random(16)
    np.testing.assert_allclose(encode(2.5 * a, W), 2.5 * encode(a, W), rtol=1e-14)
    single = np.zeros((3, 2))
    single[0, 0] = 0.7
    b = encode(np.array([2.0, 5.0]), ProjectionMatrix(single, None, 1 / 6))
    assert b.tolist() == [0.7 * 2.0, 0.0, 0.0]


def test_encode_errors():
    W = build_projection(0, 16, 64)
    with pytest.raises(ParameterError):
        encode(np.ones(15), W)
    with pytest.raises(ParameterError):
        encode(-np.ones(16), W)


def test_pump_zero_input():
    pump = to_pump(np.zeros(64), 0.4, 2.0, 8)
    np.testing.assert_allclose(pump.power, 0.4, rtol=1e-15)
    assert np.array_equal(np.sign(pump.drive.real), checkerboard_phase(8))


def test_pump_adjacent_phase_difference():
    pump = to_pump(np.random.default_rng(2).random(64), 0.1, 1.0, 8)
    ph = np.angle(pump.drive)
    diffs = np.concatenate([np.abs(ph[1:, :] - ph[:-1, :]).ravel(), np.abs(ph[:, 1:] - ph[:, :-1]).ravel()])
    assert len(diffs) == 2 * 8 * 7
    assert np.all(diffs == np.pi)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, 16, elements=st.floats(0, 1)), st.floats(0, 5), st.floats(0.01, 10))
def test_pump_power_affine_in_digit(a, p0, s):
    W = build_projection(11, 16, 64)
    pump = to_pump(encode(a, W), p0, s, 8)
    direct = p0 + s * (W.entries @ a)
    np.testing.assert_allclose(pump.power.ravel(), direct, rtol=1e-12, atol=1e-12)
    assert np.all(pump.power >= 0)


def test_pump_rejects_negative():
    with pytest.raises(ParameterError):
        to_pump(-np.ones(4), 0.1, 1.0, 2)


def test_pump_scale_maps_max_to_peak():
    s = pump_scale(4.0, 10.0, 1.0)
    assert 1.0 + s * 4.0 == pytest.approx(10.0)


def test_mask_family():
    fam = make_mask_family(5, 6, 16, 64)
    assert len(fam) == 6
    assert [W.seed for W in fam] == list(range(5, 11))
    assert np.array_equal(make_mask_family(5, 1, 16, 64)[0].entries, build_projection(5, 16, 64).entries)
    for i in range(6):
        for j in range(i):
            assert not np.array_equal(fam[i].entries, fam[j].entries)
    with pytest.raises(ParameterError):
        make_mask_family(0, 0, 16, 64)


def test_projection_text_roundtrip(tmp_path):
    W = build_projection(9, 16, 64, 0.3)
    save_projection(tmp_path / "w.csv", W)
    text = (tmp_path / "w.csv").read_text().splitlines()
    assert text[1] == "64,16"
    back = load_projection(tmp_path / "w.csv")
    assert np.array_equal(back.entries, W.entries)
    assert back.seed == 9 and back.density == 0.3
