import json
import math

import numpy as np
import pytest

from wptwave.channels import (
    ChannelResponse,
    ChannelSpec,
    MultipathChannel,
    PathComponent,
    effective_gain,
    frequency_response,
    generate_channel,
    read_response_csv,
    write_response_csv,
)
from wptwave.signals import FrequencyGrid


def flat_grid(u=4):
    return FrequencyGrid(f0_hz=2e6, delta_u_hz=62.5e3, num_subcarriers=u)


def test_equal_power_split_matches_quoted_loss():
    spec = ChannelSpec(
        num_receivers=1,
        num_antennas=1,
        num_paths=5,
        path_loss_db=45.65,
        delay_range=(0.0, 300e-9),
        seed=1,
    )
    ch = generate_channel(spec)
    for p in ch.paths[0][0]:
        assert p.alpha**2 == pytest.approx(10 ** (-4.565) / 5, rel=1e-12)


def test_lossless_single_path_has_unit_amplitude():
    spec = ChannelSpec(1, 1, 1, 0.0, (0.0, 0.0), seed=3)
    ch = generate_channel(spec)
    assert ch.paths[0][0][0].alpha == pytest.approx(1.0, abs=0.0)


def test_same_seed_reproduces_channel():
    spec = ChannelSpec(2, 3, 5, [40.0, 50.0], (0.0, 300e-9), seed=42)
    a = generate_channel(spec)
    b = generate_channel(spec)
    assert a == b
    c = generate_channel(
        ChannelSpec(2, 3, 5, [40.0, 50.0], (0.0, 300e-9), seed=43)
    )
    assert a != c


def test_per_receiver_loss_scales_amplitudes():
    spec = ChannelSpec(2, 1, 4, [0.0, 20.0], (0.0, 1e-7), seed=9)
    ch = generate_channel(spec)
    a0 = ch.paths[0][0][0].alpha
    a1 = ch.paths[1][0][0].alpha
    assert a0 / a1 == pytest.approx(10.0, rel=1e-12)


def test_flat_channel_response_is_one():
    ch = MultipathChannel((((PathComponent(1.0, 0.0, 0.0),),),))
    resp = frequency_response(ch, flat_grid())
    np.testing.assert_allclose(resp.values, 1.0)


def test_half_cycle_delay_negates():
    g = flat_grid(u=1)
    tau = 1.0 / (2.0 * g.frequencies_hz[0])
    ch = MultipathChannel((((PathComponent(0.7, tau, 0.0),),),))
    resp = frequency_response(ch, g)
    assert resp.values[0, 0, 0].real == pytest.approx(-0.7, rel=1e-10)
    assert abs(resp.values[0, 0, 0].imag) < 1e-10


def test_opposite_phases_cancel():
    g = flat_grid(u=3)
    ch = MultipathChannel(
        (((PathComponent(0.5, 1e-7, 0.0), PathComponent(0.5, 1e-7, math.pi)),),)
    )
    resp = frequency_response(ch, g)
    np.testing.assert_allclose(np.abs(resp.values), 0.0, atol=1e-15)


def test_zero_amplitude_path_is_inert():
    g = flat_grid()
    base = MultipathChannel((((PathComponent(0.9, 2e-8, 1.1),),),))
    padded = MultipathChannel(
        (((PathComponent(0.9, 2e-8, 1.1), PathComponent(0.0, 1e-8, 0.3)),),)
    )
    np.testing.assert_array_equal(
        frequency_response(base, g).values, frequency_response(padded, g).values
    )


def test_response_bounded_by_amplitude_sum():
    rng = np.random.default_rng(17)
    spec = ChannelSpec(2, 2, 5, 30.0, (0.0, 300e-9), seed=17)
    ch = generate_channel(spec)
    resp = frequency_response(ch, flat_grid(u=8))
    for k, per_k in enumerate(ch.paths):
        for m, per_m in enumerate(per_k):
            bound = sum(p.alpha for p in per_m)
            assert np.all(np.abs(resp.values[k, m]) <= bound + 1e-12)
    del rng


def test_effective_gain_single_antenna():
    rng = np.random.default_rng(2)
    v = rng.normal(size=(1, 1, 6)) + 1j * rng.normal(size=(1, 1, 6))
    resp = ChannelResponse(v, flat_grid(u=6))
    np.testing.assert_allclose(effective_gain(resp, 0), np.abs(v[0, 0]), rtol=1e-14)


def test_effective_gain_pythagorean():
    v = np.zeros((1, 2, 1), dtype=complex)
    v[0, 0, 0] = 3.0
    v[0, 1, 0] = 4.0j
    resp = ChannelResponse(v, flat_grid(u=1))
    assert effective_gain(resp, 0)[0] == pytest.approx(5.0, rel=1e-15)


def test_effective_gain_recomputed_elementwise():
    rng = np.random.default_rng(31)
    v = rng.normal(size=(3, 4, 5)) + 1j * rng.normal(size=(3, 4, 5))
    resp = ChannelResponse(v, flat_grid(u=5))
    for k in range(3):
        b = effective_gain(resp, k)
        np.testing.assert_allclose(b**2, np.sum(np.abs(v[k]) ** 2, axis=0), rtol=1e-13)
    with pytest.raises(IndexError):
        effective_gain(resp, 3)


def test_channel_json_round_trip(tmp_path):
    spec = ChannelSpec(2, 2, 3, [10.0, 20.0], (0.0, 3e-7), seed=5)
    ch = generate_channel(spec)
    path = tmp_path / "ch.json"
    ch.save(path)
    assert MultipathChannel.load(path) == ch
    doc = json.loads(path.read_text())
    assert doc["K"] == 2 and doc["M"] == 2
    assert set(doc["paths"][0][0][0]) == {"alpha", "tau_s", "xi_rad"}


def test_channel_serialization_is_bit_stable(tmp_path):
    spec = ChannelSpec(1, 2, 4, 25.0, (0.0, 3e-7), seed=77)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    generate_channel(spec).save(p1)
    generate_channel(spec).save(p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_response_csv_round_trip(tmp_path):
    g = flat_grid(u=3)
    ch = generate_channel(ChannelSpec(2, 2, 4, 30.0, (0.0, 2e-7), seed=8))
    resp = frequency_response(ch, g)
    path = tmp_path / "resp.csv"
    write_response_csv(resp, path)
    back = read_response_csv(path, g)
    np.testing.assert_array_equal(back.values, resp.values)
    header = path.read_text().splitlines()[0]
    assert header == "k,m,u,re,im"


def test_validation_errors():
    with pytest.raises(ValueError):
        PathComponent(-1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        PathComponent(1.0, -1e-9, 0.0)
    with pytest.raises(ValueError):
        PathComponent(1.0, 0.0, 7.0)
    with pytest.raises(ValueError):
        MultipathChannel((((),),))
    with pytest.raises(ValueError):
        ChannelSpec(1, 1, 0, 0.0, (0.0, 1.0), seed=0)
    with pytest.raises(ValueError):
        ChannelSpec(1, 1, 1, 0.0, (2.0, 1.0), seed=0)
    with pytest.raises(ValueError):
        ChannelSpec(2, 1, 1, [0.0], (0.0, 1.0), seed=0)
    with pytest.raises(ValueError):
        ChannelResponse(np.ones((1, 1, 2), dtype=complex), flat_grid(u=3))
