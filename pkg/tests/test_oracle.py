import json
import math

import numpy as np
import pytest
from numpy.polynomial import polynomial as P

from waveforge.metrics import cmf_residual, delta_pr, lawton_check, lawton_report, vanishing_moment_count
from waveforge.oracle import (FAMILIES, bezout_q, cdf97_filters, cdf_spline_filter,
                              daubechies_ell_roots, daubechies_filter, family, write_family)
from waveforge.params import FilterBank
from waveforge.signal import Filter, dtft

R2 = math.sqrt(2.0)
S3 = math.sqrt(3.0)

# JPEG 2000 irreversible 9/7 lowpass pair, centre tap first, normalised to sum sqrt(2)
JPEG2000_97_ANALYSIS = [0.8526986790, 0.3774028556, -0.1106244044, -0.0238494650, 0.0378284555]
JPEG2000_97_SYNTHESIS = [0.7884856164, 0.4180922732, -0.0406894176, -0.0645388826]


def from_centre(half):
    return np.concatenate([half[:0:-1], half])


@pytest.mark.parametrize("p", [1, 2, 3, 4, 6])
def test_bezout_identity(p):
    q = bezout_q(p)
    assert q.coeffs.size == p
    assert q.identity_residual() < 1e-12


def test_bezout_examples():
    np.testing.assert_allclose(bezout_q(1).coeffs, [2.0])
    np.testing.assert_allclose(bezout_q(2).coeffs, [6.0, -4.0])
    y = np.linspace(0, 1, 7)
    np.testing.assert_allclose(bezout_q(3)(y), 2 * (1 + 3 * (1 - y) + 6 * (1 - y) ** 2))
    with pytest.raises(ValueError):
        bezout_q(0)


def test_bezout_identity_pointwise():
    q = bezout_q(4)
    y = np.linspace(0, 1, 11)
    np.testing.assert_allclose(y**4 * q(y) + (1 - y) ** 4 * q(1 - y), 2.0, atol=1e-12)


def test_daubechies_haar_and_db2_closed_form():
    np.testing.assert_allclose(daubechies_filter(1).taps, [1 / R2, 1 / R2])
    want = np.array([1 + S3, 3 + S3, 3 - S3, 1 - S3]) / (4 * R2)
    np.testing.assert_allclose(daubechies_filter(2).taps, want, atol=1e-14)


@pytest.mark.parametrize("p", [2, 3, 4, 5, 6])
def test_daubechies_properties(p):
    h = daubechies_filter(p)
    assert h.len == 2 * p
    assert cmf_residual(h) < 1e-10
    assert vanishing_moment_count(h) == p
    assert abs(h.taps.sum() - R2) < 1e-12
    assert np.all(np.abs(daubechies_ell_roots(p)) < 1)
    assert lawton_report(h).stable


def test_daubechies_magnitude_matches_q():
    p = 4
    h, q = daubechies_filter(p), bezout_q(p)
    w = np.linspace(0, np.pi, 33)
    y = np.cos(w / 2) ** 2
    np.testing.assert_allclose(np.abs(dtft(h, w)) ** 2, y**p * q(y), atol=1e-12)


def test_cdf53_values():
    h, hd = cdf_spline_filter(2, 2)
    np.testing.assert_allclose(h.taps, R2 * np.array([-1 / 8, 1 / 4, 3 / 4, 1 / 4, -1 / 8]), atol=1e-14)
    np.testing.assert_allclose(hd.taps, R2 * np.array([1 / 4, 1 / 2, 1 / 4]), atol=1e-15)
    assert (h.offset, hd.offset) == (0, 1)
    assert lawton_check(h, hd)[2]


@pytest.mark.parametrize("p, p_dual", [(1, 1), (2, 2), (1, 3), (3, 1), (3, 3), (4, 2), (2, 4), (3, 5)])
def test_cdf_spline_family(p, p_dual):
    h, hd = cdf_spline_filter(p, p_dual)
    assert h.len == 2 * p + p_dual - 1 and hd.len == p_dual + 1
    np.testing.assert_array_equal(h.taps, h.taps[::-1])
    np.testing.assert_array_equal(hd.taps, hd.taps[::-1])
    assert delta_pr(h, hd, strict=True) < 1e-12
    assert vanishing_moment_count(h) == p and vanishing_moment_count(hd) == p_dual
    assert abs(h.taps.sum() - R2) < 1e-12 and abs(hd.taps.sum() - R2) < 1e-12


def test_cdf_spline_parity_error():
    with pytest.raises(ValueError):
        cdf_spline_filter(2, 1)
    with pytest.raises(ValueError):
        cdf_spline_filter(0, 2)


def test_cdf97_against_jpeg2000():
    h, hd = cdf97_filters()
    assert (h.len, hd.len) == (9, 7)
    np.testing.assert_allclose(h.taps, from_centre(JPEG2000_97_ANALYSIS), atol=1e-9)
    np.testing.assert_allclose(hd.taps, from_centre(JPEG2000_97_SYNTHESIS), atol=1e-9)
    assert delta_pr(h, hd, strict=True) < 1e-10
    assert lawton_check(h, hd)[2]


@pytest.mark.parametrize("name", FAMILIES)
def test_family_banks(name):
    fb = family(name)
    assert abs(fb.h.taps.sum() - R2) < 1e-12 and abs(fb.h_dual.taps.sum() - R2) < 1e-12
    assert abs(dtft(fb.g, 0.0)) < 1e-12 and abs(dtft(fb.g_dual, 0.0)) < 1e-12


def test_family_unknown():
    with pytest.raises(KeyError):
        family("sym8")


@pytest.mark.parametrize("name", FAMILIES)
def test_write_family_round_trip(tmp_path, name):
    path = write_family(name, tmp_path / "refs")
    obj = json.loads(path.read_text())
    assert obj.pop("family") == name
    back, fb = FilterBank.from_json(obj), family(name)
    for key, f in fb.filters().items():
        assert back.filters()[key].allclose(f, 0.0)


def test_ell_roots_rebuild_db4():
    p = 4
    ell = np.real(np.poly(daubechies_ell_roots(p)))
    h = np.convolve(P.polypow([0.5, 0.5], p), ell)
    h *= R2 / h.sum()
    np.testing.assert_allclose(h, daubechies_filter(p).taps, atol=1e-12)
    assert Filter(h).len == 2 * p
