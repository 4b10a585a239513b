import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from waveforge.autoencoder import (DimensionError, PolyphaseLoss, build_B, filter_grads, forward,
                                   grad_loss, loss, loss_matrix, pad_align, save_B_csv, tau)
from waveforge.oracle import family
from waveforge.params import FilterBank, Kind, ParamSet, assemble
from waveforge.repro import central_difference
from waveforge.signal import Filter, dtft

R2 = math.sqrt(2.0)
HAAR = family("haar")


def random_bank(seed: int, kind=None) -> ParamSet:
    rng = np.random.default_rng(seed)
    kind = kind or list(Kind)[seed % 3]
    return ParamSet.random(kind, int(rng.integers(2, 9)), rng=rng)


def test_pad_align_examples():
    fb = pad_align(HAAR)
    assert all(f.allclose(g) for f, g in zip(fb.filters().values(), HAAR.filters().values()))
    short = Filter([1.0, 2.0, 3.0], 1)
    bank = FilterBank(Filter(np.ones(5)), Filter(np.ones(3), -1), short, Filter(np.ones(5)))
    padded = pad_align(bank)
    np.testing.assert_array_equal(padded.h_dual.taps, [0, 1, 2, 3, 0])
    assert tau(bank) == 5


@given(st.integers(0, 2**32 - 1), st.floats(0, 2 * np.pi))
def test_pad_align_keeps_spectra(seed, w):
    fb = assemble(ParamSet.random("biorthogonal", 5, rng=np.random.default_rng(seed), l_dual=3, p=1, p_dual=1))
    for a, b in zip(fb.filters().values(), pad_align(fb).filters().values()):
        assert abs(dtft(a, w) - dtft(b, w)) < 1e-12 * (1 + np.abs(a.taps).sum())


def test_haar_reconstructs_exactly():
    x = np.random.default_rng(0).standard_normal(16)
    xhat, coeffs = forward(x, HAAR)
    np.testing.assert_allclose(xhat, x, atol=1e-12)
    assert coeffs.approx.shape == coeffs.detail.shape
    np.testing.assert_array_equal(forward(np.zeros(16), HAAR)[0], np.zeros(16))


def test_signal_too_short():
    fb = family("db4")
    with pytest.raises(DimensionError):
        forward(np.ones(15), fb)
    with pytest.raises(DimensionError):
        build_B(fb, 15)


def test_build_B_shapes_and_haar():
    rm = build_B(family("db4"), 32)
    assert rm.B.shape == (32, 32)
    assert rm.H.shape == (32 + 8 - 1, 32)
    assert rm.H_dual.shape == (32 + 2 * 8 - 2, 32 + 8 - 1)
    assert np.linalg.norm(build_B(HAAR, 8).B) < 1e-12


def test_build_B_lowpass_only():
    fb = FilterBank(Filter([1.0, 0.0]), Filter([0.0, 0.0]), Filter([1.0, 0.0]), Filter([0.0, 0.0]))
    B = build_B(fb, 8).B
    # the lowpass path keeps even samples only, so odd samples are lost
    np.testing.assert_allclose(B, np.diag([0.0, 1.0] * 4))
    assert np.linalg.norm(B) > 0


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_forward_matches_matrix_path(seed):
    fb = assemble(random_bank(seed))
    x = np.random.default_rng(seed + 1).standard_normal(32)
    B = build_B(fb, 32).B
    np.testing.assert_allclose(B @ x, x - forward(x, fb)[0], atol=1e-10 * (1 + np.abs(x).max()))


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_forward_is_linear(seed, a, b):
    fb = assemble(random_bank(seed))
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 24))
    lhs = forward(a * x + b * y, fb)[0]
    rhs = a * forward(x, fb)[0] + b * forward(y, fb)[0]
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + np.abs(lhs).max()))


def test_loss_paths_agree_over_100_banks():
    rng = np.random.default_rng(5)
    for seed in range(100):
        params = random_bank(seed)
        X = rng.standard_normal((4, 32))
        a, b = loss(X, params), loss_matrix(X, params)
        assert abs(a - b) < 1e-10 * (1 + a)


def test_loss_of_pr_bank_vanishes():
    X = np.random.default_rng(1).standard_normal((8, 32))
    for name in ("haar", "db2", "db4", "cdf53", "cdf97"):
        assert loss(X, family(name)) <= 1e-20


def test_loss_two_by_two_toy():
    # for s = 2 and a bank that only keeps even samples through the lowpass path,
    # B = diag(0, 1) so the loss is x[1]^2
    fb = FilterBank(Filter([1.0]), Filter([0.0]), Filter([1.0]), Filter([0.0]))
    assert loss(np.array([3.0, -2.0]), fb) == pytest.approx(4.0)


def test_pr_iff_B_vanishes():
    for name in ("haar", "db2"):
        fb = family(name)
        assert np.linalg.norm(build_B(fb, 16).B) < 1e-10
        taps = fb.h.taps.copy()
        taps[0] += 1e-3
        bad = FilterBank(Filter(taps, fb.h.offset), fb.g, fb.h_dual, fb.g_dual)
        assert np.linalg.norm(build_B(bad, 16).B) > 1e-4


def test_save_B_csv(tmp_path):
    rm = build_B(family("db2"), 8)
    save_B_csv(rm, tmp_path / "B.csv")
    np.testing.assert_allclose(np.loadtxt(tmp_path / "B.csv", delimiter=","), rm.B)


KINDS = [
    dict(kind="unconstrained", l=6, l_dual=4),
    dict(kind="biorthogonal", l=7, l_dual=5, p=2, p_dual=1),
    dict(kind="biorthogonal", l=9, l_dual=7, p=4, p_dual=4, symmetric=True),
    dict(kind="biorthogonal", l=5, p=2, fixed_synthesis=Filter([0.5, 1.0, 0.5])),
    dict(kind="biorthogonal", l=6, p=2, p_dual=2, a=1.7),
    dict(kind="orthogonal", l=8, p=3),
    dict(kind="orthogonal", l=8, p=2, symmetric=True),
]


@pytest.mark.parametrize("kw", KINDS, ids=lambda kw: "-".join(str(v) for v in kw.values())[:40])
@pytest.mark.parametrize("lam", [0.0, 0.7])
def test_gradient_matches_central_differences(kw, lam):
    rng = np.random.default_rng(11)
    params = ParamSet.random(rng=rng, **kw)
    X = rng.standard_normal((6, 24))
    exact = grad_loss(X, params, lam)
    approx = central_difference(X, params, lam)
    assert exact.keys() == approx.keys()
    for name in exact:
        rel = np.abs(exact[name] - approx[name]) / (np.abs(approx[name]) + 1e-6 * np.linalg.norm(approx[name]))
        assert rel.max() < 1e-6, name


@pytest.mark.parametrize("kw", KINDS[:4], ids=str)
def test_polyphase_statistics_match_filtering(kw):
    rng = np.random.default_rng(2)
    params = ParamSet.random(rng=rng, **kw)
    X = rng.standard_normal((5, 40))
    stats = PolyphaseLoss(X, assemble(params))
    v1, g1 = grad_loss(X, params, 0.3, with_value=True)
    v2, g2 = grad_loss(stats, params, 0.3, with_value=True)
    assert v2 == pytest.approx(v1, rel=1e-12)
    for name in g1:
        np.testing.assert_allclose(g2[name], g1[name], rtol=1e-10, atol=1e-12 * np.abs(g1[name]).max())


def test_polyphase_rejects_other_supports():
    X = np.random.default_rng(0).standard_normal((2, 32))
    stats = PolyphaseLoss(X, family("db2"))
    with pytest.raises(DimensionError):
        stats.value(family("db4"))


def test_gradient_vanishes_at_pr_minimum():
    X = np.random.default_rng(4).standard_normal((8, 32))
    _, d = filter_grads(X, family("db4"))
    assert max(np.linalg.norm(v) for v in d.values()) < 1e-8


def test_regularizer_gradient():
    fb = FilterBank(Filter([1.0, 0.0]), Filter([0.0]), Filter([0.0, 0.0]), Filter([0.0]))
    X = np.zeros((1, 4))
    _, d = filter_grads(X, fb, lam=0.5)
    np.testing.assert_allclose(d["h"], [2.0, -2.0])
