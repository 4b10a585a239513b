import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from waveforge.params import (ConfigurationError, FilterBank, Kind, ParamSet, alignment_offsets,
                              assemble, flip_pivot, lambda_schedule, normalize_bank,
                              regularized_loss_term, symmetric_basis)
from waveforge.signal import Filter, alt_flip, bspline, dtft

R2 = math.sqrt(2.0)


@pytest.mark.parametrize("n, expected", [
    (4, [[1, 0], [0, 1], [0, 1], [1, 0]]),
    (3, [[1, 0], [0, 1], [1, 0]]),
    (1, [[1]]),
])
def test_symmetric_basis_examples(n, expected):
    np.testing.assert_array_equal(symmetric_basis(n), expected)


def test_symmetric_basis_rejects_zero():
    with pytest.raises(ValueError):
        symmetric_basis(0)


@given(st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_symmetric_basis_properties(n, seed):
    S = symmetric_basis(n)
    assert set(np.unique(S)) <= {0.0, 1.0}
    G = S.T @ S
    np.testing.assert_array_equal(G, np.diag(np.diag(G)))
    v = S @ np.random.default_rng(seed).standard_normal(S.shape[1])
    np.testing.assert_array_equal(v, v[::-1])


def test_assemble_haar():
    fb = assemble(ParamSet(Kind.ORTHOGONAL, 2, p=1, learnables={"ell": [R2]}))
    np.testing.assert_allclose(fb.h.taps, [1 / R2, 1 / R2])
    np.testing.assert_allclose(fb.g.taps, [-1 / R2, 1 / R2])
    assert fb.h_dual.allclose(fb.h) and fb.g_dual.allclose(fb.g)


def test_assemble_pinned_synthesis():
    pinned = Filter(R2 * bspline(2).taps)
    params = ParamSet.random(Kind.BIORTHOGONAL, 5, rng=np.random.default_rng(0), p=2,
                             fixed_synthesis=pinned)
    assert set(params.learnables) == {"ell"}
    fb = assemble(params)
    np.testing.assert_allclose(fb.h_dual.taps, pinned.taps)
    pivot = flip_pivot(fb.h.len, fb.h.offset)
    assert fb.g.allclose(alt_flip(fb.h_dual, pivot))


def test_assemble_symmetric_orthogonal_is_palindromic():
    params = ParamSet.random(Kind.ORTHOGONAL, 8, rng=np.random.default_rng(3), p=4, symmetric=True)
    assert params.learnables["ell"].size == 2
    h = assemble(params).h.taps
    np.testing.assert_allclose(h, h[::-1], atol=1e-14)


def test_learnable_shapes():
    assert ParamSet.random("unconstrained", 6, rng=np.random.default_rng(0), l_dual=4).learnable_shapes() == \
        {"h": 6, "g_dual": 6, "h_dual": 4, "g": 4}
    assert ParamSet.random("biorthogonal", 9, rng=np.random.default_rng(0), l_dual=7, p=4, p_dual=4,
                           symmetric=True).learnable_shapes() == {"ell": 3, "ell_dual": 2}
    assert ParamSet.random("orthogonal", 8, rng=np.random.default_rng(0), p=2).learnable_shapes() == {"ell": 6}


@pytest.mark.parametrize("kwargs", [
    dict(kind="orthogonal", l=6, p=4),  # l < 2p
    dict(kind="biorthogonal", l=3, p=3),  # l <= p
    dict(kind="unconstrained", l=4, p=1),
    dict(kind="orthogonal", l=4, p=1, a=0.0),
])
def test_invalid_param_sets(kwargs):
    with pytest.raises(ConfigurationError):
        ParamSet.random(rng=np.random.default_rng(0), **kwargs)


def test_wrong_learnable_length():
    with pytest.raises(ConfigurationError):
        ParamSet(Kind.ORTHOGONAL, 4, p=2, learnables={"ell": [1.0]})


def test_param_set_json_round_trip():
    params = ParamSet.random("biorthogonal", 5, rng=np.random.default_rng(1), p=2,
                             fixed_synthesis=Filter([0.5, 1.0, 0.5]), a=2.0)
    back = ParamSet.from_json(params.to_json())
    assert back.to_json() == params.to_json()


@settings(max_examples=30)
@given(st.sampled_from(["biorthogonal", "orthogonal"]), st.integers(2, 10), st.integers(1, 9),
       st.integers(0, 3), st.booleans(), st.floats(0.5, 2.0), st.integers(0, 2**32 - 1))
def test_assembled_banks_cancel_aliasing(kind, l, l_dual, p, symmetric, a, seed):
    """PR-2: conj(h^(w+pi)) h~^(w) + conj(g^(w+pi)) g~^(w) vanishes identically."""
    if kind == "orthogonal" and l < 2 * p:
        return
    if l <= p or l_dual <= p:
        return
    params = ParamSet.random(kind, l, rng=np.random.default_rng(seed), l_dual=l_dual, p=p, p_dual=p,
                             symmetric=symmetric, a=a)
    fb = assemble(params)
    w = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    # analysis filters act by correlation, so their spectra enter conjugated
    alias = (np.conj(dtft(fb.h, w + np.pi)) * dtft(fb.h_dual, w)
             + np.conj(dtft(fb.g, w + np.pi)) * dtft(fb.g_dual, w))
    scale = 1 + np.abs(fb.h.taps).sum() * np.abs(fb.h_dual.taps).sum()
    assert np.max(np.abs(alias)) < 1e-10 * scale


@settings(max_examples=30)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_vanishing_moments_zero_at_pi(p, seed):
    fb = assemble(ParamSet.random("orthogonal", 2 * p + 1, rng=np.random.default_rng(seed), p=p))
    taps = fb.h.taps
    n = np.arange(taps.size)
    for k in range(p):
        # k-th derivative of h^ at pi is proportional to sum n^k (-1)^n h[n]
        assert abs(np.sum(n**k * (-1.0) ** n * taps)) < 1e-8 * (1 + np.abs(taps).sum()) * taps.size**k


def test_alignment_offsets_centre_shorter_filter():
    assert alignment_offsets(8, 8) == (0, 0)
    assert alignment_offsets(5, 3) == (0, 1)
    assert alignment_offsets(7, 9) == (1, 0)


@given(st.integers(1, 16), st.integers(-4, 4))
def test_flip_pivot_is_odd(l, off):
    assert flip_pivot(l, off) % 2 == 1


def test_normalize_bank_keeps_pr_product():
    h, hd = Filter([1.0, 1.0]), Filter([0.5, 0.5])
    fb = FilterBank(h, alt_flip(hd), hd, alt_flip(h))
    out = normalize_bank(fb)
    assert out.h.taps.sum() == pytest.approx(R2)
    assert out.h_dual.taps.sum() == pytest.approx(R2)


@pytest.mark.parametrize("taps, lam, expected", [
    ([1.0, 2.0, 2.0, 1.0], 3.0, 0.0),
    ([1.0, 0.0], 1.0, 2.0),
    ([5.0, -1.0, 0.3], 0.0, 0.0),
])
def test_regularized_loss_term(taps, lam, expected):
    assert regularized_loss_term(Filter(taps), lam) == pytest.approx(expected)


@pytest.mark.parametrize("it, expected", [(0, 1.0), (999, 1.0), (1000, 0.1), (2500, 0.01), (4999, 1e-4), (5000, 0.0)])
def test_lambda_schedule(it, expected):
    assert lambda_schedule(it, 1.0, 10.0, 1000, 5000) == pytest.approx(expected)
