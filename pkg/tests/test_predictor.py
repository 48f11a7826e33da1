import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridsim import autograd as ag
from hybridsim.autograd import NEG_INF, Tensor
from hybridsim.diffusion.local_encoder import PAD, pad_sequences
from hybridsim.diffusion.predictor import (
    activation_mask,
    gate_fuse,
    pool_global,
    pool_local,
    score_users,
    top_k,
)

from gradcheck import check_tensors


def test_pool_one_user(rng):
    g = Tensor(rng.normal(size=(5, 3)))
    np.testing.assert_array_equal(pool_global(g, np.array([[2]]), np.array([1])).data[0], g.data[2])


def test_pool_midpoint():
    g = Tensor([[1.0, 0.0], [0.0, 1.0]])
    np.testing.assert_array_equal(pool_global(g, np.array([[0, 1]]), np.array([2])).data, [[0.5, 0.5]])


def test_pool_ignores_padding():
    g = Tensor([[1.0, 0.0], [0.0, 1.0], [9.0, 9.0]])
    out = pool_global(g, np.array([[0, PAD]]), np.array([1])).data
    np.testing.assert_array_equal(out, [[1.0, 0.0]])


def test_pool_gradient_shares(rng):
    g = Tensor(rng.uniform(-1, 1, (6, 3)), requires_grad=True)
    idx, valid = pad_sequences([[0, 2, 5], [1]], 4)
    ag.sum_(pool_global(g, idx, valid)).backward()
    np.testing.assert_allclose(g.grad[[0, 2, 5]], 1 / 3)
    np.testing.assert_allclose(g.grad[1], 1.0)
    np.testing.assert_array_equal(g.grad[[3, 4]], 0.0)
    w = rng.normal(size=(2, 3))
    assert check_tensors(lambda: ag.sum_(ag.mul(pool_global(g, idx, valid), w)), [g]) < 1e-6


def test_pool_empty_prefix():
    with pytest.raises(ValueError, match="empty"):
        pool_global(Tensor(np.ones((2, 2))), np.array([[PAD]]), np.array([0]))


def test_pool_local_modes(rng):
    out = Tensor(rng.normal(size=(2, 4, 3)))
    valid = np.array([2, 4])
    last = pool_local(out, valid, "last").data
    np.testing.assert_array_equal(last, [out.data[0, 1], out.data[1, 3]])
    mean = pool_local(out, valid, "mean").data
    np.testing.assert_allclose(mean[0], out.data[0, :2].mean(0), atol=1e-15)
    np.testing.assert_allclose(mean[1], out.data[1].mean(0), atol=1e-15)
    with pytest.raises(ValueError):
        pool_local(out, valid, "max")


def test_gate_zero_weights_midpoint(rng):
    zg, zl = Tensor(rng.normal(size=(3, 4))), Tensor(rng.normal(size=(3, 4)))
    out = gate_fuse(zg, zl, Tensor(np.zeros((8, 4)))).data
    np.testing.assert_allclose(out, (zg.data + zl.data) / 2, atol=1e-15)


def test_gate_equal_inputs(rng):
    z = Tensor(rng.normal(size=(3, 4)))
    np.testing.assert_allclose(gate_fuse(z, z, Tensor(rng.normal(size=(8, 4)))).data, z.data, atol=1e-14)


def test_gate_scalar_oracle(rng):
    d, eps = 4, 1e-5
    zg, zl, w = rng.normal(size=d), rng.normal(size=d), rng.normal(size=(2 * d, d))

    def ln(v):
        mu = sum(v) / len(v)
        var = sum((x - mu) ** 2 for x in v) / len(v)
        return [(x - mu) / math.sqrt(var + eps) for x in v]

    cat = ln(zg) + ln(zl)
    expect = []
    for j in range(d):
        gamma = 1 / (1 + math.exp(-sum(cat[i] * w[i, j] for i in range(2 * d))))
        expect.append(gamma * zg[j] + (1 - gamma) * zl[j])
    got = gate_fuse(Tensor(zg[None]), Tensor(zl[None]), Tensor(w), eps).data[0]
    np.testing.assert_allclose(got, expect, atol=1e-12, rtol=0)


def test_gate_gradient(rng):
    zg, zl = (Tensor(rng.uniform(-1, 1, (3, 4)), requires_grad=True) for _ in range(2))
    w = Tensor(rng.uniform(-1, 1, (8, 4)), requires_grad=True)
    t = rng.normal(size=(3, 4))
    assert check_tensors(lambda: ag.sum_(ag.mul(gate_fuse(zg, zl, w), t)), [zg, zl, w]) < 1e-4


def test_score_example():
    table = np.array([[2.0, 0.0], [1.0, 0.0], [3.0, 0.0]])
    r = score_users([1.0, 0.0], table, {2})
    assert r.ranked == [0, 1]
    assert r.scores[2] == NEG_INF


def test_full_mask_empty_ranking(rng):
    r = score_users(rng.normal(size=3), rng.normal(size=(4, 3)), range(4))
    assert r.ranked == [] and top_k(r, 10) == []


def test_argmax_matches_brute_force(rng):
    for _ in range(50):
        z, table = rng.normal(size=5), rng.normal(size=(30, 5))
        act = set(rng.choice(30, size=5, replace=False).tolist())
        r = score_users(z, table, act)
        best = max((u for u in range(30) if u not in act), key=lambda u: float(np.dot(table[u], z)))
        assert r.ranked[0] == best


def test_top_k_truncation(rng):
    r = score_users(rng.normal(size=2), rng.normal(size=(5, 2)), {0})
    assert top_k(r, 0) == []
    assert top_k(r, 50) == r.ranked and len(r.ranked) == 4
    for k in (10, 20, 50):
        assert len(r.top_k(k)) == 4
    with pytest.raises(ValueError):
        top_k(r, -1)


def test_ties_by_index():
    r = score_users([1.0], np.array([[1.0], [2.0], [1.0], [2.0]]), set())
    assert r.ranked == [1, 3, 0, 2]


def test_activation_mask():
    m = activation_mask([[0, 2], []], 3)
    np.testing.assert_array_equal(m == NEG_INF, [[True, False, True], [False, False, False]])


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 12), st.integers(0, 15), st.integers(0, 10_000))
def test_masked_never_in_top_k(m, k, seed):
    rng = np.random.default_rng(seed)
    table = rng.integers(-2, 3, size=(m, 3)).astype(float)
    masked = {u for u in range(m) if rng.random() < 0.4}
    r = score_users(rng.normal(size=3), table, masked)
    top = top_k(r, k)
    assert not set(top) & masked
    assert len(top) == min(k, m - len(masked))
    assert sorted(r.ranked) == sorted(set(range(m)) - masked)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_constant_shift_keeps_ranking(seed):
    rng = np.random.default_rng(seed)
    z, table = rng.normal(size=4), rng.normal(size=(15, 4))
    c = rng.normal(size=4)
    act = {0, 3}
    a = score_users(z, table, act)
    b = score_users(z, table + c, act)
    assert a.ranked == b.ranked
    np.testing.assert_allclose(b.scores[~b.masked], a.scores[~a.masked] + z @ c, atol=1e-12)
    assert a.ranked == score_users(z, table, act).ranked
