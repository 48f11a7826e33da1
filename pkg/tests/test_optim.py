import numpy as np
import pytest

from hybridsim import autograd as ag
from hybridsim.autograd import Tensor
from hybridsim.optim import Adam, AdamState, adam_step


def test_first_step_closed_form():
    p = Tensor([0.0], requires_grad=True)
    p.grad = np.array([1.0])
    adam_step(p, AdamState(np.zeros(1), np.zeros(1), lr=1e-3, eps=1e-8))
    # m_hat = v_hat = 1, so the step is lr / (1 + eps)
    assert p.data[0] == pytest.approx(-1e-3 / (1 + 1e-8), abs=1e-18)
    assert abs(p.data[0] - -9.99999995e-4) < 1e-11
    assert p.grad is None


def test_zero_gradient_leaves_param():
    p = Tensor([1.5, -2.0], requires_grad=True)
    opt = Adam([p])
    for _ in range(5):
        p.grad = np.zeros(2)
        opt.step()
    np.testing.assert_array_equal(p.data, [1.5, -2.0])


def _run(seed):
    rng = np.random.default_rng(seed)
    w = Tensor(rng.normal(size=(3, 2)), requires_grad=True)
    x = rng.normal(size=(8, 3))
    y = rng.normal(size=(8, 2))
    opt = Adam([w], lr=0.05)
    for _ in range(20):
        diff = ag.sub(ag.matmul(Tensor(x), w), y)
        ag.mean(ag.mul(diff, diff)).backward()
        opt.step()
    return w.data


def test_same_seed_is_bit_identical():
    a, b = _run(7), _run(7)
    assert a.tobytes() == b.tobytes()


def test_reduces_quadratic():
    w = Tensor([3.0, -4.0], requires_grad=True)
    opt = Adam([w], lr=0.1)
    for _ in range(200):
        ag.sum_(ag.mul(w, w)).backward()
        opt.step()
    assert np.abs(w.data).max() < 0.1
