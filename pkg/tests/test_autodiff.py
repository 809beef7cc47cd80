import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdr_icl.autodiff import (
    NonFiniteLossError,
    Tensor,
    concat,
    finite_difference,
    layer_norm,
    param_gradient,
    softmax,
)
from cdr_icl.optim import AdamState, adam_step


def check_gradient(loss_fn, params, n_checks=10, seed=0, h=1e-6, tol=1e-6):
    """Compare reverse-mode gradients with central differences on random entries."""
    _, grads = param_gradient(loss_fn, params)

    def value(p):
        return float(loss_fn({k: Tensor(v) for k, v in p.items()}).data)

    rng = np.random.default_rng(seed)
    names = sorted(params)
    for _ in range(n_checks):
        name = names[rng.integers(len(names))]
        idx = tuple(int(rng.integers(s)) for s in params[name].shape)
        fd = finite_difference(value, params, name, idx, h=h)
        an = grads[name][idx]
        assert abs(an - fd) <= tol * max(1.0, abs(fd)), (name, idx, an, fd)


OPS = {
    "add_mul": lambda p: ((p["a"] + p["b"]) * p["a"] - 2.0 * p["b"]).sum(),
    "div_pow": lambda p: (p["a"] / (p["b"].square() + 1.0) + (p["a"] ** 3) * 0.1).mean(),
    "rsub_rdiv": lambda p: ((1.0 - p["a"]) * (3.0 / (p["b"] * p["b"] + 2.0))).sum(),
    "matmul": lambda p: (p["a"] @ p["b"].T).tanh().sum(),
    "exp_gelu": lambda p: (p["a"].exp() * p["b"].gelu()).sum(),
    "index": lambda p: (p["a"][:, 1:3] * p["b"][np.array([0, 0, 2])][:, :2]).sum(),
    "reshape_transpose": lambda p: (p["a"].reshape(2, 6).transpose((1, 0)) @ p["b"].reshape(2, 6)).square().sum(),
    "concat": lambda p: concat([p["a"], p["b"] * 2.0]).tanh().sum(axis=0).square().sum(),
    "softmax": lambda p: (softmax(p["a"] @ p["b"].T) * np.arange(3.0)).sum(),
    "layer_norm": lambda p: (layer_norm(p["a"], p["b"][0], p["b"][1]) * np.linspace(-1, 1, 4)).square().sum(),
    "broadcast": lambda p: (p["a"] + p["b"][0]).square().mean(),
}


@pytest.mark.parametrize("name", sorted(OPS))
def test_op_gradients(name):
    rng = np.random.default_rng(1)
    params = {"a": rng.normal(size=(3, 4)), "b": rng.normal(size=(3, 4))}
    check_gradient(OPS[name], params, n_checks=12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_random_composite_gradient(seed):
    rng = np.random.default_rng(seed)
    params = {"W": rng.normal(size=(4, 5)), "v": rng.normal(size=(5,))}
    x = rng.normal(size=(6, 4))

    def loss(p):
        h = (Tensor(x) @ p["W"]).tanh()
        return ((h * p["v"]).sum(axis=1) - 0.5).square().mean()

    check_gradient(loss, params, n_checks=10, seed=seed)


def test_quadratic_gradient_example():
    value, grads = param_gradient(lambda p: (p["w"] - 3.0).square().sum(), {"w": np.array([5.0])})
    assert value == 4.0
    assert grads["w"][0] == pytest.approx(4.0)


def test_unused_parameter_gets_zero_gradient():
    _, grads = param_gradient(lambda p: p["a"].sum(), {"a": np.ones(2), "b": np.ones(3)})
    assert np.array_equal(grads["b"], np.zeros(3))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_loss_names_batch():
    with pytest.raises(NonFiniteLossError, match="batch-7"):
        param_gradient(lambda p: (p["a"] / 0.0).sum(), {"a": np.ones(1)}, batch="batch-7")


def test_shared_subexpression_accumulates():
    # d/da of (a*a + a) at a=2 is 2a + 1 = 5
    def loss(p):
        s = p["a"] * p["a"]
        return (s + p["a"]).sum()

    _, g = param_gradient(loss, {"a": np.array([2.0])})
    assert g["a"][0] == pytest.approx(5.0)


# --- Adam ---------------------------------------------------------------------

def test_adam_zero_gradient_keeps_params():
    p = {"w": np.array([1.0, -2.0])}
    adam_step(AdamState(lr=0.1), p, {"w": np.zeros(2)})
    assert np.array_equal(p["w"], [1.0, -2.0])


def test_adam_first_step_has_magnitude_lr():
    p = {"w": np.array([0.0, 0.0, 0.0])}
    g = np.array([0.3, -5.0, 1e-3])
    adam_step(AdamState(lr=0.01), p, {"w": g})
    assert np.allclose(p["w"], -0.01 * np.sign(g), rtol=1e-4)


def test_adam_converges_on_quadratic():
    p, state = {"w": np.array([0.0])}, AdamState(lr=0.1)
    for _ in range(200):
        _, g = param_gradient(lambda t: (t["w"] - 3.0).square().sum(), p)
        adam_step(state, p, g)
    assert abs(p["w"][0] - 3.0) < 1e-2
    assert state.step == 200


def test_adam_matches_reference_formula():
    rng = np.random.default_rng(4)
    w = rng.normal(size=5)
    p, state = {"w": w.copy()}, AdamState(lr=0.05)
    m = v = np.zeros(5)
    for k in range(1, 6):
        g = rng.normal(size=5)
        adam_step(state, p, {"w": g})
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        w = w - 0.05 * (m / (1 - 0.9 ** k)) / (np.sqrt(v / (1 - 0.999 ** k)) + 1e-8)
    assert np.allclose(p["w"], w, rtol=1e-13, atol=1e-15)


def test_adam_shape_mismatch():
    with pytest.raises(ValueError):
        adam_step(AdamState(), {"w": np.zeros(2)}, {"w": np.zeros(3)})
    with pytest.raises(ValueError):
        adam_step(AdamState(), {"w": np.zeros(2)}, {"u": np.zeros(2)})


def test_adam_is_deterministic():
    def run():
        rng = np.random.default_rng(11)
        p, state = {"w": rng.normal(size=(3, 3))}, AdamState(lr=0.01)
        for _ in range(20):
            adam_step(state, p, {"w": rng.normal(size=(3, 3))})
        return p["w"]

    assert np.array_equal(run(), run())
