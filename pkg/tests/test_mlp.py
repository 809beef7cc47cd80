import numpy as np
import pytest

from cdr_icl.autodiff import Tensor, finite_difference, param_gradient
from cdr_icl.mlp import PinnNet, init_pinn, mlp_forward, mlp_input_jet


def reference_forward(net: PinnNet, x, t):
    """Independent loop-based evaluation, one point at a time."""
    out = []
    for xi, ti in zip(np.atleast_1d(x), np.atleast_1d(t)):
        if net.features == "periodic":
            h = np.array([np.cos(xi), np.sin(xi), ti * net.input_scale[1] + net.input_shift[1]])
        else:
            h = np.array([xi * net.input_scale[0] + net.input_shift[0],
                          ti * net.input_scale[1] + net.input_shift[1]])
        for i in range(net.n_layers):
            W, b = net.params[f"W{i}"], net.params[f"b{i}"]
            h = np.array([sum(h[r] * W[r, c] for r in range(W.shape[0])) + b[c] for c in range(W.shape[1])])
            if i < net.n_layers - 1:
                h = np.tanh(h)
        out.append(h[0])
    return np.array(out)


def linear_net(wx, wt, b):
    return PinnNet((2, 1), {"W0": np.array([[wx], [wt]]), "b0": np.array([b])})


def test_zero_weights_give_bias_path():
    net = init_pinn((2, 8, 8, 1), seed=0, features="affine")
    for k in net.params:
        net.params[k][...] = 0.0
    assert np.array_equal(mlp_forward(net, [0.3, 2.0], [0.1, 0.9]), [0.0, 0.0])
    net.params["b2"][...] = 0.7
    assert np.allclose(mlp_forward(net, [0.3], [0.1]), 0.7)


def test_linear_layer_value():
    assert mlp_forward(linear_net(2, 3, 1), 1.0, 1.0)[0] == pytest.approx(6.0)


@pytest.mark.parametrize("features", ["affine", "periodic"])
def test_forward_matches_reference(features):
    rng = np.random.default_rng(0)
    net = init_pinn((2, 7, 5, 1), seed=3, features=features)
    x, t = rng.uniform(0, 2 * np.pi, 9), rng.uniform(0, 1, 9)
    assert np.allclose(mlp_forward(net, x, t), reference_forward(net, x, t), rtol=1e-12, atol=1e-14)


def test_linear_jet():
    jet = mlp_input_jet(linear_net(2, 3, 0), np.array([0.5, -1.0]), np.array([2.0, 0.25]))
    assert np.allclose(jet.u, [7.0, -1.25])
    assert np.allclose(jet.du_dx, 2) and np.allclose(jet.du_dt, 3) and np.allclose(jet.d2u_dx2, 0)


def test_tanh_unit_jet():
    net = PinnNet((2, 1, 1), {"W0": np.array([[1.0], [0.0]]), "b0": np.zeros(1),
                              "W1": np.array([[1.0]]), "b1": np.zeros(1)})
    jet = mlp_input_jet(net, 0.0, 0.4)
    assert tuple(float(v[0]) for v in jet) == (0.0, 1.0, 0.0, 0.0)


def test_jets_match_finite_differences_on_100_random_nets():
    rng = np.random.default_rng(2024)
    h = 1e-4
    worst = 0.0
    for trial in range(100):
        widths = (2, int(rng.integers(3, 17)), int(rng.integers(3, 17)), 1)
        net = init_pinn(widths, seed=trial, features="periodic" if trial % 2 else "affine")
        x, t = rng.uniform(0, 2 * np.pi, 16), rng.uniform(0, 1, 16)
        jet = mlp_input_jet(net, x, t)
        f = lambda a, b: mlp_forward(net, a, b)  # noqa: E731
        fd_x = (f(x + h, t) - f(x - h, t)) / (2 * h)
        fd_t = (f(x, t + h) - f(x, t - h)) / (2 * h)
        fd_xx = (f(x + h, t) - 2 * f(x, t) + f(x - h, t)) / h ** 2
        for an, fd in ((jet.du_dx, fd_x), (jet.du_dt, fd_t), (jet.d2u_dx2, fd_xx)):
            err = np.linalg.norm(an - fd) / np.linalg.norm(fd)
            worst = max(worst, err)
    assert worst < 1e-5


def test_jet_value_equals_forward():
    net = init_pinn((2, 16, 16, 1), seed=5)
    x, t = np.linspace(0, 6, 11), np.linspace(0, 1, 11)
    assert np.allclose(mlp_input_jet(net, x, t).u, mlp_forward(net, x, t), rtol=0, atol=1e-14)


def test_periodic_features_make_net_periodic():
    net = init_pinn((2, 16, 1), seed=1)
    t = np.linspace(0, 1, 5)
    assert np.allclose(mlp_forward(net, np.zeros(5), t), mlp_forward(net, np.full(5, 2 * np.pi), t), atol=1e-13)


def test_jet_parameter_gradient_matches_finite_differences():
    """Gradients flow through the jet rules themselves."""
    net = init_pinn((2, 8, 8, 1), seed=9)
    from cdr_icl.mlp import jet_tensors

    x, t = np.linspace(0.2, 6.0, 7), np.linspace(0.05, 0.95, 7)

    def loss(p):
        u, ux, ut, uxx = jet_tensors(net, p, x, t)
        return (ut + 0.5 * ux - 0.3 * uxx - u * (1.0 - u)).square().mean()

    _, grads = param_gradient(loss, net.params)
    rng = np.random.default_rng(0)
    for _ in range(12):
        name = sorted(net.params)[rng.integers(len(net.params))]
        idx = tuple(int(rng.integers(s)) for s in net.params[name].shape)
        fd = finite_difference(lambda p: float(loss({k: Tensor(v) for k, v in p.items()}).data),
                               net.params, name, idx)
        assert abs(grads[name][idx] - fd) <= 1e-3 * max(abs(fd), 1e-8)


def test_width_validation():
    with pytest.raises(ValueError):
        init_pinn((3, 8, 1))
    with pytest.raises(ValueError):
        init_pinn((2, 8, 2))
