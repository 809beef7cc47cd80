import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdr_icl.pde import (
    CdrParams,
    Grid,
    InitialCondition,
    ParameterSpace,
    SolutionField,
    SolverError,
    enumerate_parameters,
    eval_initial_condition,
    eval_reaction,
    solve_cdr,
    spectral_interpolate,
)


def rel_l2(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


# --- reaction terms and initial conditions -----------------------------------

@pytest.mark.parametrize("u,rho,expected", [
    (0.0, (5, 7, 3), 0.0),
    (0.5, (1, 0, 0), 0.25),
    (0.5, (0, 1, 0), 0.375),
    (0.5, (0, 0, 1), 0.125),
])
def test_reaction_examples(u, rho, expected):
    assert eval_reaction(u, rho) == pytest.approx(expected, abs=1e-15)


@given(st.floats(-3, 3), st.lists(st.floats(-20, 20), min_size=3, max_size=3),
       st.lists(st.floats(-20, 20), min_size=3, max_size=3))
def test_reaction_is_linear_in_strengths(u, r, s):
    both = eval_reaction(u, tuple(a + b for a, b in zip(r, s)))
    assert both == pytest.approx(eval_reaction(u, r) + eval_reaction(u, s), abs=1e-9)


def test_initial_condition_examples():
    bump = InitialCondition()
    assert eval_initial_condition(bump, np.pi) == pytest.approx(1.0)
    assert eval_initial_condition(bump, 1.5 * np.pi) == pytest.approx(math.exp(-0.5), rel=1e-12)
    assert eval_initial_condition(InitialCondition("one_plus_sin"), 0.0) == pytest.approx(1.0)


def test_initial_condition_periodic_wraparound():
    for preset in ("sin", "one_plus_sin"):
        ic = InitialCondition(preset)
        assert abs(ic(0.0) - ic(2 * np.pi)) < 1e-12
    bump = InitialCondition()
    assert abs(bump(0.0) - bump(2 * np.pi)) < 1e-6


def test_unknown_preset_rejected():
    with pytest.raises(ValueError):
        InitialCondition("square")


# --- parameter containers ---------------------------------------------------

def test_params_validation():
    with pytest.raises(ValueError):
        CdrParams(nu=-1.0)
    with pytest.raises(ValueError):
        CdrParams(beta=float("nan"))
    assert CdrParams(rho=(1, 0, 0)).rho == (1.0, 0.0, 0.0)


def test_enumerate_counts():
    assert len(enumerate_parameters(ParameterSpace.integer(beta=(1, 5)))) == 5
    assert len(enumerate_parameters(ParameterSpace.integer(beta=(1, 5), nu=(1, 5), rho1=(1, 5)))) == 125
    with pytest.raises(ValueError):
        enumerate_parameters(ParameterSpace.explicit(beta=[]))
    with pytest.raises(ValueError):
        enumerate_parameters(ParameterSpace.integer(beta=(3, 1)))


def test_enumerate_lexicographic():
    alphas = enumerate_parameters(ParameterSpace.integer(beta=(1, 2), rho1=(1, 3)))
    assert [(a.beta, a.rho[0]) for a in alphas] == [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3)]


@given(st.dictionaries(st.sampled_from(["beta", "nu", "rho1", "rho2", "rho3"]),
                       st.tuples(st.integers(0, 4), st.integers(0, 3)), min_size=1))
def test_enumerate_is_cartesian_product(ranges):
    ranges = {k: (lo, lo + span) for k, (lo, span) in ranges.items()}
    alphas = enumerate_parameters(ParameterSpace.integer(**ranges))
    assert len(alphas) == math.prod(hi - lo + 1 for lo, hi in ranges.values())
    assert len(set(alphas)) == len(alphas)
    assert alphas == enumerate_parameters(ParameterSpace.integer(**ranges))


def test_uniform_space_seeded():
    space = ParameterSpace.uniform(7, seed=3, beta=(1.0, 2.0))
    a, b = enumerate_parameters(space), enumerate_parameters(space)
    assert a == b and len(a) == 7
    assert all(1.0 <= p.beta <= 2.0 for p in a)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(nx=100)
    with pytest.raises(ValueError):
        Grid(nx=4)
    g = Grid()
    assert g.t[0] == 0.0 and g.t[-1] == 1.0
    x, t = g.coords(np.array([0, 1, g.nt]))
    assert np.allclose(x, [0, 0, g.x[1]]) and np.allclose(t, [0, g.t[1], 0])


def test_field_rejects_bad_values():
    g = Grid(8, 2)
    with pytest.raises(ValueError):
        SolutionField(g, np.zeros((8, 3)), CdrParams())
    bad = np.zeros((8, 2))
    bad[0, 0] = np.inf
    with pytest.raises(ValueError):
        SolutionField(g, bad, CdrParams())


# --- solver oracles -----------------------------------------------------------

def test_traveling_wave():
    g = Grid()
    f = solve_cdr(CdrParams(beta=1.0), InitialCondition("one_plus_sin"), g)
    X, T = np.meshgrid(g.x, g.t, indexing="ij")
    assert rel_l2(f.values, 1 + np.sin(X - T)) < 1e-4


def test_heat_eigenmode():
    g = Grid()
    f = solve_cdr(CdrParams(nu=2.0), InitialCondition("sin"), g)
    X, T = np.meshgrid(g.x, g.t, indexing="ij")
    assert rel_l2(f.values, np.exp(-2 * T) * np.sin(X)) < 1e-4


def test_exact_logistic():
    g = Grid()
    f = solve_cdr(CdrParams(rho=(5, 0, 0)), InitialCondition("constant", value=0.5), g)
    exact = np.exp(5 * g.t) / (np.exp(5 * g.t) + 1)
    assert rel_l2(f.values, np.broadcast_to(exact, f.values.shape)) < 1e-6


def test_refined_grid_self_oracle():
    alpha, ic = CdrParams(beta=1.0, nu=1.0, rho=(1, 0, 0)), InitialCondition()
    coarse = solve_cdr(alpha, ic, Grid(256, 100))
    fine = solve_cdr(alpha, ic, Grid(1024, 397))
    assert rel_l2(coarse.values, fine.values[::4, ::4]) < 1e-4


def test_solver_reports_blow_up():
    alpha = CdrParams(rho=(-50, 0, 0))
    with pytest.raises(SolverError, match="rho1=-50"):
        solve_cdr(alpha, InitialCondition("constant", value=2.0), Grid(16, 11))


# --- solver invariants --------------------------------------------------------

def test_first_column_is_initial_condition():
    g = Grid()
    ic = InitialCondition()
    f = solve_cdr(CdrParams(beta=2, nu=1, rho=(1, 1, 1)), ic, g)
    assert np.array_equal(f.values[:, 0], ic(g.x))


def test_periodic_wraparound_of_solution():
    f = solve_cdr(CdrParams(beta=3, nu=0.5, rho=(2, 0, 0)), InitialCondition(), Grid())
    for j in (0, 40, 99):
        a, b = f.at_x(np.array([0.0, 2 * np.pi]), j)
        assert abs(a - b) < 1e-10
        assert abs(a - f.values[0, j]) < 1e-10


def test_spectral_interpolation_is_exact_on_nodes():
    g = Grid(32, 2)
    samples = np.cos(3 * g.x) + 0.2 * np.sin(g.x)
    assert np.allclose(spectral_interpolate(samples, g.x), samples, atol=1e-13)
    x = np.array([0.3, 1.7])
    assert np.allclose(spectral_interpolate(samples, x), np.cos(3 * x) + 0.2 * np.sin(x), atol=1e-13)


@settings(max_examples=15, deadline=None)
@given(st.floats(-20, 20))
def test_convection_conserves_mass(beta):
    f = solve_cdr(CdrParams(beta=beta), InitialCondition(), Grid(128, 50))
    mean = f.values.mean(axis=0)
    assert np.all(np.abs(mean - mean[0]) <= 1e-8 * abs(mean[0]))


@settings(max_examples=15, deadline=None)
@given(st.floats(0.01, 20))
def test_diffusion_damps_variance(nu):
    f = solve_cdr(CdrParams(nu=nu), InitialCondition(), Grid(128, 50))
    var = f.values.var(axis=0)
    assert np.all(np.diff(var) <= 1e-15)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.05, 0.95))
def test_logistic_stays_in_unit_interval_and_grows(rho, base):
    ic = InitialCondition("constant", value=base)
    f = solve_cdr(CdrParams(rho=(rho, 0, 0)), ic, Grid(64, 40))
    assert np.all((f.values > 0) & (f.values < 1))
    assert np.all(np.diff(f.values, axis=1) >= -1e-12)


def test_refinement_convergence_for_convection():
    """Doubling the resolution cuts the error against the exact traveling bump by >= 4x."""
    ic = InitialCondition(width=0.5)
    errors = []
    for nx in (8, 16, 32, 64):
        g = Grid(nx, 11)
        f = solve_cdr(CdrParams(beta=2.0), ic, g)
        X, T = np.meshgrid(g.x, g.t, indexing="ij")
        exact = sum(eval_initial_condition(ic, X - 2.0 * T + 2 * np.pi * k) for k in (-1, 0, 1))
        errors.append(rel_l2(f.values, exact))
    for coarse, fine in zip(errors[:-1], errors[1:]):
        # the floor is the bump's own wraparound mismatch, about 3e-9
        assert fine <= coarse / 4 or fine < 1e-8


def test_solver_oracles_runtime():
    g = Grid()
    start = time.perf_counter()
    solve_cdr(CdrParams(beta=1.0), InitialCondition("one_plus_sin"), g)
    solve_cdr(CdrParams(nu=2.0), InitialCondition("sin"), g)
    solve_cdr(CdrParams(rho=(5, 0, 0)), InitialCondition("constant", value=0.5), g)
    assert time.perf_counter() - start < 5.0
