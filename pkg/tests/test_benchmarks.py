"""Reference optima are checked against known minimizers refined by a local solver,
and against a dense random + grid scan."""

import math

import numpy as np
import pytest
from scipy.optimize import minimize, minimize_scalar

from lipbo.benchmarks import (
    REGISTRY,
    BenchmarkError,
    BenchmarkFn,
    OutOfBoxError,
    evaluate,
    lookup,
    reference_optima_audit,
)
from lipbo.direct import BoxDomain

# Published minimizers (maximization sign applied), used only as local-search seeds.
KNOWN_ARGMAX = {
    "branin-2": [math.pi, 2.275],
    "camel-2": [0.0898, -0.7126],
    "goldstein-2": [0.0, -1.0],
    "michalewicz-2": [2.20, 1.57],
    "hartmann-3": [0.114614, 0.555649, 0.852547],
    "hartmann-6": [0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573],
    "rosenbrock-2": [1.0, 1.0],
    "rosenbrock-3": [1.0] * 3,
    "rosenbrock-4": [1.0] * 4,
    "rosenbrock-5": [1.0] * 5,
}


def refine(b, x0):
    res = minimize(lambda x: -b.fn(x[None, :])[0], x0, method="L-BFGS-B",
                   bounds=list(zip(b.box.lower, b.box.upper)), options={"ftol": 1e-15, "gtol": 1e-12})
    return res.x, -res.fun


def test_registry_names_and_dims():
    assert set(REGISTRY) == {"branin-2", "camel-2", "goldstein-2", "michalewicz-2", "michalewicz-5",
                             "michalewicz-10", "hartmann-3", "hartmann-6", "rosenbrock-2", "rosenbrock-3",
                             "rosenbrock-4", "rosenbrock-5"}
    for name in REGISTRY:
        assert lookup(name).dim == int(name.rsplit("-", 1)[1])
    assert lookup("branin-2").dim == 2 and lookup("rosenbrock-4").dim == 4


def test_unknown_name_lists_registry():
    with pytest.raises(BenchmarkError, match="branin-2"):
        lookup("unknown")


@pytest.mark.parametrize("name", list(KNOWN_ARGMAX))
def test_ref_optimum_matches_refined_known_optimizer(name):
    b = lookup(name)
    _, val = refine(b, np.array(KNOWN_ARGMAX[name]))
    assert abs(val - b.ref_optimum) <= 1e-6


def test_rosenbrock_zero_at_ones():
    for d in (2, 3, 4, 5):
        assert lookup(f"rosenbrock-{d}").evaluate(np.ones(d)) == 0.0


def test_branin_has_three_optimizers():
    b = lookup("branin-2")
    for x in ([-math.pi, 12.275], [math.pi, 2.275], [9.42478, 2.475]):
        assert abs(b.evaluate(np.array(x)) - b.ref_optimum) <= 1e-5


@pytest.mark.parametrize("d", [2, 5, 10])
def test_michalewicz_separable_oracle(d):
    # the sum splits by coordinate, so the optimum is a sum of 1-d maxima
    grid = np.linspace(0, math.pi, 200_001)
    total = 0.0
    for i in range(1, d + 1):
        g = lambda x: np.sin(x) * np.sin(i * x * x / math.pi) ** 20  # noqa: E731
        x0 = grid[np.argmax(g(grid))]
        res = minimize_scalar(lambda x: -g(x), bounds=(max(x0 - 1e-4, 0), min(x0 + 1e-4, math.pi)),
                              method="bounded", options={"xatol": 1e-14})
        total += -res.fun
    assert abs(total - lookup(f"michalewicz-{d}").ref_optimum) <= 1e-9


@pytest.mark.parametrize("name", REGISTRY)
def test_never_above_ref_on_samples(name):
    b = lookup(name)
    X = b.box.sample(np.random.default_rng(1), 20_000)
    v = b.evaluate(X)
    assert np.all(np.isfinite(v)) and np.all(v <= b.ref_optimum + 1e-9)
    assert np.array_equal(v, b.evaluate(X))


def test_single_point_returns_float():
    b = lookup("camel-2")
    assert isinstance(evaluate(b, np.zeros(2)), float)


def test_out_of_box_and_shape_errors():
    b = lookup("hartmann-3")
    with pytest.raises(OutOfBoxError):
        b.evaluate(np.array([0.5, 0.5, 1.5]))
    with pytest.raises(BenchmarkError):
        b.evaluate(np.zeros(2))


def test_audit_branin_full():
    rep = reference_optima_audit(lookup("branin-2"), n=1_000_000, seed=0)
    assert rep.passed and 0 <= rep.gap < 1e-3
    assert rep.line().startswith("PASS")


def test_audit_negative_control():
    stub = BenchmarkFn("const", 1, BoxDomain([0.0], [1.0]), lambda X: np.full(len(X), 2.0), 1.0)
    rep = reference_optima_audit(stub, n=1000)
    assert not rep.passed and rep.line().startswith("FAIL")
    assert rep.argmax is not None


def test_audit_michalewicz_10_reports_gap():
    rep = reference_optima_audit(lookup("michalewicz-10"), n=200_000, seed=0)
    assert rep.passed and rep.gap > 1.0  # random scanning is far from the 10-d optimum
