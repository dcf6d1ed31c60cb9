"""Smoke test for the pynpmix extension module.

Build the module first, for example with
`maturin develop -m crates/python/Cargo.toml`, then run
`python python/smoke_test.py`.
"""

import json
import math

import pynpmix


def check_mixture():
    model = pynpmix.VanillaMixture([0.3, 0.7], [-2.5, 2.5], 0.25)
    assert model.k == 2
    ys = model.sample(5000, seed=1)
    assert len(ys) == 5000
    assert ys == model.sample(5000, seed=1)

    fit = pynpmix.fit_mixture(ys, 2, 0.25)
    assert abs(sum(fit.lambdas) - 1.0) < 1e-9
    assert fit.lambdas == sorted(fit.lambdas)
    lambda_error, f_errors, max_f_error, w1 = fit.evaluate(model)
    assert lambda_error < 0.05, lambda_error
    assert len(f_errors) == 2 and max_f_error < 0.3, f_errors
    assert w1 < 0.1, w1

    ys_grid, values = fit.component(0)
    step = ys_grid[1] - ys_grid[0]
    mass = step * (sum(values) - 0.5 * (values[0] + values[-1]))
    assert abs(mass - 1.0) < 1e-3, mass

    again = pynpmix.MixtureFit.from_json(fit.to_json())
    assert again.lambdas == fit.lambdas
    print("mixture:", fit, "lambda error %.4f, max f error %.4f" % (lambda_error, max_f_error))


def check_regression():
    spec = {
        "a": -1.0,
        "b": 1.0,
        "p_x": {"kind": "uniform"},
        "lambdas": [0.35, 0.65],
        "m": [
            {"kind": "polynomial", "coeffs": [0.0, 1.0]},
            {"kind": "polynomial", "coeffs": [0.0, -1.0]},
        ],
        "sigma": 0.2,
        "g0": {"kind": "point_mass"},
        "x0": 1.0,
    }
    model = pynpmix.MixedRegression.from_json(json.dumps(spec))
    xs, ys = model.sample(20000, seed=3)
    x_star, profile = pynpmix.find_separation(xs, ys, 2, 0.05)
    assert abs(x_star) > 0.8 and profile, x_star

    fit = pynpmix.fit_regression(xs, ys, 2, 0.2, x0=1.0)
    assert len(fit.m_hat) == 2
    assert all(len(curve) == len(fit.x_grid) for curve in fit.m_hat)
    m_error, lambda_error, f_error, best_perm, pointwise = fit.evaluate(model)
    assert m_error < 0.2, m_error
    assert pointwise <= best_perm + 1e-12
    assert fit.to_csv().startswith("x,")
    print("regression:", fit, "m error %.4f" % m_error)


def check_utilities():
    assert abs(pynpmix.w1([(0.0, 1.0)], [(1.5, 1.0)]) - 1.5) < 1e-12
    grid, values = pynpmix.kde([0.0, 0.2, 0.4], 0.5, -2.0, 2.0, 401)
    step = grid[1] - grid[0]
    mass = step * (sum(values) - 0.5 * (values[0] + values[-1]))
    assert abs(mass - 1.0) < 1e-9, mass
    try:
        pynpmix.VanillaMixture([0.5, 0.6], [0.0, 1.0], 1.0)
    except ValueError as e:
        print("rejected bad weights:", e)
    else:
        raise AssertionError("weights not summing to one were accepted")
    assert math.isclose(pynpmix.VanillaMixture([1.0], [0.0], 1.0).cdf(0.0), 0.5)


if __name__ == "__main__":
    print("pynpmix", pynpmix.__version__)
    check_utilities()
    check_mixture()
    check_regression()
    print("ok")
