#!/usr/bin/env python3
"""
🧪 GM ESTIMATOR TEST - ψ-functions, LS reduction and outlier robustness
"""

import sys
import os

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest
from scipy import signal

from src.auxiliary.aux_ar import AuxParam, ls_estimate
from src.contamination.outlier_injector import OutlierConfig, contaminate
from src.model.carma_model import Car1Family, build_state_space
from src.model.exceptions import DegenerateSeriesError, ModelSpecificationError
from src.robust.gm_estimator import GmConfig, estimating_functions, gm_estimate, mallows_phi, robust_scale
from src.robust.psi_functions import PsiKind, PsiSpec, bisquare_psi, chi_reference, huber_psi
from src.simulation.carma_simulator import simulate_carma_path
from src.simulation.levy_drivers import DriverConfig
from src.simulation.rng_streams import make_stream
from src.simulation.sampled_series import SampledSeries


def car1_series(theta=-0.2, n=2000, seed=31):
    family = Car1Family()
    spec = build_state_space(family.theta([theta]), family)
    return simulate_carma_path(spec, n, 1.0, DriverConfig(), make_stream(seed))


def test_psi_shapes():
    assert huber_psi(5.0, 4.0) == 4.0
    assert huber_psi(-5.0, 4.0) == -4.0
    assert huber_psi(1.5, 4.0) == 1.5
    assert bisquare_psi(5.0, 4.685) == 0.0
    assert bisquare_psi(-1.0, 4.685) == pytest.approx(-(1 - 1 / 4.685 ** 2) ** 2)

    u = np.linspace(-10.0, 10.0, 201)
    for spec in (PsiSpec(PsiKind.HUBER, 4.0), PsiSpec(PsiKind.BISQUARE, 4.685)):
        # odd, bounded, weight is ψ(u)/u
        assert np.allclose(spec.psi(-u), -spec.psi(u))
        assert np.max(np.abs(spec.psi(u))) <= spec.k
        nonzero = u != 0
        assert np.allclose(spec.weight(u)[nonzero], spec.psi(u)[nonzero] / u[nonzero])
        assert spec.weight(0.0) == 1.0
        assert spec.psi_prime(0.0) == 1.0

    identity = PsiSpec(PsiKind.IDENTITY)
    assert np.array_equal(identity.psi(u), u)
    assert chi_reference(identity) == 1.0
    with pytest.raises(ModelSpecificationError):
        PsiSpec(PsiKind.HUBER, 0.0)
    assert PsiSpec.from_name("Bisquare", 4.685).kind is PsiKind.BISQUARE


def test_psi_prime_matches_finite_difference():
    spec = PsiSpec(PsiKind.BISQUARE, 4.685)
    u = np.array([-3.0, -0.7, 0.4, 2.2, 4.0])
    step = 1e-6
    numeric = (spec.psi(u + step) - spec.psi(u - step)) / (2 * step)
    assert np.allclose(spec.psi_prime(u), numeric, atol=1e-6)


@pytest.mark.parametrize("spec", [PsiSpec(PsiKind.HUBER, 4.0), PsiSpec(PsiKind.BISQUARE, 4.685)])
def test_chi_reference_matches_monte_carlo(spec):
    z = make_stream(3).standard_normal(1_000_000)
    assert chi_reference(spec) == pytest.approx(np.mean(spec.psi(z) ** 2), abs=5e-3)
    assert 0.0 < chi_reference(spec) < 1.0


def test_gm_reduces_to_ls():
    series = car1_series(theta=-2.0, n=1000)
    ls = ls_estimate(series, 3)
    gm = gm_estimate(series, 3, GmConfig.least_squares())
    assert gm.converged
    assert np.max(np.abs(gm.aux.as_vector() - ls.as_vector())) < 1e-8


def test_ls_solution_zeroes_ls_estimating_functions():
    series = car1_series(theta=-2.0, n=1000)
    ls = ls_estimate(series, 2)
    rows = estimating_functions(series, ls, GmConfig.least_squares())
    assert rows.shape == (998, 3)
    assert np.max(np.abs(rows.mean(axis=0))) < 1e-10


def test_gm_clean_series_close_to_ls():
    series = car1_series()
    gm = gm_estimate(series, 1)
    ls = ls_estimate(series, 1)
    assert gm.converged
    assert abs(gm.pis[0] - ls.pis[0]) < 0.05
    assert abs(gm.sigma - ls.sigma) < 0.1


def test_gm_resists_additive_outliers():
    clean = car1_series()
    observed = contaminate(clean, OutlierConfig(gamma=0.1, xi=10.0), make_stream(32))
    truth = np.exp(-0.2)
    ls = ls_estimate(observed, 1)
    gm = gm_estimate(observed, 1)
    assert abs(ls.pis[0] - truth) > 0.3
    assert abs(gm.pis[0] - truth) < 0.1
    # outlying rows end up with (almost) no weight
    assert gm.weights is not None
    assert gm.weights.shape == (observed.n - 1,)


def test_gm_solution_zeroes_estimating_functions():
    clean = car1_series(theta=-1.0, n=3000, seed=33)
    observed = contaminate(clean, OutlierConfig(gamma=0.05, xi=6.0), make_stream(34))
    cfg = GmConfig(bisquare_iters=500, convergence_tol=1e-10)
    gm = gm_estimate(observed, 2, cfg)
    assert gm.converged
    rows = estimating_functions(observed, gm.aux, cfg)
    assert rows.shape == (observed.n - 2, 3)
    assert np.max(np.abs(rows[:, :2].mean(axis=0))) < 1e-6
    assert abs(rows[:, 2].mean()) < 1e-6


def ar1_path(n, seed, phi=0.5):
    e = make_stream(seed).standard_normal(n + 500)
    return SampledSeries(h=1.0, values=signal.lfilter([1.0], [1.0, -phi], e)[500:])


def test_gm_beats_ls_under_outliers_paired():
    truth = np.array([0.5, 1.0])
    wins = 0
    for rep in range(50):
        observed = contaminate(ar1_path(2000, 100 + rep), OutlierConfig(gamma=0.1, xi=10.0),
                               make_stream(100 + rep, 1))
        gm = gm_estimate(observed, 1).aux.as_vector()
        ls = ls_estimate(observed, 1).as_vector()
        wins += np.linalg.norm(gm - truth) < np.linalg.norm(ls - truth)
    assert wins >= 45


def test_gm_is_scale_equivariant():
    series = car1_series(theta=-1.0, n=800)
    base = gm_estimate(series.values, 2)
    scaled = gm_estimate(5.0 * series.values, 2)
    # the stopping rule is relative to ‖(π, σ)‖, so the sweep count may differ by one
    assert np.allclose(scaled.pis, base.pis, atol=1e-4)
    assert scaled.sigma == pytest.approx(5.0 * base.sigma, rel=1e-4)


def test_gm_degenerate_series():
    with pytest.raises(DegenerateSeriesError):
        gm_estimate(np.ones(50), 2)
    with pytest.raises(DegenerateSeriesError):
        gm_estimate(np.arange(3.0), 2)
    with pytest.raises(DegenerateSeriesError):
        estimating_functions(np.zeros(20), AuxParam([0.1], 1.0), GmConfig())


def test_mallows_phi_and_scale():
    cfg = GmConfig()
    assert mallows_phi(np.zeros(2), 1.5, cfg) == pytest.approx(bisquare_psi(1.5, 4.0))
    assert mallows_phi(np.array([10.0, 0.0]), 1.5, cfg) == 0.0
    assert robust_scale(np.array([1.0, 2.0, 3.0, 4.0, 100.0])) == pytest.approx(1.0 / 0.6744897501960817)


def test_gm_config():
    cfg = GmConfig.from_dict({"huber_k": 3.0, "bisquare_k": 5.0, "bisquare_iters": 20})
    assert cfg.stage1.k == 3.0
    assert cfg.stage2.k == 5.0
    assert cfg.bisquare_iters == 20
    assert cfg.huber_iters == 6
    default = GmConfig()
    assert default.stage1.k == default.stage2.k == default.weight.k == 4.0
    assert GmConfig.from_dict({}).stage2 == PsiSpec(PsiKind.BISQUARE, 4.0)
    with pytest.raises(ValueError):
        GmConfig(huber_iters=0)
    with pytest.raises(ValueError):
        GmConfig(chi_reference="empirical")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
