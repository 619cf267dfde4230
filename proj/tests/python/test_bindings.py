import math

import numpy as np
import pytest

import vpdirac

# Closed-form values of the default datum, computed with mpmath.
PLASMA_KINETIC = 1.35
CHARGE_KINETIC = 0.125
H2 = 3.1237838705079511649


def test_version():
    assert vpdirac.__version__


def test_default_density_reference_values():
    d = vpdirac.InitialDensity.default_profile()
    assert d.total_mass == pytest.approx(0.9)
    e = d.reference_energy()
    assert e.plasma_kinetic == pytest.approx(PLASMA_KINETIC, rel=1e-10)
    assert e.charge_kinetic == pytest.approx(CHARGE_KINETIC, rel=1e-14)
    assert d.reference_moment(2.0) == pytest.approx(H2, rel=1e-8)


def test_inadmissible_profile_raises():
    spec = vpdirac.ProfileSpec()
    spec.mass = 1.5
    with pytest.raises(ValueError, match="M0 < 1"):
        vpdirac.InitialDensity.create(spec)


def test_sample_and_cutoff():
    d = vpdirac.InitialDensity.default_profile()
    e = vpdirac.sample_initial_ensemble(d, 2048, seed=7)
    assert len(e) == 2048
    assert e.positions.shape == (2048, 3)
    mass = sum(e.weights)
    assert mass == pytest.approx(0.9, rel=0.05)
    cut = vpdirac.apply_cutoff(e, 4)
    assert sum(cut.weights) < mass
    assert cut.ids == e.ids


def test_fields():
    x = np.array([[0.0, 0.0, 0.0]])
    e = vpdirac.ParticleEnsemble(x, np.zeros((1, 3)), [2.0])
    E = vpdirac.plasma_field(e, np.array([[2.0, 0.0, 0.0]]))
    assert E[0] == pytest.approx([0.5, 0.0, 0.0])
    F = vpdirac.point_charge_field([0, 0, 0], np.array([[0.0, 0.0, 0.5]]))
    assert F[0] == pytest.approx([0.0, 0.0, 4.0])
    with pytest.raises(ArithmeticError):
        vpdirac.point_charge_field([0, 0, 0], np.array([[0.0, 0.0, 0.0]]))
    K = np.array(vpdirac.gradient_kernel([0.3, -0.2, 0.5]))
    assert abs(np.trace(K)) < 1e-12
    assert np.array_equal(K, K.T)


def test_short_run_conserves_mass_and_energy():
    d = vpdirac.InitialDensity.default_profile()
    cfg = vpdirac.SimulationConfig()
    cfg.particles = 256
    cfg.horizon = 0.1
    flow = vpdirac.run(cfg, d)
    assert flow.times[0] == 0.0
    assert flow.times[-1] == pytest.approx(0.1)
    first = flow.ensemble_at(0)
    last = flow.ensemble_at(len(flow.times) - 1)
    assert vpdirac.diagnostics.total_mass(first) == vpdirac.diagnostics.total_mass(last)
    h0 = vpdirac.diagnostics.total_energy(first, flow.charge_at(0), flow.softening).total()
    h1 = vpdirac.diagnostics.total_energy(last, flow.charge_at(len(flow.times) - 1), flow.softening).total()
    assert abs(h1 - h0) / h0 < 1e-6


def test_flow_metrics_on_identical_flows():
    d = vpdirac.InitialDensity.default_profile()
    cfg = vpdirac.SimulationConfig()
    cfg.particles = 128
    cfg.horizon = 0.1
    a, b = vpdirac.run_pair(cfg, d, 8, 16)
    p = vpdirac.flowmetrics.MetricParams()
    k = len(a.times) - 1
    lhs, rhs = vpdirac.flowmetrics.chebyshev_consistency(a, b, p, k)
    assert lhs <= rhs * (1 + 1e-12)
    assert vpdirac.flowmetrics.phi_functional(a, a, p, k) == 0.0
    assert vpdirac.flowmetrics.convergence_in_measure(a, a, 0.1, 5.0, k) == 0.0


def test_beta_and_weak_norm():
    assert vpdirac.flowmetrics.beta([0, 0, 0]) == 0.0
    z = [1.0, 2.0, 0.5]
    r2 = sum(c * c for c in z)
    assert vpdirac.flowmetrics.beta(z) == pytest.approx(math.log(1 + math.log(1 + r2 / 2)))
    w = vpdirac.analysis.point_charge_weak_norm([0.1, 0.2, 0.3])
    assert w == pytest.approx((4 * math.pi / 3) ** (2 / 3), rel=1e-2)
    assert vpdirac.diagnostics.interpolation_constant(2.0) == pytest.approx(3.4762, rel=1e-4)


def test_config_round_trip():
    text = vpdirac.canonical_config("kind: simulate\n", ["simulation.n=16"])
    assert "n: 16" in text
    assert vpdirac.canonical_config(text) == text
    assert vpdirac.config_hash(text) == vpdirac.config_hash("kind: simulate\n", ["simulation.n=16"])
    with pytest.raises(ValueError, match="simulation.n"):
        vpdirac.canonical_config("kind: simulate\nsimulation:\n  n: 0\n")
