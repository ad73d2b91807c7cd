import numpy as np
import pytest

from vpident import (
    HardeningParams,
    MetricSpec,
    benchmark_history,
    check_metric_axioms,
    dist_euclidean,
    dist_euclidean_nondim,
    dist_mechanics,
)
from vpident.errors import ZeroReferenceParameter
from vpident.loading import DeformationHistory


def perturbed(base, rng, scale=0.1):
    return HardeningParams.from_vector(base.as_vector() * (1.0 + scale * rng.uniform(-1, 1, 6)))


@pytest.fixture(scope="module")
def mech_spec(material):
    return MetricSpec.mechanics(benchmark_history(1, duration=40.0), material, n_steps=100)


@pytest.fixture(scope="module")
def mech_spec_h2(material):
    return MetricSpec.mechanics(benchmark_history(2, duration=40.0), material, n_steps=100)


def elastic_history(duration=40.0):
    """A cycle so shallow the response never leaves the elastic domain."""
    stretch = 1.0005
    f2 = np.diag([stretch, stretch**-0.5, stretch**-0.5])
    keypoints = ((0.0, np.eye(3)), (0.5 * duration, f2), (duration, np.eye(3)))
    return DeformationHistory(keypoints=keypoints, projection=True)


# ---------------------------------------------------------------------------
# euclidean distances


def test_euclidean_trivial(truth):
    assert dist_euclidean(truth, truth) == 0.0
    other = HardeningParams.from_vector(truth.as_vector() + np.array([10, 0, 0, 0, 0, 0.0]))
    assert dist_euclidean(truth, other) == pytest.approx(10.0)


def test_euclidean_symmetry(truth):
    rng = np.random.default_rng(1)
    for _ in range(20):
        a, b = perturbed(truth, rng), perturbed(truth, rng)
        assert dist_euclidean(a, b) == dist_euclidean(b, a)


def test_euclidean_nondim(truth):
    assert dist_euclidean_nondim(truth, truth, truth) == 0.0
    double = HardeningParams.from_vector(2.0 * truth.as_vector())
    assert dist_euclidean_nondim(double, truth, truth) == pytest.approx(np.sqrt(6.0))
    with pytest.raises(ZeroReferenceParameter):
        dist_euclidean_nondim(truth, double, np.array([1.0, 0.0, 1.0, 1.0, 1.0, 1.0]))


def test_nondim_consistency_identity(truth):
    rng = np.random.default_rng(5)
    a, b = perturbed(truth, rng), perturbed(truth, rng)
    ref = truth.as_vector()
    direct = dist_euclidean_nondim(a, b, truth)
    via_division = dist_euclidean(a.as_vector() / ref, b.as_vector() / ref)
    assert direct == pytest.approx(via_division, rel=1e-12)


def test_metric_spec_validation(material, truth):
    with pytest.raises(ZeroReferenceParameter):
        MetricSpec.euclidean_nondim(
            HardeningParams(0.0, 1.0, 1.0, 1.0, 1.0, 1.0)
        )
    with pytest.raises(ValueError):
        MetricSpec("mechanics")


# ---------------------------------------------------------------------------
# mechanics-based distance


def test_mechanics_zero_for_identical(truth, mech_spec):
    assert dist_mechanics(truth, truth, mech_spec) == 0.0


def test_mechanics_positive_for_different(truth, mech_spec):
    rng = np.random.default_rng(2)
    other = perturbed(truth, rng, scale=0.2)
    assert dist_mechanics(truth, other, mech_spec) > 0.1


def test_mechanics_elastic_degeneracy(material, truth):
    """Different hardening, same stress response inside the elastic domain."""
    spec = MetricSpec.mechanics(elastic_history(), material, n_steps=60)
    rng = np.random.default_rng(3)
    other = perturbed(truth, rng, scale=0.3)
    assert dist_mechanics(truth, other, spec) == 0.0


def test_mechanics_triangle_inequality(truth, mech_spec):
    rng = np.random.default_rng(4)
    for _ in range(10):
        a, b, c = (perturbed(truth, rng, 0.15) for _ in range(3))
        dac = dist_mechanics(a, c, mech_spec)
        dab = dist_mechanics(a, b, mech_spec)
        dbc = dist_mechanics(b, c, mech_spec)
        assert dac <= dab + dbc + 1e-9


def test_mechanics_reparametrization_invariance(truth, mech_spec):
    """The metric consumes only the stress response, so the distance between
    two parameter sets seen through a smooth one-to-one reparametrization
    (here: log-parameters) is the distance between their images, while the
    Euclidean metric genuinely changes."""
    rng = np.random.default_rng(6)
    rho1 = np.log(truth.as_vector())
    rho2 = np.log(perturbed(truth, rng, 0.1).as_vector())
    p1, p2 = np.exp(rho1), np.exp(rho2)
    assert dist_mechanics(p1, p2, mech_spec) == dist_mechanics(p1.copy(), p2.copy(), mech_spec)
    # exp(log(.)) round-trips to the last ulp; the distance follows suit
    d_images = dist_mechanics(p1, p2, mech_spec)
    d_original = dist_mechanics(truth.as_vector(), p2, mech_spec)
    assert d_images == pytest.approx(d_original, rel=1e-9)
    # the Euclidean distance is not reparametrization-invariant
    assert abs(dist_euclidean(rho1, rho2) - dist_euclidean(p1, p2)) > 1.0


def test_mechanics_grid_refinement(truth, material):
    rng = np.random.default_rng(8)
    other = perturbed(truth, rng, 0.15)
    values = []
    for steps in (400, 800):
        spec = MetricSpec.mechanics(benchmark_history(1), material, n_steps=steps)
        values.append(dist_mechanics(truth, other, spec))
    assert abs(values[0] - values[1]) / values[1] < 0.005


# ---------------------------------------------------------------------------
# axiom checks


def test_axioms_all_equal_samples(truth, mech_spec):
    report = check_metric_axioms(mech_spec, [truth, truth, truth])
    assert report.nonnegativity_ok and report.symmetry_ok and report.triangle_ok
    assert not report.separation_violations  # no distinct pairs
    assert np.all(report.distances == 0.0)


def test_axioms_on_perturbed_sets(truth, mech_spec_h2):
    rng = np.random.default_rng(9)
    samples = [truth] + [perturbed(truth, rng, 0.15) for _ in range(5)]
    report = check_metric_axioms(mech_spec_h2, samples)
    assert report.nonnegativity_ok
    assert report.symmetry_ok
    assert report.triangle_ok
    assert report.separation_ok


def test_axioms_report_elastic_separation_failure(material, truth):
    spec = MetricSpec.mechanics(elastic_history(), material, n_steps=60)
    rng = np.random.default_rng(10)
    samples = [truth, perturbed(truth, rng, 0.2), perturbed(truth, rng, 0.2)]
    report = check_metric_axioms(spec, samples)
    # reported, not raised
    assert not report.separation_ok
    assert len(report.separation_violations) == 3
    assert report.nonnegativity_ok and report.triangle_ok
    assert "VIOLATED" in report.summary()


def test_axioms_need_three_samples(truth, mech_spec):
    with pytest.raises(ValueError):
        check_metric_axioms(mech_spec, [truth, truth])
