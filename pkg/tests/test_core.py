import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from gxesym.core import (
    CaseControlData,
    OmegaVector,
    PrevalenceSpec,
    RiskSpec,
    Term,
    alpha_from_kappa,
    build_design,
    evaluate_m,
    kappa_from_alpha,
)
from gxesym.errors import DataError, DimensionError, PrevalenceError

LOG = math.log


def direct_m(g, x, beta):
    """m(G, X) for q=2, p_x=2 coded term by term."""
    bg1, bg2, bx1, bx2, b11, b21, b12, b22 = beta
    return (bg1 * g[0] + bg2 * g[1] + bx1 * x[0] + bx2 * x[1]
            + b11 * x[0] * g[0] + b21 * x[0] * g[1] + b12 * x[1] * g[0] + b22 * x[1] * g[1])


def test_design_zero_input():
    assert np.array_equal(build_design([0, 0], [0], RiskSpec(2, 1)), np.zeros(5))


def test_design_length_matches_eleven_parameter_layout():
    spec = RiskSpec(5, 1)
    assert build_design(np.ones(5), [1.0], spec).size == 11
    assert spec.param_names()[1:] == [
        "beta_g1", "beta_g2", "beta_g3", "beta_g4", "beta_g5", "beta_x1",
        "beta_x1_g1", "beta_x1_g2", "beta_x1_g3", "beta_x1_g4", "beta_x1_g5",
    ]


def test_design_ordering_two_by_two():
    spec = RiskSpec(2, 2)
    z = build_design([2, 1], [1, -1], spec)
    assert np.array_equal(z, [2, 1, 1, -1, 2, 1, -2, -1])
    rng = np.random.default_rng(0)
    for _ in range(100):
        beta = rng.normal(size=8)
        assert z @ beta == pytest.approx(direct_m([2, 1], [1, -1], beta), rel=1e-12, abs=1e-14)


def test_dimension_errors_name_axis():
    spec = RiskSpec(2, 1)
    with pytest.raises(DimensionError) as e:
        build_design([1, 2, 3], [1], spec)
    assert e.value.axis == "g"
    with pytest.raises(DimensionError) as e:
        build_design([1, 2], [1, 1], spec)
    assert e.value.axis == "x"
    with pytest.raises(DimensionError):
        evaluate_m([1, 2], [1], np.zeros(4), spec)


def test_evaluate_m_zero_beta():
    spec = RiskSpec(2, 1)
    v, grad = evaluate_m([1, 2], [1], np.zeros(5), spec)
    assert v == 0.0
    assert np.array_equal(grad, build_design([1, 2], [1], spec))


def test_evaluate_m_base_truth():
    beta = [LOG(1.2), LOG(1.2), 0, LOG(1.2), 0, LOG(1.5), LOG(1.3), 0, 0, LOG(1.3), 0]
    v, _ = evaluate_m([1, 0, 0, 0, 0], [1], beta, RiskSpec(5, 1))
    assert v == pytest.approx(LOG(1.2) + LOG(1.5) + LOG(1.3), abs=1e-14)
    assert v == pytest.approx(0.8502, abs=5e-5)


def test_evaluate_m_gradient_finite_differences():
    rng = np.random.default_rng(1)
    spec = RiskSpec(3, 2)
    h = 1e-6
    for _ in range(50):
        g, x, beta = rng.normal(size=3), rng.normal(size=2), rng.normal(size=spec.dim_beta)
        _, grad = evaluate_m(g, x, beta, spec)
        fd = np.array([
            (evaluate_m(g, x, beta + h * e, spec)[0] - evaluate_m(g, x, beta - h * e, spec)[0]) / (2 * h)
            for e in np.eye(spec.dim_beta)
        ])
        np.testing.assert_allclose(fd, grad, rtol=1e-6, atol=1e-8)


def test_main_only_and_custom_forms():
    assert RiskSpec(2, 1, "main").dim_beta == 3
    spec = RiskSpec.custom(2, 2, [((0, 1), ()), ((1,), (0, 1))])
    assert spec.param_names() == ["kappa", "beta_g1_g2", "beta_x1_x2_g2"]
    assert np.allclose(build_design([2, 3], [5, 7], spec), [6, 105])
    with pytest.raises(DimensionError):
        RiskSpec.custom(2, 1, [Term((2,), ())])


@given(
    hnp.arrays(np.float64, 3, elements=st.floats(-5, 5)),
    hnp.arrays(np.float64, 2, elements=st.floats(-5, 5)),
    hnp.arrays(np.float64, 11, elements=st.floats(-3, 3)),
    hnp.arrays(np.float64, 11, elements=st.floats(-3, 3)),
)
def test_m_is_linear_in_beta(g, x, b1, b2):
    spec = RiskSpec(3, 2)
    lhs = evaluate_m(g, x, b1 + b2, spec)[0]
    rhs = evaluate_m(g, x, b1, spec)[0] + evaluate_m(g, x, b2, spec)[0]
    scale = max(1.0, np.abs(build_design(g, x, spec)).sum() * 6)
    assert abs(lhs - rhs) <= 1e-12 * scale


def test_design_deterministic():
    spec = RiskSpec(4, 2)
    g, x = [0.5, 1, 2, 0], [1.5, -2]
    assert build_design(g, x, spec).tobytes() == build_design(g, x, spec).tobytes()


def test_kappa_cancels_when_ratios_match():
    assert kappa_from_alpha(-1.3, 30, 970, 0.03) == pytest.approx(-1.3, abs=1e-14)


def test_kappa_base_scenario():
    k = kappa_from_alpha(-4.165, 1000, 1000, 0.03)
    assert k == pytest.approx(-4.165 - LOG(0.03 / 0.97), abs=1e-14)
    assert k == pytest.approx(-0.6889, abs=5e-5)


@given(st.floats(-20, 20), st.integers(1, 10_000), st.integers(1, 10_000), st.floats(1e-6, 1 - 1e-6))
def test_kappa_alpha_round_trip(a, n1, n0, pi1):
    k = kappa_from_alpha(a, n1, n0, pi1)
    assert alpha_from_kappa(k, n1, n0, pi1) == pytest.approx(a, abs=1e-12)


@pytest.mark.parametrize("pi1", [0.0, 1.0, -0.2, 1.5, float("nan")])
def test_prevalence_domain(pi1):
    with pytest.raises(PrevalenceError, match=r"\(0, 1\)"):
        PrevalenceSpec.known(pi1)
    with pytest.raises(PrevalenceError):
        kappa_from_alpha(0.0, 10, 10, pi1)


def test_prevalence_modes():
    assert PrevalenceSpec.rare().is_rare and PrevalenceSpec.rare().pi0 == 1.0
    k = PrevalenceSpec.known(0.2)
    assert not k.is_rare and k.pi0 == pytest.approx(0.8)


def test_data_counts_and_immutability():
    g = np.array([[0.0], [1], [2], [1]])
    data = CaseControlData([1, 0, 1, 0], g, [[0.0], [1], [1], [0]])
    assert (data.n0, data.n1, data.n) == (2, 2, 4)
    with pytest.raises(ValueError):
        data.g[0, 0] = 5
    g[0, 0] = 9  # caller's array stays independent
    assert data.g[0, 0] == 0


def test_data_validation_messages():
    g, x = np.arange(6.0)[:, None], np.array([0, 1, 0, 1, 0, 1.0])[:, None]
    with pytest.raises(DataError) as e:
        CaseControlData([0, 1, 0, 2, 1, 0], g, x)
    assert e.value.row == 3 and e.value.column == "d"
    with pytest.raises(DataError, match="x1 is constant"):
        CaseControlData([0, 1, 0, 1, 1, 0], g, np.ones((6, 1)))
    bad = g.copy()
    bad[2, 0] = np.nan
    with pytest.raises(DataError) as e:
        CaseControlData([0, 1, 0, 1, 1, 0], bad, x)
    assert e.value.row == 2 and e.value.column == "g1"
    with pytest.raises(DataError):
        CaseControlData([0, 0, 0, 0, 0, 0], g, x)


def test_omega_vector_flat_form():
    om = OmegaVector(0.5, [1, 2])
    assert np.array_equal(om.to_array(), [0.5, 1, 2])
    assert len(om) == 3
    assert np.array_equal(OmegaVector.from_array(om.to_array()).beta, [1, 2])
