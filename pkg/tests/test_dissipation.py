"""Tests for DOC kernels, differentiation matrices, minors and rates."""

import numpy as np
import pytest

from eerk.phi import phi
from eerk.dissipation import (
    Classification,
    SingularDiagonalError,
    average_dissipation_rate,
    classify_method,
    default_z_grid,
    differentiation_matrix,
    differentiation_matrix_inverse_route,
    dissipation_sample,
    doc_identity_residual,
    doc_kernels,
    eerk32_abscissa_condition,
    leading_principal_minors,
    scan_method,
)
from eerk.tableaux import butcher_diff, get_method

Z_SET = np.array([-0.01, -0.1, -1.0, -10.0, -100.0])

CATALOG = [
    ("etd1", {}),
    ("eerk2", {"c2": "1/2"}),
    ("eerk2", {"c2": 1}),
    ("eerk2w", {"c2": "3/11"}),
    ("eerk2s", {"c2": "3/4"}),
    ("eerk31", {"c2": "4/9"}),
    ("eerk32", {"c2": 1, "c3": "1/2"}),
    ("etd3rk", {}),
    ("etd2cf3", {}),
    ("cm4", {}),
    ("krogstad4", {}),
    ("sw4", {}),
    ("ho4", {}),
]


# --------------------------------------------------------------------------
# DOC kernels
# --------------------------------------------------------------------------


def test_doc_kernels_etd1():
    th = doc_kernels(butcher_diff(get_method("etd1")), -3.0)
    assert th[0, 0] == pytest.approx(1.0 / phi(1, -3.0), rel=1e-14)


@pytest.mark.parametrize("z", [-0.5, -7.0])
def test_doc_kernels_eerk2_closed_form(z):
    c2 = 0.75
    th = doc_kernels(butcher_diff(get_method("eerk2", c2="3/4")), z)
    assert th[0, 0] == pytest.approx(1.0 / (c2 * phi(1, c2 * z)), rel=1e-13)
    assert th[1, 1] == pytest.approx(c2 / phi(2, z), rel=1e-13)
    expected = (c2 * phi(1, c2 * z) - phi(1, z) + phi(2, z) / c2) / (phi(2, z) * phi(1, c2 * z))
    assert th[1, 0] == pytest.approx(expected, rel=1e-12, abs=1e-14)


def test_doc_orthogonality_all_methods():
    for name, params in CATALOG:
        dt = butcher_diff(get_method(name, **params))
        resid = doc_identity_residual(dt, Z_SET)
        assert resid <= 1e-10, (name, resid)


def test_doc_kernels_reject_zero_diagonal():
    # the five-stage method's fourth diagonal entry vanishes at z = 0
    with pytest.raises(SingularDiagonalError):
        doc_kernels(butcher_diff(get_method("ho4")), 0.0)


# --------------------------------------------------------------------------
# Differentiation matrices
# --------------------------------------------------------------------------


def test_etd1_diag_closed_form_and_lower_bound():
    t = get_method("etd1")
    grid = -np.logspace(-6, 2.5, 200)  # exp(-z) overflows past ~709
    d = differentiation_matrix(t, grid)[:, 0, 0]
    # 1 - exp(-z) through expm1, else the oracle itself cancels near zero
    closed = grid * (1 + np.exp(-grid)) / (-2 * np.expm1(-grid))
    assert np.max(np.abs(d - closed) / np.abs(closed)) < 1e-13
    assert np.all(d >= 1.0 - 1e-12)
    assert differentiation_matrix(t, 0.0)[0, 0] == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("z", [-0.4, -15.0])
def test_eerk31_first_column_closed_form(z):
    c2 = 4.0 / 9.0
    d = differentiation_matrix(get_method("eerk31", c2="4/9"), z)
    assert d[0, 0] == pytest.approx(1.0 / (c2 * phi(1, c2 * z)) + z / 2, rel=1e-13)
    d21 = (9 * c2 / (4 * phi(2, 2 * z / 3))
           + 1.0 / (c2 * phi(1, c2 * z))
           - 3 * phi(1, 2 * z / 3) / (2 * phi(2, 2 * z / 3) * phi(1, c2 * z))
           + z)
    assert d[1, 0] == pytest.approx(d21, rel=1e-12, abs=1e-13)
    d31 = ((2 * c2 * phi(1, c2 * z) - 2 * phi(1, z) + 3 * phi(2, z))
           / (3 * c2 * phi(1, c2 * z) * phi(2, z)) + z)
    assert d[2, 0] == pytest.approx(d31, rel=1e-12, abs=1e-13)


@pytest.mark.parametrize("z", [-2.0])
def test_implicit_variant_etd2rk_entry(z):
    d = differentiation_matrix(get_method("eerk2", c2=1), z, variant="implicit")
    assert d[0, 0] == pytest.approx(1.0 / phi(1, z) + z, rel=1e-13)


def test_two_route_equality_all_methods():
    for name, params in CATALOG:
        t = get_method(name, **params)
        d1 = differentiation_matrix(t, Z_SET)
        d2 = differentiation_matrix_inverse_route(t, Z_SET)
        assert np.max(np.abs(d1 - d2)) <= 1e-10, name
        # implicit variant routes agree as well
        d1i = differentiation_matrix(t, Z_SET, variant="implicit")
        d2i = differentiation_matrix_inverse_route(t, Z_SET, variant="implicit")
        assert np.max(np.abs(d1i - d2i)) <= 1e-10, name


def test_verify_flag_cross_checks():
    differentiation_matrix(get_method("eerk31", c2="2/3"), -5.0, verify=True)


def test_lower_triangular_structure():
    d = differentiation_matrix(get_method("cm4"), -3.0)
    assert np.array_equal(np.triu(d, 1), np.zeros_like(d))


def test_variant_relation():
    t = get_method("eerk31", c2="4/9")
    for z in [-0.5, -40.0]:
        gap = (differentiation_matrix(t, z, "implicit") - differentiation_matrix(t, z)
               - (z / 2) * np.eye(3))
        assert np.max(np.abs(gap)) < 1e-12 * max(1.0, abs(z))


# --------------------------------------------------------------------------
# Minors
# --------------------------------------------------------------------------


def test_minors_identity():
    assert leading_principal_minors(np.eye(3)) == pytest.approx([1.0, 1.0, 1.0])


def test_minors_symmetrize_first():
    # minors are taken of (D + D^T)/2, not of D
    d = np.array([[2.0, 0.0], [4.0, 1.0]])
    assert leading_principal_minors(d) == pytest.approx([2.0, 2.0 - 4.0])


def test_eerk2_first_minor_closed_form():
    c2 = 0.75
    grid = -np.logspace(-6, 2.5, 150)
    m = leading_principal_minors(differentiation_matrix(get_method("eerk2", c2="3/4"), grid))
    closed = grid * (np.exp(c2 * grid) + 1) / (2 * (np.exp(c2 * grid) - 1))
    assert np.max(np.abs(m[:, 0] - closed)) < 1e-10
    assert np.all(m[:, 0] >= 1.0 / c2 - 1e-12)


@pytest.mark.parametrize("z", [-0.3, -4.0, -20.0])
def test_eerk2w_second_minor_matches_auxiliary_function(z):
    # independent oracle: the closed-form z^2 g(c2,z) / (4 (e^z-1)^2 (e^{c2 z}-1)^2)
    c2 = 0.5
    g = (-4 * c2**2 * (np.exp(c2 * z) - np.exp(z)) ** 2
         + 4 * c2 * (1 - np.exp(z)) * (1 - np.exp(c2 * z + z))
         - (1 - np.exp(z)) ** 2)
    expected = z**2 * g / (4 * (np.exp(z) - 1) ** 2 * (np.exp(c2 * z) - 1) ** 2)
    got = leading_principal_minors(differentiation_matrix(get_method("eerk2w", c2="1/2"), z))[1]
    assert got == pytest.approx(expected, rel=1e-12)


# --------------------------------------------------------------------------
# Classification
# --------------------------------------------------------------------------


def test_default_grid_shape():
    grid = default_z_grid()
    assert grid.size == 800
    assert grid[0] == pytest.approx(-1e4) and grid[-1] == pytest.approx(-1e-6)
    assert np.all(np.diff(grid) > 0) and np.all(grid < 0)


@pytest.mark.parametrize("name,params", [
    ("etd1", {}),
    ("eerk2", {"c2": "1/2"}), ("eerk2", {"c2": "3/4"}), ("eerk2", {"c2": 1}),
    ("eerk2w", {"c2": "3/11"}),
    ("eerk2s", {"c2": "1/2"}), ("eerk2s", {"c2": 1}),
    ("eerk31", {"c2": "4/9"}),
    ("eerk32", {"c2": 1, "c3": "1/2"}),
])
def test_psd_methods(name, params):
    assert classify_method(get_method(name, **params)).is_psd


@pytest.mark.parametrize("name", ["etd3rk", "etd2cf3", "cm4", "krogstad4", "sw4", "ho4"])
def test_npd_methods_have_witness(name):
    c = classify_method(get_method(name))
    assert c.verdict == "NPD"
    assert c.witness is not None and c.witness.z < 0
    assert c.witness.minor_value < 0


def test_etd2cf3_witness_below_minus_six():
    c = classify_method(get_method("etd2cf3"))
    assert c.witness.z < -6.0


def test_etd3rk_third_minor_negative_near_zero():
    # negative determinant survives all the way to z -> 0^-
    c = classify_method(get_method("etd3rk"))
    assert c.witness.z > -1e-3
    assert c.witness.minor_index == 3


def test_eerk2_below_abscissa_threshold_is_npd():
    c = classify_method(get_method("eerk2", c2="2/5"))
    assert c.verdict == "NPD"
    assert c.witness.minor_index == 2


def test_classify_rejects_bad_grids():
    t = get_method("etd1")
    with pytest.raises(ValueError):
        classify_method(t, z_grid=[])
    with pytest.raises(ValueError):
        classify_method(t, z_grid=[-1.0, 0.5])


# --------------------------------------------------------------------------
# Average dissipation rate
# --------------------------------------------------------------------------


def test_rate_limits_near_zero():
    z0 = -1e-8
    for c2s, c2 in [("1/2", 0.5), ("3/4", 0.75), ("1", 1.0)]:
        r = average_dissipation_rate(get_method("eerk2", c2=c2s), z0)
        assert r == pytest.approx(1 / (2 * c2) + c2, abs=1e-6)
        rw = average_dissipation_rate(get_method("eerk2w", c2=c2s), z0)
        assert rw == pytest.approx(1 / (2 * c2) + c2, abs=1e-6)
        rs = average_dissipation_rate(get_method("eerk2s", c2=c2s), z0)
        assert rs == pytest.approx(2 / 3 + (2 / 3) * (c2 + 1 / (2 * c2)), abs=1e-6)
    for c2s, c2 in [("4/9", 4 / 9), ("1", 1.0)]:
        r = average_dissipation_rate(get_method("eerk31", c2=c2s), z0)
        assert r == pytest.approx(1.5 * c2 + 1 / (3 * c2) + 4 / 9, abs=1e-6)
    assert average_dissipation_rate(get_method("etd1"), 0.0) == pytest.approx(1.0, abs=1e-14)


def test_rate_equals_scaled_trace():
    grid = np.array([-1e-4, -0.37, -3.0, -55.0, -4e3])
    for name, params in CATALOG:
        t = get_method(name, **params)
        for variant in ("standard", "implicit"):
            r = average_dissipation_rate(t, grid, variant)
            tr = np.trace(differentiation_matrix(t, grid, variant), axis1=-2, axis2=-1)
            assert np.max(np.abs(r - tr / t.stages)) < 1e-12 * np.max(np.abs(r)), (name, variant)


def test_implicit_rate_offset():
    grid = -np.logspace(-6, 3, 50)
    for name, params in [("eerk2", {"c2": "1/2"}), ("eerk31", {"c2": "4/9"}), ("ho4", {})]:
        t = get_method(name, **params)
        r = average_dissipation_rate(t, grid)
        rt = average_dissipation_rate(t, grid, "implicit")
        assert np.max(np.abs(rt - (r + grid / 2))) < 1e-12 * np.max(np.abs(r))


def test_implicit_rate_limits_of_second_order_family():
    # pure-implicit bookkeeping underestimates dissipation: it diverges to
    # -inf for c2 < 1 while the unit abscissa tends to 1/2
    assert average_dissipation_rate(get_method("eerk2", c2=1), -1e6, "implicit") == pytest.approx(0.5, abs=1e-4)
    assert average_dissipation_rate(get_method("eerk2", c2="3/4"), -1e6, "implicit") < -1e4


def test_eerk32_abscissa_condition_values():
    assert eerk32_abscissa_condition(1, "1/2") == pytest.approx(1.5 - 1 + 8 / 3, rel=1e-12)
    assert eerk32_abscissa_condition("3/4", "3/5") > 0
    assert eerk32_abscissa_condition("1/2", "7/10") > 0
    with pytest.raises(ValueError):
        eerk32_abscissa_condition("2/3", "1/2")
    with pytest.raises(ValueError):
        eerk32_abscissa_condition("1/2", "1/2")


# --------------------------------------------------------------------------
# Samples and scans
# --------------------------------------------------------------------------


def test_dissipation_sample_coherence():
    t = get_method("eerk31", c2="2/3")
    s = dissipation_sample(t, -5.0)
    assert s.minors == pytest.approx(leading_principal_minors(s.d))
    assert s.rate == pytest.approx(np.trace(s.d) / 3, rel=1e-12)
    assert s.sym == pytest.approx(0.5 * (s.d + s.d.T))
    assert s.variant == "standard"


def test_scan_shapes():
    t = get_method("eerk2", c2=1)
    grid, rate, minors = scan_method(t, z_grid=np.linspace(-10, -0.1, 25))
    assert grid.shape == (25,) and rate.shape == (25,) and minors.shape == (25, 2)
