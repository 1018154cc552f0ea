"""Worst-case factors, shape optimization and Zolotarev error bounds."""

import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rational_feast.analysis import (TABLE_COLUMNS, TABLE_G, TABLE_M, FactorReport,
                                     GapParameters, effective_factor,
                                     equioscillation_extrema, factor_report, natural_S,
                                     optimize_S, table_one, table_to_csv, table_to_json,
                                     worst_case_factor, zolotarev_asymptotic_error,
                                     zolotarev_error_bounds, zolotarev_R_from_G)
from rational_feast.errors import DomainError
from rational_feast.filters import (build_gauss_filter, build_trapezoid_filter,
                                    build_zolotarev_filter, zolotarev_G_from_R)

# E'/(1 - E') from a 50-digit evaluation of the Zolotarev sign approximant
# (mpmath ellipfun + golden search over 2e4 log-spaced samples on [1, R])
MPMATH_ZOLOTAREV_FACTOR = {
    (0.99998, 3): 0.77320589,
    (0.9998, 3): 0.59277934,
    (0.9998, 6): 0.11060428,
    (0.99998, 6): 0.20691817,
    (0.98, 30): 1.3900665e-12,
}


def zolo(m, G):
    return build_zolotarev_filter(m, zolotarev_R_from_G(G))


def dense_factor(filt, G, n=400001):
    """Brute-force oracle: plain dense sampling, no refinement."""
    x = np.linspace(-G, G, n)
    u = np.linspace(-G, G, n)
    return np.max(np.abs(filt.evaluate_reciprocal(u))) / np.min(np.abs(filt.evaluate(x)))


# -- worst-case factor -------------------------------------------------

def test_zolotarev_m3_g098():
    assert worst_case_factor(zolo(3, 0.98), 0.98) == pytest.approx(1.36e-1, rel=0.01)


def test_gauss_m6_inf_g098():
    assert worst_case_factor(build_gauss_filter(6), 0.98) == pytest.approx(4.96e-1, rel=0.01)


def test_trapezoid_m6_natural_g0998():
    f = build_trapezoid_filter(6, natural_S(0.998))
    assert worst_case_factor(f, 0.998) == pytest.approx(7.84e-1, rel=0.01)


@pytest.mark.parametrize("filt,G", [(build_gauss_filter(4, 1.5), 0.9),
                                    (build_trapezoid_filter(5), 0.95),
                                    (build_zolotarev_filter(4, 400.0), 0.9)])
def test_factor_agrees_with_dense_sampling(filt, G):
    # refinement can only raise the max and lower the min
    f = worst_case_factor(filt, G)
    assert f >= dense_factor(filt, G) * (1 - 1e-12)
    assert f == pytest.approx(dense_factor(filt, G), rel=1e-6)


@pytest.mark.parametrize("cell", sorted(MPMATH_ZOLOTAREV_FACTOR))
def test_zolotarev_factor_matches_high_precision_oracle(cell):
    G, m = cell
    assert worst_case_factor(zolo(m, G), G) == pytest.approx(MPMATH_ZOLOTAREV_FACTOR[cell], rel=1e-6)


@pytest.mark.parametrize("m", [3, 6, 12])
@pytest.mark.parametrize("G", [0.98, 0.998])
def test_zolotarev_factor_is_error_ratio(m, G):
    f = zolo(m, G)
    inner, _ = equioscillation_extrema(f, G)
    E = inner.max()
    assert worst_case_factor(f, G) == pytest.approx(E / (1 - E), rel=1e-8)


@pytest.mark.parametrize("m", [3, 6, 12, 30])
@pytest.mark.parametrize("G", [0.98, 0.998, 0.9998])
def test_trapezoid_natural_factor_closed_form(m, G):
    S = natural_S(G)
    a, b = S ** (2 * m), S ** (-2 * m)
    al, be = (a + b) / (a - b), 2 / (a - b)
    T = math.cosh(2 * m * math.acosh(G ** -2))
    expect = (al + be) / (al + be * T)
    assert worst_case_factor(build_trapezoid_filter(m, S), G) == pytest.approx(expect, rel=1e-10)


def test_worst_case_rejects_bad_gap():
    for G in (0.0, 1.0, 1.5, -0.2):
        with pytest.raises(DomainError):
            worst_case_factor(build_gauss_filter(3), G)


def test_effective_factor():
    G = 0.98
    z = zolo(6, G)
    w = worst_case_factor(z, G)
    for G_eff in (1 / G, 1.1, 2.0, 10.0):
        assert effective_factor(z, G, G_eff) == pytest.approx(w, rel=1e-8)
    g = build_gauss_filter(8)
    wg = worst_case_factor(g, G)
    assert effective_factor(g, G, 2.0) < wg
    assert effective_factor(g, G, 1 / G) == pytest.approx(wg, rel=1e-14)
    effs = [effective_factor(g, G, Ge) for Ge in (1.05, 1.2, 1.5, 2.0, 4.0)]
    assert np.all(np.diff(effs) <= 0)
    with pytest.raises(DomainError):
        effective_factor(g, G, 1.0)


def test_gap_parameters_type():
    GapParameters(0.9, 1.2)
    with pytest.raises(DomainError):
        GapParameters(0.9, 1.0)
    with pytest.raises(DomainError):
        GapParameters(1.0)


# -- shape parameters --------------------------------------------------

def test_natural_S_values():
    S = natural_S(0.98)
    assert S == pytest.approx(1.2235, abs=1e-4)
    assert 2 / (S + 1 / S) == pytest.approx(0.98, abs=1e-14)
    assert natural_S(0.5) == pytest.approx(2 + math.sqrt(3), rel=1e-15)
    assert natural_S(1 - 1e-10) == pytest.approx(1.0, abs=1e-4)


@settings(max_examples=50, deadline=None)
@given(G=st.floats(1e-3, 1 - 1e-9))
def test_natural_S_solves_equation(G):
    S = natural_S(G)
    assert S > 1
    assert 2 / (S + 1 / S) == pytest.approx(G, rel=1e-13)


def test_R_from_G():
    assert zolotarev_R_from_G(0.98) == pytest.approx(9801.0, rel=1e-12)
    assert zolotarev_R_from_G(zolotarev_G_from_R(1e6)) == pytest.approx(1e6, rel=1e-9)
    assert zolotarev_R_from_G(1e-9) == pytest.approx(1.0, abs=1e-8)


@settings(max_examples=50, deadline=None)
@given(logR=st.floats(0.01, 12))
def test_R_G_round_trip(logR):
    R = 10 ** logR
    assert zolotarev_R_from_G(zolotarev_G_from_R(R)) == pytest.approx(R, rel=1e-9)


@pytest.mark.slow
def test_optimize_gauss_m6():
    S, f = optimize_S("gauss", 6, 0.98)
    assert f == pytest.approx(3.40e-2, rel=0.05)
    assert S == pytest.approx(1.22, abs=0.01)


@pytest.mark.slow
def test_optimize_trapezoid_m9():
    S, f = optimize_S("trapezoid", 9, 0.98)
    assert f == pytest.approx(1.01e-1, rel=0.05)
    assert 1.01 <= S <= 1.02


@pytest.mark.slow
def test_optimize_dominates_natural_shape():
    G = 0.98
    _, f = optimize_S("trapezoid", 3, G)
    assert f <= worst_case_factor(build_trapezoid_filter(3, natural_S(G)), G)
    _, fg = optimize_S("gauss", 3, G)
    assert fg <= worst_case_factor(build_gauss_filter(3), G)


def test_optimize_rejects_zolotarev():
    with pytest.raises(DomainError):
        optimize_S("zolotarev", 3, 0.98)


# -- Zolotarev bounds --------------------------------------------------

def test_bounds_contain_measured_error_m3():
    G = 0.98
    inner, _ = equioscillation_extrema(zolo(3, G), G)
    lo, hi = zolotarev_error_bounds(3, G)
    assert lo <= inner.max() <= hi


def test_bounds_bracket_tabulated_factor_m6():
    lo, hi = zolotarev_error_bounds(6, 0.98)
    # 7.46e-3 is rounded to three digits, i.e. it stands for [7.455e-3, 7.465e-3)
    assert lo / (1 - lo) < 7.465e-3 and 7.455e-3 <= hi / (1 - hi)
    measured = worst_case_factor(zolo(6, 0.98), 0.98)
    assert lo / (1 - lo) <= measured <= hi / (1 - hi) * (1 + 1e-8)


def test_upper_bound_decreases_in_m():
    his = [zolotarev_error_bounds(m, 0.98)[1] for m in range(1, 60)]
    assert np.all(np.diff(his) < 0)
    assert his[-1] < 1e-20


def test_bounds_ordered():
    for m in (1, 5, 20):
        for G in (0.5, 0.98, 0.99998):
            lo, hi = zolotarev_error_bounds(m, G)
            assert 0 < lo <= hi


def test_asymptotic_estimate():
    G = 0.998
    est = zolotarev_asymptotic_error(30, G)
    hi = zolotarev_error_bounds(30, G)[1]
    assert 0.5 <= est / hi <= 2
    vals = [zolotarev_asymptotic_error(m, G) for m in range(1, 40)]
    assert np.all(np.diff(vals) < 0)
    inner, _ = equioscillation_extrema(zolo(3, 0.98), 0.98)
    assert 0.1 <= zolotarev_asymptotic_error(3, 0.98) / inner.max() <= 10


def test_factor_report():
    rep = factor_report(zolo(6, 0.98), 0.98)
    assert isinstance(rep, FactorReport)
    assert rep.shape_used == pytest.approx(9801.0)
    assert rep.E_prime_bounds == zolotarev_error_bounds(6, 0.98)
    rep = factor_report(build_gauss_filter(6), 0.98)
    assert rep.E_prime_bounds is None and math.isinf(rep.shape_used)


# -- table output ------------------------------------------------------

def test_table_csv_and_json_format():
    rows = table_one([0.98], [3])
    text = table_to_csv(rows)
    reader = list(csv.reader(io.StringIO(text)))
    assert tuple(reader[0]) == TABLE_COLUMNS
    assert reader[1][:2] == ["0.98", "3"]
    # factors in 3-significant-digit scientific notation
    assert reader[1][2].count("e") == 1 and len(reader[1][2].split("e")[0]) == 4
    data = json.loads(table_to_json(rows))
    assert data[0]["zolotarev"] == rows[0]["zolotarev"]


def test_table_order_and_empty():
    rows = table_one([0.98, 0.9], [3, 4], workers=2)
    assert [(r["G"], r["m"]) for r in rows] == [(0.98, 3), (0.98, 4), (0.9, 3), (0.9, 4)]
    with pytest.raises(DomainError):
        table_one([], [3])


@pytest.mark.slow
def test_table_monotone_in_m(factor_table):
    for G in TABLE_G:
        for key in ("trap_inf", "trap_nat", "trap_opt", "gauss_inf", "gauss_opt", "zolotarev"):
            vals = [factor_table[(G, m)][key] for m in TABLE_M]
            assert np.all(np.diff(vals) <= 0), (G, key, vals)


@pytest.mark.slow
def test_table_family_ordering(factor_table):
    for (G, m), r in factor_table.items():
        assert r["zolotarev"] <= r["gauss_opt"] <= r["trap_opt"], (G, m)
