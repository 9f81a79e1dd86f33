import math

import pytest
from scipy import integrate, special

import starkspec as ss

# frozen high-precision values (50-digit quadrature/series oracles)
A = [-2.3381074104597670, -4.0879494441309706, -5.5205598280955511]
PI_AIP_SQ = {1: 1.5447104825915634, 2: 2.0262891605462046, 3: 2.3517271656187980}
DLAM1_EXP = 0.2599066122911657     # d lambda_1 [e^-x] at q = 0
DKAP1_EXP = -0.2599066122911657    # d kappa_1 [e^-x] at q = 0; equals -dlam by parts


@pytest.mark.parametrize("n", [1, 2, 3, 12])
def test_free_spectrum_is_airy_zeros(zero_records, n):
    q, recs = zero_records
    rec = recs[n]
    assert rec.lam == pytest.approx(-ss.airy_zero(n).a_n, abs=1e-9)
    assert abs(rec.kappa) <= 1e-8
    assert rec.bracket[0] < rec.lam < rec.bracket[1]
    assert rec.shoot_residual <= 1e-10 * abs(rec.psi_prime0)


def test_free_norm_squared_matches_airy_identity(zero_records):
    q, recs = zero_records
    for n in (1, 2, 3):
        assert recs[n].norm_sq == pytest.approx(PI_AIP_SQ[n], rel=1e-8)


def test_positive_perturbation_raises_ground_state(records_cache, zero_records):
    q, recs = records_cache("exp+", 1)
    assert recs[1].lam > zero_records[1][1].lam


def test_negative_perturbation_lowers(records_cache, zero_records):
    q, recs = records_cache("exp-", 1)
    assert recs[1].lam < zero_records[1][1].lam


def test_cross_method_small_sample(records_cache):
    q, recs = records_cache("exp+", 6)
    L = -ss.airy_zero(6).a_n + 21.0
    lam_o = ss.extrapolated_spectrum(q, L, 6)
    kap_o = ss.extrapolated_norming(q, L, 6)
    for n in range(1, 7):
        assert recs[n].lam == pytest.approx(lam_o[n - 1], abs=1e-6)
        assert recs[n].kappa == pytest.approx(kap_o[n - 1], abs=1e-4)


def test_norm_identity_and_alt_kappa(records_cache):
    q, recs = records_cache("exp+", 8)
    for rec in recs.values():
        chk = ss.norm_sq_psi(q, rec)
        assert chk.rel_gap <= 1e-6
        assert abs(rec.kappa - rec.kappa_alt) <= 1e-6


def test_oscillation_counts(records_cache):
    q, recs = records_cache("alg", 10)
    for n, rec in recs.items():
        assert ss.oscillation_count(rec) == n - 1


def test_crude_localization_window(records_cache):
    q, recs = records_cache("exp+", 20)
    ok_from = None
    for n in sorted(recs):
        width = 4.0 * (1.5 * math.pi * n) ** (-2.0 / 3.0 + 0.05)
        inside = abs(recs[n].lam + ss.airy_zero(n).a_n) <= width
        if inside and ok_from is None:
            ok_from = n
        if not inside:
            ok_from = None
    assert ok_from is not None and ok_from <= 5


def test_unperturbed_trace_diagnostics(records_cache):
    # psi0(lam_n, 0) shrinks like n^(-1/6) omega_r(n); psi0'(lam_n, 0) tracks
    # (-1)^(n+1) (3 pi n / 2)^(1/6)
    q, recs = records_cache("exp+", 30)
    ratios, signs = [], []
    for n in range(10, 31):
        b = ss.basis_eval(recs[n].lam, 0.0)
        scale = (1.5 * math.pi * n) ** (1.0 / 6.0)
        ratios.append(abs(b.psi0) * n ** (1.0 / 6.0) / ss.omega_r(q.r, n))
        signs.append(b.psi0_prime * (-1) ** (n + 1) / scale)
    assert max(ratios) < 5.0
    assert all(abs(s - 1.0) < 0.1 for s in signs[-8:])


def test_lambda_gradient_closed_form_at_zero(zero_records):
    q, recs = zero_records
    v = ss.exp_decay(1.0, 1.0, r=2.0)
    val = ss.lambda_directional_derivative(q, 1, v, recs[1])
    assert val == pytest.approx(DLAM1_EXP, rel=1e-7)
    assert ss.lambda_directional_derivative(q, 1, ss.bump(0.0, 1, 1), recs[1]) == 0.0


def test_kappa_gradient_closed_form_at_zero(zero_records):
    q, recs = zero_records
    v = ss.exp_decay(1.0, 1.0, r=2.0)
    val = ss.kappa_directional_derivative(q, 1, v, recs[1])
    assert val == pytest.approx(DKAP1_EXP, rel=1e-6)


@pytest.mark.parametrize("n", [2, 3])
def test_kappa_gradient_closed_form_general_n(zero_records, n):
    # at q = 0 the gradients reduce to Airy pairings divided by Ai'(a_n)^2
    q, recs = zero_records
    v = ss.exp_decay(1.0, 1.0, r=2.0)
    a_n = ss.airy_zero(n).a_n
    aip2 = special.airy(a_n)[1] ** 2
    lam_exact = integrate.quad(
        lambda x: special.airy(x + a_n)[0] ** 2 * math.exp(-x), 0, 40, limit=400)[0] / aip2
    kap_exact = -2.0 * integrate.quad(
        lambda x: special.airy(x + a_n)[0] * special.airy(x + a_n)[1] * math.exp(-x),
        0, 40, limit=400)[0] / aip2
    assert ss.lambda_directional_derivative(q, n, v, recs[n]) == pytest.approx(
        lam_exact, rel=1e-7)
    assert ss.kappa_directional_derivative(q, n, v, recs[n]) == pytest.approx(
        kap_exact, rel=1e-6)


def test_gradients_match_finite_differences(records_cache):
    q, recs = records_cache("exp-", 2)
    v = ss.bump(1.0, 2.0, 1.0, r=2.0)
    n, h = 2, 1e-4
    dl = ss.lambda_directional_derivative(q, n, v, recs[n])
    dk = ss.kappa_directional_derivative(q, n, v, recs[n])
    plus = ss.locate_eigenvalue(ss.blend(q, v, h), n)
    minus = ss.locate_eigenvalue(ss.blend(q, v, -h), n)
    assert dl == pytest.approx((plus.lam - minus.lam) / (2 * h), rel=1e-4)
    assert dk == pytest.approx((plus.kappa - minus.kappa) / (2 * h), rel=1e-3)


def test_kappa_gradient_with_slow_direction(records_cache):
    # v keeps mass past the grid end; exercises the unperturbed tail term
    q, recs = records_cache("exp+", 1)
    v = ss.alg_decay(0.5, 3.0, r=2.0)
    n, h = 1, 1e-4
    dk = ss.kappa_directional_derivative(q, n, v, recs[n])
    plus = ss.locate_eigenvalue(ss.blend(q, v, h), n)
    minus = ss.locate_eigenvalue(ss.blend(q, v, -h), n)
    assert dk == pytest.approx((plus.kappa - minus.kappa) / (2 * h), rel=1e-3)


def test_scan_finds_shifted_ground_state():
    q = ss.bump(-3.0, 1.0, 1.0, r=2.0)
    found = ss.scan_low_eigenvalues(q)
    assert len(found) == 1
    assert found[0].method == "scan" and found[0].n == 0
    lam_o = ss.extrapolated_spectrum(q, 20.0, 1, meshes=(0.02, 0.01, 0.005))
    assert found[0].lam == pytest.approx(float(lam_o[0]), abs=1e-6)


def test_scan_empty_for_small_potentials(q_exp):
    assert ss.scan_low_eigenvalues(q_exp) == []


def test_kappa_gradient_zero_direction(zero_records):
    q, recs = zero_records
    assert ss.kappa_directional_derivative(
        q, 1, ss.bump(0.0, 1.0, 1.0), recs[1]) == 0.0


def test_tabulated_potential_through_the_full_pipeline():
    import numpy as np
    xs = np.linspace(0.0, 30.0, 600)
    ys = 0.3 * np.exp(-xs)
    ys[-1] = 0.0
    qt = ss.tabulated(xs, ys, r=2.0)
    rec = ss.locate_eigenvalue(qt, 1)
    lam_o = ss.extrapolated_spectrum(qt, 25.0, 1)
    assert rec.lam == pytest.approx(float(lam_o[0]), abs=1e-6)
    # the spline tracks the exponential family it sampled
    ref = ss.locate_eigenvalue(ss.exp_decay(0.3, 1.0, r=2.0), 1)
    assert rec.lam == pytest.approx(ref.lam, abs=1e-4)


def test_scan_survives_deep_potential():
    # sup norm 8 pushes the coarse sweep floor far below where the decaying
    # basis solution underflows; the min-max floor keeps the scan finite
    q = ss.bump(-8.0, 1.0, 1.0, r=2.0)
    found = ss.scan_low_eigenvalues(q)
    assert len(found) >= 1
    lam_o = ss.extrapolated_spectrum(q, 20.0, len(found))
    for rec, ref in zip(found, lam_o):
        assert rec.lam == pytest.approx(float(ref), abs=1e-6)
    # min-max: spectrum sits above the free ground state minus sup|q|
    assert all(f.lam >= 2.338107 - 8.0 - 1e-9 for f in found)
