import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import stats
from scipy.integrate import trapezoid

from wclkit.channel import ChannelParams, sample_shadowing
from wclkit.estimators import WclConfig, compute_pmin, weighted_centroid
from wclkit.placement import place_fixed_grid, place_uniform_disk
from wclkit.rng import Rng
from wclkit.theory import (
    analyze_deployment,
    average_over_placements,
    axis_sum_stats_correlated,
    axis_sum_stats_iid,
    cross_axis_correlation,
    error_2d_distribution,
    mu_constants,
    norm_density,
    ratio_moments_hayya,
    ratio_moments_quadrature,
    ratio_pdf,
    rho_ab_correlated,
    rho_ab_iid,
)
from wclkit.theory.axis import relative_coords
from wclkit.theory.pdf2d import PdfError, decorrelate
from wclkit.theory.ratio import RatioDomainError

from conftest import line_deployment

P4 = ChannelParams(sigma_s=4.0)
PMIN4 = compute_pmin(P4, 100.0, WclConfig())


def sum_samples(dep, mu, sigma_s, sigma_l, n, gen, x_c=None, axis=0):
    """Monte Carlo draws of a = sum q_i x_i and b = sum q_i."""
    x = relative_coords(dep, axis)
    if x_c is None:
        s = gen.normal(0, sigma_s, (n, dep.n))
    else:
        p = ChannelParams(sigma_s=sigma_s, x_c=x_c, shadowing_mode="correlated")
        s = sample_shadowing(p, dep.true_positions, gen, size=n)
    q = mu + s
    xs = x + gen.normal(0, sigma_l, (n, dep.n)) if sigma_l > 0 else x
    return (q * xs).sum(axis=1), q.sum(axis=1)


def small_fixture(seed=0, n=12):
    dep = place_uniform_disk(100.0, n, Rng(seed), pu=(7.0, -3.0))
    return dep, mu_constants(P4, dep, PMIN4)


def test_mu_constants():
    p = ChannelParams()
    dep = line_deployment([1.0], [0.0])
    assert mu_constants(p, dep, 0.0)[0] == 0.0
    dep = line_deployment([100.0, 0.0, -100.0], [0.0, 100.0, 0.0])
    mu = mu_constants(p, dep, -85.32)
    assert mu[0] == pytest.approx(9.32)
    assert mu[0] == mu[1] == mu[2]
    with pytest.raises(ValueError):
        mu_constants(p, line_deployment([0.0], [0.0]), 0.0)


def test_iid_sum_stats_examples(grid100):
    dep = line_deployment([5.0], [0.0])
    st_ = axis_sum_stats_iid(dep, [10.0], 4.0, 0.0, 0)
    assert st_.m_a == 50.0 and st_.sigma_a**2 == pytest.approx(400.0)
    assert st_.m_b == 10.0 and st_.sigma_b == 4.0
    mu = mu_constants(P4, grid100, PMIN4)
    assert abs(axis_sum_stats_iid(grid100, mu, 4.0, 0.0, 0).m_a) < 1e-9


@pytest.mark.parametrize("sigma_l", [0.0, 5.0])
def test_iid_sum_stats_monte_carlo(sigma_l):
    dep, mu = small_fixture()
    ref = axis_sum_stats_iid(dep, mu, 4.0, sigma_l, 0)
    gen = np.random.default_rng(1)
    a, b = [], []
    for _ in range(10):
        aa, bb = sum_samples(dep, mu, 4.0, sigma_l, 100_000, gen)
        a.append(aa)
        b.append(bb)
    a, b = np.concatenate(a), np.concatenate(b)
    assert a.mean() == pytest.approx(ref.m_a, rel=0.005)
    assert a.std() == pytest.approx(ref.sigma_a, rel=0.005)
    assert b.std() == pytest.approx(ref.sigma_b, rel=0.005)
    assert rho_ab_iid(dep, mu, 4.0, sigma_l, 0) == pytest.approx(np.corrcoef(a, b)[0, 1], abs=0.01)


def test_sigma_b_ignores_position_noise():
    dep, mu = small_fixture()
    for fn in (lambda sl: axis_sum_stats_iid(dep, mu, 4.0, sl, 0),
               lambda sl: axis_sum_stats_correlated(dep, mu, 4.0, 20.0, sl, 0)):
        assert fn(0.0).sigma_b == fn(7.0).sigma_b
        assert fn(0.0).m_b == fn(7.0).m_b


def test_rho_iid_special_cases(grid100):
    mu = mu_constants(P4, grid100, PMIN4)
    assert rho_ab_iid(grid100, mu, 4.0, 0.0, 0) == pytest.approx(0.0, abs=1e-12)
    dep = line_deployment([30.0, 30.0, 30.0], [-10.0, 0.0, 10.0])
    mu = mu_constants(P4, dep, PMIN4)
    assert rho_ab_iid(dep, mu, 4.0, 0.0, 0) == pytest.approx(1.0)


def test_correlated_limits():
    dep, mu = small_fixture(n=20)
    iid = axis_sum_stats_iid(dep, mu, 4.0, 2.0, 1)
    tiny = axis_sum_stats_correlated(dep, mu, 4.0, 1e-6, 2.0, 1)
    assert np.allclose(iid, tiny, rtol=0, atol=1e-9)
    assert rho_ab_correlated(dep, mu, 4.0, 1e-6, 2.0, 1) == pytest.approx(rho_ab_iid(dep, mu, 4.0, 2.0, 1), abs=1e-9)
    huge = axis_sum_stats_correlated(dep, mu, 4.0, 1e12, 0.0, 1)
    x = relative_coords(dep, 1)
    assert huge.sigma_b**2 == pytest.approx(dep.n**2 * 16.0, rel=1e-6)
    assert huge.sigma_a**2 == pytest.approx(16.0 * x.sum() ** 2, rel=1e-6)


def test_correlated_monte_carlo():
    dep, mu = small_fixture(seed=3, n=5)
    ref = axis_sum_stats_correlated(dep, mu, 4.0, 40.0, 0.0, 0)
    rho = rho_ab_correlated(dep, mu, 4.0, 40.0, 0.0, 0)
    a, b = sum_samples(dep, mu, 4.0, 0.0, 1_000_000, np.random.default_rng(2), x_c=40.0)
    assert a.std() == pytest.approx(ref.sigma_a, rel=0.01)
    assert b.std() == pytest.approx(ref.sigma_b, rel=0.01)
    assert a.mean() == pytest.approx(ref.m_a, rel=0.01)
    assert rho == pytest.approx(np.corrcoef(a, b)[0, 1], abs=0.01)


def test_rho_correlated_symmetric_grid(grid100):
    mu = mu_constants(P4, grid100, PMIN4)
    for xc in (5.0, 20.0, 200.0):
        assert rho_ab_correlated(grid100, mu, 4.0, xc, 0.0, 0) == pytest.approx(0.0, abs=1e-9)


def test_ratio_degenerate_denominator():
    m, s = ratio_moments_quadrature(30.0, 6.0, 10.0, 1e-5, 0.0)
    assert m == pytest.approx(3.0, rel=1e-4)
    assert s == pytest.approx(0.6, rel=1e-4)


def test_ratio_odd_symmetry():
    m, _ = ratio_moments_quadrature(0.0, 5.0, 40.0, 4.0, 0.0)
    assert abs(m) < 1e-8


def test_ratio_domain():
    with pytest.raises(RatioDomainError, match="sign-definite"):
        ratio_moments_quadrature(1.0, 1.0, 2.0, 1.0, 0.0)
    with pytest.raises(RatioDomainError):
        ratio_moments_hayya(1.0, 1.0, 0.0, 1.0, 0.0)


def test_ratio_quadrature_monte_carlo():
    ma, sa, mb, sb, r = 25.0, 12.0, 20.0, 4.0, 0.4
    gen = np.random.default_rng(5)
    z = []
    for _ in range(10):
        u, v = gen.standard_normal((2, 1_000_000))
        a = ma + sa * u
        b = mb + sb * (r * u + math.sqrt(1 - r * r) * v)
        z.append(a / b)
    z = np.concatenate(z)
    m, s = ratio_moments_quadrature(ma, sa, mb, sb, r)
    se = z.std() / math.sqrt(z.size)
    assert abs(m - z.mean()) < 3 * se
    # SE of a standard deviation via the fourth moment
    k4 = np.mean((z - z.mean()) ** 4)
    se_s = math.sqrt((k4 - z.var() ** 2) / z.size) / (2 * z.std())
    assert abs(s - z.std()) < 3 * se_s


def test_ratio_pdf_integrates_and_fits():
    ma, sa, mb, sb, r = 10.0, 8.0, 30.0, 5.0, -0.3
    zz = np.linspace(-3, 4, 20001)
    f = ratio_pdf(zz, ma, sa, mb, sb, r)
    assert np.all(f >= 0)
    assert trapezoid(f, zz) == pytest.approx(1.0, abs=1e-4)
    gen = np.random.default_rng(0)
    u, v = gen.standard_normal((2, 200_000))
    z = (ma + sa * u) / (mb + sb * (r * u + math.sqrt(1 - r * r) * v))
    cdf = np.concatenate([[0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(zz))])
    assert stats.kstest(z, lambda q: np.interp(q, zz, cdf)).pvalue > 0.01


def test_hayya_special_cases():
    assert ratio_moments_hayya(6.0, 0.0, 3.0, 0.0, 0.0) == (2.0, 0.0)
    m, s = ratio_moments_hayya(0.0, 5.0, 20.0, 3.0, 0.0)
    assert m == 0.0 and s == 5.0 / 20.0


def test_hayya_vs_quadrature_30_node_grid():
    dep = place_fixed_grid(100.0, 30)
    p = ChannelParams(sigma_s=5.0)
    res_q = analyze_deployment(p, dep.with_pu((3.0, 1.0)), compute_pmin(p, 100.0, WclConfig()))
    res_h = analyze_deployment(p, dep.with_pu((3.0, 1.0)), compute_pmin(p, 100.0, WclConfig()), method="hayya")
    for aq, ah in ((res_q.axis_x, res_h.axis_x), (res_q.axis_y, res_h.axis_y)):
        assert ah.m_hat == pytest.approx(aq.m_hat, rel=0.005, abs=1e-3)
        assert ah.sigma_hat**2 == pytest.approx(aq.sigma_hat**2, rel=0.03)


@settings(max_examples=15)
@given(st.integers(30, 120), st.floats(1.0, 6.0), st.integers(0, 10**6))
def test_hayya_vs_quadrature_property(n, sigma_s, seed):
    dep = place_uniform_disk(100.0, n, Rng(seed), pu=(5.0, -5.0))
    p = ChannelParams(sigma_s=sigma_s)
    mu = mu_constants(p, dep, compute_pmin(p, 100.0, WclConfig()))
    assume(np.min(dep.true_distances()) > 1.0)
    st_ = axis_sum_stats_iid(dep, mu, sigma_s, 0.0, 0)
    assume(st_.m_b >= 5 * st_.sigma_b)
    r = rho_ab_iid(dep, mu, sigma_s, 0.0, 0)
    mq, sq = ratio_moments_quadrature(st_.m_a, st_.sigma_a, st_.m_b, st_.sigma_b, r)
    mh, sh = ratio_moments_hayya(st_.m_a, st_.sigma_a, st_.m_b, st_.sigma_b, r)
    # relative mean agreement, with an absolute floor scaled to the spread near m = 0
    assert abs(mh - mq) <= 0.005 * abs(mq) + 1e-3 * sq
    assert sh**2 == pytest.approx(sq**2, rel=0.03)


def wcl_samples(dep, params, pmin, n, gen):
    s = sample_shadowing(params, dep.true_positions, gen, size=n)
    from wclkit.channel import mean_received_power
    w = np.maximum(mean_received_power(params, dep.true_distances()) + s - pmin, 0.0)
    return weighted_centroid(np.broadcast_to(dep.measured_positions, (n, dep.n, 2)), w) - dep.pu_position


def test_cross_axis_symmetric_grid(grid100):
    res = cross_axis_correlation(grid100, P4, PMIN4)
    e = wcl_samples(grid100, P4, PMIN4, 200_000, np.random.default_rng(0))
    assert res.rho_xy == pytest.approx(np.corrcoef(e.T)[0, 1], abs=0.02)


def test_cross_axis_line():
    t = np.linspace(10.0, 80.0, 15)
    dep = line_deployment(t, t, area_R=200.0)
    res = cross_axis_correlation(dep, P4, PMIN4)
    e = wcl_samples(dep, P4, PMIN4, 200_000, np.random.default_rng(1))
    mc = np.corrcoef(e.T)[0, 1]
    assert mc > 0.999
    assert res.rho_xy == pytest.approx(mc, abs=0.05)


def test_cross_axis_uniform_fixture():
    dep = place_uniform_disk(100.0, 50, Rng(4), pu=(10.0, 20.0))
    res = cross_axis_correlation(dep, P4, PMIN4)
    e = wcl_samples(dep, P4, PMIN4, 200_000, np.random.default_rng(2))
    assert res.rho_xy == pytest.approx(np.corrcoef(e.T)[0, 1], abs=0.05)
    assert abs(res.rho_guarded - res.rho_xy) < 0.05


def test_rayleigh_special_case():
    s = 3.0
    pdf = norm_density(0.0, 0.0, s, s)
    r = pdf.grid
    assert np.allclose(pdf.density, r / s**2 * np.exp(-r * r / (2 * s * s)), atol=1e-9)
    assert pdf.mean == pytest.approx(s * math.sqrt(math.pi / 2), rel=1e-6)


@pytest.mark.parametrize("method", ["auto", "series"])
def test_rician_special_case(method):
    m, s = 4.0, 2.0
    pdf = norm_density(m, 0.0, s, s * (1 + 1e-6) if method == "series" else s, method=method)
    ref = stats.rice.pdf(pdf.grid, m / s, scale=s)
    assert np.allclose(pdf.density, ref, atol=1e-5)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.5, 4), st.floats(0.5, 4))
def test_pdf_normalized_and_axis_exchange(mx, my, sx, sy):
    a = norm_density(mx, my, sx, sy)
    b = norm_density(my, mx, sy, sx)
    assert np.all(a.density >= 0)
    assert trapezoid(a.density, a.grid) == pytest.approx(1.0, abs=1e-3)
    assert a.mean == pytest.approx(b.mean, rel=1e-6)


def test_series_matches_convolution():
    grid = np.linspace(0.0, 12.0, 4096)
    a = norm_density(2.0, 1.0, 1.0, 1.5, method="series", grid=grid)
    b = norm_density(2.0, 1.0, 1.0, 1.5, method="convolution", grid=grid)
    assert a.method == "series" and b.method == "convolution"
    assert np.allclose(a.density, b.density, atol=1e-6)


def test_series_cap_falls_back():
    # the far tail needs more than the index cap; auto mode switches path
    with pytest.raises(PdfError, match="did not converge"):
        norm_density(2.0, 1.0, 1.0, 2.5, method="series")
    pdf = norm_density(2.0, 1.0, 1.0, 2.5)
    assert pdf.method == "convolution"
    assert trapezoid(pdf.density, pdf.grid) == pytest.approx(1.0, abs=1e-3)


def test_error_pdf_vs_monte_carlo():
    (mx, sx), (my, sy), rho = (1.5, 3.0), (-0.5, 2.0), 0.35
    pdf = error_2d_distribution((mx, sx), (my, sy), rho)
    gen = np.random.default_rng(3)
    cov = np.array([[sx * sx, rho * sx * sy], [rho * sx * sy, sy * sy]])
    e = gen.multivariate_normal([mx, my], cov, size=10_000_000)
    r = np.hypot(e[:, 0], e[:, 1])
    assert pdf.mean == pytest.approx(r.mean(), rel=0.005)
    edges = np.quantile(r[:100_000], np.linspace(0, 1, 41))
    edges[0], edges[-1] = 0.0, np.inf
    obs = np.histogram(r, edges)[0]
    exp = np.diff(pdf.cdf(np.minimum(edges, pdf.grid[-1]))) * r.size
    # chi-square with a pdf tabulated on a 4096-point grid: compare on a 1e5 subsample
    sub = np.histogram(r[:100_000], edges)[0]
    assert stats.chisquare(sub, exp / r.size * 100_000).pvalue > 0.01
    assert obs.sum() == r.size


def test_decorrelation_preserves_norm():
    dc = decorrelate([1.0, 2.0], 3.0, 1.5, 0.6)
    assert np.allclose(dc.q @ dc.q.T, np.eye(2))
    cov = dc.q @ dc.omega_L @ dc.q.T
    assert abs(cov[0, 1]) < 1e-12
    assert np.all(np.linalg.eigvalsh(dc.omega_L) >= 0)
    e = np.random.default_rng(0).normal(size=(1000, 2))
    assert np.allclose(np.hypot(*e.T), np.hypot(*(e @ dc.q.T).T), rtol=1e-14, atol=0)


def test_symmetric_grid_theory_means_zero(grid100):
    res = analyze_deployment(P4, grid100, PMIN4)
    assert abs(res.axis_x.m_hat) < 1e-9 and abs(res.axis_y.m_hat) < 1e-9


def test_average_over_placements_single_and_deterministic(grid100):
    one = average_over_placements(lambda r: grid100, P4, PMIN4, 1, Rng(0))
    assert one.mean_err_m == analyze_deployment(P4, grid100, PMIN4).mean
    mk = lambda r: place_uniform_disk(100.0, 60, r)
    a = average_over_placements(mk, P4, PMIN4, 3, Rng(1))
    b = average_over_placements(mk, P4, PMIN4, 3, Rng(1))
    assert a.mean_err_m == b.mean_err_m and a.n_placements == 3


@pytest.mark.slow
def test_placement_average_matches_simulation():
    from wclkit.harness import ChannelSpec, DeploymentSpec, ExperimentConfig, run_experiment
    cfg = ExperimentConfig(deployment=DeploymentSpec("uniform_disk", 100.0, 100),
                           channel=ChannelSpec(sigma_s=4.0), trials=4000, placements=200, seed=3)
    sim = run_experiment(cfg)[0]
    th = run_experiment(cfg.with_overrides(kind="theory"))[0]
    se = math.hypot(sim.std_err, th.std_err)
    assert abs(sim.mean_err_m - th.mean_err_m) < 2 * se
