import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_cfg
from stochshe import noise as nz
from stochshe.attractor import (PointCloud, absorbing_radii, diameter, estimate_attractor,
                                hausdorff, hausdorff_semidist, pairwise_distances, pullback_endpoint,
                                sample_v_ball, usc_experiment)
from stochshe.dynamics import integrate
from stochshe.spectral import build_basis, random_field, single_mode, v_norm, zeros


def const_ou(value, span=40.0, dt=2.0**-8):
    n = int(round(span / dt))
    return nz.OUPath(t_min=-span, dt=dt, z=np.full(n + 1, float(value)))


# ---- radii ---------------------------------------------------------------------

def test_radii_zero_path():
    r = absorbing_radii(const_ou(0.0), 0.0, 0.0)
    assert r.functionals.Meps == pytest.approx(0.5, abs=1e-6)
    assert r.rho1_sq == pytest.approx(1.5, abs=1e-6)
    assert r.rho2_sq == pytest.approx(2.25, abs=1e-6)
    assert r.rho3 == pytest.approx(2.25, abs=1e-6)


def test_radii_constant_one_path():
    r = absorbing_radii(const_ou(1.0), 0.1, 1.0)
    assert r.rho1_sq == pytest.approx(1 + 0.678557 * 2, abs=1e-3)
    assert r.rho1_sq == pytest.approx(2.357114, abs=1e-3)


@given(st.floats(0, 1), st.floats(0, 4))
def test_radii_increase_with_forcing(eps, dh):
    ou = nz.ou_from_path(nz.sample_wiener(5, -40, 0, 2.0**-6), 20.0)
    lo, hi = absorbing_radii(ou, eps, 0.0), absorbing_radii(ou, eps, dh + 1e-3)
    assert hi.rho1 > lo.rho1 and hi.rho2 > lo.rho2 and hi.rho3 > lo.rho3


def test_radii_need_coverage():
    with pytest.raises(ValueError):
        absorbing_radii(const_ou(0.0, span=1.5), 0.5, 0.0)


# ---- pullback --------------------------------------------------------------------

@pytest.fixture(scope="module")
def pb_setup():
    b = build_basis(np.pi, 4)
    cfg = make_cfg(b, h=single_mode(b, 1, 1, 0.5))
    path = nz.sample_wiener(2, -40, 0, cfg.dt)
    return b, cfg, path


def test_pullback_zero_time(pb_setup):
    b, cfg, path = pb_setup
    u0 = random_field(b, np.random.default_rng(0))
    assert pullback_endpoint(cfg, path, u0, 0.0) is u0
    with pytest.raises(ValueError):
        pullback_endpoint(cfg, path, u0, -1.0)


@pytest.mark.parametrize("scheme", ["exp-euler-rpde", "exp-em-spde"])
def test_pullback_cocycle(pb_setup, scheme):
    b, cfg, path = pb_setup
    cfg = cfg.with_(scheme=scheme)
    u0 = random_field(b, np.random.default_rng(1))
    t, s = 3.0, 1.5
    ou = nz.ou_from_path(path, cfg.burn_in)
    first = pullback_endpoint(cfg, nz.shift(path, -s), u0, t)
    then = integrate(cfg, path, first, -s, 0.0, ou=ou).final()[0]
    direct = pullback_endpoint(cfg, path, u0, t + s, ou=ou).xi
    assert np.max(np.abs(then - direct)) <= 1e-8


def test_pullback_deterministic_decay():
    b = build_basis(np.pi, 4)
    cfg = make_cfg(b, eps=0.0)
    path = nz.sample_wiener(0, -45, 0, cfg.dt)
    rng = np.random.default_rng(2)
    for _ in range(5):
        u0 = random_field(b, rng, norm=rng.uniform(0.1, 1.0))
        assert np.linalg.norm(pullback_endpoint(cfg, path, u0, 20.0).xi) <= 1e-6


def test_deterministic_attractor_is_origin():
    b = build_basis(np.pi, 4)
    cfg = make_cfg(b, eps=0.0)
    path = nz.sample_wiener(0, -65, 0, cfg.dt)
    cloud = estimate_attractor(cfg, path, 6, 20.0)
    assert np.max(np.abs(cloud.points)) <= 1e-6
    assert cloud.meta["doubling"]["converged"]


def test_cloud_members_independent_of_labels(pb_setup):
    b, cfg, path = pb_setup
    cloud = estimate_attractor(cfg, path, 5, 2.0, radius_source=1.0, check_doubling=False)
    rng = nz.stream(cfg.seed, path.path_index, purpose=2)
    starts = sample_v_ball(b, 1.0, 5, rng)
    ou = nz.ou_from_path(path, cfg.burn_in)
    for i in np.random.default_rng(0).permutation(5):
        single = pullback_endpoint(cfg, path, type(zeros(b))(b, starts[i]), 2.0, ou=ou).xi
        np.testing.assert_allclose(cloud.points[i], single, atol=1e-13)
    shuffled = PointCloud(b, cloud.points[::-1])
    assert hausdorff(cloud, shuffled) == 0.0


def test_doubling_diagnostic_recorded(pb_setup):
    b, cfg, path = pb_setup
    d = estimate_attractor(cfg, path, 4, 10.0).meta["doubling"]
    assert set(d) == {"shift", "diameter", "converged"}
    assert d["converged"]
    # too short a pullback is reported, not raised
    assert not estimate_attractor(cfg, path, 4, 4.0).meta["doubling"]["converged"]


def test_v_ball_samples_inside():
    b = build_basis(np.pi, 4)
    pts = sample_v_ball(b, 3.0, 200, np.random.default_rng(3))
    vn = np.sqrt(np.sum(b.lam * pts**2, axis=1))
    assert np.all(vn <= 3.0) and vn.max() > 2.5


def test_empirical_absorption_constant():
    # endpoints from a bounded start set, measured against ρ₂(ε, ω)
    b = build_basis(np.pi, 4)
    h = single_mode(b, 1, 1, 1.0)
    fits = {0: [], 1: []}
    for eps in (0.1, 0.5, 1.0):
        for seed in range(8):
            cfg = make_cfg(b, eps=eps, h=h, seed=seed)
            path = nz.sample_wiener(seed, -60, 0, cfg.dt)
            cloud = estimate_attractor(cfg, path, 8, 5.0, radius_source=2.0, check_doubling=False)
            rho2 = absorbing_radii(nz.ou_from_path(path, cfg.burn_in), eps, cfg.h_norm2).rho2
            fits[seed // 4].append(np.sqrt(np.sum(b.lam * cloud.points**2, axis=1)).max() / rho2)
    c_lo, c_hi = max(fits[0]), max(fits[1])
    assert np.isfinite(c_lo) and np.isfinite(c_hi)
    assert 0.5 <= c_lo / c_hi <= 1.5


# ---- distances ---------------------------------------------------------------------

def test_semidist_examples(basis4):
    p = single_mode(basis4, 1, 1, 2.5)  # ‖Δp‖ = 2·2.5 = 5
    assert v_norm(basis4, p.xi) == pytest.approx(5.0)
    A = PointCloud(basis4, [zeros(basis4).xi])
    B = PointCloud(basis4, [zeros(basis4).xi, p.xi])
    assert hausdorff_semidist(B, A) == pytest.approx(5.0)
    assert hausdorff_semidist(A, B) == 0.0
    assert hausdorff_semidist(A, A) == 0.0
    assert hausdorff_semidist(B, A, norm="H") == pytest.approx(2.5)
    assert diameter(B) == pytest.approx(5.0)


clouds = st.integers(1, 6).flatmap(
    lambda m: st.lists(st.lists(st.floats(-2, 2), min_size=4, max_size=4), min_size=m, max_size=m))


@given(clouds, clouds, clouds)
def test_semidist_triangle(b_pts, c_pts, a_pts):
    basis = build_basis(np.pi, 2)
    B, C, A = (PointCloud(basis, p) for p in (b_pts, c_pts, a_pts))
    assert hausdorff_semidist(B, A) <= hausdorff_semidist(B, C) + hausdorff_semidist(C, A) + 1e-12


@given(clouds, st.lists(st.floats(-2, 2), min_size=4, max_size=4))
def test_semidist_to_singleton(b_pts, a):
    basis = build_basis(np.pi, 2)
    B = PointCloud(basis, b_pts)
    w = np.sqrt(basis.lam)
    expected = np.max(np.linalg.norm((np.array(b_pts) - a) * w, axis=1))
    assert hausdorff_semidist(B, PointCloud(basis, [a])) == expected


def test_cloud_validation(basis4, basis8):
    with pytest.raises(ValueError):
        PointCloud(basis4, np.zeros((0, basis4.n_modes)))
    with pytest.raises(ValueError):
        PointCloud(basis4, np.zeros((2, 3)))
    with pytest.raises(ValueError):
        pairwise_distances(PointCloud(basis4, [zeros(basis4).xi]), PointCloud(basis8, [zeros(basis8).xi]))
    with pytest.raises(ValueError):
        pairwise_distances(PointCloud(basis4, [zeros(basis4).xi]), PointCloud(basis4, [zeros(basis4).xi]), "L7")


# ---- upper semicontinuity table ------------------------------------------------------

def test_usc_eps_zero_gives_zero_distance():
    b = build_basis(np.pi, 2)
    cfg = make_cfg(b, dt=2.0**-6)
    res = usc_experiment(cfg, [0.0], [0, 1], t_pullback=5.0, M=3)
    assert [r["dist_V"] for r in res.rows] == [0.0, 0.0]
    assert res.medians == {0.0: 0.0}


def test_usc_reduces_to_sup_norm_for_trivial_attractor():
    b = build_basis(np.pi, 2)
    cfg = make_cfg(b, dt=2.0**-6)
    res = usc_experiment(cfg, [0.5], [0, 1, 2], t_pullback=5.0, M=3)
    assert np.max(np.abs(res.attractor0.points)) < 1e-4
    for r in res.rows:
        assert r["dist_V"] >= 0 and r["eps"] == 0.5 and r["t_pullback"] == 5.0
    assert res.medians[0.5] == np.median([r["dist_V"] for r in res.rows])
