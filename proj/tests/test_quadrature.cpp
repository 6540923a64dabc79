#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sfd/quadrature.hpp>

#include "oracle_quadrature.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace sfd;

namespace {

constexpr Real kPi = std::numbers::pi_v<Real>;

Mat3 unit_right_triangle() {
  Mat3 v;
  v << 0, 0, 0, 1, 0, 0, 0, 1, 0;
  return v;
}

Mat3 equilateral(Real side) {
  Mat3 v;
  v << 0, 0, 0, side, 0, 0, side / 2, side * std::sqrt(3.0) / 2, 0;
  return v;
}

oracle::M3 to_ld(const Mat3& m) { return m.cast<long double>(); }
oracle::V3 to_ld(const Vec3& v) { return v.cast<long double>(); }

Mat3 random_panel(std::mt19937& rng) {
  std::uniform_real_distribution<Real> uni(-1.0, 1.0);
  while (true) {
    Mat3 v;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) v(i, j) = uni(rng);
    const Panel p = Panel::from_vertices(v);
    if (p.area > 0.05 * p.diameter * p.diameter) return v;
  }
}

Vec3 random_unit(std::mt19937& rng) {
  std::normal_distribution<Real> g;
  Vec3 u(g(rng), g(rng), g(rng));
  return u.normalized();
}

}  // namespace

TEST_CASE("self potential matches the annular excision oracle") {
  const Mat3 v = unit_right_triangle();
  const Panel p = Panel::from_vertices(v);
  const Real closed = panel_potential(p.centroid, p);
  const long double ref = oracle::potential(to_ld(Vec3(p.centroid)), to_ld(v));
  const long double ref_excised =
      oracle::potential_excision_limit(to_ld(Vec3(p.centroid)), to_ld(v), 0.05L);
  CHECK(std::abs(static_cast<Real>(ref - ref_excised)) < 1e-10);
  CHECK(std::abs(closed - static_cast<Real>(ref)) < 1e-10);
}

TEST_CASE("far potential approaches the monopole") {
  const Panel p = Panel::from_vertices(equilateral(0.7));
  const Real d = 100.0 * p.diameter;
  const Vec3 target = p.centroid + d * Vec3(0.3, -0.5, 0.81).normalized();
  const Real value = panel_potential(target, p);
  CHECK(std::abs(value - p.area / d) / (p.area / d) < 1e-3);
}

TEST_CASE("potential is translation invariant bit for bit") {
  const Mat3 v = unit_right_triangle();
  const Vec3 shift(12.25, -3.5, 0.125);  // exactly representable
  Mat3 vs = v;
  vs.rowwise() += shift.transpose();
  const Panel a = Panel::from_vertices(v);
  const Panel b = Panel::from_vertices(vs);
  const Vec3 t(0.25, 0.125, 0.5);  // exactly representable, so t + shift rounds nowhere
  CHECK(panel_potential(t, a) == panel_potential(t + shift, b));
  CHECK(panel_gradient(t, a) == panel_gradient(t + shift, b));
}

TEST_CASE("gradient normal component vanishes for in-plane targets") {
  const Mat3 v = unit_right_triangle();
  const Panel p = Panel::from_vertices(v);
  const Vec3 t(2.0, 1.5, 0.0);  // in the panel plane, outside the panel
  const Vec3 g = panel_gradient(t, p);
  CHECK(std::abs(g.dot(p.normal)) < 1e-14 * g.norm());
}

TEST_CASE("far gradient approaches the monopole field") {
  const Panel p = Panel::from_vertices(equilateral(0.9));
  const Vec3 dir = Vec3(0.2, 0.9, -0.3).normalized();
  const Vec3 target = p.centroid + 100.0 * p.diameter * dir;
  const Vec3 r = target - p.centroid;
  const Vec3 expected = p.area * r / std::pow(r.norm(), 3);
  CHECK((panel_gradient(target, p) - expected).norm() / expected.norm() < 1e-3);
}

TEST_CASE("pv self gradient vanishes on the equilateral panel") {
  const Panel p = Panel::from_vertices(equilateral(1.3));
  CHECK(pv_self_gradient(p).norm() < 1e-13);
}

TEST_CASE("pv self gradient matches the disk-excision limit oracle") {
  const Panel p = Panel::from_vertices(unit_right_triangle());
  const Vec3 closed = pv_self_gradient(p);
  const oracle::V3 ref = oracle::gradient_pv(to_ld(Vec3(p.centroid)), to_ld(p.vertices), 0.02L);
  CHECK((closed.cast<long double>() - ref).norm() < 1e-6);
  // the pv lies in the panel plane
  CHECK(std::abs(closed.dot(p.normal)) < 1e-14);
}

TEST_CASE("pv self gradient is reflection equivariant") {
  Mat3 v = unit_right_triangle();
  v(1, 0) = 0.8;
  v(2, 1) = 1.4;
  Mat3 mirrored = v;
  mirrored.col(0) *= -1;           // reflect across the x=0 plane
  mirrored.row(1).swap(mirrored.row(2));  // restore orientation
  const Vec3 g = pv_self_gradient(Panel::from_vertices(v));
  const Vec3 gm = pv_self_gradient(Panel::from_vertices(mirrored));
  CHECK(std::abs(g[0] + gm[0]) < 1e-13);
  CHECK(std::abs(g[1] - gm[1]) < 1e-13);
  CHECK(std::abs(g[2] - gm[2]) < 1e-13);
}

TEST_CASE("solid angle conventions agree (edge sum vs vector form)") {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat3 v = random_panel(rng);
    const Panel p = Panel::from_vertices(v);
    const Vec3 x = p.centroid + (0.1 + trial * 0.05) * p.diameter * random_unit(rng);
    const Real omega_vos = triangle_solid_angle<Real>(x, v);
    // recover the edge-atan solid angle from the gradient's normal part
    const Vec3 g = triangle_gradient_closed<Real>(x, v);
    const Real d = p.normal.dot(x - Vec3(v.row(0)));
    if (std::abs(d) < 1e-6 * p.diameter) continue;
    const Real omega_edges = g.dot(p.normal);
    CHECK(omega_vos == doctest::Approx(omega_edges).epsilon(1e-10));
  }
}

TEST_CASE("solid angle limit is 2 pi on the normal side") {
  const Mat3 v = unit_right_triangle();
  const Panel p = Panel::from_vertices(v);
  const Vec3 above = p.centroid + 1e-7 * p.normal;
  const Vec3 below = p.centroid - 1e-7 * p.normal;
  CHECK(triangle_solid_angle<Real>(above, v) == doctest::Approx(2 * kPi).epsilon(1e-5));
  CHECK(triangle_solid_angle<Real>(below, v) == doctest::Approx(-2 * kPi).epsilon(1e-5));
}

TEST_CASE("randomized corpus: closed form vs oracle at 1e-6 relative") {
  std::mt19937 rng(7721);  // fixed seed
  const QuadratureConfig cfg;
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Mat3 v = random_panel(rng);
    const Panel p = Panel::from_vertices(v);

    // self: potential and principal value at the centroid
    const Real pot_self = panel_potential(p.centroid, p, cfg);
    const long double pot_ref = oracle::potential(to_ld(Vec3(p.centroid)), to_ld(v));
    CHECK(std::abs(pot_self - static_cast<Real>(pot_ref)) <
          1e-6 * std::abs(static_cast<Real>(pot_ref)));

    const Vec3 pv = pv_self_gradient(p, cfg);
    const oracle::V3 pv_ref = oracle::gradient_pv(to_ld(Vec3(p.centroid)), to_ld(v), 0.02L);
    const Real pv_scale = std::max<Real>(static_cast<Real>(pv_ref.norm()), 1.0 / p.diameter);
    CHECK((pv.cast<long double>() - pv_ref).norm() < 1e-6 * pv_scale);

    // near target, off the plane
    const Vec3 near_t = p.centroid + 0.6 * p.diameter * random_unit(rng);
    const Real pot_near = panel_potential(near_t, p, cfg);
    const long double pot_near_ref = oracle::potential(to_ld(near_t), to_ld(v));
    CHECK(std::abs(pot_near - static_cast<Real>(pot_near_ref)) <
          1e-6 * std::abs(static_cast<Real>(pot_near_ref)));

    const Vec3 g_near = panel_gradient(near_t, p, cfg);
    const oracle::V3 g_near_ref = oracle::gradient_excised(to_ld(near_t), to_ld(v), 0.0L);
    CHECK((g_near.cast<long double>() - g_near_ref).norm() < 1e-6 * g_near_ref.norm());
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("regime crossover continuity") {
  std::mt19937 rng(515);
  const QuadratureConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    const Panel p = Panel::from_vertices(random_panel(rng));
    Vec3 dir = random_unit(rng);
    // place the target exactly at the near/far threshold distance
    Vec3 target = p.centroid + dir;
    const Real dist = point_triangle_distance(target, p.vertices);
    target = p.centroid + dir * (cfg.near_ratio * p.diameter / dist);

    const Real closed = triangle_potential_closed<Real>(target, p.vertices);
    const Real gauss = integrate_gauss<Real>(p.vertices, p.area, cfg.far_order,
                                             [&](const Vec3& y) { return 1.0 / (target - y).norm(); });
    CHECK(std::abs(closed - gauss) < 1e-6 * std::abs(closed));

    const Vec3 gc = triangle_gradient_closed<Real>(target, p.vertices);
    const Vec3 gg = integrate_gauss<Real>(p.vertices, p.area, cfg.far_order, [&](const Vec3& y) {
      const Vec3 r = target - y;
      return Vec3(r / std::pow(r.norm(), 3));
    });
    CHECK((gc - gg).norm() < 1e-6 * gc.norm());
  }
}

TEST_CASE("finite differences of the potential match the gradient at O(step^2)") {
  const Panel p = Panel::from_vertices(equilateral(1.1));
  const Vec3 target = p.centroid + 3.0 * p.diameter * Vec3(0.3, 0.4, 0.87).normalized();
  const Vec3 g = panel_gradient(target, p);
  auto fd_error = [&](Real h) {
    Vec3 fd;
    for (int c = 0; c < 3; ++c) {
      Vec3 e = Vec3::Zero();
      e[c] = h;
      fd[c] = (panel_potential(target + e, p) - panel_potential(target - e, p)) / (2 * h);
    }
    // gradient of the potential is minus the field integral
    return (fd + g).norm();
  };
  const Real e1 = fd_error(1e-2);
  const Real e2 = fd_error(5e-3);
  CHECK(e1 < 1e-4);
  CHECK(e2 < e1 / 3.0);  // O(h^2) contraction
}

TEST_CASE("numeric fallback cross-validates the closed form") {
  std::mt19937 rng(99);
  QuadratureConfig numeric;
  numeric.method = QuadratureConfig::Method::Numeric;
  for (int trial = 0; trial < 10; ++trial) {
    const Panel p = Panel::from_vertices(random_panel(rng));
    const Real ps = panel_potential(p.centroid, p);
    const Real pn = panel_potential(p.centroid, p, numeric);
    CHECK(std::abs(ps - pn) < 1e-6 * std::abs(ps));

    const Vec3 near_t = p.centroid + 0.8 * p.diameter * random_unit(rng);
    CHECK(std::abs(panel_potential(near_t, p) - panel_potential(near_t, p, numeric)) <
          1e-6 * std::abs(panel_potential(near_t, p)));
    CHECK((panel_gradient(near_t, p) - panel_gradient(near_t, p, numeric)).norm() <
          1e-5 * panel_gradient(near_t, p).norm());

    const Vec3 pv_closed = pv_self_gradient(p);
    const Vec3 pv_num = pv_self_gradient(p, numeric);
    const Real scale = std::max(pv_closed.norm(), 1.0 / p.diameter);
    CHECK((pv_closed - pv_num).norm() < 1e-3 * scale);
  }
}

TEST_CASE("degenerate panels and invalid rules are rejected") {
  Mat3 v;
  v << 0, 0, 0, 1, 0, 0, 2, 0, 0;
  CHECK_THROWS_AS(Panel::from_vertices(v), NumericalError);
  CHECK_THROWS_AS(triangle_rule(7), NumericalError);
}

TEST_CASE("regime classification") {
  const Panel p = Panel::from_vertices(equilateral(1.0));
  QuadratureConfig cfg;
  CHECK(classify_regime(p.centroid, p, cfg) == Regime::Self);
  CHECK(classify_regime(p.centroid + 0.5 * p.diameter * p.normal, p, cfg) == Regime::Near);
  CHECK(classify_regime(p.centroid + 10.0 * p.diameter * p.normal, p, cfg) == Regime::Far);
}
