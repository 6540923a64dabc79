#pragma once

#include <sfd/mesh.hpp>
#include <sfd/types.hpp>

#include <cmath>
#include <type_traits>

namespace sfd {

// Flat triangular panel with frozen derived data.
struct Panel {
  Mat3 vertices;  // rows are the three corners
  Vec3 normal;    // unit
  Vec3 centroid;
  Real area = 0;
  Real diameter = 0;  // longest edge

  static Panel from_vertices(const Mat3& verts);
};

Panel make_panel(const SurfaceMesh& mesh, Index f);

enum class Regime { Far, Near, Self };

struct QuadratureConfig {
  // 12-point far rule: the 6-point rule misses the 1e-6 closed-form/Gauss
  // continuity requirement at the regime boundary for the gradient kernel.
  int far_order = 12;              // Gauss points on the far path: 1, 3, 6 or 12
  int near_subdivision_depth = 3;  // numeric fallback recursion depth, <= 6
  Real near_ratio = 2.0;           // dist/diameter threshold between near and far
  enum class Method { ClosedForm, Numeric } method = Method::ClosedForm;
};

// distance(target, panel) treating the panel as a closed 2D region in space
Vec3 closest_point_on_triangle(const Vec3& x, const Mat3& verts);
Real point_triangle_distance(const Vec3& x, const Mat3& verts);

Regime classify_regime(const Vec3& target, const Panel& panel, const QuadratureConfig& cfg);

// ∫_T 1/|x-y| dσ(y). Finite for x on the closed panel (weakly singular);
// the caller applies the -1/(4π) of the Laplace kernel.
Real panel_potential(const Vec3& target, const Panel& panel, const QuadratureConfig& cfg = {});

// ∫_T (x-y)/|x-y|³ dσ(y); when x lies in the panel plane the value is the
// in-plane principal value and the normal component vanishes.
Vec3 panel_gradient(const Vec3& target, const Panel& panel, const QuadratureConfig& cfg = {});

// Cauchy principal value of the gradient integral at the panel centroid.
Vec3 pv_self_gradient(const Panel& panel, const QuadratureConfig& cfg = {});

// ---------------------------------------------------------------------------
// Closed-form core, templated on the scalar so the same formulas can be run
// in extended precision.
//
// Edge decomposition for the 1/r potential of a uniform density on a flat
// triangle and for its gradient. Per edge with unit direction l and outward
// in-plane normal m = l x n:
//   L   = log((R+ + l+)/(R- + l-))
//   beta = atan(t l+/(R0² + |d| R+)) - atan(t l-/(R0² + |d| R-))
// where t is the signed in-plane distance from the projected target to the
// edge line, d the height above the plane, R± the corner distances and
// R0² = t² + d². Then
//   ∫ 1/r        = Σ t L - |d| Σ beta
//   ∫ (x-y)/r³   = Σ m L + sign(d) (Σ beta) n
// and Σ beta is the solid angle subtended by the triangle.
// ---------------------------------------------------------------------------

namespace detail {

template <typename Scalar>
struct EdgeTerms {
  Vec3T<Scalar> edge_normal;  // m
  Scalar t, L, beta;
};

// R + l without cancellation for l < 0: R + l = R0² / (R - l).
template <typename Scalar>
Scalar stable_r_plus_l(Scalar r, Scalar l, Scalar r0sq) {
  return l > 0 ? r + l : r0sq / (r - l);
}

// All positions are relative to the target, which keeps the evaluation
// exactly translation invariant. a, b are the edge endpoints minus the
// target, n the panel normal, d the height of the target above the plane.
template <typename Scalar>
void edge_terms(const Vec3T<Scalar>& a, const Vec3T<Scalar>& b, const Vec3T<Scalar>& n, Scalar d,
                EdgeTerms<Scalar>& out) {
  Vec3T<Scalar> l_hat = b - a;
  l_hat /= l_hat.norm();
  out.edge_normal = l_hat.cross(n);
  // a + d*n is the edge start seen from the projected target
  const Vec3T<Scalar> a_proj = a + d * n;
  const Vec3T<Scalar> b_proj = b + d * n;
  out.t = out.edge_normal.dot(a_proj);
  const Scalar l_minus = l_hat.dot(a_proj);
  const Scalar l_plus = l_hat.dot(b_proj);
  const Scalar r_minus = a.norm();
  const Scalar r_plus = b.norm();
  const Scalar r0sq = out.t * out.t + d * d;

  const Scalar num = stable_r_plus_l(r_plus, l_plus, r0sq);
  const Scalar den = stable_r_plus_l(r_minus, l_minus, r0sq);
  out.L = (num > 0 && den > 0) ? std::log(num / den) : Scalar(0);

  const Scalar ad = std::abs(d);
  out.beta = std::atan2(out.t * l_plus, r0sq + ad * r_plus) -
             std::atan2(out.t * l_minus, r0sq + ad * r_minus);
}

template <typename Scalar>
Mat3T<Scalar> relative_vertices(const Vec3T<Scalar>& x, const Mat3T<Scalar>& verts) {
  Mat3T<Scalar> rel = verts;
  rel.rowwise() -= x.transpose();
  return rel;
}

template <typename Scalar>
Vec3T<Scalar> triangle_unit_normal(const Mat3T<Scalar>& verts) {
  const Vec3T<Scalar> c =
      Vec3T<Scalar>(verts.row(1) - verts.row(0)).cross(Vec3T<Scalar>(verts.row(2) - verts.row(0)));
  return c / c.norm();
}

}  // namespace detail

template <typename Scalar>
Scalar triangle_potential_closed(const Vec3T<Scalar>& x, const Mat3T<Scalar>& verts) {
  const Mat3T<Scalar> rel = detail::relative_vertices(x, verts);
  const Vec3T<Scalar> n = detail::triangle_unit_normal(rel);
  const Scalar d = -n.dot(Vec3T<Scalar>(rel.row(0)));
  Scalar pot = 0, omega = 0;
  detail::EdgeTerms<Scalar> e;
  for (int k = 0; k < 3; ++k) {
    detail::edge_terms<Scalar>(rel.row(k), rel.row((k + 1) % 3), n, d, e);
    pot += e.t * e.L;
    omega += e.beta;
  }
  return pot - std::abs(d) * omega;
}

template <typename Scalar>
Vec3T<Scalar> triangle_gradient_closed(const Vec3T<Scalar>& x, const Mat3T<Scalar>& verts,
                                       bool principal_value = false) {
  const Mat3T<Scalar> rel = detail::relative_vertices(x, verts);
  const Vec3T<Scalar> n = detail::triangle_unit_normal(rel);
  Scalar d = -n.dot(Vec3T<Scalar>(rel.row(0)));
  if (principal_value) d = 0;
  Vec3T<Scalar> g = Vec3T<Scalar>::Zero();
  Scalar omega = 0;
  detail::EdgeTerms<Scalar> e;
  for (int k = 0; k < 3; ++k) {
    detail::edge_terms<Scalar>(rel.row(k), rel.row((k + 1) % 3), n, d, e);
    g += e.L * e.edge_normal;
    omega += e.beta;
  }
  if (d != 0) g += (d > 0 ? omega : -omega) * n;
  return g;
}

// Signed solid angle subtended by the triangle at x (van Oosterom-Strackee);
// positive on the side the normal points to.
template <typename Scalar>
Scalar triangle_solid_angle(const Vec3T<Scalar>& x, const Mat3T<Scalar>& verts) {
  const Vec3T<Scalar> r1 = Vec3T<Scalar>(verts.row(0)) - x;
  const Vec3T<Scalar> r2 = Vec3T<Scalar>(verts.row(1)) - x;
  const Vec3T<Scalar> r3 = Vec3T<Scalar>(verts.row(2)) - x;
  const Scalar n1 = r1.norm(), n2 = r2.norm(), n3 = r3.norm();
  const Scalar numer = r1.dot(r2.cross(r3));
  const Scalar denom = n1 * n2 * n3 + r1.dot(r2) * n3 + r2.dot(r3) * n1 + r3.dot(r1) * n2;
  return -Scalar(2) * std::atan2(numer, denom);
}

// Symmetric Gauss rules on the reference triangle, weights summing to one.
struct TriangleRule {
  int npts = 0;
  const Real* bary;     // npts x 3 barycentric coordinates
  const Real* weights;  // npts
};

// Valid orders: 1, 3, 6, 12 (degrees 1, 2, 4, 6). Throws on anything else.
TriangleRule triangle_rule(int order);

template <typename Scalar, typename F>
auto integrate_gauss(const Mat3T<Scalar>& verts, Scalar area, int order, F&& f) {
  using Ret = std::invoke_result_t<F, Vec3T<Scalar>>;
  const TriangleRule rule = triangle_rule(order);
  Ret acc;
  if constexpr (std::is_arithmetic_v<Ret>)
    acc = 0;
  else
    acc.setZero();
  for (int q = 0; q < rule.npts; ++q) {
    const Vec3T<Scalar> y = Scalar(rule.bary[3 * q + 0]) * Vec3T<Scalar>(verts.row(0)) +
                            Scalar(rule.bary[3 * q + 1]) * Vec3T<Scalar>(verts.row(1)) +
                            Scalar(rule.bary[3 * q + 2]) * Vec3T<Scalar>(verts.row(2));
    acc += Scalar(rule.weights[q]) * f(y);
  }
  return Ret(area * acc);
}

// Numeric fallback path (subdivision + Duffy / excision extrapolation);
// reachable through QuadratureConfig::Method::Numeric for cross-validation.
Real panel_potential_numeric(const Vec3& target, const Panel& panel, const QuadratureConfig& cfg);
Vec3 panel_gradient_numeric(const Vec3& target, const Panel& panel, const QuadratureConfig& cfg);
Vec3 pv_self_gradient_numeric(const Panel& panel, const QuadratureConfig& cfg);

}  // namespace sfd
