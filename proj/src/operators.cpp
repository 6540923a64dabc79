#include <sfd/operators.hpp>

#include <cmath>
#include <numbers>
#include <vector>

namespace sfd {

namespace {
constexpr Real kInv4Pi = 1.0 / (4.0 * std::numbers::pi_v<Real>);
}

Vec3 gradient_kernel_integral(const Vec3& x, const Panel& panel, bool self,
                              const QuadratureConfig& cfg, const KernelOptions& kernel) {
  const Vec3 g = self ? pv_self_gradient(panel, cfg) : panel_gradient(x, panel, cfg);
  return kernel.gradient_sign * kInv4Pi * g;
}

GradientTable build_gradient_table(const SurfaceMesh& mesh, const QuadratureConfig& cfg,
                                   const KernelOptions& kernel) {
  const Index n = mesh.num_panels();
  GradientTable table;
  for (auto& m : table.comp) m.resize(n, n);

  std::vector<Panel> panels;
  panels.reserve(n);
  for (Index j = 0; j < n; ++j) panels.push_back(make_panel(mesh, j));

#pragma omp parallel for schedule(dynamic, 8)
  for (Index i = 0; i < n; ++i) {
    const Vec3 target = mesh.centroids.row(i);
    for (Index j = 0; j < n; ++j) {
      const Vec3 g = gradient_kernel_integral(target, panels[j], i == j, cfg, kernel);
      table.comp[0](i, j) = g[0];
      table.comp[1](i, j) = g[1];
      table.comp[2](i, j) = g[2];
    }
  }

  table.target_diag_corr.resize(n);
  for (Index j = 0; j < n; ++j) {
    Real colsum = 0;
    for (Index i = 0; i < n; ++i)
      if (i != j)
        colsum += mesh.areas[i] * (mesh.normals(i, 0) * table.comp[0](i, j) +
                                   mesh.normals(i, 1) * table.comp[1](i, j) +
                                   mesh.normals(i, 2) * table.comp[2](i, j));
    table.target_diag_corr[j] = kernel.gradient_sign * 0.5 - colsum / mesh.areas[j];
  }
  return table;
}

DiscreteOperator assemble_S(const SurfaceMesh& mesh, const QuadratureConfig& cfg) {
  const Index n = mesh.num_panels();
  Matrix t(n, n);  // area-weighted entries a_i * trace(i <- unit density on j)

  std::vector<Panel> panels;
  panels.reserve(n);
  for (Index j = 0; j < n; ++j) panels.push_back(make_panel(mesh, j));

#pragma omp parallel for schedule(dynamic, 8)
  for (Index i = 0; i < n; ++i) {
    const Vec3 target = mesh.centroids.row(i);
    for (Index j = 0; j < n; ++j)
      t(i, j) = mesh.areas[i] * (-kInv4Pi) * panel_potential(target, panels[j], cfg);
  }

  // Averaging the two orderings keeps W*S symmetric to roundoff, which the
  // energy metric construction relies on; both orderings approximate the
  // same pair integral to the collocation order.
  const Matrix t_sym = 0.5 * (t + t.transpose());
  DiscreteOperator op;
  op.matrix = mesh.areas.cwiseInverse().asDiagonal() * t_sym;
  op.domain = SpaceTag::scalar(n);
  op.codomain = SpaceTag::scalar(n);
  op.name = "S";
  return op;
}

DiscreteOperator expand_to_vector(const DiscreteOperator& scalar_op) {
  const Index n = scalar_op.matrix.rows();
  DiscreteOperator op;
  op.matrix = Matrix::Zero(3 * n, 3 * n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      const Real v = scalar_op.matrix(i, j);
      op.matrix(3 * i, 3 * j) = v;
      op.matrix(3 * i + 1, 3 * j + 1) = v;
      op.matrix(3 * i + 2, 3 * j + 2) = v;
    }
  op.domain = SpaceTag::vector(n);
  op.codomain = SpaceTag::vector(n);
  op.name = scalar_op.name + "_vec";
  return op;
}

DiscreteOperator assemble_Kstar(const SurfaceMesh& mesh, const GradientTable& table) {
  const Index n = mesh.num_panels();
  DiscreteOperator op;
  op.matrix = mesh.normals.col(0).asDiagonal() * table.comp[0] +
              mesh.normals.col(1).asDiagonal() * table.comp[1] +
              mesh.normals.col(2).asDiagonal() * table.comp[2];
  op.matrix.diagonal() += table.target_diag_corr;
  op.domain = SpaceTag::scalar(n);
  op.codomain = SpaceTag::scalar(n);
  op.name = "Kstar";
  return op;
}

DiscreteOperator assemble_J(const SurfaceMesh& mesh, const GradientTable& table) {
  const Index n = mesh.num_panels();
  DiscreteOperator op;
  op.matrix.resize(n, 3 * n);
  for (int c = 0; c < 3; ++c)
    for (Index j = 0; j < n; ++j) op.matrix.col(3 * j + c) = table.comp[c].col(j);
  op.domain = SpaceTag::vector(n);
  op.codomain = SpaceTag::scalar(n);
  op.name = "J";
  return op;
}

DiscreteOperator assemble_Jstar(const SurfaceMesh& mesh, const GradientTable& table) {
  const Index n = mesh.num_panels();
  DiscreteOperator op;
  op.matrix.resize(3 * n, n);
  for (int c = 0; c < 3; ++c)
    for (Index i = 0; i < n; ++i) op.matrix.row(3 * i + c) = -table.comp[c].row(i);
  for (Index i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c)
      op.matrix(3 * i + c, i) -= table.target_diag_corr[i] * mesh.normals(i, c);
  op.domain = SpaceTag::scalar(n);
  op.codomain = SpaceTag::vector(n);
  op.name = "Jstar";
  return op;
}

DiscreteOperator assemble_Kdiv(const SurfaceMesh& mesh, const GradientTable& table) {
  const Index n = mesh.num_panels();
  DiscreteOperator op;
  op.matrix.resize(3 * n, 3 * n);
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < n; ++j) {
    const Vec3 nu = mesh.normals.row(j);
    for (Index i = 0; i < n; ++i) {
      const Vec3 g(table.comp[0](i, j), table.comp[1](i, j), table.comp[2](i, j));
      Mat3 block = -g * nu.transpose() + nu * g.transpose();
      block.diagonal().array() -= g.dot(nu);
      op.matrix.block<3, 3>(3 * i, 3 * j) = block;
    }
  }
  op.domain = SpaceTag::vector(n);
  op.codomain = SpaceTag::vector(n);
  op.name = "Kdiv";
  return op;
}

DiscreteOperator build_M_generator(const SurfaceMesh& mesh, const DiscreteOperator& Jstar,
                                   Side side) {
  const Index n = mesh.num_panels();
  const Real half = side == Side::Exterior ? 0.5 : -0.5;
  DiscreteOperator op;
  op.matrix = -Jstar.matrix;
  for (Index i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) op.matrix(3 * i + c, i) += half * mesh.normals(i, c);
  op.domain = SpaceTag::scalar(n);
  op.codomain = SpaceTag::vector(n);
  op.name = side == Side::Exterior ? "Mgen+" : "Mgen-";
  return op;
}

SingleLayerInverse::SingleLayerInverse(const DiscreteOperator& S, const Vector& areas)
    : areas_(areas) {
  const Matrix ws = areas.asDiagonal() * S.matrix;
  s_aw_ = 0.5 * (ws + ws.transpose());
  neg_llt_.compute(-s_aw_);
  if (neg_llt_.info() != Eigen::Success)
    throw NumericalError(
        "area-weighted single layer matrix is not negative definite; mesh is degenerate");
  const Vector diag = neg_llt_.matrixLLT().diagonal();
  min_pivot_ = diag.minCoeff() * diag.minCoeff();
  cond_estimate_ = diag.maxCoeff() * diag.maxCoeff() / min_pivot_;
}

Vector SingleLayerInverse::solve(const Vector& trace) const {
  return -neg_llt_.solve(areas_.asDiagonal() * trace);
}

Matrix SingleLayerInverse::solve(const Matrix& traces) const {
  return -neg_llt_.solve(areas_.asDiagonal() * traces);
}

Matrix SingleLayerInverse::right_solve(const Matrix& m) const {
  // M S^{-1} = M S_aw^{-1} W = -((-S_aw)^{-1} M^T)^T W
  return -neg_llt_.solve(m.transpose()).transpose() * areas_.asDiagonal();
}

Vector SingleLayerInverse::solve_vector_field(const Vector& trace) const {
  const Index n = areas_.size();
  Matrix comps(n, 3);
  for (Index i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) comps(i, c) = trace[3 * i + c];
  const Matrix solved = solve(comps);
  Vector out(3 * n);
  for (Index i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) out[3 * i + c] = solved(i, c);
  return out;
}

DiscreteOperator build_Apm(const DiscreteOperator& J, const SingleLayerInverse& sinv,
                           const SurfaceMesh& mesh, Side side) {
  const Index n = mesh.num_panels();
  const Real half = side == Side::Exterior ? 0.5 : -0.5;
  Matrix m = J.matrix;  // ±(1/2) nu· + J
  for (Index i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) m(i, 3 * i + c) += half * mesh.normals(i, c);

  DiscreteOperator op;
  op.matrix.resize(n, 3 * n);
  Matrix mc(n, n);
  for (int c = 0; c < 3; ++c) {
    for (Index j = 0; j < n; ++j) mc.col(j) = m.col(3 * j + c);
    const Matrix ac = sinv.right_solve(mc);
    for (Index j = 0; j < n; ++j) op.matrix.col(3 * j + c) = ac.col(j);
  }
  op.domain = SpaceTag::vector(n);
  op.codomain = SpaceTag::scalar(n);
  op.name = side == Side::Exterior ? "A+" : "A-";
  return op;
}

DiscreteOperator build_Apm_star(const DiscreteOperator& Jstar, const SingleLayerInverse& sinv,
                                const SurfaceMesh& mesh, Side side) {
  const Index n = mesh.num_panels();
  const Real half = side == Side::Exterior ? 0.5 : -0.5;
  Matrix m = Jstar.matrix;  // ±(1/2) phi nu + J*[phi]
  for (Index i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) m(3 * i + c, i) += half * mesh.normals(i, c);

  DiscreteOperator op;
  op.matrix.resize(3 * n, n);
  Matrix mc(n, n);
  for (int c = 0; c < 3; ++c) {
    for (Index i = 0; i < n; ++i) mc.row(i) = m.row(3 * i + c);
    const Matrix sc = sinv.solve(mc);
    for (Index i = 0; i < n; ++i) op.matrix.row(3 * i + c) = sc.row(i);
  }
  op.domain = SpaceTag::scalar(n);
  op.codomain = SpaceTag::vector(n);
  op.name = side == Side::Exterior ? "A+*" : "A-*";
  return op;
}

Vector equilibrium_density(const DiscreteOperator& Kstar, const Vector& areas) {
  const Index n = areas.size();
  const Vector w_sqrt = areas.cwiseSqrt();
  Matrix b = w_sqrt.asDiagonal() * Kstar.matrix * w_sqrt.cwiseInverse().asDiagonal();
  b.diagonal().array() -= 0.5;
  Eigen::BDCSVD<Matrix> svd(b, Eigen::ComputeFullV);
  Vector phi0 = w_sqrt.cwiseInverse().asDiagonal() * svd.matrixV().col(n - 1);
  const Real integral = areas.dot(phi0);
  if (std::abs(integral) < 1e-12 * areas.sum() * phi0.cwiseAbs().maxCoeff())
    throw NumericalError("equilibrium density has vanishing mean; mesh is defective");
  return phi0 / integral;
}

OperatorSet assemble_operators(const SurfaceMesh& mesh, const QuadratureConfig& cfg,
                               const KernelOptions& kernel) {
  if (topology(mesh).component_count != 1)
    throw MeshError("operators are defined for connected surfaces only");

  OperatorSet ops;
  ops.quad = cfg;
  ops.kernel = kernel;
  ops.areas = mesh.areas;
  ops.S = assemble_S(mesh, cfg);
  const GradientTable table = build_gradient_table(mesh, cfg, kernel);
  ops.Kstar = assemble_Kstar(mesh, table);
  ops.J = assemble_J(mesh, table);
  ops.Jstar = assemble_Jstar(mesh, table);
  ops.Kdiv = assemble_Kdiv(mesh, table);
  ops.sinv = std::make_shared<SingleLayerInverse>(ops.S, mesh.areas);
  ops.A_minus = build_Apm(ops.J, *ops.sinv, mesh, Side::Interior);
  ops.A_plus = build_Apm(ops.J, *ops.sinv, mesh, Side::Exterior);
  ops.Mgen_minus = build_M_generator(mesh, ops.Jstar, Side::Interior);
  ops.Mgen_plus = build_M_generator(mesh, ops.Jstar, Side::Exterior);
  ops.phi0 = equilibrium_density(ops.Kstar, mesh.areas);
  return ops;
}

namespace {

void check_point_clearance(const SurfaceMesh& mesh, const PointMatrix& points) {
  for (Index p = 0; p < points.rows(); ++p) {
    const Vec3 x = points.row(p);
    for (Index f = 0; f < mesh.num_panels(); ++f) {
      const Real rough = (x - Vec3(mesh.centroids.row(f))).norm();
      if (rough > 1.1 * mesh.diameters[f]) continue;
      const Real dist = point_triangle_distance(x, mesh.panel_vertices(f));
      if (dist < 0.1 * mesh.diameters[f])
        throw NumericalError("evaluation point " + std::to_string(p) +
                             " is closer than 0.1 panel diameters to the surface");
    }
  }
}

}  // namespace

Vector eval_S_offsurface(const SurfaceMesh& mesh, const QuadratureConfig& cfg,
                         const Vector& density, const PointMatrix& points) {
  check_point_clearance(mesh, points);
  Vector out = Vector::Zero(points.rows());
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < points.rows(); ++p) {
    const Vec3 x = points.row(p);
    Real acc = 0;
    for (Index j = 0; j < mesh.num_panels(); ++j)
      acc += -kInv4Pi * panel_potential(x, make_panel(mesh, j), cfg) * density[j];
    out[p] = acc;
  }
  return out;
}

PointMatrix eval_gradS_offsurface(const SurfaceMesh& mesh, const QuadratureConfig& cfg,
                                  const KernelOptions& kernel, const Vector& density,
                                  const PointMatrix& points) {
  check_point_clearance(mesh, points);
  PointMatrix out = PointMatrix::Zero(points.rows(), 3);
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < points.rows(); ++p) {
    const Vec3 x = points.row(p);
    Vec3 acc = Vec3::Zero();
    for (Index j = 0; j < mesh.num_panels(); ++j)
      acc += gradient_kernel_integral(x, make_panel(mesh, j), false, cfg, kernel) * density[j];
    out.row(p) = acc;
  }
  return out;
}

Vector eval_divS_offsurface(const SurfaceMesh& mesh, const QuadratureConfig& cfg,
                            const KernelOptions& kernel, const Vector& field,
                            const PointMatrix& points) {
  check_point_clearance(mesh, points);
  Vector out = Vector::Zero(points.rows());
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < points.rows(); ++p) {
    const Vec3 x = points.row(p);
    Real acc = 0;
    for (Index j = 0; j < mesh.num_panels(); ++j) {
      const Vec3 g = gradient_kernel_integral(x, make_panel(mesh, j), false, cfg, kernel);
      acc += g.dot(field.segment<3>(3 * j));
    }
    out[p] = acc;
  }
  return out;
}

PointMatrix eval_Ddiv_offsurface(const SurfaceMesh& mesh, const QuadratureConfig& cfg,
                                 const KernelOptions& kernel, const Vector& field,
                                 const PointMatrix& points) {
  check_point_clearance(mesh, points);
  PointMatrix out = PointMatrix::Zero(points.rows(), 3);
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < points.rows(); ++p) {
    const Vec3 x = points.row(p);
    Vec3 acc = Vec3::Zero();
    for (Index j = 0; j < mesh.num_panels(); ++j) {
      const Vec3 g = gradient_kernel_integral(x, make_panel(mesh, j), false, cfg, kernel);
      const Vec3 nu = mesh.normals.row(j);
      const Vec3 f = field.segment<3>(3 * j);
      acc += -g * nu.dot(f) + nu * g.dot(f) - g.dot(nu) * f;
    }
    out.row(p) = acc;
  }
  return out;
}

}  // namespace sfd
