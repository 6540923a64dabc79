#pragma once

#include <sfd/mesh.hpp>
#include <sfd/quadrature.hpp>
#include <sfd/types.hpp>

#include <memory>
#include <string>

namespace sfd {

struct SpaceTag {
  enum class Kind { ScalarPanel, VectorPanel } kind = Kind::ScalarPanel;
  Index dimension = 0;

  static SpaceTag scalar(Index panels) { return {Kind::ScalarPanel, panels}; }
  static SpaceTag vector(Index panels) { return {Kind::VectorPanel, 3 * panels}; }
};

struct DiscreteOperator {
  Matrix matrix;
  SpaceTag domain;
  SpaceTag codomain;
  std::string name;

  Vector apply(const Vector& x) const { return matrix * x; }
};

// Every operator built from the gradient of the fundamental solution goes
// through this one table; the sign convention lives here and nowhere else.
// gradient_sign = -1 is the CLI test hook that must break the jump relations.
struct KernelOptions {
  Real gradient_sign = 1.0;
};

// (1/4pi) * ∫_T (x-y)/|x-y|³ dσ(y), principal value on the self panel,
// scaled by the configured kernel sign.
Vec3 gradient_kernel_integral(const Vec3& x, const Panel& panel, bool self,
                              const QuadratureConfig& cfg, const KernelOptions& kernel);

// Precomputed gradient integrals for all panel pairs: component c of
// gradient_kernel_integral(centroid_i, panel_j) lives at comp[c](i, j).
// target_diag_corr holds the normal self-term completion for the
// target-side operators K* and J*: the flat self panel contributes nothing
// to the normal part of the principal value, which drops the local
// curvature term those kernels need; the closed-surface flux identity
// (columns of nu_i . g_ij integrate to 1/2) pins the missing piece. The
// source-side operators J and K_div integrate their panel data exactly and
// take the table as is.
struct GradientTable {
  Matrix comp[3];
  Vector target_diag_corr;
  Index panels() const { return comp[0].rows(); }
};

GradientTable build_gradient_table(const SurfaceMesh& mesh, const QuadratureConfig& cfg,
                                   const KernelOptions& kernel);

// Single layer trace map (density values -> trace values at centroids),
// assembled so that the area-weighted matrix W*S is symmetric to roundoff.
DiscreteOperator assemble_S(const SurfaceMesh& mesh, const QuadratureConfig& cfg = {});

// 3N x 3N block-diagonal extension acting componentwise.
DiscreteOperator expand_to_vector(const DiscreteOperator& scalar_op);

DiscreteOperator assemble_Kstar(const SurfaceMesh& mesh, const GradientTable& table);
DiscreteOperator assemble_J(const SurfaceMesh& mesh, const GradientTable& table);
DiscreteOperator assemble_Jstar(const SurfaceMesh& mesh, const GradientTable& table);
DiscreteOperator assemble_Kdiv(const SurfaceMesh& mesh, const GradientTable& table);

enum class Side { Interior, Exterior };  // interior = the minus side

// Maps a scalar density to the one-sided trace of grad S: +-(1/2) phi nu - J*[phi].
// Its range is the discrete M^- (interior) or M^+ (exterior).
DiscreteOperator build_M_generator(const SurfaceMesh& mesh, const DiscreteOperator& Jstar,
                                   Side side);

// Factorization of the (negated) area-weighted single layer matrix; applies
// S^{-1} to traces. Built once, shared by everything that needs it.
class SingleLayerInverse {
 public:
  SingleLayerInverse(const DiscreteOperator& S, const Vector& areas);

  // density = S^{-1}[trace], scalar panel vectors
  Vector solve(const Vector& trace) const;
  Matrix solve(const Matrix& traces) const;
  // M S^{-1} for operators acting from the right
  Matrix right_solve(const Matrix& m) const;
  // componentwise on interleaved 3N vectors / matrices with 3N rows
  Vector solve_vector_field(const Vector& trace) const;

  const Matrix& area_weighted() const { return s_aw_; }
  Real min_pivot() const { return min_pivot_; }
  Real condition_estimate() const { return cond_estimate_; }
  const Vector& areas() const { return areas_; }

 private:
  Matrix s_aw_;  // symmetrized W*S, negative definite
  Eigen::LLT<Matrix> neg_llt_;
  Vector areas_;
  Real min_pivot_ = 0;
  Real cond_estimate_ = 0;
};

// A_± = (±(1/2) nu·  + J) S^{-1},  the one-sided divergence of the harmonic
// extension with boundary value f.
DiscreteOperator build_Apm(const DiscreteOperator& J, const SingleLayerInverse& sinv,
                           const SurfaceMesh& mesh, Side side);

// A_±^* = S^{-1}(±(1/2) phi nu + J*[phi]); satisfies S A_±^* = -M_generator(∓).
DiscreteOperator build_Apm_star(const DiscreteOperator& Jstar, const SingleLayerInverse& sinv,
                                const SurfaceMesh& mesh, Side side);

// Equilibrium density: the minimal singular direction of (-1/2 I + K*) in the
// area-weighted metric, normalized to ∫ phi0 dσ = 1.
Vector equilibrium_density(const DiscreteOperator& Kstar, const Vector& areas);

// Everything assembled once over a shared gradient table.
struct OperatorSet {
  QuadratureConfig quad;
  KernelOptions kernel;
  Vector areas;
  DiscreteOperator S;      // N x N
  DiscreteOperator Kstar;  // N x N
  DiscreteOperator J;      // N x 3N
  DiscreteOperator Jstar;  // 3N x N
  DiscreteOperator Kdiv;   // 3N x 3N
  DiscreteOperator A_minus, A_plus;        // N x 3N
  DiscreteOperator Mgen_minus, Mgen_plus;  // 3N x N
  Vector phi0;
  std::shared_ptr<SingleLayerInverse> sinv;

  Index panels() const { return areas.size(); }
};

OperatorSet assemble_operators(const SurfaceMesh& mesh, const QuadratureConfig& cfg = {},
                               const KernelOptions& kernel = {});

// Off-surface evaluation for jump verification. Points must keep a distance
// of at least 0.1 local panel diameters from the surface.
Vector eval_S_offsurface(const SurfaceMesh& mesh, const QuadratureConfig& cfg,
                         const Vector& density, const PointMatrix& points);
PointMatrix eval_gradS_offsurface(const SurfaceMesh& mesh, const QuadratureConfig& cfg,
                                  const KernelOptions& kernel, const Vector& density,
                                  const PointMatrix& points);
Vector eval_divS_offsurface(const SurfaceMesh& mesh, const QuadratureConfig& cfg,
                            const KernelOptions& kernel, const Vector& field,
                            const PointMatrix& points);
PointMatrix eval_Ddiv_offsurface(const SurfaceMesh& mesh, const QuadratureConfig& cfg,
                                 const KernelOptions& kernel, const Vector& field,
                                 const PointMatrix& points);

}  // namespace sfd
