#pragma once

#include <sfd/operators.hpp>
#include <sfd/types.hpp>

#include <string>

namespace sfd {

// Energy inner product <f,g>_* = -<S^{-1}f, g> realized as an SPD Gram
// matrix. The full 3N x 3N metric is block diagonal over components, so only
// the scalar N x N block and its Cholesky factor are stored; every operation
// on interleaved 3N data applies the block componentwise.
struct StarMetric {
  Matrix g_scal;             // N x N SPD scalar block
  Eigen::LLT<Matrix> chol;   // g_scal = L L^T
  Vector areas;
  std::uint64_t mesh_id = 0;
  Real asym_before = 0;      // relative asymmetry prior to symmetrization
  Real min_pivot = 0;
  Index panels = 0;

  Index dim() const { return 3 * panels; }
};

StarMetric build_metric(const SingleLayerInverse& sinv, std::uint64_t mesh_id = 0);
StarMetric build_metric(const DiscreteOperator& S_scalar, const Vector& areas,
                        std::uint64_t mesh_id = 0);

Real star_inner(const Vector& f, const Vector& g, const StarMetric& metric);
Real star_norm(const Vector& f, const StarMetric& metric);

// G f for interleaved vectors / column blocks.
Vector metric_apply(const StarMetric& metric, const Vector& f);
Matrix metric_apply(const StarMetric& metric, const Matrix& f);

// Coordinates z = L^T f in which the *-inner product is the Euclidean one.
Matrix to_euclidean(const StarMetric& metric, const Matrix& f);
Matrix from_euclidean(const StarMetric& metric, const Matrix& z);

// Rank decisions. Normalized singular values below rank_tol are always
// discarded; values below suspicious_band cannot be accepted as signal
// without a gap. The cut is placed at the largest relative gap whose lower
// side lies inside the cuttable window [rank_tol, min(suspicious_band,
// rank_tol * window_factor)]; when suspicious values exist but no admissible
// gap of ratio >= min_gap_ratio is found, the decision reports no-gap.
struct RankCutOptions {
  Real suspicious_band = 5e-2;
  Real window_factor = 1e5;
  Real min_gap_ratio = 10.0;
};

struct RankCut {
  Index rank = 0;
  Real gap_ratio = 0;     // evidence at the cut; +inf when nothing suspicious
  Real sigma_kept = 0;    // normalized smallest retained value
  Real sigma_cut = 0;     // normalized largest discarded value (0 if none)
  bool has_gap = false;
  bool tie_flagged = false;
  // set when a structural oracle (e.g. the equilibrium density spanning the
  // discarded direction) confirms a cut whose raw gap is weak
  bool certified = false;
};

RankCut find_rank_cut(const Vector& singular_values, Real rank_tol,
                      const RankCutOptions& opts = {});

struct SubspaceBasis {
  Matrix columns;  // 3N x k, *-orthonormal
  std::string label;
  Real rank_tol = 0;
  RankCut cut;
  Vector spectrum;  // raw singular values behind the rank decision

  Index dim() const { return columns.cols(); }
};

// *-orthonormal basis of the numerical column span.
SubspaceBasis orthonormalize(const Matrix& columns, const StarMetric& metric, Real rank_tol,
                             const RankCutOptions& opts = {}, const std::string& label = "");

// Splits the domain of a discrete operator into numerical kernel and its
// *-orthogonal complement (the row-space directions). codomain_weights
// carries the codomain inner product (panel areas for scalar outputs,
// repeated areas for interleaved vector outputs).
struct KernelSplit {
  SubspaceBasis kernel;
  SubspaceBasis complement;
};
// certify_left, when given, names a codomain direction known to annihilate
// the operator's range (the equilibrium density for A_+). If the smallest
// retained left singular vector aligns with it (>= 0.99 in the weighted
// metric), that direction is discarded as a certified defect even when the
// spectral gap alone is inconclusive.
KernelSplit kernel_split(const Matrix& op, const Vector& codomain_weights,
                         const StarMetric& metric, Real rank_tol, const RankCutOptions& opts = {},
                         const std::string& label = "", const Vector* certify_left = nullptr);

// P = B B^T G; idempotent and *-self-adjoint.
Matrix star_projector(const SubspaceBasis& basis, const StarMetric& metric);
// P f without forming the 3N x 3N projector.
Vector project(const SubspaceBasis& basis, const StarMetric& metric, const Vector& f);

// cos of the principal angles between two *-orthonormal bases, descending.
Vector principal_cosines(const SubspaceBasis& a, const SubspaceBasis& b,
                         const StarMetric& metric);

}  // namespace sfd
