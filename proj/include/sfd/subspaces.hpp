#pragma once

#include <sfd/mesh.hpp>
#include <sfd/operators.hpp>
#include <sfd/star_metric.hpp>
#include <sfd/types.hpp>

#include <array>
#include <string>

namespace sfd {

// areas repeated per component, the codomain weight of vector-valued panels
Vector interleaved_weights(const Vector& areas);

// M^- / M^+: *-orthonormalized range of the one-sided gradient trace map.
// The single discarded direction of the interior generator is the
// equilibrium density; when the raw gap is weak the cut is certified by
// alignment with phi0.
SubspaceBasis basis_M(Side side, const OperatorSet& ops, const StarMetric& metric, Real rank_tol,
                      const RankCutOptions& opts = {});

// H_df^- / H_df^+: numerical kernel of A_-/A_+ (complement = row space).
KernelSplit basis_Hdf_side(Side side, const OperatorSet& ops, const StarMetric& metric,
                           Real rank_tol, const RankCutOptions& opts = {});

// H_df as the *-orthocomplement of M^- ⊕ M^+; exact complement of the
// generator ranges, so the three-way decomposition reconstructs exactly.
SubspaceBasis basis_Hdf(const SubspaceBasis& m_minus, const SubspaceBasis& m_plus,
                        const StarMetric& metric);

// H_df as the kernel of the stacked [A_-; A_+] (cross-check construction).
// The stack rank is pinned by the Theorem 1.1 accounting rank(M^-)+rank(M^+)
// when pinned_rank >= 0; the spectral gap at the pin is reported as found.
SubspaceBasis basis_Hdf_stacked(const OperatorSet& ops, const StarMetric& metric, Real rank_tol,
                                const RankCutOptions& opts = {}, Index pinned_rank = -1);

// X^± = H_drf^± ∩ H_df, located as the near-kernel of (K_div ∓ 1/2 I)
// restricted to the H_df basis. H_df is K_div-invariant up to
// discretization, and on it the spectrum has a genuine gap at the ±1/2
// markers. Interior pairs with the -1/2 shift: constant fields (traces of
// interior harmonic gradients) satisfy (K_div - 1/2)c = 0 exactly.
struct XCandidates {
  Matrix hdf_coords;  // coordinates in the H_df basis, orthonormal columns
  RankCut cut;
  Vector sigma;  // residual spectrum of (K_div ∓ 1/2) on H_df, descending
};
XCandidates x_candidates(Side side, const OperatorSet& ops, const SubspaceBasis& hdf,
                         const StarMetric& metric, Real rank_tol,
                         const RankCutOptions& opts = {});

// H_drf^± = M^± ⊕ X^± (Theorem 2.5 realization on the computed bases).
SubspaceBasis basis_Hdrf(Side side, const SubspaceBasis& m_side, const XCandidates& x_side,
                         const SubspaceBasis& hdf, const StarMetric& metric, Real rank_tol,
                         const RankCutOptions& opts = {});

// H_df^D = H_df ⊖ (X^- ⊕ X^+), with the singular spectrum of the product
// (K_div + 1/2)(K_div - 1/2) on H_df reported as the rank evidence.
SubspaceBasis basis_HdfD(const OperatorSet& ops, const SubspaceBasis& hdf,
                         const XCandidates& x_minus, const XCandidates& x_plus,
                         const StarMetric& metric, Real rank_tol,
                         const RankCutOptions& opts = {});

// Dimension decisions that live in a handful of eigenvalues near one.
struct EigenCut {
  Index dim = 0;
  Real gap_ratio = 0;
  Real lambda_kept = 0;  // smallest accepted eigenvalue
  Real lambda_cut = 0;   // largest rejected eigenvalue
  bool has_gap = false;
};

EigenCut find_near_one_cut(const Vector& eigenvalues_descending, Real tol, Real min_gap_ratio);

// Intersection dimension via the eigenvalues of P_a P_b P_a on the first
// factor (the projector-product localization).
struct IntersectionResult {
  SubspaceBasis basis;
  Vector eigenvalues;  // descending
  EigenCut cut;
};

IntersectionResult basis_X(Side side, const SubspaceBasis& hdrf, const SubspaceBasis& hdf,
                           const StarMetric& metric, Real intersection_tol,
                           Real min_gap_ratio = 10.0);

// dim(H_df / H_df^D) via the defect eigenvalues of (I - P_HdfD) on H_df.
IntersectionResult quotient_defect(const SubspaceBasis& hdf, const SubspaceBasis& hdfD,
                                   const StarMetric& metric, Real intersection_tol,
                                   Real min_gap_ratio = 10.0);

// Maximal principal angle (radians) between the *-orthogonal complement of
// Ker A_side and span M^opposite; zero in the continuum by Theorem 1.1.
Real verify_complement(const SubspaceBasis& kernel_complement, const SubspaceBasis& m_opposite,
                       const StarMetric& metric);

enum class DecompositionVariant { Potential, DivFree };

struct DecompositionResult {
  Vector g_minus, g_plus, h_df;
  Real reconstruction_residual = 0;     // relative *-norm
  std::array<Real, 3> mutual_inners{};  // normalized (-,+), (-,h), (+,h)
  DecompositionVariant variant = DecompositionVariant::Potential;
};

// Joint decomposition of f over the three subspaces (exact when the
// dimensions sum to 3N; least squares with a reported residual otherwise).
DecompositionResult decompose(const Vector& f, DecompositionVariant variant,
                              const SubspaceBasis& minus_basis, const SubspaceBasis& plus_basis,
                              const SubspaceBasis& both_basis, const StarMetric& metric);

struct Tolerances {
  Real rank_tol = 1e-6;
  Real intersection_tol = 0.05;
  Real orthogonality_tol = 0.02;
  Real min_gap_ratio = 10.0;
  RankCutOptions rank_opts{};
};

struct SubspaceBundle {
  SubspaceBasis M_minus, M_plus;
  KernelSplit hdf_minus, hdf_plus;  // kernels of A_- / A_+ with complements
  SubspaceBasis Hdf;                // orthocomplement realization
  SubspaceBasis Hdf_stacked;        // spec kernel construction, cross-check
  XCandidates xcand_minus, xcand_plus;
  SubspaceBasis Hdrf_minus, Hdrf_plus;
  SubspaceBasis HdfD;
  IntersectionResult X_minus, X_plus;
  IntersectionResult quotient;  // H_df mod H_df^D
};

SubspaceBundle build_subspaces(const OperatorSet& ops, const StarMetric& metric,
                               const Tolerances& tols);

struct CodimensionEntry {
  std::string name;
  Index dim = 0;
  int expected = 0;
  Real gap_ratio = 0;
  bool has_gap = false;
  std::string verdict;  // match | mismatch | no-gap
};

struct CodimensionReport {
  TopologySummary betti;
  std::array<CodimensionEntry, 3> entries;  // X^-, X^+, Hdf/HdfD
  Index rank_M_minus = 0, rank_M_plus = 0, dim_Hdf = 0;
  bool rank_arithmetic_ok = false;  // rank(M^-) + rank(M^+) + dim H_df = 3N
  bool all_match = false;
  bool any_no_gap = false;
};

CodimensionReport codimension_report(const TopologySummary& topo, const OperatorSet& ops,
                                     const StarMetric& metric, const Tolerances& tols);
CodimensionReport codimension_report(const TopologySummary& topo, const SubspaceBundle& bundle,
                                     Index panels);

}  // namespace sfd
