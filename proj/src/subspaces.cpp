#include <sfd/subspaces.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sfd {

Vector interleaved_weights(const Vector& areas) {
  Vector w(3 * areas.size());
  for (Index i = 0; i < areas.size(); ++i)
    for (int c = 0; c < 3; ++c) w[3 * i + c] = areas[i];
  return w;
}

namespace {

// normalized alignment of the trailing singular direction with phi0, used
// to certify the one-dimensional generator defects
Real phi0_alignment(const Vector& direction, const Vector& phi0, const Vector& weights) {
  const Real num = std::abs(direction.dot(weights.asDiagonal() * phi0));
  const Real den = std::sqrt(direction.dot(weights.asDiagonal() * direction)) *
                   std::sqrt(phi0.dot(weights.asDiagonal() * phi0));
  return den > 0 ? num / den : 0.0;
}

}  // namespace

SubspaceBasis basis_M(Side side, const OperatorSet& ops, const StarMetric& metric, Real rank_tol,
                      const RankCutOptions& opts) {
  const DiscreteOperator& gen = side == Side::Interior ? ops.Mgen_minus : ops.Mgen_plus;
  const std::string label = side == Side::Interior ? "M-" : "M+";
  if (!(rank_tol > 0 && rank_tol < 1)) throw NumericalError("rank_tol must lie in (0,1)");

  SubspaceBasis basis;
  basis.label = label;
  basis.rank_tol = rank_tol;
  const Matrix z = to_euclidean(metric, gen.matrix);
  Eigen::BDCSVD<Matrix> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  basis.spectrum = svd.singularValues();
  basis.cut = find_rank_cut(basis.spectrum, rank_tol, opts);

  // The interior generator annihilates exactly the equilibrium density, so
  // its image direction is pure discretization noise. Certify the cut by
  // the alignment of the trailing input direction with phi0 — including
  // when the spectral band alone failed to discard it.
  if (side == Side::Interior) {
    const Index cols = gen.matrix.cols();
    const Real align = phi0_alignment(svd.matrixV().col(cols - 1), ops.phi0, ops.areas);
    if (align > 0.99) {
      if (basis.cut.rank == cols) {
        basis.cut.rank = cols - 1;
        basis.cut.sigma_kept = cols > 1 ? basis.spectrum[cols - 2] / basis.spectrum[0] : 0;
        basis.cut.sigma_cut = basis.spectrum[cols - 1] / basis.spectrum[0];
        basis.cut.gap_ratio =
            basis.cut.sigma_cut > 0 ? basis.cut.sigma_kept / basis.cut.sigma_cut : 0;
      }
      if (basis.cut.rank == cols - 1) basis.cut.certified = true;
    }
  }
  basis.columns = from_euclidean(metric, svd.matrixU().leftCols(basis.cut.rank));
  return basis;
}

KernelSplit basis_Hdf_side(Side side, const OperatorSet& ops, const StarMetric& metric,
                           Real rank_tol, const RankCutOptions& opts) {
  // phi0 annihilates Ran A_+ in the area-weighted pairing (S A_+^* = -Mgen^-)
  const DiscreteOperator& a = side == Side::Interior ? ops.A_minus : ops.A_plus;
  const Vector* certify = side == Side::Exterior ? &ops.phi0 : nullptr;
  return kernel_split(a.matrix, ops.areas, metric, rank_tol, opts,
                      side == Side::Interior ? "Hdf-" : "Hdf+", certify);
}

SubspaceBasis basis_Hdf(const SubspaceBasis& m_minus, const SubspaceBasis& m_plus,
                        const StarMetric& metric) {
  const Index dim = metric.dim();
  Matrix stacked(dim, m_minus.dim() + m_plus.dim());
  stacked.leftCols(m_minus.dim()) = m_minus.columns;
  stacked.rightCols(m_plus.dim()) = m_plus.columns;

  // orthonormal span of M^- ∪ M^+ in euclidean coordinates, then the exact
  // complement from a full QR
  const Matrix z = to_euclidean(metric, stacked);
  Eigen::BDCSVD<Matrix> svd(z, Eigen::ComputeThinU);
  const Vector sigma = svd.singularValues();
  Index span_rank = 0;
  for (; span_rank < sigma.size(); ++span_rank)
    if (sigma[span_rank] < 1e-10 * sigma[0]) break;
  const Matrix span = svd.matrixU().leftCols(span_rank);

  Eigen::HouseholderQR<Matrix> qr(span);
  Matrix q = qr.householderQ();
  SubspaceBasis basis;
  basis.label = "Hdf";
  basis.rank_tol = m_minus.rank_tol;
  basis.columns = from_euclidean(metric, Matrix(q.rightCols(dim - span_rank)));
  basis.cut.rank = basis.columns.cols();
  basis.cut.has_gap = m_minus.cut.has_gap || m_minus.cut.certified;
  basis.cut.has_gap = basis.cut.has_gap && (m_plus.cut.has_gap || m_plus.cut.certified);
  basis.cut.certified = m_minus.cut.certified || m_plus.cut.certified;
  basis.cut.gap_ratio = std::min(m_minus.cut.gap_ratio, m_plus.cut.gap_ratio);
  basis.spectrum = sigma;
  return basis;
}

SubspaceBasis basis_Hdf_stacked(const OperatorSet& ops, const StarMetric& metric, Real rank_tol,
                                const RankCutOptions& opts, Index pinned_rank) {
  const Index n = ops.panels();
  Matrix stacked(2 * n, 3 * n);
  stacked.topRows(n) = ops.A_minus.matrix;
  stacked.bottomRows(n) = ops.A_plus.matrix;
  Vector w(2 * n);
  w.head(n) = ops.areas;
  w.tail(n) = ops.areas;
  KernelSplit split = kernel_split(stacked, w, metric, rank_tol, opts, "Hdf");
  SubspaceBasis basis = split.kernel;
  basis.label = "Hdf_stacked";
  if (pinned_rank >= 0 && pinned_rank != split.complement.dim()) {
    // rebuild at the pinned row rank; the measured cut stays in the report
    const Index kern = 3 * n - pinned_rank;
    Matrix all(3 * n, 3 * n);
    all.leftCols(split.complement.dim()) = split.complement.columns;
    all.rightCols(split.kernel.dim()) = split.kernel.columns;
    basis.columns = all.rightCols(kern);
    basis.cut.rank = split.complement.cut.rank;  // measured, for the audit trail
    basis.cut.has_gap = false;
  }
  return basis;
}

XCandidates x_candidates(Side side, const OperatorSet& ops, const SubspaceBasis& hdf,
                         const StarMetric& metric, Real rank_tol, const RankCutOptions& opts) {
  // interior: constants and their kin live in Ker(K_div - 1/2 I)
  const Real shift = side == Side::Interior ? -0.5 : 0.5;
  XCandidates x;
  if (hdf.dim() == 0) {
    x.hdf_coords.resize(0, 0);
    x.cut.has_gap = true;
    x.cut.gap_ratio = std::numeric_limits<Real>::infinity();
    return x;
  }
  Matrix c = ops.Kdiv.matrix * hdf.columns + shift * hdf.columns;
  const Matrix cz = to_euclidean(metric, c);
  Eigen::BDCSVD<Matrix> svd(cz, Eigen::ComputeThinV);
  x.sigma = svd.singularValues();
  x.cut = find_rank_cut(x.sigma, rank_tol, opts);
  const Index defects = hdf.dim() - x.cut.rank;
  x.hdf_coords = svd.matrixV().rightCols(defects);
  return x;
}

SubspaceBasis basis_Hdrf(Side side, const SubspaceBasis& m_side, const XCandidates& x_side,
                         const SubspaceBasis& hdf, const StarMetric& metric, Real rank_tol,
                         const RankCutOptions& opts) {
  Matrix cols(metric.dim(), m_side.dim() + x_side.hdf_coords.cols());
  cols.leftCols(m_side.dim()) = m_side.columns;
  if (x_side.hdf_coords.cols() > 0)
    cols.rightCols(x_side.hdf_coords.cols()) = hdf.columns * x_side.hdf_coords;
  SubspaceBasis basis = orthonormalize(cols, metric, rank_tol, opts,
                                       side == Side::Interior ? "Hdrf-" : "Hdrf+");
  basis.cut.has_gap = (m_side.cut.has_gap || m_side.cut.certified) && x_side.cut.has_gap;
  basis.cut.gap_ratio = std::min(m_side.cut.gap_ratio, x_side.cut.gap_ratio);
  basis.cut.certified = m_side.cut.certified;
  return basis;
}

SubspaceBasis basis_HdfD(const OperatorSet& ops, const SubspaceBasis& hdf,
                         const XCandidates& x_minus, const XCandidates& x_plus,
                         const StarMetric& metric, Real rank_tol, const RankCutOptions& opts) {
  SubspaceBasis basis;
  basis.label = "HdfD";
  basis.rank_tol = rank_tol;
  const Index k = hdf.dim();
  const Index kx = x_minus.hdf_coords.cols() + x_plus.hdf_coords.cols();
  if (k == 0) {
    basis.columns.resize(metric.dim(), 0);
    basis.cut.has_gap = true;
    return basis;
  }

  // rank evidence: the product (K+1/2)(K-1/2) on the H_df basis kills
  // exactly the X directions
  Matrix t = ops.Kdiv.matrix * hdf.columns - 0.5 * hdf.columns;
  t = ops.Kdiv.matrix * t + 0.5 * t;
  Eigen::BDCSVD<Matrix> svd(to_euclidean(metric, t));
  basis.spectrum = svd.singularValues();
  basis.cut = find_rank_cut(basis.spectrum, rank_tol, opts);
  basis.cut.has_gap = basis.cut.has_gap && (k - basis.cut.rank == kx);

  // columns: the within-H_df orthocomplement of the X candidates, keeping
  // the three-way split of H_df exact
  if (kx == 0) {
    basis.columns = hdf.columns;
    return basis;
  }
  Matrix xs(k, kx);
  xs.leftCols(x_minus.hdf_coords.cols()) = x_minus.hdf_coords;
  xs.rightCols(x_plus.hdf_coords.cols()) = x_plus.hdf_coords;
  Eigen::BDCSVD<Matrix> xsvd(xs, Eigen::ComputeThinU);
  Index xr = 0;
  for (; xr < xsvd.singularValues().size(); ++xr)
    if (xsvd.singularValues()[xr] < 1e-10 * xsvd.singularValues()[0]) break;
  Eigen::HouseholderQR<Matrix> qr(Matrix(xsvd.matrixU().leftCols(xr)));
  const Matrix q = qr.householderQ();
  basis.columns = hdf.columns * q.rightCols(k - xr);
  return basis;
}

EigenCut find_near_one_cut(const Vector& eigs, Real tol, Real min_gap_ratio) {
  EigenCut cut;
  const Index m = eigs.size();
  Index k = 0;
  while (k < m && eigs[k] >= 1.0 - tol) ++k;
  cut.dim = k;
  cut.lambda_kept = k > 0 ? eigs[k - 1] : 0;
  cut.lambda_cut = k < m ? eigs[k] : 0;
  if (k == 0) {
    cut.gap_ratio = m == 0 ? std::numeric_limits<Real>::infinity() : (1.0 - eigs[0]) / tol;
  } else if (k == m) {
    cut.gap_ratio = std::numeric_limits<Real>::infinity();
  } else {
    const Real defect_kept = 1.0 - eigs[k - 1];
    cut.gap_ratio = defect_kept > 0 ? (1.0 - eigs[k]) / defect_kept
                                    : std::numeric_limits<Real>::infinity();
  }
  cut.has_gap = cut.gap_ratio >= min_gap_ratio;
  return cut;
}

namespace {

IntersectionResult near_one_eigenvectors(const SubspaceBasis& host, const Matrix& gram,
                                         const StarMetric& metric, Real tol, Real min_gap_ratio,
                                         const std::string& label) {
  IntersectionResult result;
  if (host.dim() == 0) {
    result.basis.columns.resize(metric.dim(), 0);
    result.basis.label = label;
    result.cut.has_gap = true;
    result.cut.gap_ratio = std::numeric_limits<Real>::infinity();
    return result;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  result.eigenvalues = es.eigenvalues().reverse();
  result.cut = find_near_one_cut(result.eigenvalues, tol, min_gap_ratio);
  const Index k = result.cut.dim;
  Matrix vecs(host.dim(), k);
  for (Index i = 0; i < k; ++i) vecs.col(i) = es.eigenvectors().col(host.dim() - 1 - i);
  result.basis.columns = host.columns * vecs;
  result.basis.label = label;
  result.basis.cut.rank = k;
  result.basis.cut.gap_ratio = result.cut.gap_ratio;
  result.basis.cut.has_gap = result.cut.has_gap;
  result.basis.spectrum = result.eigenvalues;
  return result;
}

}  // namespace

IntersectionResult basis_X(Side side, const SubspaceBasis& hdrf, const SubspaceBasis& hdf,
                           const StarMetric& metric, Real intersection_tol, Real min_gap_ratio) {
  const std::string label = side == Side::Interior ? "X-" : "X+";
  if (hdrf.dim() == 0 || hdf.dim() == 0) {
    IntersectionResult result;
    result.basis.columns.resize(metric.dim(), 0);
    result.basis.label = label;
    result.cut.has_gap = true;
    result.cut.gap_ratio = std::numeric_limits<Real>::infinity();
    return result;
  }
  const Matrix cross = hdrf.columns.transpose() * metric_apply(metric, hdf.columns);
  const Matrix gram = cross * cross.transpose();
  return near_one_eigenvectors(hdrf, gram, metric, intersection_tol, min_gap_ratio, label);
}

IntersectionResult quotient_defect(const SubspaceBasis& hdf, const SubspaceBasis& hdfD,
                                   const StarMetric& metric, Real intersection_tol,
                                   Real min_gap_ratio) {
  if (hdf.dim() == 0) {
    IntersectionResult result;
    result.basis.columns.resize(metric.dim(), 0);
    result.basis.label = "Hdf/HdfD";
    result.cut.has_gap = true;
    result.cut.gap_ratio = std::numeric_limits<Real>::infinity();
    return result;
  }
  Matrix gram = Matrix::Identity(hdf.dim(), hdf.dim());
  if (hdfD.dim() > 0) {
    const Matrix cross = hdf.columns.transpose() * metric_apply(metric, hdfD.columns);
    gram -= cross * cross.transpose();
  }
  return near_one_eigenvectors(hdf, gram, metric, intersection_tol, min_gap_ratio, "Hdf/HdfD");
}

Real verify_complement(const SubspaceBasis& kernel_complement, const SubspaceBasis& m_opposite,
                       const StarMetric& metric) {
  const Vector cosines = principal_cosines(kernel_complement, m_opposite, metric);
  if (cosines.size() == 0) return 0;
  Real max_angle = 0;
  const Index pairs = std::min(kernel_complement.dim(), m_opposite.dim());
  for (Index i = 0; i < pairs; ++i)
    max_angle = std::max(max_angle, std::acos(std::clamp<Real>(cosines[i], -1.0, 1.0)));
  // dimension mismatch means a whole direction of one space is orthogonal
  if (kernel_complement.dim() != m_opposite.dim()) max_angle = std::acos(0.0);
  return max_angle;
}

DecompositionResult decompose(const Vector& f, DecompositionVariant variant,
                              const SubspaceBasis& minus_basis, const SubspaceBasis& plus_basis,
                              const SubspaceBasis& both_basis, const StarMetric& metric) {
  DecompositionResult result;
  result.variant = variant;
  const Index dim = metric.dim();
  const Index k1 = minus_basis.dim(), k2 = plus_basis.dim(), k3 = both_basis.dim();

  // joint solve in euclidean coordinates; exact when the bases fill the space
  Matrix z(dim, k1 + k2 + k3);
  if (k1 > 0) z.leftCols(k1) = to_euclidean(metric, minus_basis.columns);
  if (k2 > 0) z.middleCols(k1, k2) = to_euclidean(metric, plus_basis.columns);
  if (k3 > 0) z.rightCols(k3) = to_euclidean(metric, both_basis.columns);
  const Matrix zf = to_euclidean(metric, Matrix(f));

  Vector coeff;
  if (k1 + k2 + k3 == dim) {
    coeff = Eigen::PartialPivLU<Matrix>(z).solve(zf);
  } else {
    coeff = Eigen::ColPivHouseholderQR<Matrix>(z).solve(zf);
  }
  result.g_minus = k1 > 0 ? Vector(minus_basis.columns * coeff.head(k1)) : Vector::Zero(dim);
  result.g_plus = k2 > 0 ? Vector(plus_basis.columns * coeff.segment(k1, k2)) : Vector::Zero(dim);
  result.h_df = k3 > 0 ? Vector(both_basis.columns * coeff.tail(k3)) : Vector::Zero(dim);

  const Vector residual = f - result.g_minus - result.g_plus - result.h_df;
  const Real fn = star_norm(f, metric);
  result.reconstruction_residual = fn > 0 ? star_norm(residual, metric) / fn : 0.0;

  const Real nm = star_norm(result.g_minus, metric);
  const Real np = star_norm(result.g_plus, metric);
  const Real nh = star_norm(result.h_df, metric);
  auto normalized = [&](const Vector& a, const Vector& b, Real na, Real nb) {
    return (na > 0 && nb > 0) ? star_inner(a, b, metric) / (na * nb) : 0.0;
  };
  result.mutual_inners[0] = normalized(result.g_minus, result.g_plus, nm, np);
  result.mutual_inners[1] = normalized(result.g_minus, result.h_df, nm, nh);
  result.mutual_inners[2] = normalized(result.g_plus, result.h_df, np, nh);
  return result;
}

SubspaceBundle build_subspaces(const OperatorSet& ops, const StarMetric& metric,
                               const Tolerances& tols) {
  SubspaceBundle b;
  b.M_minus = basis_M(Side::Interior, ops, metric, tols.rank_tol, tols.rank_opts);
  b.M_plus = basis_M(Side::Exterior, ops, metric, tols.rank_tol, tols.rank_opts);
  b.hdf_minus = basis_Hdf_side(Side::Interior, ops, metric, tols.rank_tol, tols.rank_opts);
  b.hdf_plus = basis_Hdf_side(Side::Exterior, ops, metric, tols.rank_tol, tols.rank_opts);
  b.Hdf = basis_Hdf(b.M_minus, b.M_plus, metric);
  b.Hdf_stacked = basis_Hdf_stacked(ops, metric, tols.rank_tol, tols.rank_opts,
                                    b.M_minus.dim() + b.M_plus.dim());
  b.xcand_minus = x_candidates(Side::Interior, ops, b.Hdf, metric, tols.rank_tol, tols.rank_opts);
  b.xcand_plus = x_candidates(Side::Exterior, ops, b.Hdf, metric, tols.rank_tol, tols.rank_opts);
  b.Hdrf_minus = basis_Hdrf(Side::Interior, b.M_minus, b.xcand_minus, b.Hdf, metric,
                            tols.rank_tol, tols.rank_opts);
  b.Hdrf_plus = basis_Hdrf(Side::Exterior, b.M_plus, b.xcand_plus, b.Hdf, metric, tols.rank_tol,
                           tols.rank_opts);
  b.HdfD = basis_HdfD(ops, b.Hdf, b.xcand_minus, b.xcand_plus, metric, tols.rank_tol,
                      tols.rank_opts);
  b.X_minus = basis_X(Side::Interior, b.Hdrf_minus, b.Hdf, metric, tols.intersection_tol,
                      tols.min_gap_ratio);
  b.X_plus = basis_X(Side::Exterior, b.Hdrf_plus, b.Hdf, metric, tols.intersection_tol,
                     tols.min_gap_ratio);
  b.quotient = quotient_defect(b.Hdf, b.HdfD, metric, tols.intersection_tol, tols.min_gap_ratio);
  return b;
}

CodimensionReport codimension_report(const TopologySummary& topo, const SubspaceBundle& bundle,
                                     Index panels) {
  CodimensionReport report;
  report.betti = topo;
  report.rank_M_minus = bundle.M_minus.dim();
  report.rank_M_plus = bundle.M_plus.dim();
  report.dim_Hdf = bundle.Hdf.dim();
  report.rank_arithmetic_ok =
      report.rank_M_minus + report.rank_M_plus + report.dim_Hdf == 3 * panels;

  auto ok = [](const RankCut& cut) { return cut.has_gap || cut.certified; };
  auto fill = [&](CodimensionEntry& e, const std::string& name, const IntersectionResult& r,
                  const XCandidates* cand, int expected, bool inputs_gapped) {
    e.name = name;
    e.dim = r.cut.dim;
    e.expected = expected;
    e.gap_ratio = r.cut.gap_ratio;
    e.has_gap = r.cut.has_gap && inputs_gapped;
    if (cand) {
      e.has_gap = e.has_gap && cand->cut.has_gap;
      e.gap_ratio = std::min(e.gap_ratio, cand->cut.gap_ratio);
      if (e.dim != cand->hdf_coords.cols()) e.has_gap = false;  // detections disagree
    }
    if (!e.has_gap)
      e.verdict = "no-gap";
    else
      e.verdict = e.dim == expected ? "match" : "mismatch";
  };
  const bool m_ok = ok(bundle.M_minus.cut) && ok(bundle.M_plus.cut);
  fill(report.entries[0], "X-", bundle.X_minus, &bundle.xcand_minus, topo.b1_interior, m_ok);
  fill(report.entries[1], "X+", bundle.X_plus, &bundle.xcand_plus, topo.b1_exterior, m_ok);
  fill(report.entries[2], "Hdf/HdfD", bundle.quotient, nullptr, topo.b1_boundary,
       m_ok && ok(bundle.HdfD.cut) && bundle.xcand_minus.cut.has_gap &&
           bundle.xcand_plus.cut.has_gap);

  report.all_match = true;
  report.any_no_gap = false;
  for (const auto& e : report.entries) {
    if (e.verdict != "match") report.all_match = false;
    if (e.verdict == "no-gap") report.any_no_gap = true;
  }
  return report;
}

CodimensionReport codimension_report(const TopologySummary& topo, const OperatorSet& ops,
                                     const StarMetric& metric, const Tolerances& tols) {
  const SubspaceBundle bundle = build_subspaces(ops, metric, tols);
  return codimension_report(topo, bundle, ops.panels());
}

}  // namespace sfd
