#include <sfd/star_metric.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sfd {

namespace {

Matrix component_rows(const Matrix& m, int c) {
  const Index n = m.rows() / 3;
  Matrix out(n, m.cols());
  for (Index i = 0; i < n; ++i) out.row(i) = m.row(3 * i + c);
  return out;
}

void set_component_rows(Matrix& m, int c, const Matrix& part) {
  for (Index i = 0; i < part.rows(); ++i) m.row(3 * i + c) = part.row(i);
}

}  // namespace

StarMetric build_metric(const SingleLayerInverse& sinv, std::uint64_t mesh_id) {
  StarMetric metric;
  metric.areas = sinv.areas();
  metric.panels = sinv.areas().size();
  metric.mesh_id = mesh_id;

  // G = -W S^{-1} = W (-S_aw)^{-1} W on each component block
  const Matrix w = Matrix(metric.areas.asDiagonal());
  Eigen::LLT<Matrix> neg(-sinv.area_weighted());
  if (neg.info() != Eigen::Success)
    throw NumericalError("metric construction failed: S_aw is not negative definite");
  Matrix g = metric.areas.asDiagonal() * neg.solve(w);
  metric.asym_before = (g - g.transpose()).norm() / g.norm();
  if (metric.asym_before > 1e-6)
    throw NumericalError("metric asymmetry " + std::to_string(metric.asym_before) +
                         " exceeds the 1e-6 diagnostic bound");
  metric.g_scal = 0.5 * (g + g.transpose());
  metric.chol.compute(metric.g_scal);
  if (metric.chol.info() != Eigen::Success)
    throw NumericalError("energy metric is not positive definite; discretization too coarse");
  const Vector diag = metric.chol.matrixLLT().diagonal();
  metric.min_pivot = diag.minCoeff() * diag.minCoeff();
  return metric;
}

StarMetric build_metric(const DiscreteOperator& S_scalar, const Vector& areas,
                        std::uint64_t mesh_id) {
  return build_metric(SingleLayerInverse(S_scalar, areas), mesh_id);
}

Real star_inner(const Vector& f, const Vector& g, const StarMetric& metric) {
  if (f.size() != metric.dim() || g.size() != metric.dim())
    throw NumericalError("star_inner: dimension mismatch");
  Real acc = 0;
  for (int c = 0; c < 3; ++c) {
    Vector fc(metric.panels), gc(metric.panels);
    for (Index i = 0; i < metric.panels; ++i) {
      fc[i] = f[3 * i + c];
      gc[i] = g[3 * i + c];
    }
    acc += fc.dot(metric.g_scal * gc);
  }
  return acc;
}

Real star_norm(const Vector& f, const StarMetric& metric) {
  return std::sqrt(std::max<Real>(0, star_inner(f, f, metric)));
}

Matrix metric_apply(const StarMetric& metric, const Matrix& f) {
  Matrix out(f.rows(), f.cols());
  for (int c = 0; c < 3; ++c)
    set_component_rows(out, c, metric.g_scal * component_rows(f, c));
  return out;
}

Vector metric_apply(const StarMetric& metric, const Vector& f) {
  return Vector(metric_apply(metric, Matrix(f)));
}

Matrix to_euclidean(const StarMetric& metric, const Matrix& f) {
  Matrix out(f.rows(), f.cols());
  const auto lt = metric.chol.matrixL().transpose();
  for (int c = 0; c < 3; ++c) set_component_rows(out, c, lt * component_rows(f, c));
  return out;
}

Matrix from_euclidean(const StarMetric& metric, const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (int c = 0; c < 3; ++c) {
    Matrix part = component_rows(z, c);
    metric.chol.matrixL().transpose().solveInPlace(part);
    set_component_rows(out, c, part);
  }
  return out;
}

RankCut find_rank_cut(const Vector& singular_values, Real rank_tol, const RankCutOptions& opts) {
  RankCut cut;
  const Index m = singular_values.size();
  if (m == 0) {
    cut.has_gap = true;
    cut.gap_ratio = std::numeric_limits<Real>::infinity();
    return cut;
  }
  const Real smax = singular_values[0];
  if (!(smax > 0)) {
    cut.rank = 0;
    cut.has_gap = true;
    cut.gap_ratio = std::numeric_limits<Real>::infinity();
    return cut;
  }
  Vector s = singular_values / smax;
  const Real window_hi = std::min(opts.suspicious_band, rank_tol * opts.window_factor);

  Index first_suspicious = m;
  for (Index k = 0; k < m; ++k)
    if (s[k] <= opts.suspicious_band) {
      first_suspicious = k;
      break;
    }
  if (first_suspicious == m) {
    cut.rank = m;
    cut.has_gap = true;
    cut.gap_ratio = std::numeric_limits<Real>::infinity();
    cut.sigma_kept = s[m - 1];
    return cut;
  }

  // hunt the strongest admissible gap: the first discarded value must lie in
  // the cuttable window
  std::vector<std::pair<Index, Real>> candidates;
  for (Index k = 1; k < m; ++k) {
    if (s[k] > window_hi) continue;
    const Real ratio = s[k] > 0 ? s[k - 1] / s[k] : std::numeric_limits<Real>::infinity();
    candidates.emplace_back(k, ratio);
  }
  Index best = -1;
  Real best_ratio = 0;
  for (const auto& [k, ratio] : candidates) best_ratio = std::max(best_ratio, ratio);
  Index near_best = 0;
  for (const auto& [k, ratio] : candidates) {
    if (ratio >= best_ratio / 1.05) {
      ++near_best;
      if (best < 0) best = k;  // candidates are ascending: first = smallest rank
    }
  }
  cut.tie_flagged = near_best > 1;

  if (best < 0) {
    // suspicious values exist but none may be cut under this tolerance
    cut.rank = m;
    for (Index k = m; k-- > 0;)
      if (s[k] < rank_tol) cut.rank = k;
    cut.has_gap = false;
    cut.gap_ratio = 1.0;
    cut.sigma_kept = cut.rank > 0 ? s[cut.rank - 1] : 0;
    cut.sigma_cut = cut.rank < m ? s[cut.rank] : 0;
    return cut;
  }

  cut.rank = best;
  cut.gap_ratio = best_ratio;
  cut.sigma_kept = s[best - 1];
  cut.sigma_cut = s[best];
  cut.has_gap = best_ratio >= opts.min_gap_ratio;
  return cut;
}

namespace {

struct SvdResult {
  Matrix u;  // full left vectors
  Vector sigma;
  Matrix v;  // full right vectors
};

// full SVD; wide inputs go through the transpose so BDCSVD always sees a
// tall problem
SvdResult svd_full(const Matrix& a) {
  SvdResult r;
  if (a.rows() >= a.cols()) {
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    r.u = svd.matrixU();
    r.sigma = svd.singularValues();
    r.v = svd.matrixV();
  } else {
    Eigen::BDCSVD<Matrix> svd(a.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
    r.u = svd.matrixV();
    r.sigma = svd.singularValues();
    r.v = svd.matrixU();
  }
  return r;
}

}  // namespace

SubspaceBasis orthonormalize(const Matrix& columns, const StarMetric& metric, Real rank_tol,
                             const RankCutOptions& opts, const std::string& label) {
  if (!(rank_tol > 0 && rank_tol < 1)) throw NumericalError("rank_tol must lie in (0,1)");
  SubspaceBasis basis;
  basis.label = label;
  basis.rank_tol = rank_tol;
  if (columns.cols() == 0) {
    basis.columns.resize(metric.dim(), 0);
    basis.cut.has_gap = true;
    basis.cut.gap_ratio = std::numeric_limits<Real>::infinity();
    return basis;
  }
  const Matrix z = to_euclidean(metric, columns);
  Eigen::BDCSVD<Matrix> svd(z, Eigen::ComputeThinU);
  basis.spectrum = svd.singularValues();
  basis.cut = find_rank_cut(basis.spectrum, rank_tol, opts);
  basis.columns = from_euclidean(metric, svd.matrixU().leftCols(basis.cut.rank));
  return basis;
}

KernelSplit kernel_split(const Matrix& op, const Vector& codomain_weights,
                         const StarMetric& metric, Real rank_tol, const RankCutOptions& opts,
                         const std::string& label, const Vector* certify_left) {
  // operator in coordinates that are orthonormal on both sides:
  // A~ = W^(1/2) A L^{-T}, formed as (L^{-1} (W^(1/2) A)^T)^T componentwise
  Matrix at = (codomain_weights.cwiseSqrt().asDiagonal() * op).transpose();  // 3N x m
  for (int c = 0; c < 3; ++c) {
    const Index n = metric.panels;
    Matrix part(n, at.cols());
    for (Index i = 0; i < n; ++i) part.row(i) = at.row(3 * i + c);
    metric.chol.matrixL().solveInPlace(part);
    for (Index i = 0; i < n; ++i) at.row(3 * i + c) = part.row(i);
  }
  const Matrix a = at.transpose();
  const SvdResult svd = svd_full(a);

  KernelSplit split;
  RankCut cut = find_rank_cut(svd.sigma, rank_tol, opts);

  if (certify_left != nullptr) {
    const Index m = svd.sigma.size();
    Vector w = codomain_weights.cwiseSqrt().asDiagonal() * (*certify_left);
    w.normalize();
    if (cut.rank == m && m > 0) {
      const Real align = std::abs(w.dot(svd.u.col(m - 1)));
      if (align >= 0.99) {
        cut.rank = m - 1;
        cut.certified = true;
        cut.sigma_kept = m > 1 ? svd.sigma[m - 2] / svd.sigma[0] : 0;
        cut.sigma_cut = svd.sigma[m - 1] / svd.sigma[0];
        cut.gap_ratio = cut.sigma_cut > 0 ? cut.sigma_kept / cut.sigma_cut : cut.gap_ratio;
      }
    } else if (cut.rank == m - 1) {
      const Real align = std::abs(w.dot(svd.u.col(m - 1)));
      if (align >= 0.99) cut.certified = true;
    }
  }

  const Index total = a.cols();
  split.complement.columns = from_euclidean(metric, svd.v.leftCols(cut.rank));
  split.complement.label = label + "_rowspace";
  split.complement.rank_tol = rank_tol;
  split.complement.cut = cut;
  split.complement.spectrum = svd.sigma;

  split.kernel.columns = from_euclidean(metric, svd.v.rightCols(total - cut.rank));
  split.kernel.label = label + "_kernel";
  split.kernel.rank_tol = rank_tol;
  split.kernel.cut = cut;
  split.kernel.spectrum = svd.sigma;
  return split;
}

Matrix star_projector(const SubspaceBasis& basis, const StarMetric& metric) {
  return basis.columns * metric_apply(metric, basis.columns).transpose();
}

Vector project(const SubspaceBasis& basis, const StarMetric& metric, const Vector& f) {
  if (basis.columns.cols() == 0) return Vector::Zero(f.size());
  return basis.columns * (metric_apply(metric, basis.columns).transpose() * f);
}

Vector principal_cosines(const SubspaceBasis& a, const SubspaceBasis& b,
                         const StarMetric& metric) {
  if (a.dim() == 0 || b.dim() == 0) return Vector();
  const Matrix cross = a.columns.transpose() * metric_apply(metric, b.columns);
  Eigen::BDCSVD<Matrix> svd(cross);
  Vector c = svd.singularValues();
  for (Index i = 0; i < c.size(); ++i) c[i] = std::min<Real>(1.0, c[i]);
  return c;
}

}  // namespace sfd
