#include "pathfk/regression.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "pathfk/error.hpp"

namespace pathfk {

namespace {

// Exponent vectors of all monomials with total degree <= degree, ordered by
// degree then lexicographically (1, x0, x1, x0^2, x0 x1, x1^2, ...).
std::vector<std::vector<int>> monomials(std::size_t nvars, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(nvars, 0);
  for (int total = 0; total <= degree; ++total) {
    std::function<void(std::size_t, int)> rec = [&](std::size_t var, int left) {
      if (var + 1 == nvars) {
        e[var] = left;
        out.push_back(e);
        return;
      }
      for (int k = left; k >= 0; --k) {
        e[var] = k;
        rec(var + 1, left - k);
      }
    };
    if (nvars == 0) {
      out.emplace_back();
      break;
    }
    rec(0, total);
  }
  return out;
}

}  // namespace

RegressionBasis RegressionBasis::standard(std::size_t dimension, int degree) {
  RegressionBasis b;
  b.degree = degree;
  for (std::size_t j = 0; j < dimension; ++j) {
    b.features.push_back({"terminal_" + std::to_string(j),
                          [j](PathView p) { return p.terminal()[j]; }});
  }
  for (std::size_t j = 0; j < dimension; ++j) {
    b.features.push_back({"integral_" + std::to_string(j),
                          [j](PathView p) { return running_integral(p, j); }});
  }
  return b;
}

std::size_t RegressionBasis::size() const {
  return monomials(features.size(), degree).size();
}

std::vector<std::vector<int>> RegressionBasis::exponents() const {
  return monomials(features.size(), degree);
}

void RegressionBasis::expand(const std::vector<std::vector<int>>& mons,
                             std::span<const double> raw, std::span<double> out) {
  for (std::size_t m = 0; m < mons.size(); ++m) {
    double v = 1.0;
    for (std::size_t j = 0; j < raw.size(); ++j) {
      for (int p = 0; p < mons[m][j]; ++p) v *= raw[j];
    }
    out[m] = v;
  }
}

void RegressionBasis::validate() const {
  if (features.empty()) throw DomainError("regression basis: no features");
  if (degree < 1) throw DomainError("regression basis: degree must be at least 1");
}

LeastSquaresProjection::LeastSquaresProjection(const Eigen::MatrixXd& design) {
  const Eigen::Index n = design.rows();
  if (n == 0) throw DomainError("regression: empty design");
  std::vector<Eigen::Index> keep;
  std::vector<double> mean;
  std::vector<double> scale;
  for (Eigen::Index c = 0; c < design.cols(); ++c) {
    const double mu = design.col(c).mean();
    const double sd =
        std::sqrt((design.col(c).array() - mu).square().sum() / static_cast<double>(n));
    if (!std::isfinite(mu) || !std::isfinite(sd))
      throw SolverError("regression: non-finite feature column");
    if (sd <= 1e-12 * (1.0 + std::abs(mu))) continue;
    keep.push_back(c);
    mean.push_back(mu);
    scale.push_back(sd);
  }
  x_.resize(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    x_.col(static_cast<Eigen::Index>(j)) = (design.col(keep[j]).array() - mean[j]) / scale[j];
  }
  columns_ = design.cols();
  keep_ = keep;
  mean_ = mean;
  scale_ = scale;
  if (keep.empty()) return;
  qr_.setThreshold(1e-10);
  qr_.compute(x_);
  rank_ = static_cast<std::size_t>(qr_.rank()) + 1;
  const auto& r = qr_.matrixR();
  const auto last = static_cast<Eigen::Index>(rank_) - 2;
  const double top = std::abs(r(0, 0));
  const double bottom = last >= 0 ? std::abs(r(last, last)) : 0.0;
  condition_ = bottom > 0.0 ? top / bottom : std::numeric_limits<double>::infinity();
}

namespace {

// ColPivHouseholderQR::solve keeps every pivot above machine precision;
// truncating at the thresholded rank drops near-duplicate columns.
Eigen::VectorXd truncated_solve(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr,
                                const Eigen::VectorXd& rhs) {
  const Eigen::Index r = qr.rank();
  Eigen::VectorXd c = qr.householderQ().adjoint() * rhs;
  Eigen::VectorXd top = c.head(r);
  qr.matrixR().topLeftCorner(r, r).triangularView<Eigen::Upper>().solveInPlace(top);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(qr.cols());
  for (Eigen::Index i = 0; i < r; ++i) beta[qr.colsPermutation().indices()[i]] = top[i];
  return beta;
}

}  // namespace

// The centred columns are orthogonal to the constant, so the intercept is
// the sample mean and the remaining columns fit the centred target.
Eigen::VectorXd LeastSquaresProjection::slopes(const Eigen::VectorXd& centred) const {
  if (x_.cols() == 0) return Eigen::VectorXd();
  return truncated_solve(qr_, centred);
}

Eigen::VectorXd LeastSquaresProjection::coefficients(const Eigen::VectorXd& target) const {
  const double mu = target.mean();
  const Eigen::VectorXd beta = slopes(target.array() - mu);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(columns_ + 1);
  out[0] = mu;
  for (std::size_t j = 0; j < keep_.size(); ++j) {
    const double b = beta[static_cast<Eigen::Index>(j)] / scale_[j];
    out[keep_[j] + 1] = b;
    out[0] -= b * mean_[j];
  }
  return out;
}

LeastSquaresProjection::ScaledFit LeastSquaresProjection::fit_scaled(
    const Eigen::VectorXd& target, const Eigen::VectorXd& w) const {
  const Eigen::Index n = target.size();
  // Columns dropped from the plain projection stay dropped here.
  const Eigen::Index r = x_.cols() == 0 ? 0 : qr_.rank();
  Eigen::MatrixXd basis(n, r + 1);
  basis.col(0).setOnes();
  for (Eigen::Index j = 0; j < r; ++j) basis.col(j + 1) = x_.col(qr_.colsPermutation().indices()[j]);
  const Eigen::MatrixXd design = basis.array().colwise() * w.array();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  qr.setThreshold(1e-10);
  qr.compute(design);
  const Eigen::VectorXd beta = truncated_solve(qr, target);
  ScaledFit out;
  out.g = basis * beta;
  const double w2 = w.squaredNorm();
  const Eigen::Index dof = std::max<Eigen::Index>(1, n - qr.rank());
  const double sigma2 = (target - design * beta).squaredNorm() / static_cast<double>(dof);
  // The weighted centred columns are asymptotically orthogonal to w, so the
  // constant coefficient (the mean of g) has variance sigma^2 / sum w^2.
  out.mean_se = w2 > 0.0 ? std::sqrt(sigma2 / w2) : 0.0;
  return out;
}

Eigen::VectorXd LeastSquaresProjection::fit(const Eigen::VectorXd& target) const {
  const double mu = target.mean();
  if (x_.cols() == 0) return Eigen::VectorXd::Constant(target.size(), mu);
  Eigen::VectorXd g = x_ * slopes(target.array() - mu);
  g.array() -= g.mean();
  return g.array() + mu;
}

}  // namespace pathfk
