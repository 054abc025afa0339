#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "pathfk/path_space.hpp"

namespace pathfk {

struct Feature {
  std::string name;
  std::function<double(PathView)> evaluate;
};

/// Regression basis for conditional expectations: all monomials of total
/// degree <= `degree` in the features, the constant included.
struct RegressionBasis {
  std::vector<Feature> features;
  int degree = 2;

  /// Terminal value and running integral of every component.
  static RegressionBasis standard(std::size_t dimension = 1, int degree = 2);

  /// Number of monomials (columns of the design matrix).
  std::size_t size() const;
  /// Exponent vector of every monomial, constant first.
  std::vector<std::vector<int>> exponents() const;
  /// Monomials of one path; `raw` holds the feature values.
  static void expand(const std::vector<std::vector<int>>& exponents,
                     std::span<const double> raw, std::span<double> out);
  void validate() const;
};

/// Least-squares projection onto the span of a design matrix.
///
/// Non-constant columns are centred and scaled, constant columns are
/// folded into the intercept, and the solve uses a column-pivoting QR that
/// drops numerically dependent columns. The intercept is always retained,
/// so fitted values have the same sample mean as the target.
class LeastSquaresProjection {
 public:
  /// `design` is n x p without an intercept column.
  explicit LeastSquaresProjection(const Eigen::MatrixXd& design);

  Eigen::VectorXd fit(const Eigen::VectorXd& target) const;
  /// Intercept followed by one coefficient per design column, in the
  /// original units; dropped columns get 0.
  Eigen::VectorXd coefficients(const Eigen::VectorXd& target) const;

  /// Least-squares fit of target_i ~ w_i g(x_i) with g in the same span as
  /// `fit`. `mean_se` is the standard error of the mean of g.
  struct ScaledFit {
    Eigen::VectorXd g;
    double mean_se = 0.0;
  };
  ScaledFit fit_scaled(const Eigen::VectorXd& target, const Eigen::VectorXd& w) const;

  /// Ratio of the extreme diagonal entries of R over the retained columns.
  double condition() const noexcept { return condition_; }
  std::size_t rank() const noexcept { return rank_; }

 private:
  Eigen::VectorXd slopes(const Eigen::VectorXd& centred) const;

  Eigen::MatrixXd x_;  // standardized, retained non-constant columns
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
  Eigen::Index columns_ = 0;
  std::vector<Eigen::Index> keep_;
  std::vector<double> mean_;
  std::vector<double> scale_;
  double condition_ = 1.0;
  std::size_t rank_ = 1;
};

}  // namespace pathfk
