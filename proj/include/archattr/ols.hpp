#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace archattr::ml {

struct Expanded {
  Eigen::MatrixXd x;
  std::vector<std::string> names;
};

// Appends x_i * x_j for every i < j after the p base columns. Each product is
// named "a*b" with the two base names in ASCII order.
Expanded interaction_expand(const Eigen::MatrixXd& x, std::span<const std::string> names);

struct Standardized {
  Eigen::MatrixXd z;
  std::vector<double> means;
  std::vector<double> stds;    // population convention
  std::vector<bool> constant;  // zero-variance columns, left as zeros
};

Standardized standardize(const Eigen::MatrixXd& x);

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double t = 0.0;
  double p_value = 1.0;
};

struct DroppedColumn {
  std::string name;
  std::string reason;  // "constant" or "collinear"
};

struct OlsReport {
  std::vector<Coefficient> coefficients;  // "(intercept)" first, then kept columns in input order
  std::vector<DroppedColumn> dropped;
  std::size_t n = 0;
  std::size_t dof = 0;  // n minus the number of fitted parameters
  double sigma = 0.0;   // residual standard error
  double r_squared = 0.0;
  double adj_r_squared = 0.0;
  std::vector<double> fitted;
  std::vector<double> residuals;
  std::vector<double> qq_theoretical;  // Φ⁻¹((i + 0.5)/n)
  std::vector<double> qq_sample;       // sorted residuals / sigma
  std::optional<double> boxcox_lambda;
};

inline constexpr double kCollinearTolerance = 1e-9;

// Least squares with an intercept. Constant columns are dropped first; then
// columns are admitted in order unless their component orthogonal to the
// columns already admitted is below kCollinearTolerance relative to their
// norm. Throws Underdetermined when no residual degrees of freedom remain,
// DegenerateVariance for a constant y and NumericalFailure on non-finite input.
OlsReport ols_fit(const Eigen::MatrixXd& x, std::span<const double> y,
                  std::span<const std::string> names);

}  // namespace archattr::ml
