#include "archattr/ols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "archattr/error.hpp"

namespace archattr::ml {

Expanded interaction_expand(const Eigen::MatrixXd& x, std::span<const std::string> names) {
  const Eigen::Index p = x.cols();
  if (static_cast<Eigen::Index>(names.size()) != p) {
    throw Error(ErrorCode::Config, "interaction_expand: one name per column required");
  }
  Expanded out;
  out.x.resize(x.rows(), p + p * (p - 1) / 2);
  out.x.leftCols(p) = x;
  out.names.assign(names.begin(), names.end());
  Eigen::Index c = p;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j, ++c) {
      out.x.col(c) = x.col(i).cwiseProduct(x.col(j));
      const auto& a = names[static_cast<std::size_t>(i)];
      const auto& b = names[static_cast<std::size_t>(j)];
      out.names.push_back(a < b ? a + "*" + b : b + "*" + a);
    }
  }
  return out;
}

Standardized standardize(const Eigen::MatrixXd& x) {
  Standardized s;
  s.z = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double mean = n > 0 ? x.col(j).sum() / n : 0.0;
    const double var = n > 0 ? (x.col(j).array() - mean).square().sum() / n : 0.0;
    const double sd = std::sqrt(var);
    bool constant = true;
    for (Eigen::Index i = 1; i < x.rows() && constant; ++i) constant = x(i, j) == x(0, j);
    s.means.push_back(mean);
    s.stds.push_back(sd);
    s.constant.push_back(constant || sd == 0.0);
    if (!s.constant.back()) s.z.col(j) = (x.col(j).array() - mean) / sd;
  }
  return s;
}

OlsReport ols_fit(const Eigen::MatrixXd& x, std::span<const double> y,
                  std::span<const std::string> names) {
  const Eigen::Index n = x.rows();
  if (static_cast<Eigen::Index>(y.size()) != n) {
    throw Error(ErrorCode::Config, "ols_fit: target length does not match row count");
  }
  if (static_cast<Eigen::Index>(names.size()) != x.cols()) {
    throw Error(ErrorCode::Config, "ols_fit: one name per column required");
  }
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  if (!x.allFinite() || !yv.allFinite()) {
    throw Error(ErrorCode::NumericalFailure, "ols_fit: non-finite input");
  }
  if (n < 2 || (yv.array() == yv(0)).all()) {
    throw Error(ErrorCode::DegenerateVariance, "ols_fit: target has zero variance");
  }

  OlsReport report;
  report.n = static_cast<std::size_t>(n);

  // Order-preserving column admission against an orthonormal basis that
  // starts with the intercept.
  std::vector<Eigen::Index> kept;
  Eigen::MatrixXd basis(n, std::min<Eigen::Index>(n, x.cols() + 1));
  basis.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  Eigen::Index rank = 1;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto name = names[static_cast<std::size_t>(j)];
    if ((x.col(j).array() == x(0, j)).all()) {
      report.dropped.push_back({name, "constant"});
      continue;
    }
    const double norm = x.col(j).norm();
    Eigen::VectorXd r = x.col(j);
    if (rank < n) {
      for (int pass = 0; pass < 2; ++pass) {
        r -= basis.leftCols(rank) * (basis.leftCols(rank).transpose() * r);
      }
    }
    const double residual = rank < n ? r.norm() : 0.0;
    if (residual <= kCollinearTolerance * norm) {
      report.dropped.push_back({name, "collinear"});
      continue;
    }
    basis.col(rank++) = r / residual;
    kept.push_back(j);
  }

  const Eigen::Index k = static_cast<Eigen::Index>(kept.size()) + 1;
  if (n <= k) {
    throw Error(ErrorCode::Underdetermined,
                "ols_fit: " + std::to_string(k) + " parameters need more than " +
                    std::to_string(n) + " rows; use more networks or base features only");
  }

  Eigen::MatrixXd design(n, k);
  design.col(0).setOnes();
  for (Eigen::Index c = 1; c < k; ++c) design.col(c) = x.col(kept[static_cast<std::size_t>(c - 1)]);

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(design);
  const Eigen::MatrixXd r_full = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Eigen::VectorXd qty = (qr.householderQ().transpose() * yv).head(k);
  const auto upper = r_full.triangularView<Eigen::Upper>();
  const Eigen::VectorXd beta = upper.solve(qty);
  const Eigen::MatrixXd r_inv = upper.solve(Eigen::MatrixXd::Identity(k, k));
  if (!beta.allFinite() || !r_inv.allFinite()) {
    throw Error(ErrorCode::NumericalFailure, "ols_fit: triangular solve failed");
  }

  const Eigen::VectorXd fitted = design * beta;
  const Eigen::VectorXd resid = yv - fitted;
  const double ssr = resid.squaredNorm();
  const double sst = (yv.array() - yv.mean()).square().sum();
  report.dof = static_cast<std::size_t>(n - k);
  const double dof = static_cast<double>(report.dof);
  const double sigma2 = ssr / dof;
  report.sigma = std::sqrt(sigma2);
  report.r_squared = std::clamp(1.0 - ssr / sst, 0.0, 1.0);
  report.adj_r_squared =
      1.0 - (1.0 - report.r_squared) * static_cast<double>(n - 1) / dof;

  const boost::math::students_t t_dist(dof);
  for (Eigen::Index c = 0; c < k; ++c) {
    Coefficient coef;
    coef.name = c == 0 ? "(intercept)" : names[static_cast<std::size_t>(kept[static_cast<std::size_t>(c - 1)])];
    coef.estimate = beta(c);
    // diag((RᵀR)⁻¹) = squared row norms of R⁻¹
    coef.std_error = std::sqrt(sigma2 * r_inv.row(c).squaredNorm());
    if (coef.std_error > 0.0) {
      coef.t = coef.estimate / coef.std_error;
      coef.p_value = 2.0 * boost::math::cdf(boost::math::complement(t_dist, std::abs(coef.t)));
    } else if (coef.estimate != 0.0) {
      coef.t = std::copysign(std::numeric_limits<double>::infinity(), coef.estimate);
      coef.p_value = 0.0;
    } else {
      coef.t = 0.0;
      coef.p_value = 1.0;
    }
    report.coefficients.push_back(std::move(coef));
  }

  report.fitted.assign(fitted.data(), fitted.data() + n);
  report.residuals.assign(resid.data(), resid.data() + n);
  std::vector<double> sorted = report.residuals;
  std::sort(sorted.begin(), sorted.end());
  const boost::math::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double prob = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    report.qq_theoretical.push_back(boost::math::quantile(normal, prob));
    report.qq_sample.push_back(report.sigma > 0.0 ? sorted[static_cast<std::size_t>(i)] / report.sigma
                                                  : 0.0);
  }
  return report;
}

}  // namespace archattr::ml
