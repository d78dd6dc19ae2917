#include "archattr/boxcox.hpp"

#include <cmath>
#include <string>

#include "archattr/error.hpp"

namespace archattr::ml {

namespace {

constexpr double kZeroLambda = 1e-8;

void require_positive(std::span<const double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0) || !std::isfinite(y[i])) {
      throw Error(ErrorCode::NonPositiveValue,
                  "Box-Cox needs finite positive values; entry " + std::to_string(i) + " is " +
                      std::to_string(y[i]));
    }
  }
}

double transform_unchecked(double log_y, double lambda) {
  if (std::abs(lambda) < kZeroLambda) return log_y;
  return std::expm1(lambda * log_y) / lambda;
}

double loglik_from_logs(const std::vector<double>& logs, double sum_log, double lambda) {
  const double n = static_cast<double>(logs.size());
  double mean = 0.0;
  for (double l : logs) mean += transform_unchecked(l, lambda);
  mean /= n;
  double ss = 0.0;
  for (double l : logs) {
    const double d = transform_unchecked(l, lambda) - mean;
    ss += d * d;
  }
  return (lambda - 1.0) * sum_log - 0.5 * n * std::log(ss / n);
}

std::vector<double> logs_of(std::span<const double> y, double& sum_log) {
  std::vector<double> logs(y.size());
  sum_log = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    logs[i] = std::log(y[i]);
    sum_log += logs[i];
  }
  return logs;
}

}  // namespace

double boxcox_log_likelihood(std::span<const double> y, double lambda) {
  require_positive(y);
  double sum_log = 0.0;
  const auto logs = logs_of(y, sum_log);
  return loglik_from_logs(logs, sum_log, lambda);
}

double boxcox_lambda(std::span<const double> y) {
  require_positive(y);
  if (y.size() < 10) {
    throw Error(ErrorCode::TooFewSamples, "Box-Cox needs at least 10 values");
  }
  bool constant = true;
  for (double v : y) constant = constant && v == y[0];
  if (constant) throw Error(ErrorCode::DegenerateVariance, "Box-Cox input is constant");

  double sum_log = 0.0;
  const auto logs = logs_of(y, sum_log);
  const auto f = [&](double lambda) { return loglik_from_logs(logs, sum_log, lambda); };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = -5.0;
  double b = 5.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > 1e-6) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return (a + b) / 2.0;
}

double boxcox_transform(double y, double lambda) {
  const double v[1] = {y};
  require_positive(v);
  return transform_unchecked(std::log(y), lambda);
}

std::vector<double> boxcox_transform(std::span<const double> y, double lambda) {
  require_positive(y);
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = transform_unchecked(std::log(y[i]), lambda);
  return out;
}

}  // namespace archattr::ml
