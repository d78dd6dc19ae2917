#pragma once

#include <span>
#include <vector>

namespace archattr::ml {

// Profile log-likelihood of the Box-Cox model up to a constant:
// (λ - 1) Σ ln y - n/2 ln σ̂²(λ), σ̂² the population variance of the transform.
double boxcox_log_likelihood(std::span<const double> y, double lambda);

// Maximizer of the profile log-likelihood on [-5, 5], golden-section search to
// 1e-6. Throws NonPositiveValue, TooFewSamples (fewer than 10 values) or
// DegenerateVariance (constant y).
double boxcox_lambda(std::span<const double> y);

// (y^λ - 1)/λ, or ln y when |λ| < 1e-8. Throws NonPositiveValue.
double boxcox_transform(double y, double lambda);
std::vector<double> boxcox_transform(std::span<const double> y, double lambda);

}  // namespace archattr::ml
