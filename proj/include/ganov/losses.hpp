#ifndef GANOV_LOSSES_HPP
#define GANOV_LOSSES_HPP

#include <span>
#include <vector>

#include "ganov/tensor.hpp"

namespace ganov::losses {

// Soft-boundary one-class objective, decomposed:
//   total = R^2 + (1/(nu*m)) * sum_i max{0, dist2_i - R^2}
struct CompactnessTerms {
  double radius_sq = 0.0;
  double violation_mean = 0.0;
  double total = 0.0;
};

class DegenerateInputError : public ValidationError {
 public:
  explicit DegenerateInputError(const std::string& msg) : ValidationError(msg) {}
};

// Population-statistics correlation of one latent/reconstruction pair,
// clamped to [-1,1]. Throws DegenerateInputError on zero variance.
double pearson_correlation(std::span<const float> z, std::span<const float> zhat);

// d rho / d zhat, analytic.
std::vector<float> pearson_grad(std::span<const float> z,
                                std::span<const float> zhat);

CompactnessTerms compactness_loss(const Tensor& reps, std::span<const float> c,
                                  double radius, double nu);

// d total / d reps. Zero on rows inside the sphere (hinge inactive).
Tensor compactness_grad(const Tensor& reps, std::span<const float> c,
                        double radius, double nu);

// Non-saturating generator objective: mean_i[ -log p_fake_i - lambda*rho_i ].
double generator_loss(std::span<const float> d_fake_probs,
                      std::span<const double> rho_values, double lambda);

// Discriminator objective (minimized):
//   mean[-log p_real] + mean[-log(1-p_fake)] - lambda*mean[rho]
double discriminator_loss(std::span<const float> d_real_probs,
                          std::span<const float> d_fake_probs,
                          std::span<const double> rho_values, double lambda);

}  // namespace ganov::losses

#endif
