#ifndef GANOV_VERIFICATION_HPP
#define GANOV_VERIFICATION_HPP

#include <string>
#include <vector>

#include "ganov/pipeline.hpp"
#include "ganov/tensor.hpp"

namespace ganov::verification {

enum class ScoreOrigin { reference, suspect };

struct ScoreBatch {
  std::vector<double> scores;
  ScoreOrigin origin = ScoreOrigin::reference;

  int64_t batch_size() const { return static_cast<int64_t>(scores.size()); }
};

struct Verdict {
  double auc = 0.0;
  double threshold = 0.60;
  bool is_pirated = false;  // auc < threshold (strict)
  int64_t reference_size = 0;
  int64_t suspect_size = 0;
  std::vector<double> replicate_aucs;

  std::string to_json() const;
};

// s(x) = ||phi(x;W) - c||^2 - R^2; negative inside the sphere.
double proximity_score(const pipeline::Hypersphere& h, const Tensor& image);
ScoreBatch proximity_scores(const pipeline::Hypersphere& h, const Tensor& images,
                            ScoreOrigin origin);

// P(random suspect score > random reference score), ties credited 0.5.
// High values mean the suspect scores sit outside the reference sphere.
double auc(const ScoreBatch& reference, const ScoreBatch& suspect);

Verdict verify(const pipeline::Hypersphere& h, const Tensor& reference_images,
               const Tensor& suspect_images, double threshold = 0.60);

// Standard SSIM: 11x11 Gaussian window sigma=1.5, k1=0.01, k2=0.03,
// dynamic range 1 (pixels remapped [-1,1] -> [0,1]), averaged over
// channels and window positions.
double ssim(const Tensor& a, const Tensor& b);

// Mean SSIM over paired batches (quality gate for attack sweeps).
double mean_ssim(const Tensor& batch_a, const Tensor& batch_b);

}  // namespace ganov::verification

#endif
