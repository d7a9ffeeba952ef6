#ifndef GANOV_ATTACKS_HPP
#define GANOV_ATTACKS_HPP

#include <string>

#include "ganov/pipeline.hpp"
#include "ganov/tensor.hpp"

namespace ganov::attacks {

enum class TransformKind { noise, blur, jpeg, crop };

struct TransformationSpec {
  TransformKind kind = TransformKind::noise;
  double magnitude = 0.05;   // noise epsilon / jpeg quality / crop fraction
  int64_t blur_kernel = 3;   // blur only
  double blur_sigma = 2.0;   // blur only
  int64_t seed = 0;

  void validate() const;

  // Parses CLI forms: noise:0.05, blur:3,2, jpeg:60, crop:0.15.
  static TransformationSpec parse(const std::string& text);
  std::string describe() const;
};

// Copy of G with exactly floor(rate * parameter count) scalars zeroed,
// drawn uniformly across all layers. The input model is untouched.
models::Generator prune_generator(const models::Generator& G, double rate,
                                  int64_t seed);

// Shape- and range-preserving ([-1,1]) batch transforms. JPEG round-trips
// through the real file codec; crop removes the border fraction then
// resizes back.
Tensor transform_images(const Tensor& images, const TransformationSpec& spec);

// The ambiguity baseline: the hypersphere recipe run on a freshly
// random-initialized encoder instead of the trained discriminator's.
pipeline::Hypersphere ambiguity_train(const pipeline::DistributionSet& dprime,
                                      const ExperimentConfig& cfg, Rng& rng);

}  // namespace ganov::attacks

#endif
