#ifndef GANOV_PIPELINE_HPP
#define GANOV_PIPELINE_HPP

#include <string>
#include <vector>

#include "ganov/config.hpp"
#include "ganov/dataset.hpp"
#include "ganov/models.hpp"

namespace ganov::pipeline {

struct GanIterRecord {
  int64_t iteration = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double mean_rho = 0.0;
};

struct GanHistory {
  std::vector<GanIterRecord> iters;
};

// Alternating D-then-G updates for cfg.gan_iterations steps (Adam, lr tau,
// betas 0.5/0.999 as in the DCGAN recipe). The Pearson term is active iff
// cfg.use_pearson_loss. Throws DivergenceError on non-finite loss.
GanHistory train_gan(models::Generator& G, models::Discriminator& D,
                     const Dataset& data, const ExperimentConfig& cfg, Rng& rng);

struct DistributionSet {
  Tensor images;  // (n, c, h, w)
  std::string source_generator_id;

  int64_t count() const { return images.shape.empty() ? 0 : images.shape[0]; }
};

DistributionSet build_distribution_set(models::Generator& G, int64_t n, Rng& rng);

struct SphereEpochRecord {
  int64_t epoch = 0;
  double loss = 0.0;
  double radius = 0.0;
};

// The ownership-verification artifact: a private encoder copy plus the
// fitted center and radius.
struct Hypersphere {
  models::EncoderSpec spec;
  nn::Sequential encoder;
  std::vector<float> center;
  double radius = 0.0;
  double nu = 0.35;
  std::vector<SphereEpochRecord> training_log;

  // Eval-mode representations, batched internally.
  Tensor encode(const Tensor& images) const;

  ArtifactManifest save(const std::string& dir, double lambda = 0.5,
                        int64_t seed = 0) const;
  static Hypersphere load(const std::string& dir);
};

// Representation mean over the set, with near-zero coordinates snapped to
// sign(c_i) * 0.1 as a collapse guard.
std::vector<float> init_center(nn::Sequential& encoder, const Tensor& images);

// Exact minimizer of the 1-D restriction of the compactness objective:
// the objective is piecewise linear in R^2 with breakpoints at the
// squared distances, so scanning {0} U sq_dists is exact.
double line_search_radius(const std::vector<double>& sq_dists, double nu);

// Step 3 with the discriminator's encoder as the starting point. The
// discriminator itself is left untouched.
Hypersphere train_hypersphere(const models::Discriminator& D,
                              const DistributionSet& dprime,
                              const ExperimentConfig& cfg, Rng& rng);

// Same alternating scheme for an arbitrary (e.g. freshly random) encoder.
Hypersphere train_hypersphere_from(nn::Sequential encoder,
                                   const models::EncoderSpec& spec,
                                   const DistributionSet& dprime,
                                   const ExperimentConfig& cfg, Rng& rng);

void write_gan_log(const std::string& path, const GanHistory& history);
void write_sphere_log(const std::string& path,
                      const std::vector<SphereEpochRecord>& log);

}  // namespace ganov::pipeline

#endif
