#ifndef GANOV_CONFIG_HPP
#define GANOV_CONFIG_HPP

#include <array>
#include <cstdint>
#include <string>

namespace ganov {

struct ImageShape {
  int64_t channels = 3;
  int64_t height = 32;
  int64_t width = 32;

  bool operator==(const ImageShape&) const = default;
  int64_t pixels() const { return channels * height * width; }
};

// All knobs of the training/verification pipeline. Loaded from a
// key=value file; unspecified keys keep the defaults below.
struct ExperimentConfig {
  int64_t latent_dim = 64;             // n_z
  ImageShape image_shape;              // (c, h, w)
  int64_t gan_iterations = 2000;       // K
  int64_t radius_interval = 1;         // k, in epochs
  double gan_learning_rate = 2e-4;     // tau
  double sphere_learning_rate = 1e-3;  // tau'
  double lambda = 0.5;                 // pearson weight
  double nu = 0.35;                    // compactness trade-off, (0,1]
  int64_t distribution_set_size = 5000;
  int64_t verification_batch_size = 500;
  double suspicion_threshold = 0.60;
  int64_t seed = 0;
  std::string architecture_id = "dcgan";
  bool use_pearson_loss = true;

  // Descriptors not named in Algorithm 1 but required to run it.
  int64_t gan_batch_size = 32;
  int64_t sphere_batch_size = 64;
  int64_t base_width = 16;  // channel multiplier of the DCGAN family

  // Throws ValidationError naming the offending key.
  void validate() const;
};

// Parses a plain-text key=value file ('#' starts a comment).
ExperimentConfig load_config(const std::string& path);

// Parses a single "key=value" assignment into an existing config.
void apply_config_line(ExperimentConfig& cfg, const std::string& line);

}  // namespace ganov

#endif
