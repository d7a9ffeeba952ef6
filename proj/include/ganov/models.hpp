#ifndef GANOV_MODELS_HPP
#define GANOV_MODELS_HPP

#include <string>
#include <vector>

#include "ganov/artifact.hpp"
#include "ganov/config.hpp"
#include "ganov/nn.hpp"
#include "ganov/rng.hpp"
#include "ganov/tensor.hpp"

namespace ganov::models {

// Supported DCGAN-family tags: "dcgan", "dcgan_sn" (spectral-normalized
// discriminator), "dcgan_wide" (doubled channel widths).
bool architecture_supported(const std::string& id);
std::vector<std::string> supported_architectures();

struct EncoderSpec {
  std::string architecture_id;
  ImageShape image_shape;
  int64_t base_width = 16;
  int64_t embed_dim = 64;  // d

  bool operator==(const EncoderSpec&) const = default;
};

// Strided conv stack down to 4x4, flatten, linear to embed_dim.
nn::Sequential build_encoder(const EncoderSpec& spec, Rng& rng);

class Generator {
 public:
  Generator(const ExperimentConfig& cfg, Rng& rng);
  Generator(const std::string& architecture_id, int64_t latent_dim,
            const ImageShape& shape, int64_t base_width, Rng& rng);

  // z: (m, latent_dim) -> images (m, c, h, w) in [-1,1] (tanh output).
  Tensor generate(const Tensor& z, bool train = false);
  Tensor backward(const Tensor& g_images);

  int64_t latent_dim() const { return latent_dim_; }
  const ImageShape& output_shape() const { return shape_; }
  const std::string& architecture_id() const { return arch_; }
  int64_t base_width() const { return base_width_; }
  nn::Sequential& net() { return net_; }
  const nn::Sequential& net() const { return net_; }

  ArtifactManifest save(const std::string& dir) const;
  static Generator load(const std::string& dir);

 private:
  std::string arch_;
  int64_t latent_dim_;
  ImageShape shape_;
  int64_t base_width_;
  nn::Sequential net_;
};

class Discriminator {
 public:
  Discriminator(const ExperimentConfig& cfg, Rng& rng);
  Discriminator(const EncoderSpec& spec, Rng& rng);

  // images (m,c,h,w) -> representations (m, d).
  Tensor encode(const Tensor& images, bool train = false);
  // encoder output -> pre-sigmoid logits (m, 1).
  Tensor head_logits(const Tensor& reps, bool train = false);
  // images -> probabilities in (0,1), (m).
  Tensor classify(const Tensor& images);

  // Backprop through head then encoder. g_logits pairs with the last
  // train-mode head_logits call; g_reps_extra (may be empty) is added to
  // the representation gradient before the encoder pass. Returns d/d images.
  Tensor backward(const Tensor& g_logits, const Tensor& g_reps_extra);

  int64_t embed_dim() const { return spec_.embed_dim; }
  const EncoderSpec& spec() const { return spec_; }
  nn::Sequential& encoder() { return encoder_; }
  const nn::Sequential& encoder() const { return encoder_; }
  nn::Sequential& head() { return head_; }

  std::vector<nn::Param*> params();

  ArtifactManifest save(const std::string& dir) const;
  static Discriminator load(const std::string& dir);

 private:
  EncoderSpec spec_;
  nn::Sequential encoder_;
  nn::Sequential head_;  // single Linear(d,1); sigmoid applied in classify
};

// (m, n_z) of i.i.d. standard normal draws.
Tensor sample_latents(int64_t m, int64_t n_z, Rng& rng);

Tensor sigmoid(const Tensor& logits);

}  // namespace ganov::models

#endif
