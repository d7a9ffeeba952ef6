#include "ganov/models.hpp"

#include <cmath>

#include "ganov/errors.hpp"

namespace ganov::models {

namespace {

const char* kArchTags[] = {"dcgan", "dcgan_sn", "dcgan_wide"};

int64_t width_for(const std::string& arch, int64_t base) {
  return arch == "dcgan_wide" ? 2 * base : base;
}

// Number of stride-2 stages between 4x4 and the image resolution.
int64_t upsample_levels(const ImageShape& s) {
  if (s.height != s.width)
    throw ValidationError("architecture: image must be square, got " +
                          std::to_string(s.height) + "x" + std::to_string(s.width));
  int64_t levels = 0, r = 4;
  while (r < s.height) {
    r *= 2;
    ++levels;
  }
  if (r != s.height || levels < 1)
    throw ValidationError(
        "architecture: image side must be a power of two >= 8, got " +
        std::to_string(s.height));
  return levels;
}

void require_arch(const std::string& id) {
  if (!architecture_supported(id)) {
    std::string tags;
    for (const char* t : kArchTags) tags += std::string(tags.empty() ? "" : ", ") + t;
    throw ValidationError("architecture '" + id + "' unsupported (supported: " +
                          tags + ")");
  }
}

nn::Sequential build_generator_net(const std::string& arch, int64_t n_z,
                                   const ImageShape& shape, int64_t base_width,
                                   Rng& rng) {
  int64_t levels = upsample_levels(shape);
  int64_t g = width_for(arch, base_width);
  int64_t cmax = g << (levels - 1);

  nn::Sequential net;
  net.add("project", std::make_unique<nn::Linear>(n_z, cmax * 16, rng));
  net.add("reshape", std::make_unique<nn::Reshape>(std::vector<int64_t>{cmax, 4, 4}));
  net.add("bn0", std::make_unique<nn::BatchNorm2d>(cmax, rng));
  net.add("relu0", std::make_unique<nn::ReLU>());
  int64_t c = cmax;
  for (int64_t i = 0; i < levels - 1; ++i) {
    std::string tag = std::to_string(i + 1);
    net.add("up" + tag, std::make_unique<nn::ConvTranspose2d>(c, c / 2, 4, 2, 1, rng));
    net.add("bn" + tag, std::make_unique<nn::BatchNorm2d>(c / 2, rng));
    net.add("relu" + tag, std::make_unique<nn::ReLU>());
    c /= 2;
  }
  net.add("to_image",
          std::make_unique<nn::ConvTranspose2d>(c, shape.channels, 4, 2, 1, rng));
  net.add("tanh", std::make_unique<nn::Tanh>());
  return net;
}

}  // namespace

bool architecture_supported(const std::string& id) {
  for (const char* t : kArchTags)
    if (id == t) return true;
  return false;
}

std::vector<std::string> supported_architectures() {
  return {kArchTags, kArchTags + 3};
}

nn::Sequential build_encoder(const EncoderSpec& spec, Rng& rng) {
  require_arch(spec.architecture_id);
  int64_t levels = upsample_levels(spec.image_shape);
  int64_t g = width_for(spec.architecture_id, spec.base_width);
  bool sn = spec.architecture_id == "dcgan_sn";

  nn::Sequential net;
  int64_t c = spec.image_shape.channels;
  int64_t w = g;
  for (int64_t i = 0; i < levels; ++i) {
    std::string tag = std::to_string(i + 1);
    net.add("conv" + tag, std::make_unique<nn::Conv2d>(c, w, 4, 2, 1, sn, rng));
    net.add("lrelu" + tag, std::make_unique<nn::LeakyReLU>(0.2f));
    c = w;
    w *= 2;
  }
  net.add("flatten", std::make_unique<nn::Flatten>());
  net.add("embed", std::make_unique<nn::Linear>(c * 16, spec.embed_dim, rng));
  return net;
}

// ------------------------------------------------------------- Generator

Generator::Generator(const ExperimentConfig& cfg, Rng& rng)
    : Generator(cfg.architecture_id, cfg.latent_dim, cfg.image_shape,
                cfg.base_width, rng) {}

Generator::Generator(const std::string& architecture_id, int64_t latent_dim,
                     const ImageShape& shape, int64_t base_width, Rng& rng)
    : arch_(architecture_id),
      latent_dim_(latent_dim),
      shape_(shape),
      base_width_(base_width) {
  require_arch(arch_);
  net_ = build_generator_net(arch_, latent_dim_, shape_, base_width_, rng);
}

Tensor Generator::generate(const Tensor& z, bool train) {
  if (z.shape.size() != 2 || z.shape[1] != latent_dim_)
    throw ValidationError("generate: expected latents (m," +
                          std::to_string(latent_dim_) + "), got " + z.shape_str());
  return net_.forward(z, train);
}

Tensor Generator::backward(const Tensor& g_images) {
  return net_.backward(g_images);
}

ArtifactManifest Generator::save(const std::string& dir) const {
  std::map<std::string, const Tensor*> tensors = net_.named_tensors();
  std::map<std::string, double> scalars = {
      {"latent_dim", static_cast<double>(latent_dim_)},
      {"channels", static_cast<double>(shape_.channels)},
      {"height", static_cast<double>(shape_.height)},
      {"width", static_cast<double>(shape_.width)},
      {"base_width", static_cast<double>(base_width_)},
  };
  return save_artifact(dir, "generator", tensors, scalars,
                       {{"architecture_id", arch_}});
}

Generator Generator::load(const std::string& dir) {
  Artifact a = load_artifact(dir);
  if (a.manifest.kind != "generator")
    throw IoError("load: '" + dir + "' holds a " + a.manifest.kind +
                  ", expected a generator");
  ImageShape shape{static_cast<int64_t>(a.scalar("channels")),
                   static_cast<int64_t>(a.scalar("height")),
                   static_cast<int64_t>(a.scalar("width"))};
  Rng dummy(0);
  Generator g(a.str("architecture_id"),
              static_cast<int64_t>(a.scalar("latent_dim")), shape,
              static_cast<int64_t>(a.scalar("base_width")), dummy);
  for (auto& [name, t] : g.net_.named_tensors()) {
    const Tensor& src = a.tensor(name);
    if (src.shape != t->shape)
      throw IoError("load: tensor '" + name + "' shape mismatch");
    t->data = src.data;
  }
  return g;
}

// --------------------------------------------------------- Discriminator

Discriminator::Discriminator(const ExperimentConfig& cfg, Rng& rng)
    : Discriminator(EncoderSpec{cfg.architecture_id, cfg.image_shape,
                                cfg.base_width, cfg.latent_dim},
                    rng) {}

Discriminator::Discriminator(const EncoderSpec& spec, Rng& rng) : spec_(spec) {
  encoder_ = build_encoder(spec_, rng);
  head_.add("out", std::make_unique<nn::Linear>(spec_.embed_dim, 1, rng));
}

Tensor Discriminator::encode(const Tensor& images, bool train) {
  if (images.shape.size() != 4 || images.shape[1] != spec_.image_shape.channels ||
      images.shape[2] != spec_.image_shape.height ||
      images.shape[3] != spec_.image_shape.width)
    throw ValidationError("encode: expected (m," +
                          std::to_string(spec_.image_shape.channels) + "," +
                          std::to_string(spec_.image_shape.height) + "," +
                          std::to_string(spec_.image_shape.width) + "), got " +
                          images.shape_str());
  return encoder_.forward(images, train);
}

Tensor Discriminator::head_logits(const Tensor& reps, bool train) {
  return head_.forward(reps, train);
}

Tensor Discriminator::classify(const Tensor& images) {
  Tensor logits = head_logits(encode(images, false), false);
  Tensor p = sigmoid(logits);
  return p.reshaped({p.shape[0]});
}

Tensor Discriminator::backward(const Tensor& g_logits, const Tensor& g_reps_extra) {
  Tensor g_reps = head_.backward(g_logits);
  if (g_reps_extra.numel() > 0) {
    if (!same_shape(g_reps, g_reps_extra))
      throw ValidationError("backward: representation grad shape mismatch");
    for (size_t i = 0; i < g_reps.data.size(); ++i)
      g_reps.data[i] += g_reps_extra.data[i];
  }
  return encoder_.backward(g_reps);
}

std::vector<nn::Param*> Discriminator::params() {
  std::vector<nn::Param*> ps = encoder_.params();
  for (nn::Param* p : head_.params()) ps.push_back(p);
  return ps;
}

ArtifactManifest Discriminator::save(const std::string& dir) const {
  std::map<std::string, const Tensor*> tensors;
  for (auto& [n, t] : encoder_.named_tensors()) tensors["encoder." + n] = t;
  for (auto& [n, t] : head_.named_tensors()) tensors["head." + n] = t;
  std::map<std::string, double> scalars = {
      {"embed_dim", static_cast<double>(spec_.embed_dim)},
      {"channels", static_cast<double>(spec_.image_shape.channels)},
      {"height", static_cast<double>(spec_.image_shape.height)},
      {"width", static_cast<double>(spec_.image_shape.width)},
      {"base_width", static_cast<double>(spec_.base_width)},
  };
  return save_artifact(dir, "discriminator", tensors, scalars,
                       {{"architecture_id", spec_.architecture_id}});
}

Discriminator Discriminator::load(const std::string& dir) {
  Artifact a = load_artifact(dir);
  if (a.manifest.kind != "discriminator")
    throw IoError("load: '" + dir + "' holds a " + a.manifest.kind +
                  ", expected a discriminator");
  EncoderSpec spec;
  spec.architecture_id = a.str("architecture_id");
  spec.image_shape = ImageShape{static_cast<int64_t>(a.scalar("channels")),
                                static_cast<int64_t>(a.scalar("height")),
                                static_cast<int64_t>(a.scalar("width"))};
  spec.base_width = static_cast<int64_t>(a.scalar("base_width"));
  spec.embed_dim = static_cast<int64_t>(a.scalar("embed_dim"));
  Rng dummy(0);
  Discriminator d(spec, dummy);
  for (auto& [name, t] : d.encoder_.named_tensors())
    t->data = a.tensor("encoder." + name).data;
  for (auto& [name, t] : d.head_.named_tensors())
    t->data = a.tensor("head." + name).data;
  return d;
}

// --------------------------------------------------------------- helpers

Tensor sample_latents(int64_t m, int64_t n_z, Rng& rng) {
  if (m < 1) throw ValidationError("sample_latents: m must be >= 1");
  Tensor z({m, n_z});
  for (float& v : z.data) v = rng.normal();
  return z;
}

Tensor sigmoid(const Tensor& logits) {
  Tensor p = logits;
  for (float& v : p.data) {
    v = 1.0f / (1.0f + std::exp(-v));
    // keep probabilities away from the log() poles
    if (v < 1e-7f) v = 1e-7f;
    if (v > 1.0f - 1e-7f) v = 1.0f - 1e-7f;
  }
  return p;
}

}  // namespace ganov::models
