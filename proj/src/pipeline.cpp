#include "ganov/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ganov/errors.hpp"
#include "ganov/losses.hpp"

namespace ganov::pipeline {

namespace {

constexpr double kSphereTolRel = 1e-4;
constexpr int kSphereTolEpochs = 5;
constexpr int kSphereMaxEpochs = 200;
constexpr double kCenterSnapEps = 0.1;
constexpr int64_t kEvalChunk = 128;

// Deterministic epoch-reshuffled batch cursor.
class BatchCursor {
 public:
  BatchCursor(int64_t count, Rng& rng) : order_(count), rng_(rng) {
    std::iota(order_.begin(), order_.end(), 0);
    rng_.shuffle(order_);
  }

  std::vector<int64_t> next(int64_t batch) {
    std::vector<int64_t> idx;
    idx.reserve(batch);
    for (int64_t i = 0; i < batch; ++i) {
      if (pos_ == static_cast<int64_t>(order_.size())) {
        rng_.shuffle(order_);
        pos_ = 0;
      }
      idx.push_back(order_[pos_++]);
    }
    return idx;
  }

 private:
  std::vector<int64_t> order_;
  int64_t pos_ = 0;
  Rng& rng_;
};

Tensor gather_batch(const Dataset& data, const std::vector<int64_t>& idx) {
  const auto& s = data.items.front().shape;
  Tensor out({static_cast<int64_t>(idx.size()), s[0], s[1], s[2]});
  int64_t stride = data.items.front().numel();
  for (size_t i = 0; i < idx.size(); ++i)
    std::copy(data.items[idx[i]].data.begin(), data.items[idx[i]].data.end(),
              out.data.begin() + static_cast<int64_t>(i) * stride);
  return out;
}

// Per-row pearson values and the -lambda/m scaled gradient w.r.t. reps.
void pearson_terms(const Tensor& z, const Tensor& reps, double lambda,
                   std::vector<double>& rho_out, Tensor& grad_out) {
  int64_t m = z.shape[0], d = z.shape[1];
  rho_out.resize(m);
  grad_out = Tensor(reps.shape);
  for (int64_t i = 0; i < m; ++i) {
    std::span<const float> zi(z.ptr() + i * d, static_cast<size_t>(d));
    std::span<const float> ri(reps.ptr() + i * d, static_cast<size_t>(d));
    rho_out[static_cast<size_t>(i)] = losses::pearson_correlation(zi, ri);
    std::vector<float> g = losses::pearson_grad(zi, ri);
    float scale = static_cast<float>(-lambda / static_cast<double>(m));
    for (int64_t j = 0; j < d; ++j) grad_out.ptr()[i * d + j] = scale * g[j];
  }
}

std::vector<double> squared_distances(const Tensor& reps,
                                      const std::vector<float>& c) {
  int64_t m = reps.shape[0], d = reps.shape[1];
  std::vector<double> out(m);
  for (int64_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (int64_t j = 0; j < d; ++j) {
      double diff = static_cast<double>(reps.ptr()[i * d + j]) - c[j];
      s += diff * diff;
    }
    out[static_cast<size_t>(i)] = s;
  }
  return out;
}

Tensor encode_chunked(nn::Sequential& encoder, const Tensor& images) {
  int64_t n = images.shape[0];
  Tensor out;
  for (int64_t b = 0; b < n; b += kEvalChunk) {
    int64_t cnt = std::min(kEvalChunk, n - b);
    Tensor reps = encoder.forward(images.slice0(b, cnt), false);
    if (out.numel() == 0) {
      out = Tensor({n, reps.shape[1]});
    }
    std::copy(reps.data.begin(), reps.data.end(),
              out.data.begin() + b * reps.shape[1]);
  }
  return out;
}

}  // namespace

GanHistory train_gan(models::Generator& G, models::Discriminator& D,
                     const Dataset& data, const ExperimentConfig& cfg, Rng& rng) {
  if (data.count() < 1) throw ValidationError("train_gan: empty dataset");
  if (G.latent_dim() != cfg.latent_dim)
    throw ValidationError("train_gan: generator latent_dim mismatch");
  if (cfg.use_pearson_loss && D.embed_dim() != cfg.latent_dim)
    throw ValidationError(
        "train_gan: pearson loss needs embed_dim == latent_dim");

  int64_t B = std::min<int64_t>(cfg.gan_batch_size, data.count());
  double lambda = cfg.use_pearson_loss ? cfg.lambda : 0.0;

  nn::Adam opt_d(D.params(), cfg.gan_learning_rate);
  nn::Adam opt_g(G.net().params(), cfg.gan_learning_rate);
  BatchCursor cursor(data.count(), rng);

  GanHistory history;
  Tensor empty;
  for (int64_t it = 0; it < cfg.gan_iterations; ++it) {
    // ---- discriminator update
    Tensor real = gather_batch(data, cursor.next(B));
    Tensor z = models::sample_latents(B, cfg.latent_dim, rng);
    Tensor fake = G.generate(z, true);

    nn::zero_params_grad(D.params());
    Tensor e_real = D.encode(real, true);
    Tensor logits_real = D.head_logits(e_real, true);
    Tensor p_real = models::sigmoid(logits_real);
    Tensor g_logits(p_real.shape);
    for (size_t i = 0; i < p_real.data.size(); ++i)
      g_logits.data[i] = (p_real.data[i] - 1.0f) / static_cast<float>(B);
    D.backward(g_logits, empty);

    Tensor e_fake = D.encode(fake, true);
    Tensor logits_fake = D.head_logits(e_fake, true);
    Tensor p_fake = models::sigmoid(logits_fake);
    std::vector<double> rho_d;
    Tensor g_reps_extra;
    if (cfg.use_pearson_loss)
      pearson_terms(z, e_fake, lambda, rho_d, g_reps_extra);
    for (size_t i = 0; i < p_fake.data.size(); ++i)
      g_logits.data[i] = p_fake.data[i] / static_cast<float>(B);
    D.backward(g_logits, g_reps_extra);
    opt_d.step();

    double d_loss = losses::discriminator_loss(
        p_real.data, p_fake.data, rho_d, lambda);

    // ---- generator update
    Tensor z2 = models::sample_latents(B, cfg.latent_dim, rng);
    Tensor fake2 = G.generate(z2, true);
    nn::zero_params_grad(D.params());
    nn::zero_params_grad(G.net().params());
    Tensor e2 = D.encode(fake2, true);
    Tensor logits2 = D.head_logits(e2, true);
    Tensor p2 = models::sigmoid(logits2);
    std::vector<double> rho_g;
    Tensor g_reps2;
    if (cfg.use_pearson_loss) pearson_terms(z2, e2, lambda, rho_g, g_reps2);
    for (size_t i = 0; i < p2.data.size(); ++i)
      g_logits.data[i] = (p2.data[i] - 1.0f) / static_cast<float>(B);
    Tensor g_images = D.backward(g_logits, g_reps2);
    G.backward(g_images);
    opt_g.step();

    double g_loss = losses::generator_loss(p2.data, rho_g, lambda);
    double mean_rho = 0.0;
    for (double r : rho_g) mean_rho += r;
    if (!rho_g.empty()) mean_rho /= static_cast<double>(rho_g.size());

    if (!std::isfinite(d_loss) || !std::isfinite(g_loss))
      throw DivergenceError("train_gan: non-finite loss", it);
    history.iters.push_back({it, d_loss, g_loss, mean_rho});
  }
  return history;
}

DistributionSet build_distribution_set(models::Generator& G, int64_t n, Rng& rng) {
  if (n < 1) throw ValidationError("build_distribution_set: n must be >= 1");
  DistributionSet out;
  const ImageShape& s = G.output_shape();
  out.images = Tensor({n, s.channels, s.height, s.width});
  out.source_generator_id = G.architecture_id();
  int64_t stride = s.pixels();
  for (int64_t b = 0; b < n; b += kEvalChunk) {
    int64_t cnt = std::min(kEvalChunk, n - b);
    Tensor z = models::sample_latents(cnt, G.latent_dim(), rng);
    Tensor imgs = G.generate(z, false);
    std::copy(imgs.data.begin(), imgs.data.end(),
              out.images.data.begin() + b * stride);
  }
  return out;
}

std::vector<float> init_center(nn::Sequential& encoder, const Tensor& images) {
  if (images.shape.empty() || images.shape[0] < 1)
    throw ValidationError("init_center: empty distribution set");
  Tensor reps = encode_chunked(encoder, images);
  int64_t n = reps.shape[0], d = reps.shape[1];
  std::vector<float> c(static_cast<size_t>(d), 0.0f);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < d; ++j)
      c[static_cast<size_t>(j)] += reps.ptr()[i * d + j] / static_cast<float>(n);
  for (float& v : c)
    if (std::fabs(v) < kCenterSnapEps)
      v = (v < 0.0f ? -1.0f : 1.0f) * static_cast<float>(kCenterSnapEps);
  return c;
}

double line_search_radius(const std::vector<double>& sq_dists, double nu) {
  if (sq_dists.empty()) throw ValidationError("line_search_radius: empty distances");
  if (!(nu > 0.0 && nu <= 1.0))
    throw ValidationError("line_search_radius: nu must lie in (0,1]");
  for (double d : sq_dists)
    if (d < 0.0 || !std::isfinite(d))
      throw ValidationError("line_search_radius: distances must be finite and >= 0");

  double m = static_cast<double>(sq_dists.size());
  std::vector<double> candidates = sq_dists;
  candidates.push_back(0.0);
  std::sort(candidates.begin(), candidates.end());

  double best_r2 = 0.0, best_obj = std::numeric_limits<double>::infinity();
  for (double r2 : candidates) {
    double viol = 0.0;
    for (double d : sq_dists)
      if (d > r2) viol += d - r2;
    double obj = r2 + viol / (nu * m);
    if (obj < best_obj - 1e-15) {  // ties keep the smaller radius
      best_obj = obj;
      best_r2 = r2;
    }
  }
  return std::sqrt(best_r2);
}

Tensor Hypersphere::encode(const Tensor& images) const {
  return encode_chunked(const_cast<nn::Sequential&>(encoder), images);
}

ArtifactManifest Hypersphere::save(const std::string& dir, double lambda,
                                   int64_t seed) const {
  Tensor c({static_cast<int64_t>(center.size())});
  c.data = center;
  std::map<std::string, const Tensor*> tensors;
  for (auto& [n, t] : encoder.named_tensors()) tensors["encoder." + n] = t;
  tensors["center"] = &c;
  std::map<std::string, double> scalars = {
      {"R", radius},
      {"nu", nu},
      {"lambda", lambda},
      {"n_z", static_cast<double>(spec.embed_dim)},
      {"seed", static_cast<double>(seed)},
      {"channels", static_cast<double>(spec.image_shape.channels)},
      {"height", static_cast<double>(spec.image_shape.height)},
      {"width", static_cast<double>(spec.image_shape.width)},
      {"base_width", static_cast<double>(spec.base_width)},
  };
  return save_artifact(dir, "hypersphere", tensors, scalars,
                       {{"architecture_id", spec.architecture_id}});
}

Hypersphere Hypersphere::load(const std::string& dir) {
  Artifact a = load_artifact(dir);
  if (a.manifest.kind != "hypersphere")
    throw IoError("load: '" + dir + "' holds a " + a.manifest.kind +
                  ", expected a hypersphere");
  Hypersphere h;
  h.spec.architecture_id = a.str("architecture_id");
  h.spec.image_shape = ImageShape{static_cast<int64_t>(a.scalar("channels")),
                                  static_cast<int64_t>(a.scalar("height")),
                                  static_cast<int64_t>(a.scalar("width"))};
  h.spec.base_width = static_cast<int64_t>(a.scalar("base_width"));
  h.spec.embed_dim = static_cast<int64_t>(a.scalar("n_z"));
  h.radius = a.scalar("R");
  h.nu = a.scalar("nu");
  if (h.radius < 0.0) throw IoError("load: negative radius in hypersphere");
  Rng dummy(0);
  h.encoder = models::build_encoder(h.spec, dummy);
  for (auto& [name, t] : h.encoder.named_tensors())
    t->data = a.tensor("encoder." + name).data;
  h.center = a.tensor("center").data;
  return h;
}

Hypersphere train_hypersphere(const models::Discriminator& D,
                              const DistributionSet& dprime,
                              const ExperimentConfig& cfg, Rng& rng) {
  // Private copy; the discriminator stays intact as the owner's secret.
  nn::Sequential encoder = models::build_encoder(D.spec(), rng);
  encoder.copy_state_from(D.encoder());
  return train_hypersphere_from(std::move(encoder), D.spec(), dprime, cfg, rng);
}

Hypersphere train_hypersphere_from(nn::Sequential encoder,
                                   const models::EncoderSpec& spec,
                                   const DistributionSet& dprime,
                                   const ExperimentConfig& cfg, Rng& rng) {
  if (dprime.count() < 1)
    throw ValidationError("train_hypersphere: empty distribution set");

  Hypersphere h;
  h.spec = spec;
  h.encoder = std::move(encoder);
  h.nu = cfg.nu;
  h.center = init_center(h.encoder, dprime.images);
  h.radius = 0.0;

  int64_t n = dprime.count();
  int64_t B = std::min<int64_t>(cfg.sphere_batch_size, n);
  nn::Sgd opt(h.encoder.params(), cfg.sphere_learning_rate);

  std::vector<int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  double prev_loss = std::numeric_limits<double>::infinity();
  int flat_epochs = 0;
  for (int64_t epoch = 1; epoch <= kSphereMaxEpochs; ++epoch) {
    rng.shuffle(order);
    for (int64_t b = 0; b < n; b += B) {
      int64_t cnt = std::min(B, n - b);
      Tensor batch({cnt, spec.image_shape.channels, spec.image_shape.height,
                    spec.image_shape.width});
      int64_t stride = spec.image_shape.pixels();
      for (int64_t i = 0; i < cnt; ++i)
        std::copy(dprime.images.data.begin() + order[b + i] * stride,
                  dprime.images.data.begin() + (order[b + i] + 1) * stride,
                  batch.data.begin() + i * stride);
      Tensor reps = h.encoder.forward(batch, true);
      Tensor g = losses::compactness_grad(reps, h.center, h.radius, h.nu);
      h.encoder.zero_grad();
      h.encoder.backward(g);
      opt.step();
    }

    if (epoch % cfg.radius_interval == 0) {
      Tensor reps = h.encode(dprime.images);
      h.radius = line_search_radius(squared_distances(reps, h.center), h.nu);
    }

    Tensor reps = h.encode(dprime.images);
    double loss =
        losses::compactness_loss(reps, h.center, h.radius, h.nu).total;
    if (!std::isfinite(loss))
      throw DivergenceError("train_hypersphere: non-finite loss", epoch);
    h.training_log.push_back({epoch, loss, h.radius});

    double rel = (prev_loss - loss) / std::max(std::fabs(prev_loss), 1e-12);
    if (std::isfinite(prev_loss) && rel < kSphereTolRel)
      ++flat_epochs;
    else
      flat_epochs = 0;
    prev_loss = loss;
    if (flat_epochs >= kSphereTolEpochs) break;
  }
  return h;
}

void write_gan_log(const std::string& path, const GanHistory& history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "iteration,d_loss,g_loss,mean_rho\n";
  for (const auto& r : history.iters)
    out << r.iteration << "," << r.d_loss << "," << r.g_loss << ","
        << r.mean_rho << "\n";
}

void write_sphere_log(const std::string& path,
                      const std::vector<SphereEpochRecord>& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "epoch,loss,R\n";
  for (const auto& r : log)
    out << r.epoch << "," << r.loss << "," << r.radius << "\n";
}

}  // namespace ganov::pipeline
