#include "ganov/losses.hpp"

#include <cmath>

namespace ganov::losses {

namespace {

struct Centered {
  std::vector<double> a, b;  // mean-removed copies
  double na = 0.0, nb = 0.0;  // Euclidean norms
};

Centered center_pair(std::span<const float> z, std::span<const float> zhat) {
  if (z.size() != zhat.size())
    throw ValidationError("pearson: dimension mismatch (" +
                          std::to_string(z.size()) + " vs " +
                          std::to_string(zhat.size()) + ")");
  if (z.size() < 2)
    throw ValidationError("pearson: needs dimension >= 2");
  size_t n = z.size();
  Centered c;
  c.a.resize(n);
  c.b.resize(n);
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    ma += z[i];
    mb += zhat[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) {
    c.a[i] = z[i] - ma;
    c.b[i] = zhat[i] - mb;
    c.na += c.a[i] * c.a[i];
    c.nb += c.b[i] * c.b[i];
  }
  c.na = std::sqrt(c.na);
  c.nb = std::sqrt(c.nb);
  if (c.na == 0.0 || c.nb == 0.0)
    throw DegenerateInputError("pearson: zero-variance input vector");
  return c;
}

}  // namespace

double pearson_correlation(std::span<const float> z, std::span<const float> zhat) {
  Centered c = center_pair(z, zhat);
  double dot = 0.0;
  for (size_t i = 0; i < c.a.size(); ++i) dot += c.a[i] * c.b[i];
  // cov/(sigma*sigma) with population (1/n) statistics; the 1/n factors cancel.
  double rho = dot / (c.na * c.nb);
  if (rho > 1.0) rho = 1.0;
  if (rho < -1.0) rho = -1.0;
  return rho;
}

std::vector<float> pearson_grad(std::span<const float> z,
                                std::span<const float> zhat) {
  Centered c = center_pair(z, zhat);
  double dot = 0.0;
  for (size_t i = 0; i < c.a.size(); ++i) dot += c.a[i] * c.b[i];
  double rho = dot / (c.na * c.nb);
  // With a, b the centered vectors: d rho / d zhat = a/(|a||b|) - rho*b/|b|^2.
  // The centering projection is the identity here since both terms are
  // already mean-free.
  std::vector<float> g(c.a.size());
  for (size_t i = 0; i < c.a.size(); ++i)
    g[i] = static_cast<float>(c.a[i] / (c.na * c.nb) -
                              rho * c.b[i] / (c.nb * c.nb));
  return g;
}

CompactnessTerms compactness_loss(const Tensor& reps, std::span<const float> c,
                                  double radius, double nu) {
  if (reps.shape.size() != 2)
    throw ValidationError("compactness: reps must be (m,d)");
  if (static_cast<size_t>(reps.shape[1]) != c.size())
    throw ValidationError("compactness: center dimension mismatch");
  if (radius < 0.0) throw ValidationError("compactness: negative radius");
  if (!(nu > 0.0 && nu <= 1.0))
    throw ValidationError("compactness: nu must lie in (0,1]");
  int64_t m = reps.shape[0], d = reps.shape[1];
  if (m < 1) throw ValidationError("compactness: empty batch");

  double r2 = radius * radius;
  double viol = 0.0;
  for (int64_t i = 0; i < m; ++i) {
    const float* row = reps.ptr() + i * d;
    double dist2 = 0.0;
    for (int64_t j = 0; j < d; ++j) {
      double diff = static_cast<double>(row[j]) - c[static_cast<size_t>(j)];
      dist2 += diff * diff;
    }
    if (dist2 > r2) viol += dist2 - r2;
  }
  CompactnessTerms t;
  t.radius_sq = r2;
  t.violation_mean = viol / (nu * static_cast<double>(m));
  t.total = t.radius_sq + t.violation_mean;
  return t;
}

Tensor compactness_grad(const Tensor& reps, std::span<const float> c,
                        double radius, double nu) {
  // Validation shared with the loss.
  (void)compactness_loss(reps, c, radius, nu);
  int64_t m = reps.shape[0], d = reps.shape[1];
  double r2 = radius * radius;
  double scale = 2.0 / (nu * static_cast<double>(m));
  Tensor g(reps.shape);
  for (int64_t i = 0; i < m; ++i) {
    const float* row = reps.ptr() + i * d;
    double dist2 = 0.0;
    for (int64_t j = 0; j < d; ++j) {
      double diff = static_cast<double>(row[j]) - c[static_cast<size_t>(j)];
      dist2 += diff * diff;
    }
    if (dist2 > r2) {
      float* grow = g.ptr() + i * d;
      for (int64_t j = 0; j < d; ++j)
        grow[j] = static_cast<float>(
            scale * (static_cast<double>(row[j]) - c[static_cast<size_t>(j)]));
    }
  }
  return g;
}

namespace {

void check_probs(std::span<const float> p, const char* who) {
  for (float v : p)
    if (!(v > 0.0f && v < 1.0f))
      throw ValidationError(std::string(who) + ": probabilities must lie in (0,1)");
}

double mean_rho(std::span<const double> rho, size_t batch) {
  if (rho.empty()) return 0.0;
  if (rho.size() != batch)
    throw ValidationError("loss: rho count does not match batch size");
  double s = 0.0;
  for (double r : rho) {
    if (r < -1.0 - 1e-9 || r > 1.0 + 1e-9)
      throw ValidationError("loss: rho outside [-1,1]");
    s += r;
  }
  return s / static_cast<double>(rho.size());
}

}  // namespace

double generator_loss(std::span<const float> d_fake_probs,
                      std::span<const double> rho_values, double lambda) {
  if (lambda < 0.0) throw ValidationError("generator_loss: lambda must be >= 0");
  if (d_fake_probs.empty()) throw ValidationError("generator_loss: empty batch");
  check_probs(d_fake_probs, "generator_loss");
  double adv = 0.0;
  for (float p : d_fake_probs) adv += -std::log(static_cast<double>(p));
  adv /= static_cast<double>(d_fake_probs.size());
  return adv - lambda * mean_rho(rho_values, d_fake_probs.size());
}

double discriminator_loss(std::span<const float> d_real_probs,
                          std::span<const float> d_fake_probs,
                          std::span<const double> rho_values, double lambda) {
  if (lambda < 0.0)
    throw ValidationError("discriminator_loss: lambda must be >= 0");
  if (d_real_probs.empty() || d_fake_probs.empty())
    throw ValidationError("discriminator_loss: empty batch");
  check_probs(d_real_probs, "discriminator_loss");
  check_probs(d_fake_probs, "discriminator_loss");
  double real = 0.0, fake = 0.0;
  for (float p : d_real_probs) real += -std::log(static_cast<double>(p));
  for (float p : d_fake_probs) fake += -std::log(1.0 - static_cast<double>(p));
  real /= static_cast<double>(d_real_probs.size());
  fake /= static_cast<double>(d_fake_probs.size());
  return real + fake - lambda * mean_rho(rho_values, d_fake_probs.size());
}

}  // namespace ganov::losses
