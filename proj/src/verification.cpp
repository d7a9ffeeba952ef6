#include "ganov/verification.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "ganov/errors.hpp"

namespace ganov::verification {

std::string Verdict::to_json() const {
  nlohmann::json j;
  j["auc"] = auc;
  j["threshold"] = threshold;
  j["is_pirated"] = is_pirated;
  j["reference_size"] = reference_size;
  j["suspect_size"] = suspect_size;
  j["replicate_aucs"] = replicate_aucs;
  return j.dump(2);
}

double proximity_score(const pipeline::Hypersphere& h, const Tensor& image) {
  Tensor batch = image;
  if (batch.shape.size() == 3)
    batch.shape = {1, image.shape[0], image.shape[1], image.shape[2]};
  ScoreBatch sb = proximity_scores(h, batch, ScoreOrigin::suspect);
  return sb.scores.at(0);
}

ScoreBatch proximity_scores(const pipeline::Hypersphere& h, const Tensor& images,
                            ScoreOrigin origin) {
  if (images.shape.size() != 4)
    throw ValidationError("proximity_scores: expected NCHW images, got " +
                          images.shape_str());
  Tensor reps = h.encode(images);
  int64_t n = reps.shape[0], d = reps.shape[1];
  if (static_cast<size_t>(d) != h.center.size())
    throw ValidationError("proximity_scores: center dimension mismatch");
  double r2 = h.radius * h.radius;
  ScoreBatch out;
  out.origin = origin;
  out.scores.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    double dist2 = 0.0;
    for (int64_t j = 0; j < d; ++j) {
      double diff = static_cast<double>(reps.ptr()[i * d + j]) - h.center[j];
      dist2 += diff * diff;
    }
    out.scores[static_cast<size_t>(i)] = dist2 - r2;
  }
  return out;
}

double auc(const ScoreBatch& reference, const ScoreBatch& suspect) {
  if (reference.scores.empty() || suspect.scores.empty())
    throw ValidationError("auc: empty score batch");
  std::vector<double> ref = reference.scores;
  std::sort(ref.begin(), ref.end());
  double u = 0.0;
  for (double s : suspect.scores) {
    auto lo = std::lower_bound(ref.begin(), ref.end(), s);
    auto hi = std::upper_bound(ref.begin(), ref.end(), s);
    u += static_cast<double>(lo - ref.begin());  // strictly smaller refs
    u += 0.5 * static_cast<double>(hi - lo);     // ties
  }
  return u / (static_cast<double>(ref.size()) *
              static_cast<double>(suspect.scores.size()));
}

Verdict verify(const pipeline::Hypersphere& h, const Tensor& reference_images,
               const Tensor& suspect_images, double threshold) {
  ScoreBatch ref = proximity_scores(h, reference_images, ScoreOrigin::reference);
  ScoreBatch sus = proximity_scores(h, suspect_images, ScoreOrigin::suspect);
  Verdict v;
  v.auc = auc(ref, sus);
  v.threshold = threshold;
  v.is_pirated = v.auc < threshold;
  v.reference_size = ref.batch_size();
  v.suspect_size = sus.batch_size();
  return v;
}

namespace {

constexpr double kSsimK1 = 0.01;
constexpr double kSsimK2 = 0.03;
constexpr double kSsimRange = 1.0;
constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

std::vector<double> gaussian_window(int side) {
  std::vector<double> w(static_cast<size_t>(side * side));
  double sum = 0.0, half = (side - 1) / 2.0;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      double dy = y - half, dx = x - half;
      double v = std::exp(-(dx * dx + dy * dy) / (2.0 * kSsimSigma * kSsimSigma));
      w[static_cast<size_t>(y * side + x)] = v;
      sum += v;
    }
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
  if (a.shape.size() != 3 || !same_shape(a, b))
    throw ValidationError("ssim: expects two (C,H,W) images of equal shape");
  int64_t C = a.shape[0], H = a.shape[1], W = a.shape[2];
  int side = static_cast<int>(std::min<int64_t>({kSsimWindow, H, W}));
  std::vector<double> win = gaussian_window(side);
  const double c1 = (kSsimK1 * kSsimRange) * (kSsimK1 * kSsimRange);
  const double c2 = (kSsimK2 * kSsimRange) * (kSsimK2 * kSsimRange);

  double acc = 0.0;
  int64_t count = 0;
  for (int64_t c = 0; c < C; ++c) {
    const float* pa = a.ptr() + c * H * W;
    const float* pb = b.ptr() + c * H * W;
    for (int64_t y0 = 0; y0 + side <= H; ++y0)
      for (int64_t x0 = 0; x0 + side <= W; ++x0) {
        double mu1 = 0, mu2 = 0, s11 = 0, s22 = 0, s12 = 0;
        for (int yy = 0; yy < side; ++yy)
          for (int xx = 0; xx < side; ++xx) {
            double w = win[static_cast<size_t>(yy * side + xx)];
            // remap [-1,1] pixels to the [0,1] dynamic range
            double v1 = (pa[(y0 + yy) * W + x0 + xx] + 1.0) * 0.5;
            double v2 = (pb[(y0 + yy) * W + x0 + xx] + 1.0) * 0.5;
            mu1 += w * v1;
            mu2 += w * v2;
            s11 += w * v1 * v1;
            s22 += w * v2 * v2;
            s12 += w * v1 * v2;
          }
        double var1 = s11 - mu1 * mu1;
        double var2 = s22 - mu2 * mu2;
        double cov = s12 - mu1 * mu2;
        double num = (2 * mu1 * mu2 + c1) * (2 * cov + c2);
        double den = (mu1 * mu1 + mu2 * mu2 + c1) * (var1 + var2 + c2);
        acc += num / den;
        ++count;
      }
  }
  return acc / static_cast<double>(count);
}

double mean_ssim(const Tensor& batch_a, const Tensor& batch_b) {
  if (batch_a.shape.size() != 4 || !same_shape(batch_a, batch_b))
    throw ValidationError("mean_ssim: expects two equal NCHW batches");
  int64_t n = batch_a.shape[0];
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i)
    acc += ssim(batch_a.slice0(i, 1).reshaped(
                    {batch_a.shape[1], batch_a.shape[2], batch_a.shape[3]}),
                batch_b.slice0(i, 1).reshaped(
                    {batch_b.shape[1], batch_b.shape[2], batch_b.shape[3]}));
  return acc / static_cast<double>(n);
}

}  // namespace ganov::verification
