#include "ganov/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "ganov/errors.hpp"

namespace ganov::attacks {

void TransformationSpec::validate() const {
  switch (kind) {
    case TransformKind::noise:
      if (magnitude < 0.0) throw ValidationError("noise: epsilon must be >= 0");
      break;
    case TransformKind::blur:
      if (blur_kernel < 1 || blur_kernel % 2 == 0)
        throw ValidationError("blur: kernel must be odd and >= 1");
      if (blur_sigma <= 0.0) throw ValidationError("blur: sigma must be > 0");
      break;
    case TransformKind::jpeg:
      if (magnitude < 1.0 || magnitude > 100.0)
        throw ValidationError("jpeg: quality must lie in [1,100]");
      break;
    case TransformKind::crop:
      if (magnitude < 0.0 || magnitude >= 0.5)
        throw ValidationError("crop: fraction must lie in [0,0.5)");
      break;
  }
}

TransformationSpec TransformationSpec::parse(const std::string& text) {
  size_t colon = text.find(':');
  std::string name = text.substr(0, colon);
  std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
  TransformationSpec s;
  auto to_real = [&](const std::string& v) {
    try {
      return std::stod(v);
    } catch (const std::exception&) {
      throw ValidationError("transform: bad magnitude '" + v + "'");
    }
  };
  if (name == "noise") {
    s.kind = TransformKind::noise;
    s.magnitude = args.empty() ? 0.05 : to_real(args);
  } else if (name == "blur") {
    s.kind = TransformKind::blur;
    if (!args.empty()) {
      size_t comma = args.find(',');
      if (comma == std::string::npos)
        throw ValidationError("transform: blur expects kernel,sigma");
      s.blur_kernel = static_cast<int64_t>(to_real(args.substr(0, comma)));
      s.blur_sigma = to_real(args.substr(comma + 1));
    }
  } else if (name == "jpeg") {
    s.kind = TransformKind::jpeg;
    s.magnitude = args.empty() ? 60.0 : to_real(args);
  } else if (name == "crop") {
    s.kind = TransformKind::crop;
    s.magnitude = args.empty() ? 0.15 : to_real(args);
  } else {
    throw ValidationError("transform: unknown kind '" + name +
                          "' (expected noise|blur|jpeg|crop)");
  }
  s.validate();
  return s;
}

std::string TransformationSpec::describe() const {
  std::ostringstream out;
  switch (kind) {
    case TransformKind::noise: out << "noise:" << magnitude; break;
    case TransformKind::blur: out << "blur:" << blur_kernel << "," << blur_sigma; break;
    case TransformKind::jpeg: out << "jpeg:" << magnitude; break;
    case TransformKind::crop: out << "crop:" << magnitude; break;
  }
  return out.str();
}

models::Generator prune_generator(const models::Generator& G, double rate,
                                  int64_t seed) {
  if (rate < 0.0 || rate > 1.0)
    throw ValidationError("prune: rate must lie in [0,1]");
  Rng dummy(0);
  models::Generator out(G.architecture_id(), G.latent_dim(), G.output_shape(),
                        G.base_width(), dummy);
  out.net().copy_state_from(G.net());

  std::vector<nn::Param*> params = out.net().params();
  int64_t total = 0;
  for (nn::Param* p : params) total += p->value.numel();
  int64_t target = static_cast<int64_t>(rate * static_cast<double>(total));

  std::vector<int64_t> idx(static_cast<size_t>(total));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(static_cast<uint64_t>(seed));
  rng.shuffle(idx);
  idx.resize(static_cast<size_t>(target));
  std::sort(idx.begin(), idx.end());

  size_t cursor = 0;
  int64_t base = 0;
  for (nn::Param* p : params) {
    int64_t end = base + p->value.numel();
    while (cursor < idx.size() && idx[cursor] < end)
      p->value.data[static_cast<size_t>(idx[cursor++] - base)] = 0.0f;
    base = end;
  }
  return out;
}

namespace {

void clamp_unit(Tensor& t) {
  for (float& v : t.data) v = std::clamp(v, -1.0f, 1.0f);
}

Tensor add_noise(const Tensor& images, double eps, int64_t seed) {
  Tensor out = images;
  Rng rng(static_cast<uint64_t>(seed));
  for (float& v : out.data) v += static_cast<float>(eps) * rng.normal();
  clamp_unit(out);
  return out;
}

// Separable Gaussian with reflect padding (border pixel not repeated).
Tensor gaussian_blur(const Tensor& images, int64_t ks, double sigma) {
  int64_t half = ks / 2;
  std::vector<float> kernel(static_cast<size_t>(ks));
  double sum = 0.0;
  for (int64_t i = 0; i < ks; ++i) {
    double d = static_cast<double>(i - half);
    kernel[static_cast<size_t>(i)] =
        static_cast<float>(std::exp(-d * d / (2.0 * sigma * sigma)));
    sum += kernel[static_cast<size_t>(i)];
  }
  for (float& k : kernel) k = static_cast<float>(k / sum);

  int64_t N = images.shape[0], C = images.shape[1], H = images.shape[2],
          W = images.shape[3];
  auto reflect = [](int64_t i, int64_t n) {
    while (i < 0 || i >= n) {
      if (i < 0) i = -i - 1;
      if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
  };
  Tensor tmp(images.shape), out(images.shape);
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const float* src = images.ptr() + nc * H * W;
    float* mid = tmp.ptr() + nc * H * W;
    float* dst = out.ptr() + nc * H * W;
    for (int64_t y = 0; y < H; ++y)
      for (int64_t x = 0; x < W; ++x) {
        float acc = 0.0f;
        for (int64_t t = -half; t <= half; ++t)
          acc += kernel[static_cast<size_t>(t + half)] *
                 src[y * W + reflect(x + t, W)];
        mid[y * W + x] = acc;
      }
    for (int64_t y = 0; y < H; ++y)
      for (int64_t x = 0; x < W; ++x) {
        float acc = 0.0f;
        for (int64_t t = -half; t <= half; ++t)
          acc += kernel[static_cast<size_t>(t + half)] *
                 mid[reflect(y + t, H) * W + x];
        dst[y * W + x] = acc;
      }
  }
  clamp_unit(out);
  return out;
}

cv::Mat tensor_to_mat(const Tensor& img) {
  int64_t C = img.shape[0], H = img.shape[1], W = img.shape[2];
  cv::Mat m(static_cast<int>(H), static_cast<int>(W),
            C == 1 ? CV_8UC1 : CV_8UC3);
  for (int64_t y = 0; y < H; ++y) {
    uint8_t* row = m.ptr<uint8_t>(static_cast<int>(y));
    for (int64_t x = 0; x < W; ++x)
      for (int64_t c = 0; c < C; ++c) {
        float v = (img.data[(c * H + y) * W + x] + 1.0f) * 127.5f;
        row[x * C + (C - 1 - c)] =
            static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
  }
  return m;
}

void mat_to_tensor_into(const cv::Mat& m, Tensor& img) {
  int64_t C = img.shape[0], H = img.shape[1], W = img.shape[2];
  for (int64_t y = 0; y < H; ++y) {
    const uint8_t* row = m.ptr<uint8_t>(static_cast<int>(y));
    for (int64_t x = 0; x < W; ++x)
      for (int64_t c = 0; c < C; ++c)
        img.data[(c * H + y) * W + x] =
            static_cast<float>(row[x * C + (C - 1 - c)]) / 127.5f - 1.0f;
  }
}

Tensor jpeg_roundtrip(const Tensor& images, int quality) {
  Tensor out = images;
  int64_t N = images.shape[0];
  std::vector<int> params = {cv::IMWRITE_JPEG_QUALITY, quality};
  for (int64_t n = 0; n < N; ++n) {
    Tensor img = images.slice0(n, 1).reshaped(
        {images.shape[1], images.shape[2], images.shape[3]});
    std::vector<uint8_t> buf;
    cv::imencode(".jpg", tensor_to_mat(img), buf, params);
    cv::Mat dec = cv::imdecode(buf, images.shape[1] == 1 ? cv::IMREAD_GRAYSCALE
                                                         : cv::IMREAD_COLOR);
    Tensor dst({images.shape[1], images.shape[2], images.shape[3]});
    mat_to_tensor_into(dec, dst);
    std::copy(dst.data.begin(), dst.data.end(),
              out.data.begin() + n * dst.numel());
  }
  return out;
}

Tensor crop_resize(const Tensor& images, double fraction) {
  int64_t N = images.shape[0], C = images.shape[1], H = images.shape[2],
          W = images.shape[3];
  int64_t by = static_cast<int64_t>(fraction * static_cast<double>(H));
  int64_t bx = static_cast<int64_t>(fraction * static_cast<double>(W));
  if (H - 2 * by < 1 || W - 2 * bx < 1)
    throw ValidationError("crop: fraction leaves no interior pixels");
  Tensor out = images;
  for (int64_t n = 0; n < N; ++n) {
    Tensor img = images.slice0(n, 1).reshaped({C, H, W});
    cv::Mat m = tensor_to_mat(img);
    cv::Mat interior = m(cv::Rect(static_cast<int>(bx), static_cast<int>(by),
                                  static_cast<int>(W - 2 * bx),
                                  static_cast<int>(H - 2 * by)));
    cv::Mat resized;
    cv::resize(interior, resized,
               cv::Size(static_cast<int>(W), static_cast<int>(H)), 0, 0,
               cv::INTER_LINEAR);
    Tensor dst({C, H, W});
    mat_to_tensor_into(resized, dst);
    std::copy(dst.data.begin(), dst.data.end(),
              out.data.begin() + n * dst.numel());
  }
  return out;
}

}  // namespace

Tensor transform_images(const Tensor& images, const TransformationSpec& spec) {
  if (images.shape.size() != 4)
    throw ValidationError("transform_images: expected NCHW batch, got " +
                          images.shape_str());
  spec.validate();
  switch (spec.kind) {
    case TransformKind::noise:
      return add_noise(images, spec.magnitude, spec.seed);
    case TransformKind::blur:
      return gaussian_blur(images, spec.blur_kernel, spec.blur_sigma);
    case TransformKind::jpeg:
      return jpeg_roundtrip(images, static_cast<int>(spec.magnitude));
    case TransformKind::crop:
      return crop_resize(images, spec.magnitude);
  }
  throw ValidationError("transform_images: unreachable");
}

pipeline::Hypersphere ambiguity_train(const pipeline::DistributionSet& dprime,
                                      const ExperimentConfig& cfg, Rng& rng) {
  models::EncoderSpec spec{cfg.architecture_id, cfg.image_shape, cfg.base_width,
                           cfg.latent_dim};
  nn::Sequential encoder = models::build_encoder(spec, rng);
  return pipeline::train_hypersphere_from(std::move(encoder), spec, dprime, cfg,
                                          rng);
}

}  // namespace ganov::attacks
