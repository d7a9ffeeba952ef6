#include "ganov/nn.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "ganov/errors.hpp"

namespace ganov::nn {

using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapCM = Eigen::Map<const MatRM>;
using VecMap = Eigen::Map<Eigen::VectorXf>;
using VecCMap = Eigen::Map<const Eigen::VectorXf>;

namespace {

void init_normal(Tensor& t, Rng& rng, float mean, float stddev) {
  for (float& v : t.data) v = rng.normal(mean, stddev);
}

int64_t conv_out(int64_t in, int64_t k, int64_t s, int64_t p) {
  return (in + 2 * p - k) / s + 1;
}

// (C,H,W) sample -> (C*k*k, Ho*Wo) patch matrix, zero padding.
void im2col(const float* x, int64_t C, int64_t H, int64_t W, int64_t k,
            int64_t s, int64_t p, Tensor& out) {
  int64_t Ho = conv_out(H, k, s, p), Wo = conv_out(W, k, s, p);
  out.shape = {C * k * k, Ho * Wo};
  out.data.assign(static_cast<size_t>(C * k * k * Ho * Wo), 0.0f);
  float* o = out.ptr();
  for (int64_t c = 0; c < C; ++c)
    for (int64_t u = 0; u < k; ++u)
      for (int64_t v = 0; v < k; ++v) {
        int64_t row = (c * k + u) * k + v;
        float* orow = o + row * Ho * Wo;
        for (int64_t oy = 0; oy < Ho; ++oy) {
          int64_t iy = oy * s - p + u;
          if (iy < 0 || iy >= H) continue;
          const float* xrow = x + (c * H + iy) * W;
          for (int64_t ox = 0; ox < Wo; ++ox) {
            int64_t ix = ox * s - p + v;
            if (ix >= 0 && ix < W) orow[oy * Wo + ox] = xrow[ix];
          }
        }
      }
}

// Adjoint of im2col: scatter-adds patches back into the (C,H,W) sample.
void col2im(const Tensor& cols, int64_t C, int64_t H, int64_t W, int64_t k,
            int64_t s, int64_t p, float* x) {
  int64_t Ho = conv_out(H, k, s, p), Wo = conv_out(W, k, s, p);
  const float* o = cols.ptr();
  for (int64_t c = 0; c < C; ++c)
    for (int64_t u = 0; u < k; ++u)
      for (int64_t v = 0; v < k; ++v) {
        int64_t row = (c * k + u) * k + v;
        const float* orow = o + row * Ho * Wo;
        for (int64_t oy = 0; oy < Ho; ++oy) {
          int64_t iy = oy * s - p + u;
          if (iy < 0 || iy >= H) continue;
          float* xrow = x + (c * H + iy) * W;
          for (int64_t ox = 0; ox < Wo; ++ox) {
            int64_t ix = ox * s - p + v;
            if (ix >= 0 && ix < W) xrow[ix] += orow[oy * Wo + ox];
          }
        }
      }
}

void require_rank4(const Tensor& x, const char* who) {
  if (x.shape.size() != 4)
    throw ValidationError(std::string(who) + ": expected NCHW input, got " +
                          x.shape_str());
}

}  // namespace

// ---------------------------------------------------------------- Linear

Linear::Linear(int64_t in, int64_t out, Rng& rng)
    : weight("weight", {out, in}), bias("bias", {out}), in_(in), out_(out) {
  init_normal(weight.value, rng, 0.0f, 0.02f);
}

Tensor Linear::forward(const Tensor& x, bool train) {
  if (x.shape.size() != 2 || x.shape[1] != in_)
    throw ValidationError("linear: expected (N," + std::to_string(in_) +
                          "), got " + x.shape_str());
  int64_t N = x.shape[0];
  if (train) x_ = x;
  Tensor y({N, out_});
  MapCM Xm(x.ptr(), N, in_), Wm(weight.value.ptr(), out_, in_);
  MapM Ym(y.ptr(), N, out_);
  Ym.noalias() = Xm * Wm.transpose();
  Ym.rowwise() += VecCMap(bias.value.ptr(), out_).transpose();
  return y;
}

Tensor Linear::backward(const Tensor& gy) {
  int64_t N = gy.shape.at(0);
  MapCM Gm(gy.ptr(), N, out_), Xm(x_.ptr(), N, in_),
      Wm(weight.value.ptr(), out_, in_);
  MapM dWm(weight.grad.ptr(), out_, in_);
  dWm.noalias() += Gm.transpose() * Xm;
  VecMap(bias.grad.ptr(), out_) += Gm.colwise().sum().transpose();
  Tensor gx({N, in_});
  MapM(gx.ptr(), N, in_).noalias() = Gm * Wm;
  return gx;
}

void Linear::collect_params(std::vector<Param*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int64_t cin, int64_t cout, int64_t k, int64_t stride,
               int64_t pad, bool spectral_norm, Rng& rng)
    : weight("weight", {cout, cin * k * k}),
      bias("bias", {cout}),
      cin_(cin), cout_(cout), k_(k), stride_(stride), pad_(pad),
      spectral_(spectral_norm),
      u_({cout}), sigma_({1}) {
  init_normal(weight.value, rng, 0.0f, 0.02f);
  sigma_.data[0] = 1.0f;
  if (spectral_) {
    init_normal(u_, rng, 0.0f, 1.0f);
    VecMap u(u_.ptr(), cout_);
    u.normalize();
  }
}

Tensor Conv2d::effective_weight(bool train) {
  if (!spectral_) return weight.value;
  MapCM Wm(weight.value.ptr(), cout_, cin_ * k_ * k_);
  VecMap u(u_.ptr(), cout_);
  float sigma;
  if (train) {
    Eigen::VectorXf v = (Wm.transpose() * u).normalized();
    u = (Wm * v).normalized();
    sigma = u.dot(Wm * v);
  } else {
    Eigen::VectorXf v = (Wm.transpose() * u).normalized();
    sigma = u.dot(Wm * v);
  }
  if (sigma < 1e-12f) sigma = 1e-12f;
  sigma_cached_ = sigma;
  sigma_.data[0] = sigma;
  Tensor wn = weight.value;
  for (float& w : wn.data) w /= sigma;
  return wn;
}

Tensor Conv2d::forward(const Tensor& x, bool train) {
  require_rank4(x, "conv2d");
  if (x.shape[1] != cin_)
    throw ValidationError("conv2d: expected " + std::to_string(cin_) +
                          " input channels, got " + x.shape_str());
  int64_t N = x.shape[0], H = x.shape[2], W = x.shape[3];
  int64_t Ho = conv_out(H, k_, stride_, pad_), Wo = conv_out(W, k_, stride_, pad_);
  xshape_ = x.shape;
  Tensor weff = effective_weight(train);
  MapCM Wm(weff.ptr(), cout_, cin_ * k_ * k_);
  Tensor y({N, cout_, Ho, Wo});
  if (train) cols_.assign(static_cast<size_t>(N), Tensor{});
  Tensor scratch;
  for (int64_t n = 0; n < N; ++n) {
    Tensor& col = train ? cols_[static_cast<size_t>(n)] : scratch;
    im2col(x.ptr() + n * cin_ * H * W, cin_, H, W, k_, stride_, pad_, col);
    MapCM Cm(col.ptr(), cin_ * k_ * k_, Ho * Wo);
    MapM Ym(y.ptr() + n * cout_ * Ho * Wo, cout_, Ho * Wo);
    Ym.noalias() = Wm * Cm;
    Ym.colwise() += VecCMap(bias.value.ptr(), cout_);
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& gy) {
  int64_t N = xshape_[0], H = xshape_[2], W = xshape_[3];
  int64_t Ho = gy.shape.at(2), Wo = gy.shape.at(3);
  Tensor weff = spectral_ ? effective_weight(true) : weight.value;
  // Spectral norm backward treats sigma as a constant: grads w.r.t. the
  // normalized weight are scaled back by 1/sigma.
  MapCM Wm(weff.ptr(), cout_, cin_ * k_ * k_);
  MapM dWm(weight.grad.ptr(), cout_, cin_ * k_ * k_);
  VecMap db(bias.grad.ptr(), cout_);
  Tensor gx(xshape_);
  float inv_sigma = spectral_ ? 1.0f / sigma_cached_ : 1.0f;
  Tensor dcol({cin_ * k_ * k_, Ho * Wo});
  for (int64_t n = 0; n < N; ++n) {
    MapCM Gm(gy.ptr() + n * cout_ * Ho * Wo, cout_, Ho * Wo);
    MapCM Cm(cols_[static_cast<size_t>(n)].ptr(), cin_ * k_ * k_, Ho * Wo);
    dWm.noalias() += inv_sigma * (Gm * Cm.transpose());
    db += Gm.rowwise().sum();
    MapM(dcol.ptr(), cin_ * k_ * k_, Ho * Wo).noalias() = Wm.transpose() * Gm;
    col2im(dcol, cin_, H, W, k_, stride_, pad_, gx.ptr() + n * cin_ * H * W);
  }
  return gx;
}

void Conv2d::collect_params(std::vector<Param*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

void Conv2d::collect_buffers(std::vector<std::pair<std::string, Tensor*>>& out) {
  if (spectral_) {
    out.emplace_back("sn_u", &u_);
    out.emplace_back("sn_sigma", &sigma_);
  }
}

// ------------------------------------------------------- ConvTranspose2d

ConvTranspose2d::ConvTranspose2d(int64_t cin, int64_t cout, int64_t k,
                                 int64_t stride, int64_t pad, Rng& rng)
    : weight("weight", {cin, cout * k * k}),
      bias("bias", {cout}),
      cin_(cin), cout_(cout), k_(k), stride_(stride), pad_(pad) {
  init_normal(weight.value, rng, 0.0f, 0.02f);
}

Tensor ConvTranspose2d::forward(const Tensor& x, bool train) {
  require_rank4(x, "conv_transpose2d");
  if (x.shape[1] != cin_)
    throw ValidationError("conv_transpose2d: expected " + std::to_string(cin_) +
                          " input channels, got " + x.shape_str());
  int64_t N = x.shape[0], Hi = x.shape[2], Wi = x.shape[3];
  int64_t Ho = (Hi - 1) * stride_ - 2 * pad_ + k_;
  int64_t Wo = (Wi - 1) * stride_ - 2 * pad_ + k_;
  if (train) x_ = x;
  yshape_ = {N, cout_, Ho, Wo};
  Tensor y(yshape_);
  MapCM Wm(weight.value.ptr(), cin_, cout_ * k_ * k_);
  Tensor cols({cout_ * k_ * k_, Hi * Wi});
  for (int64_t n = 0; n < N; ++n) {
    MapCM Xm(x.ptr() + n * cin_ * Hi * Wi, cin_, Hi * Wi);
    MapM Cm(cols.ptr(), cout_ * k_ * k_, Hi * Wi);
    Cm.noalias() = Wm.transpose() * Xm;
    float* yn = y.ptr() + n * cout_ * Ho * Wo;
    col2im(cols, cout_, Ho, Wo, k_, stride_, pad_, yn);
    for (int64_t c = 0; c < cout_; ++c) {
      float b = bias.value.data[static_cast<size_t>(c)];
      for (int64_t i = 0; i < Ho * Wo; ++i) yn[c * Ho * Wo + i] += b;
    }
  }
  return y;
}

Tensor ConvTranspose2d::backward(const Tensor& gy) {
  int64_t N = yshape_[0], Ho = yshape_[2], Wo = yshape_[3];
  int64_t Hi = x_.shape[2], Wi = x_.shape[3];
  MapCM Wm(weight.value.ptr(), cin_, cout_ * k_ * k_);
  MapM dWm(weight.grad.ptr(), cin_, cout_ * k_ * k_);
  Tensor gx({N, cin_, Hi, Wi});
  Tensor gcols;
  for (int64_t n = 0; n < N; ++n) {
    const float* gn = gy.ptr() + n * cout_ * Ho * Wo;
    im2col(gn, cout_, Ho, Wo, k_, stride_, pad_, gcols);
    MapCM Gc(gcols.ptr(), cout_ * k_ * k_, Hi * Wi);
    MapCM Xm(x_.ptr() + n * cin_ * Hi * Wi, cin_, Hi * Wi);
    dWm.noalias() += Xm * Gc.transpose();
    MapM(gx.ptr() + n * cin_ * Hi * Wi, cin_, Hi * Wi).noalias() = Wm * Gc;
    for (int64_t c = 0; c < cout_; ++c) {
      float s = 0.0f;
      for (int64_t i = 0; i < Ho * Wo; ++i) s += gn[c * Ho * Wo + i];
      bias.grad.data[static_cast<size_t>(c)] += s;
    }
  }
  return gx;
}

void ConvTranspose2d::collect_params(std::vector<Param*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

// ----------------------------------------------------------- BatchNorm2d

BatchNorm2d::BatchNorm2d(int64_t channels, Rng& rng)
    : gamma("gamma", {channels}),
      beta("beta", {channels}),
      c_(channels),
      running_mean_({channels}),
      running_var_({channels}) {
  init_normal(gamma.value, rng, 1.0f, 0.02f);
  running_var_.fill(1.0f);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool train) {
  require_rank4(x, "batchnorm2d");
  int64_t N = x.shape[0], H = x.shape[2], W = x.shape[3];
  int64_t m = N * H * W;
  xshape_ = x.shape;
  Tensor y(x.shape);
  if (train) {
    xhat_ = Tensor(x.shape);
    invstd_ = Tensor({c_});
  }
  for (int64_t c = 0; c < c_; ++c) {
    float mean, var;
    if (train) {
      double s = 0.0, s2 = 0.0;
      for (int64_t n = 0; n < N; ++n) {
        const float* p = x.ptr() + (n * c_ + c) * H * W;
        for (int64_t i = 0; i < H * W; ++i) {
          s += p[i];
          s2 += static_cast<double>(p[i]) * p[i];
        }
      }
      mean = static_cast<float>(s / m);
      var = static_cast<float>(s2 / m - (s / m) * (s / m));
      if (var < 0.0f) var = 0.0f;
      running_mean_.data[c] = (1 - kMomentum) * running_mean_.data[c] + kMomentum * mean;
      running_var_.data[c] = (1 - kMomentum) * running_var_.data[c] + kMomentum * var;
    } else {
      mean = running_mean_.data[static_cast<size_t>(c)];
      var = running_var_.data[static_cast<size_t>(c)];
    }
    float istd = 1.0f / std::sqrt(var + kEps);
    float g = gamma.value.data[static_cast<size_t>(c)];
    float b = beta.value.data[static_cast<size_t>(c)];
    if (train) invstd_.data[static_cast<size_t>(c)] = istd;
    for (int64_t n = 0; n < N; ++n) {
      const float* p = x.ptr() + (n * c_ + c) * H * W;
      float* q = y.ptr() + (n * c_ + c) * H * W;
      float* h = train ? xhat_.ptr() + (n * c_ + c) * H * W : nullptr;
      for (int64_t i = 0; i < H * W; ++i) {
        float xh = (p[i] - mean) * istd;
        if (h) h[i] = xh;
        q[i] = g * xh + b;
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& gy) {
  int64_t N = xshape_[0], H = xshape_[2], W = xshape_[3];
  int64_t m = N * H * W;
  Tensor gx(xshape_);
  for (int64_t c = 0; c < c_; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (int64_t n = 0; n < N; ++n) {
      const float* g = gy.ptr() + (n * c_ + c) * H * W;
      const float* h = xhat_.ptr() + (n * c_ + c) * H * W;
      for (int64_t i = 0; i < H * W; ++i) {
        sum_g += g[i];
        sum_gx += static_cast<double>(g[i]) * h[i];
      }
    }
    gamma.grad.data[static_cast<size_t>(c)] += static_cast<float>(sum_gx);
    beta.grad.data[static_cast<size_t>(c)] += static_cast<float>(sum_g);
    float gval = gamma.value.data[static_cast<size_t>(c)];
    float istd = invstd_.data[static_cast<size_t>(c)];
    float scale = gval * istd / static_cast<float>(m);
    for (int64_t n = 0; n < N; ++n) {
      const float* g = gy.ptr() + (n * c_ + c) * H * W;
      const float* h = xhat_.ptr() + (n * c_ + c) * H * W;
      float* o = gx.ptr() + (n * c_ + c) * H * W;
      for (int64_t i = 0; i < H * W; ++i)
        o[i] = scale * (static_cast<float>(m) * g[i] -
                        static_cast<float>(sum_g) -
                        h[i] * static_cast<float>(sum_gx));
    }
  }
  return gx;
}

void BatchNorm2d::collect_params(std::vector<Param*>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

void BatchNorm2d::collect_buffers(
    std::vector<std::pair<std::string, Tensor*>>& out) {
  out.emplace_back("running_mean", &running_mean_);
  out.emplace_back("running_var", &running_var_);
}

// ----------------------------------------------------------- activations

Tensor ReLU::forward(const Tensor& x, bool train) {
  Tensor y = x;
  if (train) {
    mask_ = Tensor(x.shape);
    for (size_t i = 0; i < y.data.size(); ++i)
      mask_.data[i] = x.data[i] > 0 ? 1.0f : 0.0f;
  }
  for (float& v : y.data)
    if (v < 0) v = 0;
  return y;
}

Tensor ReLU::backward(const Tensor& gy) {
  Tensor gx = gy;
  for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] *= mask_.data[i];
  return gx;
}

Tensor LeakyReLU::forward(const Tensor& x, bool train) {
  Tensor y = x;
  if (train) {
    mask_ = Tensor(x.shape);
    for (size_t i = 0; i < y.data.size(); ++i)
      mask_.data[i] = x.data[i] > 0 ? 1.0f : slope_;
  }
  for (float& v : y.data)
    if (v < 0) v *= slope_;
  return y;
}

Tensor LeakyReLU::backward(const Tensor& gy) {
  Tensor gx = gy;
  for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] *= mask_.data[i];
  return gx;
}

Tensor Tanh::forward(const Tensor& x, bool train) {
  Tensor y = x;
  for (float& v : y.data) v = std::tanh(v);
  if (train) y_ = y;
  return y;
}

Tensor Tanh::backward(const Tensor& gy) {
  Tensor gx = gy;
  for (size_t i = 0; i < gx.data.size(); ++i)
    gx.data[i] *= 1.0f - y_.data[i] * y_.data[i];
  return gx;
}

Tensor Reshape::forward(const Tensor& x, bool train) {
  xshape_ = x.shape;
  std::vector<int64_t> s = {x.shape.at(0)};
  s.insert(s.end(), dims_.begin(), dims_.end());
  return x.reshaped(std::move(s));
}

Tensor Reshape::backward(const Tensor& gy) { return gy.reshaped(xshape_); }

Tensor Flatten::forward(const Tensor& x, bool train) {
  xshape_ = x.shape;
  return x.reshaped({x.shape.at(0), x.numel() / x.shape.at(0)});
}

Tensor Flatten::backward(const Tensor& gy) { return gy.reshaped(xshape_); }

// ------------------------------------------------------------ Sequential

void Sequential::add(const std::string& name, std::unique_ptr<Layer> layer) {
  names_.push_back(name);
  layers_.push_back(std::move(layer));
}

Tensor Sequential::forward(const Tensor& x, bool train) {
  Tensor h = x;
  for (auto& l : layers_) h = l->forward(h, train);
  return h;
}

Tensor Sequential::backward(const Tensor& gy) {
  Tensor g = gy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
    g = (*it)->backward(g);
  return g;
}

std::vector<Param*> Sequential::params() {
  std::vector<Param*> out;
  for (auto& l : layers_) l->collect_params(out);
  return out;
}

void Sequential::zero_grad() { zero_params_grad(params()); }

std::map<std::string, Tensor*> Sequential::named_tensors() {
  std::map<std::string, Tensor*> out;
  for (size_t i = 0; i < layers_.size(); ++i) {
    std::vector<Param*> ps;
    layers_[i]->collect_params(ps);
    for (Param* p : ps) out[names_[i] + "." + p->name] = &p->value;
    std::vector<std::pair<std::string, Tensor*>> bs;
    layers_[i]->collect_buffers(bs);
    for (auto& [n, t] : bs) out[names_[i] + "." + n] = t;
  }
  return out;
}

std::map<std::string, const Tensor*> Sequential::named_tensors() const {
  auto mut = const_cast<Sequential*>(this)->named_tensors();
  std::map<std::string, const Tensor*> out;
  for (auto& [n, t] : mut) out[n] = t;
  return out;
}

void Sequential::copy_state_from(const Sequential& other) {
  auto dst = named_tensors();
  auto src = other.named_tensors();
  if (dst.size() != src.size())
    throw ValidationError("copy_state_from: mismatched layer state");
  for (auto& [name, t] : dst) {
    auto it = src.find(name);
    if (it == src.end())
      throw ValidationError("copy_state_from: missing tensor '" + name + "'");
    if (it->second->shape != t->shape)
      throw ValidationError("copy_state_from: shape mismatch on '" + name + "'");
    t->data = it->second->data;
  }
}

// ------------------------------------------------------------ optimizers

void zero_params_grad(const std::vector<Param*>& params) {
  for (Param* p : params) p->grad.fill(0.0f);
}

Adam::Adam(std::vector<Param*> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
  for (Param* p : params_) {
    m_.emplace_back(p->value.data.size(), 0.0f);
    v_.emplace_back(p->value.data.size(), 0.0f);
  }
}

void Adam::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(b1_, t_);
  double bc2 = 1.0 - std::pow(b2_, t_);
  for (size_t i = 0; i < params_.size(); ++i) {
    Param* p = params_[i];
    for (size_t j = 0; j < p->value.data.size(); ++j) {
      float g = p->grad.data[j];
      m_[i][j] = static_cast<float>(b1_ * m_[i][j] + (1 - b1_) * g);
      v_[i][j] = static_cast<float>(b2_ * v_[i][j] + (1 - b2_) * g * g);
      double mhat = m_[i][j] / bc1;
      double vhat = v_[i][j] / bc2;
      p->value.data[j] -=
          static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps_));
    }
  }
}

void Sgd::step() {
  for (Param* p : params_)
    for (size_t j = 0; j < p->value.data.size(); ++j)
      p->value.data[j] -= static_cast<float>(lr_) * p->grad.data[j];
}

}  // namespace ganov::nn
