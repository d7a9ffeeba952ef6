#ifndef GANOV_NN_HPP
#define GANOV_NN_HPP

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ganov/rng.hpp"
#include "ganov/tensor.hpp"

namespace ganov::nn {

struct Param {
  std::string name;  // local name, e.g. "weight"
  Tensor value;
  Tensor grad;

  Param(std::string n, std::vector<int64_t> shape)
      : name(std::move(n)), value(shape), grad(std::move(shape)) {}
};

// One differentiable stage. forward(train=true) caches whatever backward
// needs; backward consumes the cache of the most recent forward and
// accumulates parameter gradients.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, bool train) = 0;
  virtual Tensor backward(const Tensor& gy) = 0;
  virtual void collect_params(std::vector<Param*>& out) {}
  // Non-learnable state that still belongs in artifacts (BN running stats,
  // spectral-norm u/sigma).
  virtual void collect_buffers(std::vector<std::pair<std::string, Tensor*>>& out) {}
};

class Linear : public Layer {
 public:
  Linear(int64_t in, int64_t out, Rng& rng);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;
  void collect_params(std::vector<Param*>& out) override;

  Param weight;  // (out, in)
  Param bias;    // (out)

 private:
  int64_t in_, out_;
  Tensor x_;
};

class Conv2d : public Layer {
 public:
  Conv2d(int64_t cin, int64_t cout, int64_t k, int64_t stride, int64_t pad,
         bool spectral_norm, Rng& rng);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;
  void collect_params(std::vector<Param*>& out) override;
  void collect_buffers(std::vector<std::pair<std::string, Tensor*>>& out) override;

  Param weight;  // (cout, cin*k*k)
  Param bias;    // (cout)

 private:
  Tensor effective_weight(bool train);

  int64_t cin_, cout_, k_, stride_, pad_;
  bool spectral_;
  Tensor u_;      // power-iteration left vector, (cout)
  Tensor sigma_;  // last spectral norm estimate, (1)
  float sigma_cached_ = 1.0f;

  std::vector<int64_t> xshape_;
  std::vector<Tensor> cols_;  // per-sample im2col matrices
};

class ConvTranspose2d : public Layer {
 public:
  ConvTranspose2d(int64_t cin, int64_t cout, int64_t k, int64_t stride,
                  int64_t pad, Rng& rng);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;
  void collect_params(std::vector<Param*>& out) override;

  Param weight;  // (cin, cout*k*k)
  Param bias;    // (cout)

 private:
  int64_t cin_, cout_, k_, stride_, pad_;
  Tensor x_;
  std::vector<int64_t> yshape_;
};

class BatchNorm2d : public Layer {
 public:
  explicit BatchNorm2d(int64_t channels, Rng& rng);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;
  void collect_params(std::vector<Param*>& out) override;
  void collect_buffers(std::vector<std::pair<std::string, Tensor*>>& out) override;

  Param gamma;
  Param beta;

 private:
  int64_t c_;
  Tensor running_mean_, running_var_;
  Tensor xhat_, invstd_;
  std::vector<int64_t> xshape_;
  static constexpr float kEps = 1e-5f;
  static constexpr float kMomentum = 0.1f;
};

class ReLU : public Layer {
 public:
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;

 private:
  Tensor mask_;
};

class LeakyReLU : public Layer {
 public:
  explicit LeakyReLU(float slope = 0.2f) : slope_(slope) {}
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;

 private:
  float slope_;
  Tensor mask_;
};

class Tanh : public Layer {
 public:
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;

 private:
  Tensor y_;
};

// (N, prod(dims)) <-> (N, dims...). Pure view change.
class Reshape : public Layer {
 public:
  explicit Reshape(std::vector<int64_t> dims) : dims_(std::move(dims)) {}
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;

 private:
  std::vector<int64_t> dims_;
  std::vector<int64_t> xshape_;
};

class Flatten : public Layer {
 public:
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;

 private:
  std::vector<int64_t> xshape_;
};

class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) = default;
  Sequential& operator=(Sequential&&) = default;

  void add(const std::string& name, std::unique_ptr<Layer> layer);

  Tensor forward(const Tensor& x, bool train);
  Tensor backward(const Tensor& gy);

  std::vector<Param*> params();
  void zero_grad();

  // Params and buffers keyed "layer.local" for artifacts and state copies.
  std::map<std::string, Tensor*> named_tensors();
  std::map<std::string, const Tensor*> named_tensors() const;

  // Copies values by name; both sides must expose identical name sets.
  void copy_state_from(const Sequential& other);

  size_t size() const { return layers_.size(); }

 private:
  std::vector<std::string> names_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

class Adam {
 public:
  Adam(std::vector<Param*> params, double lr, double beta1 = 0.5,
       double beta2 = 0.999, double eps = 1e-8);
  void step();

 private:
  std::vector<Param*> params_;
  double lr_, b1_, b2_, eps_;
  int64_t t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

class Sgd {
 public:
  Sgd(std::vector<Param*> params, double lr) : params_(std::move(params)), lr_(lr) {}
  void step();

 private:
  std::vector<Param*> params_;
  double lr_;
};

void zero_params_grad(const std::vector<Param*>& params);

}  // namespace ganov::nn

#endif
