#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lfdepth/net/kernels.hpp"
#include "lfdepth/net/tensor.hpp"

namespace lfd::net {

enum class LayerKind : std::uint8_t {
  Conv = 0,
  BatchNorm = 1,
  ReLU = 2,
  FullyConnected = 3,
  TransposedConv = 4,
  Reshape = 5,
};

std::string to_string(LayerKind k);

struct LayerSpec {
  LayerKind kind = LayerKind::ReLU;
  int in_channels = 0;   // conv, tconv, batchnorm
  int out_channels = 0;  // conv, tconv; reshape target channels
  int kernel = 3;
  int stride = 1;
  int padding = 0;
  int output_padding = 0;  // tconv only
  int in_features = 0;     // fc
  int out_features = 0;    // fc
  int out_h = 0;           // reshape
  int out_w = 0;           // reshape

  static LayerSpec conv(int in_c, int out_c, int kernel, int stride, int padding);
  static LayerSpec transposed_conv(int in_c, int out_c, int kernel, int stride, int padding, int output_padding);
  static LayerSpec batchnorm(int channels);
  static LayerSpec relu();
  static LayerSpec fully_connected(int in_features, int out_features);
  static LayerSpec reshape(int c, int h, int w);

  bool operator==(const LayerSpec&) const = default;
};

/// Per-layer state saved by a training forward for the backward pass.
template <typename T>
struct LayerCache {
  int n = 0;
  Buffer<T> a;  // layer-specific (im2col columns, normalized values, input)
  Buffer<T> b;  // layer-specific (inverse std, relu mask)
};

/// Minimal sequential layer. Eval forwards are const; training forwards fill a cache
/// (and batchnorm updates its running statistics).
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual Shape output_shape(const Shape& in) const = 0;  // throws ShapeMismatch
  virtual void forward(const Tensor<T>& x, Tensor<T>& y) const = 0;
  virtual void forward_train(const Tensor<T>& x, Tensor<T>& y, LayerCache<T>& cache) = 0;
  /// Writes dx (if non-null) and the gradients of trainable arrays, aligned with params().
  virtual void backward(const LayerCache<T>& cache, const Tensor<T>& dy, Tensor<T>* dx,
                        std::vector<Buffer<T>>& grads) const = 0;

  /// Trainable arrays in file order.
  virtual std::vector<std::span<T>> params() { return {}; }
  /// Every stored array in file order (trainable arrays then buffers).
  virtual std::vector<std::span<T>> arrays() { return params(); }
  /// Shape recorded in the weight file.
  virtual std::vector<std::uint32_t> file_shape() const { return {}; }

  virtual void init(std::mt19937_64&) {}
};

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const Shape& in);

template <typename T>
class Conv2d : public Layer<T> {
 public:
  Conv2d(const LayerSpec& spec, const Shape& in);
  LayerKind kind() const override { return LayerKind::Conv; }
  Shape output_shape(const Shape& in) const override;
  void forward(const Tensor<T>& x, Tensor<T>& y) const override;
  void forward_train(const Tensor<T>& x, Tensor<T>& y, LayerCache<T>& cache) override;
  void backward(const LayerCache<T>& cache, const Tensor<T>& dy, Tensor<T>* dx,
                std::vector<Buffer<T>>& grads) const override;
  std::vector<std::span<T>> params() override { return {weight_, bias_}; }
  std::vector<std::uint32_t> file_shape() const override;
  void init(std::mt19937_64& rng) override;

  Buffer<T>& weight() { return weight_; }
  Buffer<T>& bias() { return bias_; }

 private:
  void run(const Tensor<T>& x, Tensor<T>& y, Buffer<T>& col) const;

  int out_c_;
  ConvGeometry g_;
  Buffer<T> weight_, bias_;
};

template <typename T>
class ConvTranspose2d : public Layer<T> {
 public:
  ConvTranspose2d(const LayerSpec& spec, const Shape& in);
  LayerKind kind() const override { return LayerKind::TransposedConv; }
  Shape output_shape(const Shape& in) const override;
  void forward(const Tensor<T>& x, Tensor<T>& y) const override;
  void forward_train(const Tensor<T>& x, Tensor<T>& y, LayerCache<T>& cache) override;
  void backward(const LayerCache<T>& cache, const Tensor<T>& dy, Tensor<T>* dx,
                std::vector<Buffer<T>>& grads) const override;
  std::vector<std::span<T>> params() override { return {weight_, bias_}; }
  std::vector<std::uint32_t> file_shape() const override;
  void init(std::mt19937_64& rng) override;

  Buffer<T>& weight() { return weight_; }
  Buffer<T>& bias() { return bias_; }

 private:
  void run(const Tensor<T>& x, Tensor<T>& y, Buffer<T>& xm) const;

  int in_c_;
  ConvGeometry g_;  // the adjoint conv: g_.in_* is our output
  Buffer<T> weight_, bias_;
};

template <typename T>
class BatchNorm2d : public Layer<T> {
 public:
  static constexpr double kMomentum = 0.1;
  static constexpr double kEps = 1e-5;

  BatchNorm2d(const LayerSpec& spec, const Shape& in);
  LayerKind kind() const override { return LayerKind::BatchNorm; }
  Shape output_shape(const Shape& in) const override;
  void forward(const Tensor<T>& x, Tensor<T>& y) const override;
  void forward_train(const Tensor<T>& x, Tensor<T>& y, LayerCache<T>& cache) override;
  void backward(const LayerCache<T>& cache, const Tensor<T>& dy, Tensor<T>* dx,
                std::vector<Buffer<T>>& grads) const override;
  std::vector<std::span<T>> params() override { return {gamma_, beta_}; }
  std::vector<std::span<T>> arrays() override { return {gamma_, beta_, running_mean_, running_var_}; }
  std::vector<std::uint32_t> file_shape() const override { return {static_cast<std::uint32_t>(c_)}; }
  void init(std::mt19937_64& rng) override;

  const Buffer<T>& running_mean() const { return running_mean_; }
  const Buffer<T>& running_var() const { return running_var_; }

 private:
  int c_;
  Buffer<T> gamma_, beta_, running_mean_, running_var_;
};

template <typename T>
class ReLU : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::ReLU; }
  Shape output_shape(const Shape& in) const override { return in; }
  void forward(const Tensor<T>& x, Tensor<T>& y) const override;
  void forward_train(const Tensor<T>& x, Tensor<T>& y, LayerCache<T>& cache) override;
  void backward(const LayerCache<T>& cache, const Tensor<T>& dy, Tensor<T>* dx,
                std::vector<Buffer<T>>& grads) const override;
};

/// Flattens each item to a vector; output is (out_features, 1, 1).
template <typename T>
class FullyConnected : public Layer<T> {
 public:
  FullyConnected(const LayerSpec& spec, const Shape& in);
  LayerKind kind() const override { return LayerKind::FullyConnected; }
  Shape output_shape(const Shape& in) const override;
  void forward(const Tensor<T>& x, Tensor<T>& y) const override;
  void forward_train(const Tensor<T>& x, Tensor<T>& y, LayerCache<T>& cache) override;
  void backward(const LayerCache<T>& cache, const Tensor<T>& dy, Tensor<T>* dx,
                std::vector<Buffer<T>>& grads) const override;
  std::vector<std::span<T>> params() override { return {weight_, bias_}; }
  std::vector<std::uint32_t> file_shape() const override;
  void init(std::mt19937_64& rng) override;

  Buffer<T>& weight() { return weight_; }
  Buffer<T>& bias() { return bias_; }

 private:
  int in_f_, out_f_;
  Shape in_;
  Buffer<T> weight_, bias_;  // weight is (out, in)
};

template <typename T>
class Reshape : public Layer<T> {
 public:
  Reshape(const LayerSpec& spec, const Shape& in);
  LayerKind kind() const override { return LayerKind::Reshape; }
  Shape output_shape(const Shape& in) const override;
  void forward(const Tensor<T>& x, Tensor<T>& y) const override;
  void forward_train(const Tensor<T>& x, Tensor<T>& y, LayerCache<T>& cache) override;
  void backward(const LayerCache<T>& cache, const Tensor<T>& dy, Tensor<T>* dx,
                std::vector<Buffer<T>>& grads) const override;
  std::vector<std::uint32_t> file_shape() const override;

 private:
  Shape in_, out_;
};

/// Uniform draw in [-bound, bound) from the top 53 bits of the generator.
double uniform_symmetric(std::mt19937_64& rng, double bound);

}  // namespace lfd::net
