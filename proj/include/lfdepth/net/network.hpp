#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lfdepth/net/layers.hpp"
#include "lfdepth/net/tensor.hpp"

namespace lfd::net {

/// Encoder (5 conv+BN+ReLU), MLP bottleneck 2304-512-128-512-2304, decoder
/// (5 transposed convs, last one linear) mapping 21x23x23 stacks to a 1x23x23 depth map.
std::vector<LayerSpec> default_architecture();
inline constexpr Shape kStackShape{21, 23, 23};

template <typename T>
using Gradients = std::vector<Buffer<T>>;

template <typename T>
struct Activations {
  std::vector<LayerCache<T>> caches;
};

template <typename T>
class Network {
 public:
  Network() = default;
  /// Validates the chain of shapes and initializes the weights from `seed`.
  Network(std::vector<LayerSpec> specs, Shape input, std::uint64_t seed);

  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const std::vector<LayerSpec>& specs() const { return specs_; }
  Shape input_shape() const { return input_; }
  Shape output_shape() const { return shapes_.empty() ? input_ : shapes_.back(); }
  std::uint64_t seed() const { return seed_; }
  std::size_t layer_count() const { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_[i]; }
  const Layer<T>& layer(std::size_t i) const { return *layers_[i]; }

  /// Eval mode: batchnorm uses running statistics. Throws ShapeMismatch.
  Tensor<T> forward(const Tensor<T>& x) const;
  /// Train mode: batch statistics, running-stat update, caches for backward.
  Tensor<T> forward_train(const Tensor<T>& x, Activations<T>& acts);
  /// Parameter gradients aligned with parameters(), given dLoss/dOutput.
  Gradients<T> backward(const Activations<T>& acts, const Tensor<T>& dy) const;

  std::vector<std::span<T>> parameters();
  std::size_t parameter_count();
  /// Every stored array (parameters and batchnorm buffers), in file order.
  std::vector<std::span<T>> arrays();

  template <typename U>
  Network<U> cast() const;

 private:
  std::vector<LayerSpec> specs_;
  Shape input_;
  std::vector<Shape> shapes_;  // output shape of each layer
  std::uint64_t seed_ = 0;
  std::vector<std::unique_ptr<Layer<T>>> layers_;

  template <typename>
  friend class Network;
  void build();
};

/// Σ m (p - g)² / Σ m, with the gradient with respect to pred written to `grad` when given.
/// Throws ShapeMismatch, EmptyMask.
template <typename T>
T masked_mse(const Tensor<T>& pred, const Tensor<T>& gt, const Tensor<T>& mask, Tensor<T>* grad = nullptr);

/// Mask selecting the central pixel of each item of an (n, 1, h, w) output.
template <typename T>
Tensor<T> centroid_mask(int n, int h, int w);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::int64_t t = 0;
  std::vector<Buffer<T>> m, v;
};

/// Bias-corrected Adam: θ -= lr * m̂ / (sqrt(v̂) + eps). Moments are allocated on first use.
template <typename T>
void adam_step(std::vector<std::span<T>> params, const Gradients<T>& grads, AdamState<T>& state,
               const AdamConfig& config);

/// "MLDN" weight file, little-endian.
void save_network(const std::string& path, Network<float>& net);
/// Rebuilds from `specs` and checks every layer record against it. Throws FormatError.
Network<float> load_network(const std::string& path, const std::vector<LayerSpec>& specs = default_architecture(),
                            Shape input = kStackShape);

}  // namespace lfd::net
