#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lfdepth/net/network.hpp"
#include "lfdepth/plenoptic.hpp"
#include "lfdepth/random.hpp"
#include "lfdepth/sparse.hpp"

namespace lfd::net {

struct TrainConfig {
  int epochs = 125;
  int batch_size = 128;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  std::vector<LayerSpec> architecture = default_architecture();

  void validate() const;  // throws InvalidArgument
};

/// Stacks paired with their supervised centroid depth (meters).
struct TrainingSet {
  FlowerStackBatch stacks;
  std::vector<float> depths;

  std::size_t size() const { return depths.size(); }
};

/// Pairs the stacks of one image with the ground truth at the same lens; stacks
/// without a ground-truth entry are left out.
TrainingSet make_training_set(const FlowerStackBatch& stacks, const SparseDepthMap& gt);
void append(TrainingSet& into, const TrainingSet& more);

struct TrainResult {
  Network<float> network;
  std::vector<double> epoch_loss;  // mean masked MSE per epoch
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// Seeded epoch shuffles, mini-batches of batch_size (the last one may be smaller),
/// centroid-pixel masked MSE, Adam. Throws NoTrainingData.
TrainResult train(const TrainingSet& data, const TrainConfig& config, const EpochCallback& on_epoch = {});

using lfd::shuffled_indices;

Tensor4 to_tensor(const FlowerStackBatch& batch);

/// Central output pixel of every stack, clamped to at least 1 mm. Throws ShapeMismatch.
SparseDepthMap predict_sparse(const Network<float>& net, const FlowerStackBatch& stacks, int chunk = 128);

inline constexpr double kMinPredictedDepth = 1e-3;

void save_loss_history(const std::string& path, const std::vector<double>& epoch_loss);
std::vector<double> load_loss_history(const std::string& path);

}  // namespace lfd::net
