#include "lfdepth/net/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "lfdepth/error.hpp"
#include "lfdepth/io.hpp"

namespace lfd::net {

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorKind::InvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::InvalidArgument, "batch size must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw Error(ErrorKind::InvalidArgument, "learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "Adam betas must lie in [0, 1) and eps must be positive");
  }
}

TrainingSet make_training_set(const FlowerStackBatch& stacks, const SparseDepthMap& gt) {
  std::unordered_map<AxialCoord, double, AxialHash> depth;
  for (const auto& e : gt.entries) depth[e.coord] = e.depth;
  TrainingSet out;
  out.stacks.channels = stacks.channels;
  out.stacks.height = stacks.height;
  out.stacks.width = stacks.width;
  const std::size_t sz = stacks.item_size();
  for (int i = 0; i < stacks.n; ++i) {
    const auto it = depth.find(stacks.coords[i]);
    if (it == depth.end()) continue;
    if (!(it->second > 0.0) || !std::isfinite(it->second)) {
      throw Error(ErrorKind::NonPositiveDepth, "ground truth depth must be positive and finite");
    }
    out.stacks.values.insert(out.stacks.values.end(), stacks.values.begin() + i * sz, stacks.values.begin() + (i + 1) * sz);
    out.stacks.coords.push_back(stacks.coords[i]);
    out.stacks.centroids.push_back(stacks.centroids[i]);
    out.depths.push_back(static_cast<float>(it->second));
    ++out.stacks.n;
  }
  return out;
}

void append(TrainingSet& into, const TrainingSet& more) {
  if (into.stacks.n == 0) {
    into = more;
    return;
  }
  if (more.stacks.item_size() != into.stacks.item_size()) throw Error(ErrorKind::ShapeMismatch, "stack sizes differ");
  into.stacks.values.insert(into.stacks.values.end(), more.stacks.values.begin(), more.stacks.values.end());
  into.stacks.coords.insert(into.stacks.coords.end(), more.stacks.coords.begin(), more.stacks.coords.end());
  into.stacks.centroids.insert(into.stacks.centroids.end(), more.stacks.centroids.begin(), more.stacks.centroids.end());
  into.depths.insert(into.depths.end(), more.depths.begin(), more.depths.end());
  into.stacks.n += more.stacks.n;
}

Tensor4 to_tensor(const FlowerStackBatch& batch) {
  Tensor4 t(batch.n, batch.channels, batch.height, batch.width);
  if (batch.values.size() != t.size()) throw Error(ErrorKind::ShapeMismatch, "batch values do not match its shape");
  t.values.assign(batch.values.begin(), batch.values.end());
  return t;
}

TrainResult train(const TrainingSet& data, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (data.size() == 0 || data.stacks.n == 0) throw Error(ErrorKind::NoTrainingData, "no stacks with ground truth");
  if (static_cast<std::size_t>(data.stacks.n) != data.depths.size()) {
    throw Error(ErrorKind::ShapeMismatch, "stack and depth counts differ");
  }
  const Shape in{data.stacks.channels, data.stacks.height, data.stacks.width};
  TrainResult result{Network<float>(config.architecture, in, config.seed), {}};
  Network<float>& net = result.network;
  const Shape out = net.output_shape();
  if (out.c != 1) throw Error(ErrorKind::ShapeMismatch, "network must output a single channel");

  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ull);
  AdamState<float> adam;
  const AdamConfig acfg{config.lr, config.beta1, config.beta2, config.eps};
  const std::size_t n = data.size(), sz = data.stacks.item_size();
  Activations<float> acts;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = shuffled_indices(n, rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const int m = static_cast<int>(std::min<std::size_t>(config.batch_size, n - start));
      Tensor4 x(m, in);
      Tensor4 gt(m, out), grad;
      for (int i = 0; i < m; ++i) {
        const std::size_t src = order[start + i];
        std::copy_n(data.stacks.values.begin() + src * sz, sz, x.item(i));
        std::fill_n(gt.item(i), gt.item_size(), data.depths[src]);
      }
      const Tensor4 pred = net.forward_train(x, acts);
      const float loss = masked_mse(pred, gt, centroid_mask<float>(m, out.h, out.w), &grad);
      loss_sum += static_cast<double>(loss) * m;
      const auto grads = net.backward(acts, grad);
      adam_step(net.parameters(), grads, adam, acfg);
    }
    const double mean = loss_sum / static_cast<double>(n);
    if (!std::isfinite(mean)) throw Error(ErrorKind::NonFinite, "training diverged at epoch " + std::to_string(epoch));
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

SparseDepthMap predict_sparse(const Network<float>& net, const FlowerStackBatch& stacks, int chunk) {
  const Shape in{stacks.channels, stacks.height, stacks.width};
  if (in != net.input_shape()) {
    throw Error(ErrorKind::ShapeMismatch, "stacks are " + to_string(in) + ", network expects " + to_string(net.input_shape()));
  }
  if (stacks.values.size() != stacks.item_size() * stacks.n || stacks.coords.size() != static_cast<std::size_t>(stacks.n)) {
    throw Error(ErrorKind::ShapeMismatch, "batch values do not match its shape");
  }
  const Shape out = net.output_shape();
  SparseDepthMap result;
  result.source = DepthSource::Predicted;
  const std::size_t sz = stacks.item_size();
  for (int start = 0; start < stacks.n; start += std::max(chunk, 1)) {
    const int m = std::min(std::max(chunk, 1), stacks.n - start);
    Tensor4 x(m, in);
    std::copy_n(stacks.values.begin() + start * sz, m * sz, x.values.begin());
    const Tensor4 y = net.forward(x);
    for (int i = 0; i < m; ++i) {
      float d = y.at(i, 0, out.h / 2, out.w / 2);
      if (!std::isfinite(d)) throw Error(ErrorKind::NonFinite, "network produced a non-finite depth");
      result.entries.push_back({stacks.coords[start + i], stacks.centroids[start + i],
                                std::max(static_cast<double>(d), kMinPredictedDepth)});
    }
  }
  return result;
}

void save_loss_history(const std::string& path, const std::vector<double>& epoch_loss) {
  std::string text = "epoch,mean_loss\n";
  char buf[64];
  for (std::size_t i = 0; i < epoch_loss.size(); ++i) {
    const auto r = std::to_chars(buf, buf + sizeof buf, epoch_loss[i]);
    text += std::to_string(i + 1) + "," + std::string(buf, r.ptr) + "\n";
  }
  write_text_file(path, text);
}

std::vector<double> load_loss_history(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "epoch,mean_loss") throw Error(ErrorKind::FormatError, path + ": bad header");
  std::vector<double> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    double v = 0;
    if (comma == std::string::npos ||
        std::from_chars(line.data() + comma + 1, line.data() + line.size(), v).ec != std::errc{}) {
      throw Error(ErrorKind::FormatError, path + ": bad row '" + line + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace lfd::net
