#include "lfdepth/net/network.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "lfdepth/error.hpp"

namespace lfd::net {

std::vector<LayerSpec> default_architecture() {
  std::vector<LayerSpec> s;
  const int enc[6] = {21, 32, 64, 128, 256, 256};
  const int enc_stride[5] = {2, 2, 2, 1, 1};
  for (int i = 0; i < 5; ++i) {
    s.push_back(LayerSpec::conv(enc[i], enc[i + 1], 3, enc_stride[i], 1));
    s.push_back(LayerSpec::batchnorm(enc[i + 1]));
    s.push_back(LayerSpec::relu());
  }
  const int mlp[5] = {2304, 512, 128, 512, 2304};
  for (int i = 0; i < 4; ++i) {
    s.push_back(LayerSpec::fully_connected(mlp[i], mlp[i + 1]));
    s.push_back(LayerSpec::relu());
  }
  s.push_back(LayerSpec::reshape(256, 3, 3));
  const int dec[6] = {256, 256, 128, 64, 32, 1};
  const int dec_stride[5] = {1, 1, 2, 2, 2};
  const int dec_outpad[5] = {0, 0, 1, 1, 0};
  for (int i = 0; i < 5; ++i) {
    s.push_back(LayerSpec::transposed_conv(dec[i], dec[i + 1], 3, dec_stride[i], 1, dec_outpad[i]));
    if (i < 4) {
      s.push_back(LayerSpec::batchnorm(dec[i + 1]));
      s.push_back(LayerSpec::relu());
    }
  }
  return s;
}

template <typename T>
Network<T>::Network(std::vector<LayerSpec> specs, Shape input, std::uint64_t seed)
    : specs_(std::move(specs)), input_(input), seed_(seed) {
  build();
  std::mt19937_64 rng(seed_);
  for (auto& l : layers_) l->init(rng);
}

template <typename T>
void Network<T>::build() {
  if (specs_.empty()) throw Error(ErrorKind::ShapeMismatch, "network has no layers");
  layers_.clear();
  shapes_.clear();
  Shape s = input_;
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    try {
      layers_.push_back(make_layer<T>(specs_[i], s));
      s = layers_.back()->output_shape(s);
    } catch (const Error& e) {
      throw Error(ErrorKind::ShapeMismatch, "layer " + std::to_string(i) + ": " + e.what());
    }
    shapes_.push_back(s);
  }
}

template <typename T>
Network<T>::Network(const Network& other) : specs_(other.specs_), input_(other.input_), seed_(other.seed_) {
  build();
  auto& src = const_cast<Network&>(other);
  auto dst_arrays = arrays();
  auto src_arrays = src.arrays();
  for (std::size_t k = 0; k < dst_arrays.size(); ++k)
    std::copy(src_arrays[k].begin(), src_arrays[k].end(), dst_arrays[k].begin());
}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other) {
  if (this != &other) *this = Network(other);
  return *this;
}

template <typename T>
template <typename U>
Network<U> Network<T>::cast() const {
  Network<U> out;
  out.specs_ = specs_;
  out.input_ = input_;
  out.seed_ = seed_;
  out.build();
  auto src = const_cast<Network&>(*this).arrays();
  auto dst = out.arrays();
  for (std::size_t k = 0; k < dst.size(); ++k)
    for (std::size_t j = 0; j < dst[k].size(); ++j) dst[k][j] = static_cast<U>(src[k][j]);
  return out;
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& x) const {
  if (x.item_shape() != input_ || x.n < 1) {
    throw Error(ErrorKind::ShapeMismatch, "network input " + to_string(x.item_shape()) + " (n=" +
                                              std::to_string(x.n) + "), expected " + to_string(input_));
  }
  Tensor<T> cur = x, next;
  for (const auto& l : layers_) {
    l->forward(cur, next);
    std::swap(cur, next);
  }
  return cur;
}

template <typename T>
Tensor<T> Network<T>::forward_train(const Tensor<T>& x, Activations<T>& acts) {
  if (x.item_shape() != input_ || x.n < 1) {
    throw Error(ErrorKind::ShapeMismatch, "network input " + to_string(x.item_shape()) + ", expected " + to_string(input_));
  }
  acts.caches.assign(layers_.size(), {});
  Tensor<T> cur = x, next;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->forward_train(cur, next, acts.caches[i]);
    std::swap(cur, next);
  }
  return cur;
}

template <typename T>
Gradients<T> Network<T>::backward(const Activations<T>& acts, const Tensor<T>& dy) const {
  if (acts.caches.size() != layers_.size()) throw Error(ErrorKind::ShapeMismatch, "activations do not match network");
  if (dy.item_shape() != output_shape()) {
    throw Error(ErrorKind::ShapeMismatch, "loss gradient " + to_string(dy.item_shape()) + ", expected " +
                                              to_string(output_shape()));
  }
  std::vector<Gradients<T>> per_layer(layers_.size());
  Tensor<T> cur = dy, next;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    layers_[i]->backward(acts.caches[i], cur, i > 0 ? &next : nullptr, per_layer[i]);
    if (i > 0) std::swap(cur, next);
  }
  Gradients<T> out;
  for (auto& g : per_layer)
    for (auto& a : g) out.push_back(std::move(a));
  return out;
}

template <typename T>
std::vector<std::span<T>> Network<T>::parameters() {
  std::vector<std::span<T>> out;
  for (auto& l : layers_)
    for (auto p : l->params()) out.push_back(p);
  return out;
}

template <typename T>
std::size_t Network<T>::parameter_count() {
  std::size_t n = 0;
  for (auto p : parameters()) n += p.size();
  return n;
}

template <typename T>
std::vector<std::span<T>> Network<T>::arrays() {
  std::vector<std::span<T>> out;
  for (auto& l : layers_)
    for (auto p : l->arrays()) out.push_back(p);
  return out;
}

template <typename T>
T masked_mse(const Tensor<T>& pred, const Tensor<T>& gt, const Tensor<T>& mask, Tensor<T>* grad) {
  if (pred.size() != gt.size() || pred.size() != mask.size() || pred.item_shape() != gt.item_shape() ||
      pred.item_shape() != mask.item_shape()) {
    throw Error(ErrorKind::ShapeMismatch, "prediction, ground truth and mask shapes differ");
  }
  T count = T(0), sum = T(0);
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (mask.values[k] == T(0)) continue;
    const T d = pred.values[k] - gt.values[k];
    sum += mask.values[k] * d * d;
    count += mask.values[k];
  }
  if (count == T(0)) throw Error(ErrorKind::EmptyMask, "mask selects no pixels");
  if (grad) {
    *grad = Tensor<T>(pred.n, pred.c, pred.h, pred.w);
    for (std::size_t k = 0; k < pred.size(); ++k) {
      if (mask.values[k] != T(0)) grad->values[k] = T(2) * mask.values[k] * (pred.values[k] - gt.values[k]) / count;
    }
  }
  return sum / count;
}

template <typename T>
Tensor<T> centroid_mask(int n, int h, int w) {
  Tensor<T> m(n, 1, h, w);
  for (int i = 0; i < n; ++i) m.at(i, 0, h / 2, w / 2) = T(1);
  return m;
}

template <typename T>
void adam_step(std::vector<std::span<T>> params, const Gradients<T>& grads, AdamState<T>& state,
               const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw Error(ErrorKind::ShapeMismatch, "gradient count differs from parameters");
  if (state.m.empty()) {
    for (auto p : params) {
      state.m.emplace_back(p.size(), T(0));
      state.v.emplace_back(p.size(), T(0));
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  const T step = static_cast<T>(cfg.lr / c1), sc2 = static_cast<T>(1.0 / std::sqrt(c2)), eps = static_cast<T>(cfg.eps);
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (grads[k].size() != params[k].size() || state.m[k].size() != params[k].size()) {
      throw Error(ErrorKind::ShapeMismatch, "gradient array " + std::to_string(k) + " has the wrong size");
    }
    T* p = params[k].data();
    T* m = state.m[k].data();
    T* v = state.v[k].data();
    const T* g = grads[k].data();
    for (std::size_t j = 0; j < params[k].size(); ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * g[j];
      v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
      p[j] -= step * m[j] / (std::sqrt(v[j]) * sc2 + eps);
    }
  }
}

// ---- weight file ----

namespace {

constexpr char kMagic[4] = {'M', 'L', 'D', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorKind::FormatError, path + ": truncated weight file");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint8_t get_u8(std::istream& is, const std::string& path) {
  char c;
  if (!is.get(c)) throw Error(ErrorKind::FormatError, path + ": truncated weight file");
  return static_cast<std::uint8_t>(c);
}

}  // namespace

void save_network(const std::string& path, Network<float>& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::MissingAsset, "cannot write " + path);
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(net.layer_count()));
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    auto& l = net.layer(i);
    os.put(static_cast<char>(l.kind()));
    const auto shape = l.file_shape();
    os.put(static_cast<char>(shape.size()));
    for (auto d : shape) put_u32(os, d);
    for (auto a : l.arrays())
      for (float v : a) put_u32(os, std::bit_cast<std::uint32_t>(v));
  }
  if (!os) throw Error(ErrorKind::MissingAsset, "failed writing " + path);
}

Network<float> load_network(const std::string& path, const std::vector<LayerSpec>& specs, Shape input) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::MissingAsset, "cannot open " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw Error(ErrorKind::FormatError, path + ": not an MLDN file");
  if (get_u32(is, path) != kVersion) throw Error(ErrorKind::FormatError, path + ": unsupported version");
  Network<float> net(specs, input, 0);
  if (get_u32(is, path) != net.layer_count()) throw Error(ErrorKind::FormatError, path + ": layer count differs from the architecture");
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    auto& l = net.layer(i);
    const std::string where = path + ": layer " + std::to_string(i);
    if (get_u8(is, path) != static_cast<std::uint8_t>(l.kind())) throw Error(ErrorKind::FormatError, where + " kind differs");
    const auto expected = l.file_shape();
    if (get_u8(is, path) != expected.size()) throw Error(ErrorKind::FormatError, where + " rank differs");
    for (auto d : expected)
      if (get_u32(is, path) != d) throw Error(ErrorKind::FormatError, where + " shape differs");
    for (auto a : l.arrays())
      for (float& v : a) {
        v = std::bit_cast<float>(get_u32(is, path));
        if (!std::isfinite(v)) throw Error(ErrorKind::FormatError, where + " holds a non-finite value");
      }
  }
  if (is.peek() != std::char_traits<char>::eof()) throw Error(ErrorKind::FormatError, path + ": trailing bytes");
  return net;
}

template class Network<float>;
template class Network<double>;
template Network<double> Network<float>::cast<double>() const;
template Network<float> Network<double>::cast<float>() const;
template float masked_mse<float>(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&, Tensor<float>*);
template double masked_mse<double>(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&, Tensor<double>*);
template Tensor<float> centroid_mask<float>(int, int, int);
template Tensor<double> centroid_mask<double>(int, int, int);
template void adam_step<float>(std::vector<std::span<float>>, const Gradients<float>&, AdamState<float>&, const AdamConfig&);
template void adam_step<double>(std::vector<std::span<double>>, const Gradients<double>&, AdamState<double>&, const AdamConfig&);

}  // namespace lfd::net
