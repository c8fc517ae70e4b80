#include "lfdepth/net/layers.hpp"

#include <Eigen/Core>
#include <cmath>

#include "lfdepth/error.hpp"
#include "lfdepth/random.hpp"

namespace lfd::net {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Map = Eigen::Map<RowMat<T>>;
template <typename T>
using CMap = Eigen::Map<const RowMat<T>>;

[[noreturn]] void shape_error(const std::string& layer, const Shape& in, const std::string& expected) {
  throw Error(ErrorKind::ShapeMismatch, layer + " got input " + to_string(in) + ", expected " + expected);
}

template <typename T>
void check_input(const Tensor<T>& x, const Shape& expected, const char* layer) {
  if (x.item_shape() != expected) shape_error(layer, x.item_shape(), to_string(expected));
}

template <typename T>
void he_uniform(Buffer<T>& w, int fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / fan_in);
  for (auto& v : w) v = static_cast<T>(uniform_symmetric(rng, bound));
}

}  // namespace

std::string to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "conv";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::ReLU: return "relu";
    case LayerKind::FullyConnected: return "fullyconnected";
    case LayerKind::TransposedConv: return "transposedconv";
    case LayerKind::Reshape: return "reshape";
  }
  return "unknown";
}

double uniform_symmetric(std::mt19937_64& rng, double bound) {
  return (2.0 * uniform01(rng) - 1.0) * bound;
}

LayerSpec LayerSpec::conv(int in_c, int out_c, int kernel, int stride, int padding) {
  LayerSpec s;
  s.kind = LayerKind::Conv;
  s.in_channels = in_c;
  s.out_channels = out_c;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  return s;
}

LayerSpec LayerSpec::transposed_conv(int in_c, int out_c, int kernel, int stride, int padding, int output_padding) {
  LayerSpec s = conv(in_c, out_c, kernel, stride, padding);
  s.kind = LayerKind::TransposedConv;
  s.output_padding = output_padding;
  return s;
}

LayerSpec LayerSpec::batchnorm(int channels) {
  LayerSpec s;
  s.kind = LayerKind::BatchNorm;
  s.in_channels = s.out_channels = channels;
  return s;
}

LayerSpec LayerSpec::relu() { return {}; }

LayerSpec LayerSpec::fully_connected(int in_features, int out_features) {
  LayerSpec s;
  s.kind = LayerKind::FullyConnected;
  s.in_features = in_features;
  s.out_features = out_features;
  return s;
}

LayerSpec LayerSpec::reshape(int c, int h, int w) {
  LayerSpec s;
  s.kind = LayerKind::Reshape;
  s.out_channels = c;
  s.out_h = h;
  s.out_w = w;
  return s;
}

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const Shape& in) {
  switch (spec.kind) {
    case LayerKind::Conv: return std::make_unique<Conv2d<T>>(spec, in);
    case LayerKind::BatchNorm: return std::make_unique<BatchNorm2d<T>>(spec, in);
    case LayerKind::ReLU: return std::make_unique<ReLU<T>>();
    case LayerKind::FullyConnected: return std::make_unique<FullyConnected<T>>(spec, in);
    case LayerKind::TransposedConv: return std::make_unique<ConvTranspose2d<T>>(spec, in);
    case LayerKind::Reshape: return std::make_unique<Reshape<T>>(spec, in);
  }
  throw Error(ErrorKind::FormatError, "unknown layer kind");
}

// ---- convolution ----

template <typename T>
Conv2d<T>::Conv2d(const LayerSpec& spec, const Shape& in) : out_c_(spec.out_channels) {
  if (in.c != spec.in_channels) shape_error("conv", in, std::to_string(spec.in_channels) + " channels");
  if (out_c_ < 1) throw Error(ErrorKind::ShapeMismatch, "conv needs at least one output channel");
  g_ = ConvGeometry::make(in.c, in.h, in.w, spec.kernel, spec.stride, spec.padding);
  weight_.assign(static_cast<std::size_t>(out_c_) * g_.rows(), T(0));
  bias_.assign(out_c_, T(0));
}

template <typename T>
Shape Conv2d<T>::output_shape(const Shape& in) const {
  if (in != Shape{g_.in_c, g_.in_h, g_.in_w}) shape_error("conv", in, to_string(Shape{g_.in_c, g_.in_h, g_.in_w}));
  return {out_c_, g_.out_h, g_.out_w};
}

template <typename T>
std::vector<std::uint32_t> Conv2d<T>::file_shape() const {
  return {static_cast<std::uint32_t>(out_c_), static_cast<std::uint32_t>(g_.in_c),
          static_cast<std::uint32_t>(g_.kernel), static_cast<std::uint32_t>(g_.kernel)};
}

template <typename T>
void Conv2d<T>::init(std::mt19937_64& rng) {
  he_uniform(weight_, g_.rows(), rng);
  std::fill(bias_.begin(), bias_.end(), T(0));
}

template <typename T>
void Conv2d<T>::run(const Tensor<T>& x, Tensor<T>& y, Buffer<T>& col) const {
  check_input(x, {g_.in_c, g_.in_h, g_.in_w}, "conv");
  const int P = g_.out_pixels();
  const Eigen::Index cols = static_cast<Eigen::Index>(x.n) * P;
  col.resize(static_cast<std::size_t>(g_.rows()) * cols);
  im2col(x.values.data(), x.n, g_, col.data());
  Buffer<T> ym(static_cast<std::size_t>(out_c_) * cols);
  Map<T> Y(ym.data(), out_c_, cols);
  Y.noalias() = CMap<T>(weight_.data(), out_c_, g_.rows()) * CMap<T>(col.data(), g_.rows(), cols);
  for (int c = 0; c < out_c_; ++c) Y.row(c).array() += bias_[c];
  y = Tensor<T>(x.n, out_c_, g_.out_h, g_.out_w);
  channel_major_to_nchw(ym.data(), x.n, out_c_, P, y.values.data());
}

template <typename T>
void Conv2d<T>::forward(const Tensor<T>& x, Tensor<T>& y) const {
  Buffer<T> col;
  run(x, y, col);
}

template <typename T>
void Conv2d<T>::forward_train(const Tensor<T>& x, Tensor<T>& y, LayerCache<T>& cache) {
  cache.n = x.n;
  run(x, y, cache.a);
}

template <typename T>
void Conv2d<T>::backward(const LayerCache<T>& cache, const Tensor<T>& dy, Tensor<T>* dx,
                         std::vector<Buffer<T>>& grads) const {
  const int n = cache.n, P = g_.out_pixels();
  if (dy.n != n || dy.item_shape() != Shape{out_c_, g_.out_h, g_.out_w}) {
    shape_error("conv backward", dy.item_shape(), to_string(Shape{out_c_, g_.out_h, g_.out_w}));
  }
  const Eigen::Index cols = static_cast<Eigen::Index>(n) * P;
  Buffer<T> dym(static_cast<std::size_t>(out_c_) * cols);
  nchw_to_channel_major(dy.values.data(), n, out_c_, P, dym.data());
  CMap<T> dY(dym.data(), out_c_, cols), col(cache.a.data(), g_.rows(), cols);
  grads.resize(2);
  grads[0].resize(weight_.size());
  grads[1].resize(bias_.size());
  Map<T>(grads[0].data(), out_c_, g_.rows()).noalias() = dY * col.transpose();
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(grads[1].data(), out_c_) = dY.rowwise().sum();
  if (dx) {
    Buffer<T> dcol(static_cast<std::size_t>(g_.rows()) * cols);
    Map<T>(dcol.data(), g_.rows(), cols).noalias() = CMap<T>(weight_.data(), out_c_, g_.rows()).transpose() * dY;
    *dx = Tensor<T>(n, g_.in_c, g_.in_h, g_.in_w);
    col2im(dcol.data(), n, g_, dx->values.data());
  }
}

// ---- transposed convolution ----

template <typename T>
ConvTranspose2d<T>::ConvTranspose2d(const LayerSpec& spec, const Shape& in) : in_c_(spec.in_channels) {
  if (in.c != spec.in_channels) shape_error("transposedconv", in, std::to_string(spec.in_channels) + " channels");
  if (spec.output_padding < 0 || spec.output_padding >= std::max(spec.stride, 1)) {
    throw Error(ErrorKind::ShapeMismatch, "output padding must be smaller than the stride");
  }
  const int oh = (in.h - 1) * spec.stride - 2 * spec.padding + spec.kernel + spec.output_padding;
  const int ow = (in.w - 1) * spec.stride - 2 * spec.padding + spec.kernel + spec.output_padding;
  if (oh < 1 || ow < 1 || spec.out_channels < 1) shape_error("transposedconv", in, "a positive output size");
  g_ = ConvGeometry::make(spec.out_channels, oh, ow, spec.kernel, spec.stride, spec.padding);
  if (g_.out_h != in.h || g_.out_w != in.w) shape_error("transposedconv", in, "consistent stride and padding");
  weight_.assign(static_cast<std::size_t>(in_c_) * g_.rows(), T(0));
  bias_.assign(g_.in_c, T(0));
}

template <typename T>
Shape ConvTranspose2d<T>::output_shape(const Shape& in) const {
  if (in != Shape{in_c_, g_.out_h, g_.out_w}) shape_error("transposedconv", in, to_string(Shape{in_c_, g_.out_h, g_.out_w}));
  return {g_.in_c, g_.in_h, g_.in_w};
}

template <typename T>
std::vector<std::uint32_t> ConvTranspose2d<T>::file_shape() const {
  return {static_cast<std::uint32_t>(in_c_), static_cast<std::uint32_t>(g_.in_c),
          static_cast<std::uint32_t>(g_.kernel), static_cast<std::uint32_t>(g_.kernel)};
}

template <typename T>
void ConvTranspose2d<T>::init(std::mt19937_64& rng) {
  he_uniform(weight_, in_c_ * g_.kernel * g_.kernel, rng);
  std::fill(bias_.begin(), bias_.end(), T(0));
}

template <typename T>
void ConvTranspose2d<T>::run(const Tensor<T>& x, Tensor<T>& y, Buffer<T>& xm) const {
  check_input(x, {in_c_, g_.out_h, g_.out_w}, "transposedconv");
  const int P = g_.out_pixels();
  const Eigen::Index cols = static_cast<Eigen::Index>(x.n) * P;
  xm.resize(static_cast<std::size_t>(in_c_) * cols);
  nchw_to_channel_major(x.values.data(), x.n, in_c_, P, xm.data());
  Buffer<T> col(static_cast<std::size_t>(g_.rows()) * cols);
  Map<T>(col.data(), g_.rows(), cols).noalias() =
      CMap<T>(weight_.data(), in_c_, g_.rows()).transpose() * CMap<T>(xm.data(), in_c_, cols);
  y = Tensor<T>(x.n, g_.in_c, g_.in_h, g_.in_w);
  col2im(col.data(), x.n, g_, y.values.data());
  const std::size_t plane = static_cast<std::size_t>(g_.in_h) * g_.in_w;
  for (int i = 0; i < x.n; ++i)
    for (int c = 0; c < g_.in_c; ++c) {
      T* p = y.values.data() + (static_cast<std::size_t>(i) * g_.in_c + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) p[k] += bias_[c];
    }
}

template <typename T>
void ConvTranspose2d<T>::forward(const Tensor<T>& x, Tensor<T>& y) const {
  Buffer<T> xm;
  run(x, y, xm);
}

template <typename T>
void ConvTranspose2d<T>::forward_train(const Tensor<T>& x, Tensor<T>& y, LayerCache<T>& cache) {
  cache.n = x.n;
  run(x, y, cache.a);
}

template <typename T>
void ConvTranspose2d<T>::backward(const LayerCache<T>& cache, const Tensor<T>& dy, Tensor<T>* dx,
                                  std::vector<Buffer<T>>& grads) const {
  const int n = cache.n, P = g_.out_pixels();
  if (dy.n != n || dy.item_shape() != Shape{g_.in_c, g_.in_h, g_.in_w}) {
    shape_error("transposedconv backward", dy.item_shape(), to_string(Shape{g_.in_c, g_.in_h, g_.in_w}));
  }
  const Eigen::Index cols = static_cast<Eigen::Index>(n) * P;
  Buffer<T> dcol(static_cast<std::size_t>(g_.rows()) * cols);
  im2col(dy.values.data(), n, g_, dcol.data());
  CMap<T> dC(dcol.data(), g_.rows(), cols), X(cache.a.data(), in_c_, cols);
  grads.resize(2);
  grads[0].resize(weight_.size());
  grads[1].assign(bias_.size(), T(0));
  Map<T>(grads[0].data(), in_c_, g_.rows()).noalias() = X * dC.transpose();
  const std::size_t plane = static_cast<std::size_t>(g_.in_h) * g_.in_w;
  for (int c = 0; c < g_.in_c; ++c) {
    T acc = T(0);
    for (int i = 0; i < n; ++i) {
      const T* p = dy.values.data() + (static_cast<std::size_t>(i) * g_.in_c + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) acc += p[k];
    }
    grads[1][c] = acc;
  }
  if (dx) {
    Buffer<T> dxm(static_cast<std::size_t>(in_c_) * cols);
    Map<T>(dxm.data(), in_c_, cols).noalias() = CMap<T>(weight_.data(), in_c_, g_.rows()) * dC;
    *dx = Tensor<T>(n, in_c_, g_.out_h, g_.out_w);
    channel_major_to_nchw(dxm.data(), n, in_c_, P, dx->values.data());
  }
}

// ---- batch normalization ----

template <typename T>
BatchNorm2d<T>::BatchNorm2d(const LayerSpec& spec, const Shape& in) : c_(spec.in_channels) {
  if (in.c != c_) shape_error("batchnorm", in, std::to_string(c_) + " channels");
  gamma_.assign(c_, T(1));
  beta_.assign(c_, T(0));
  running_mean_.assign(c_, T(0));
  running_var_.assign(c_, T(1));
}

template <typename T>
Shape BatchNorm2d<T>::output_shape(const Shape& in) const {
  if (in.c != c_) shape_error("batchnorm", in, std::to_string(c_) + " channels");
  return in;
}

template <typename T>
void BatchNorm2d<T>::init(std::mt19937_64&) {
  std::fill(gamma_.begin(), gamma_.end(), T(1));
  std::fill(beta_.begin(), beta_.end(), T(0));
  std::fill(running_mean_.begin(), running_mean_.end(), T(0));
  std::fill(running_var_.begin(), running_var_.end(), T(1));
}

template <typename T>
void BatchNorm2d<T>::forward(const Tensor<T>& x, Tensor<T>& y) const {
  if (x.c != c_) shape_error("batchnorm", x.item_shape(), std::to_string(c_) + " channels");
  y = Tensor<T>(x.n, x.c, x.h, x.w);
  const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < c_; ++c) {
    const T scale = gamma_[c] / std::sqrt(running_var_[c] + static_cast<T>(kEps));
    const T shift = beta_[c] - running_mean_[c] * scale;
    for (int i = 0; i < x.n; ++i) {
      const std::size_t off = (static_cast<std::size_t>(i) * c_ + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) y.values[off + k] = x.values[off + k] * scale + shift;
    }
  }
}

template <typename T>
void BatchNorm2d<T>::forward_train(const Tensor<T>& x, Tensor<T>& y, LayerCache<T>& cache) {
  if (x.c != c_) shape_error("batchnorm", x.item_shape(), std::to_string(c_) + " channels");
  y = Tensor<T>(x.n, x.c, x.h, x.w);
  cache.n = x.n;
  cache.a.resize(x.size());
  cache.b.resize(c_);
  const std::size_t plane = static_cast<std::size_t>(x.h) * x.w, m = plane * x.n;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < c_; ++c) {
    T sum = T(0);
    for (int i = 0; i < x.n; ++i) {
      const T* p = x.values.data() + (static_cast<std::size_t>(i) * c_ + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) sum += p[k];
    }
    const T mean = sum / static_cast<T>(m);
    T ss = T(0);
    for (int i = 0; i < x.n; ++i) {
      const T* p = x.values.data() + (static_cast<std::size_t>(i) * c_ + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) ss += (p[k] - mean) * (p[k] - mean);
    }
    const T var = ss / static_cast<T>(m);
    const T inv = T(1) / std::sqrt(var + static_cast<T>(kEps));
    cache.b[c] = inv;
    for (int i = 0; i < x.n; ++i) {
      const std::size_t off = (static_cast<std::size_t>(i) * c_ + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        const T xh = (x.values[off + k] - mean) * inv;
        cache.a[off + k] = xh;
        y.values[off + k] = gamma_[c] * xh + beta_[c];
      }
    }
    const T unbiased = m > 1 ? ss / static_cast<T>(m - 1) : var;
    const T mom = static_cast<T>(kMomentum);
    running_mean_[c] = (T(1) - mom) * running_mean_[c] + mom * mean;
    running_var_[c] = (T(1) - mom) * running_var_[c] + mom * unbiased;
  }
}

template <typename T>
void BatchNorm2d<T>::backward(const LayerCache<T>& cache, const Tensor<T>& dy, Tensor<T>* dx,
                              std::vector<Buffer<T>>& grads) const {
  if (dy.c != c_ || dy.n != cache.n || dy.size() != cache.a.size()) {
    shape_error("batchnorm backward", dy.item_shape(), std::to_string(c_) + " channels");
  }
  grads.resize(2);
  grads[0].assign(c_, T(0));
  grads[1].assign(c_, T(0));
  if (dx) *dx = Tensor<T>(dy.n, dy.c, dy.h, dy.w);
  const std::size_t plane = static_cast<std::size_t>(dy.h) * dy.w, m = plane * dy.n;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < c_; ++c) {
    T sdy = T(0), sdyx = T(0);
    for (int i = 0; i < dy.n; ++i) {
      const std::size_t off = (static_cast<std::size_t>(i) * c_ + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        sdy += dy.values[off + k];
        sdyx += dy.values[off + k] * cache.a[off + k];
      }
    }
    grads[0][c] = sdyx;
    grads[1][c] = sdy;
    if (!dx) continue;
    const T scale = gamma_[c] * cache.b[c] / static_cast<T>(m);
    for (int i = 0; i < dy.n; ++i) {
      const std::size_t off = (static_cast<std::size_t>(i) * c_ + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        dx->values[off + k] =
            scale * (static_cast<T>(m) * dy.values[off + k] - sdy - cache.a[off + k] * sdyx);
      }
    }
  }
}

// ---- relu ----

template <typename T>
void ReLU<T>::forward(const Tensor<T>& x, Tensor<T>& y) const {
  y = x;
  for (auto& v : y.values) v = v > T(0) ? v : T(0);
}

template <typename T>
void ReLU<T>::forward_train(const Tensor<T>& x, Tensor<T>& y, LayerCache<T>& cache) {
  cache.n = x.n;
  cache.a = x.values;
  forward(x, y);
}

template <typename T>
void ReLU<T>::backward(const LayerCache<T>& cache, const Tensor<T>& dy, Tensor<T>* dx,
                       std::vector<Buffer<T>>&) const {
  if (dy.size() != cache.a.size()) shape_error("relu backward", dy.item_shape(), "the cached input shape");
  if (!dx) return;
  *dx = dy;
  for (std::size_t k = 0; k < dy.size(); ++k)
    if (!(cache.a[k] > T(0))) dx->values[k] = T(0);
}

// ---- fully connected ----

template <typename T>
FullyConnected<T>::FullyConnected(const LayerSpec& spec, const Shape& in)
    : in_f_(spec.in_features), out_f_(spec.out_features), in_(in) {
  if (static_cast<int>(in.size()) != in_f_) shape_error("fullyconnected", in, std::to_string(in_f_) + " features");
  if (out_f_ < 1) throw Error(ErrorKind::ShapeMismatch, "fullyconnected needs at least one output");
  weight_.assign(static_cast<std::size_t>(out_f_) * in_f_, T(0));
  bias_.assign(out_f_, T(0));
}

template <typename T>
Shape FullyConnected<T>::output_shape(const Shape& in) const {
  if (in != in_) shape_error("fullyconnected", in, to_string(in_));
  return {out_f_, 1, 1};
}

template <typename T>
std::vector<std::uint32_t> FullyConnected<T>::file_shape() const {
  return {static_cast<std::uint32_t>(out_f_), static_cast<std::uint32_t>(in_f_)};
}

template <typename T>
void FullyConnected<T>::init(std::mt19937_64& rng) {
  he_uniform(weight_, in_f_, rng);
  std::fill(bias_.begin(), bias_.end(), T(0));
}

template <typename T>
void FullyConnected<T>::forward(const Tensor<T>& x, Tensor<T>& y) const {
  check_input(x, in_, "fullyconnected");
  y = Tensor<T>(x.n, out_f_, 1, 1);
  Map<T> Y(y.values.data(), x.n, out_f_);
  Y.noalias() = CMap<T>(x.values.data(), x.n, in_f_) * CMap<T>(weight_.data(), out_f_, in_f_).transpose();
  Y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias_.data(), out_f_);
}

template <typename T>
void FullyConnected<T>::forward_train(const Tensor<T>& x, Tensor<T>& y, LayerCache<T>& cache) {
  cache.n = x.n;
  cache.a = x.values;
  forward(x, y);
}

template <typename T>
void FullyConnected<T>::backward(const LayerCache<T>& cache, const Tensor<T>& dy, Tensor<T>* dx,
                                 std::vector<Buffer<T>>& grads) const {
  const int n = cache.n;
  if (dy.n != n || dy.item_shape() != Shape{out_f_, 1, 1}) {
    shape_error("fullyconnected backward", dy.item_shape(), to_string(Shape{out_f_, 1, 1}));
  }
  CMap<T> dY(dy.values.data(), n, out_f_), X(cache.a.data(), n, in_f_);
  grads.resize(2);
  grads[0].resize(weight_.size());
  grads[1].resize(bias_.size());
  Map<T>(grads[0].data(), out_f_, in_f_).noalias() = dY.transpose() * X;
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(grads[1].data(), out_f_) = dY.colwise().sum();
  if (dx) {
    *dx = Tensor<T>(n, in_);
    Map<T>(dx->values.data(), n, in_f_).noalias() = dY * CMap<T>(weight_.data(), out_f_, in_f_);
  }
}

// ---- reshape ----

template <typename T>
Reshape<T>::Reshape(const LayerSpec& spec, const Shape& in) : in_(in), out_{spec.out_channels, spec.out_h, spec.out_w} {
  if (in.size() != out_.size() || out_.size() == 0) shape_error("reshape", in, std::to_string(out_.size()) + " values");
}

template <typename T>
Shape Reshape<T>::output_shape(const Shape& in) const {
  if (in != in_) shape_error("reshape", in, to_string(in_));
  return out_;
}

template <typename T>
std::vector<std::uint32_t> Reshape<T>::file_shape() const {
  return {static_cast<std::uint32_t>(out_.c), static_cast<std::uint32_t>(out_.h), static_cast<std::uint32_t>(out_.w)};
}

template <typename T>
void Reshape<T>::forward(const Tensor<T>& x, Tensor<T>& y) const {
  check_input(x, in_, "reshape");
  y = x;
  y.c = out_.c;
  y.h = out_.h;
  y.w = out_.w;
}

template <typename T>
void Reshape<T>::forward_train(const Tensor<T>& x, Tensor<T>& y, LayerCache<T>& cache) {
  cache.n = x.n;
  forward(x, y);
}

template <typename T>
void Reshape<T>::backward(const LayerCache<T>& cache, const Tensor<T>& dy, Tensor<T>* dx,
                          std::vector<Buffer<T>>&) const {
  if (dy.n != cache.n || dy.item_shape() != out_) shape_error("reshape backward", dy.item_shape(), to_string(out_));
  if (!dx) return;
  *dx = dy;
  dx->c = in_.c;
  dx->h = in_.h;
  dx->w = in_.w;
}

#define LFD_INSTANTIATE(T)                                                              \
  template std::unique_ptr<Layer<T>> make_layer<T>(const LayerSpec&, const Shape&);     \
  template class Conv2d<T>;                                                             \
  template class ConvTranspose2d<T>;                                                    \
  template class BatchNorm2d<T>;                                                        \
  template class ReLU<T>;                                                               \
  template class FullyConnected<T>;                                                     \
  template class Reshape<T>;
LFD_INSTANTIATE(float)
LFD_INSTANTIATE(double)
#undef LFD_INSTANTIATE

}  // namespace lfd::net
