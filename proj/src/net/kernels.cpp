#include "lfdepth/net/kernels.hpp"

#include <Eigen/Core>
#include <vector>

#include "lfdepth/error.hpp"
#include "lfdepth/net/tensor.hpp"

namespace lfd::net {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string to_string(const Shape& s) {
  return std::to_string(s.c) + "x" + std::to_string(s.h) + "x" + std::to_string(s.w);
}

ConvGeometry ConvGeometry::make(int in_c, int in_h, int in_w, int kernel, int stride, int padding) {
  ConvGeometry g{in_c, in_h, in_w, kernel, stride, padding, 0, 0};
  if (kernel < 1 || stride < 1 || padding < 0) throw Error(ErrorKind::ShapeMismatch, "bad convolution parameters");
  g.out_h = (in_h + 2 * padding - kernel) / stride + 1;
  g.out_w = (in_w + 2 * padding - kernel) / stride + 1;
  if (in_h + 2 * padding < kernel || in_w + 2 * padding < kernel || g.out_h < 1 || g.out_w < 1) {
    throw Error(ErrorKind::ShapeMismatch, "kernel larger than padded input");
  }
  return g;
}

template <typename T>
void im2col(const T* x, int n, const ConvGeometry& g, T* col) {
  const std::size_t P = g.out_pixels(), ld = n * P, isz = static_cast<std::size_t>(g.in_c) * g.in_h * g.in_w;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const T* xi = x + i * isz;
    for (int c = 0; c < g.in_c; ++c) {
      for (int ki = 0; ki < g.kernel; ++ki) {
        for (int kj = 0; kj < g.kernel; ++kj) {
          T* row = col + ((static_cast<std::size_t>(c) * g.kernel + ki) * g.kernel + kj) * ld + i * P;
          for (int oy = 0; oy < g.out_h; ++oy) {
            const int iy = oy * g.stride - g.padding + ki;
            T* dst = row + oy * g.out_w;
            if (iy < 0 || iy >= g.in_h) {
              for (int ox = 0; ox < g.out_w; ++ox) dst[ox] = T(0);
              continue;
            }
            const T* src = xi + (static_cast<std::size_t>(c) * g.in_h + iy) * g.in_w;
            for (int ox = 0; ox < g.out_w; ++ox) {
              const int ix = ox * g.stride - g.padding + kj;
              dst[ox] = (ix >= 0 && ix < g.in_w) ? src[ix] : T(0);
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, int n, const ConvGeometry& g, T* x) {
  const std::size_t P = g.out_pixels(), ld = n * P, isz = static_cast<std::size_t>(g.in_c) * g.in_h * g.in_w;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    T* xi = x + i * isz;
    for (int c = 0; c < g.in_c; ++c) {
      for (int ki = 0; ki < g.kernel; ++ki) {
        for (int kj = 0; kj < g.kernel; ++kj) {
          const T* row = col + ((static_cast<std::size_t>(c) * g.kernel + ki) * g.kernel + kj) * ld + i * P;
          for (int oy = 0; oy < g.out_h; ++oy) {
            const int iy = oy * g.stride - g.padding + ki;
            if (iy < 0 || iy >= g.in_h) continue;
            T* dst = xi + (static_cast<std::size_t>(c) * g.in_h + iy) * g.in_w;
            const T* src = row + oy * g.out_w;
            for (int ox = 0; ox < g.out_w; ++ox) {
              const int ix = ox * g.stride - g.padding + kj;
              if (ix >= 0 && ix < g.in_w) dst[ix] += src[ox];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void nchw_to_channel_major(const T* x, int n, int ch, int pixels, T* out) {
  const std::size_t ld = static_cast<std::size_t>(n) * pixels;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < ch; ++c)
      std::copy_n(x + (static_cast<std::size_t>(i) * ch + c) * pixels, pixels, out + c * ld + i * pixels);
}

template <typename T>
void channel_major_to_nchw(const T* x, int n, int ch, int pixels, T* out) {
  const std::size_t ld = static_cast<std::size_t>(n) * pixels;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < ch; ++c)
      std::copy_n(x + c * ld + i * pixels, pixels, out + (static_cast<std::size_t>(i) * ch + c) * pixels);
}

template <typename T>
void conv2d_forward(const T* x, int n, const ConvGeometry& g, const T* weight, const T* bias, int out_c, T* y) {
  const int P = g.out_pixels();
  const Eigen::Index cols = static_cast<Eigen::Index>(n) * P;
  Buffer<T> col(static_cast<std::size_t>(g.rows()) * cols), ym(static_cast<std::size_t>(out_c) * cols);
  im2col(x, n, g, col.data());
  Eigen::Map<RowMat<T>> Y(ym.data(), out_c, cols);
  Y.noalias() = Eigen::Map<const RowMat<T>>(weight, out_c, g.rows()) * Eigen::Map<const RowMat<T>>(col.data(), g.rows(), cols);
  for (int c = 0; c < out_c; ++c) Y.row(c).array() += bias[c];
  channel_major_to_nchw(ym.data(), n, out_c, P, y);
}

template <typename T>
void conv2d_forward_reference(const T* x, int n, const ConvGeometry& g, const T* weight, const T* bias, int out_c,
                              T* y) {
  const int k = g.kernel;
  for (int i = 0; i < n; ++i)
    for (int co = 0; co < out_c; ++co)
      for (int oy = 0; oy < g.out_h; ++oy)
        for (int ox = 0; ox < g.out_w; ++ox) {
          T acc = bias[co];
          for (int ci = 0; ci < g.in_c; ++ci)
            for (int ki = 0; ki < k; ++ki)
              for (int kj = 0; kj < k; ++kj) {
                const int iy = oy * g.stride - g.padding + ki, ix = ox * g.stride - g.padding + kj;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                acc += weight[((co * g.in_c + ci) * k + ki) * k + kj] *
                       x[((static_cast<std::size_t>(i) * g.in_c + ci) * g.in_h + iy) * g.in_w + ix];
              }
          y[((static_cast<std::size_t>(i) * out_c + co) * g.out_h + oy) * g.out_w + ox] = acc;
        }
}

template <typename T>
void conv_transpose2d_forward(const T* x, int n, const ConvGeometry& g, const T* weight, const T* bias, int in_c,
                              T* y) {
  const int P = g.out_pixels();
  const Eigen::Index cols = static_cast<Eigen::Index>(n) * P;
  Buffer<T> xm(static_cast<std::size_t>(in_c) * cols), col(static_cast<std::size_t>(g.rows()) * cols);
  nchw_to_channel_major(x, n, in_c, P, xm.data());
  Eigen::Map<RowMat<T>>(col.data(), g.rows(), cols).noalias() =
      Eigen::Map<const RowMat<T>>(weight, in_c, g.rows()).transpose() * Eigen::Map<const RowMat<T>>(xm.data(), in_c, cols);
  const std::size_t osz = static_cast<std::size_t>(g.in_c) * g.in_h * g.in_w;
  std::fill(y, y + n * osz, T(0));
  col2im(col.data(), n, g, y);
  const std::size_t plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < g.in_c; ++c)
      for (std::size_t p = 0; p < plane; ++p) y[i * osz + c * plane + p] += bias[c];
}

template <typename T>
void conv_transpose2d_forward_reference(const T* x, int n, const ConvGeometry& g, const T* weight, const T* bias,
                                        int in_c, T* y) {
  const int k = g.kernel, out_c = g.in_c;
  for (int i = 0; i < n; ++i)
    for (int co = 0; co < out_c; ++co)
      for (int p = 0; p < g.in_h * g.in_w; ++p) y[(static_cast<std::size_t>(i) * out_c + co) * g.in_h * g.in_w + p] = bias[co];
  for (int i = 0; i < n; ++i)
    for (int ci = 0; ci < in_c; ++ci)
      for (int iy = 0; iy < g.out_h; ++iy)
        for (int ix = 0; ix < g.out_w; ++ix) {
          const T v = x[((static_cast<std::size_t>(i) * in_c + ci) * g.out_h + iy) * g.out_w + ix];
          for (int co = 0; co < out_c; ++co)
            for (int ki = 0; ki < k; ++ki)
              for (int kj = 0; kj < k; ++kj) {
                const int oy = iy * g.stride - g.padding + ki, ox = ix * g.stride - g.padding + kj;
                if (oy < 0 || oy >= g.in_h || ox < 0 || ox >= g.in_w) continue;
                y[((static_cast<std::size_t>(i) * out_c + co) * g.in_h + oy) * g.in_w + ox] +=
                    v * weight[((ci * out_c + co) * k + ki) * k + kj];
              }
        }
}

#define LFD_INSTANTIATE(T)                                                                                      \
  template void im2col<T>(const T*, int, const ConvGeometry&, T*);                                              \
  template void col2im<T>(const T*, int, const ConvGeometry&, T*);                                              \
  template void nchw_to_channel_major<T>(const T*, int, int, int, T*);                                          \
  template void channel_major_to_nchw<T>(const T*, int, int, int, T*);                                          \
  template void conv2d_forward<T>(const T*, int, const ConvGeometry&, const T*, const T*, int, T*);             \
  template void conv2d_forward_reference<T>(const T*, int, const ConvGeometry&, const T*, const T*, int, T*);   \
  template void conv_transpose2d_forward<T>(const T*, int, const ConvGeometry&, const T*, const T*, int, T*);   \
  template void conv_transpose2d_forward_reference<T>(const T*, int, const ConvGeometry&, const T*, const T*, int, T*);
LFD_INSTANTIATE(float)
LFD_INSTANTIATE(double)
#undef LFD_INSTANTIATE

}  // namespace lfd::net
