#pragma once

#include <cstddef>

namespace lfd::net {

/// Geometry of a strided 2D convolution from (in_c, in_h, in_w) to (out_h, out_w).
struct ConvGeometry {
  int in_c = 0;
  int in_h = 0;
  int in_w = 0;
  int kernel = 3;
  int stride = 1;
  int padding = 0;
  int out_h = 0;
  int out_w = 0;

  static ConvGeometry make(int in_c, int in_h, int in_w, int kernel, int stride, int padding);
  int rows() const { return in_c * kernel * kernel; }
  int out_pixels() const { return out_h * out_w; }
};

// Column buffers are row-major [rows][n * out_pixels]; item i occupies columns
// [i * out_pixels, (i + 1) * out_pixels).

/// x: n items of in_c x in_h x in_w. OpenMP over items.
template <typename T>
void im2col(const T* x, int n, const ConvGeometry& g, T* col);

/// Adjoint of im2col: accumulates col into x (which the caller zeroes). OpenMP over items.
template <typename T>
void col2im(const T* col, int n, const ConvGeometry& g, T* x);

/// Moves between NCHW (n x ch x pixels) and channel-major [ch][n * pixels].
template <typename T>
void nchw_to_channel_major(const T* x, int n, int ch, int pixels, T* out);
template <typename T>
void channel_major_to_nchw(const T* x, int n, int ch, int pixels, T* out);

/// y = conv(x, weight) + bias. weight is (out_c, in_c, k, k); y is n x out_c x out_h x out_w.
/// The fast path is im2col + GEMM with OpenMP over items; the reference is a direct loop.
template <typename T>
void conv2d_forward(const T* x, int n, const ConvGeometry& g, const T* weight, const T* bias, int out_c, T* y);
template <typename T>
void conv2d_forward_reference(const T* x, int n, const ConvGeometry& g, const T* weight, const T* bias,
                              int out_c, T* y);

/// Transposed convolution: the adjoint of a conv whose input is the (out_c, out_h, out_w) result.
/// `g` describes that conv: g.in_* is the transposed-conv output, g.out_* its input.
/// weight is (in_c, out_c, k, k); x is n x in_c x g.out_h x g.out_w.
template <typename T>
void conv_transpose2d_forward(const T* x, int n, const ConvGeometry& g, const T* weight, const T* bias, int in_c,
                              T* y);
template <typename T>
void conv_transpose2d_forward_reference(const T* x, int n, const ConvGeometry& g, const T* weight, const T* bias,
                                        int in_c, T* y);

}  // namespace lfd::net
