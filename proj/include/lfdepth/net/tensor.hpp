#pragma once

#include <cstddef>
#include <new>
#include <string>
#include <vector>

namespace lfd::net {

/// 64-byte aligned storage. Eigen picks its vectorized peeling from the buffer address,
/// so fixed alignment is what makes reductions (and hence training) bitwise repeatable.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

template <typename T>
using Buffer = std::vector<T, AlignedAllocator<T>>;

/// Per-item shape (channels, height, width).
struct Shape {
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t size() const { return static_cast<std::size_t>(c) * h * w; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

/// Dense NCHW tensor, row-major.
template <typename T>
struct Tensor {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;
  Buffer<T> values;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, T fill = T{})
      : n(n_), c(c_), h(h_), w(w_), values(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}
  Tensor(int n_, Shape s, T fill = T{}) : Tensor(n_, s.c, s.h, s.w, fill) {}

  Shape item_shape() const { return {c, h, w}; }
  std::size_t item_size() const { return static_cast<std::size_t>(c) * h * w; }
  std::size_t size() const { return values.size(); }
  T* item(int i) { return values.data() + i * item_size(); }
  const T* item(int i) const { return values.data() + i * item_size(); }
  T& at(int i, int ch, int y, int x) { return values[((static_cast<std::size_t>(i) * c + ch) * h + y) * w + x]; }
  const T& at(int i, int ch, int y, int x) const {
    return values[((static_cast<std::size_t>(i) * c + ch) * h + y) * w + x];
  }

  bool operator==(const Tensor&) const = default;
};

using Tensor4 = Tensor<float>;

}  // namespace lfd::net
