#include "lfdepth/stereo/sgm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lfdepth/error.hpp"

namespace lfd {

void SgmParams::validate() const {
  range.validate();
  if (p1 < 0 || p2 < p1 || p2 > 60000) throw Error(ErrorKind::InvalidArgument, "SGM penalties need 0 <= P1 <= P2 <= 60000");
  if (paths < 1 || paths > 8) throw Error(ErrorKind::InvalidArgument, "SGM path count must be in [1, 8]");
  if (!(uniqueness >= 0.0 && uniqueness < 1.0)) throw Error(ErrorKind::InvalidArgument, "uniqueness must be in [0, 1)");
  if (!(lr_threshold >= 0.0)) throw Error(ErrorKind::InvalidArgument, "left-right threshold must be non-negative");
}

namespace {

// One step of the path recursion at a pixel. `prev` is null when the predecessor lies outside the image.
inline void path_step(const std::uint16_t* c, const std::uint16_t* prev, std::uint16_t* out, int nd, int p1, int p2) {
  if (!prev) {
    std::copy(c, c + nd, out);
    return;
  }
  int pmin = prev[0];
  for (int i = 1; i < nd; ++i) pmin = std::min<int>(pmin, prev[i]);
  const int jump = pmin + p2;
  for (int i = 0; i < nd; ++i) {
    int best = std::min<int>(prev[i], jump);
    if (i > 0) best = std::min(best, prev[i - 1] + p1);
    if (i + 1 < nd) best = std::min(best, prev[i + 1] + p1);
    out[i] = static_cast<std::uint16_t>(c[i] + best - pmin);
  }
}

void add_path(const CostVolume& cv, int path, int p1, int p2, std::vector<std::uint32_t>& sum) {
  const int w = cv.width, h = cv.height, nd = cv.range.count();
  const int dx = kSgmPaths[path][0], dy = kSgmPaths[path][1];
  const std::uint16_t* c = cv.cost.data();
  if (dy == 0) {
#pragma omp parallel
    {
      std::vector<std::uint16_t> prev(nd), cur(nd);
#pragma omp for schedule(static)
      for (int y = 0; y < h; ++y) {
        for (int k = 0; k < w; ++k) {
          const int x = dx > 0 ? k : w - 1 - k;
          const std::size_t p = static_cast<std::size_t>(y) * w + x;
          path_step(c + p * nd, k == 0 ? nullptr : prev.data(), cur.data(), nd, p1, p2);
          for (int i = 0; i < nd; ++i) sum[p * nd + i] += cur[i];
          std::swap(prev, cur);
        }
      }
    }
    return;
  }
  std::vector<std::uint16_t> prev(static_cast<std::size_t>(w) * nd), cur(prev.size());
  for (int k = 0; k < h; ++k) {
    const int y = dy > 0 ? k : h - 1 - k;
#pragma omp parallel for schedule(static)
    for (int x = 0; x < w; ++x) {
      const int px = x - dx;
      const bool has_prev = k > 0 && px >= 0 && px < w;
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      std::uint16_t* out = cur.data() + static_cast<std::size_t>(x) * nd;
      path_step(c + p * nd, has_prev ? prev.data() + static_cast<std::size_t>(px) * nd : nullptr, out, nd, p1, p2);
      for (int i = 0; i < nd; ++i) sum[p * nd + i] += out[i];
    }
    std::swap(prev, cur);
  }
}

// Index of the minimum (first on ties) and whether it passes the uniqueness test.
struct Winner {
  int index = 0;
  bool unique = false;
};

template <typename Get>
Winner pick(int nd, Get get, double uniqueness) {
  Winner w;
  std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
  for (int i = 0; i < nd; ++i)
    if (get(i) < best) {
      best = get(i);
      w.index = i;
    }
  std::uint32_t second = std::numeric_limits<std::uint32_t>::max();
  for (int i = 0; i < nd; ++i)
    if (std::abs(i - w.index) > 1) second = std::min(second, get(i));
  w.unique = second == std::numeric_limits<std::uint32_t>::max() || best < (1.0 - uniqueness) * second;
  return w;
}

double parabola_offset(double c0, double c1, double c2) {
  const double denom = c0 - 2.0 * c1 + c2;
  return denom > 0.0 ? (c0 - c2) / (2.0 * denom) : 0.0;
}

}  // namespace

std::vector<std::uint16_t> sgm_path_cost(const CostVolume& cv, int path, int p1, int p2) {
  const int w = cv.width, h = cv.height, nd = cv.range.count();
  const int dx = kSgmPaths.at(path)[0], dy = kSgmPaths.at(path)[1];
  std::vector<std::uint16_t> l(cv.cost.size());
  for (int ky = 0; ky < h; ++ky) {
    const int y = dy >= 0 ? ky : h - 1 - ky;
    for (int kx = 0; kx < w; ++kx) {
      const int x = dx >= 0 ? kx : w - 1 - kx;
      const int px = x - dx, py = y - dy;
      const bool inside = px >= 0 && py >= 0 && px < w && py < h;
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      for (int i = 0; i < nd; ++i) {
        const int c = cv.cost[p * nd + i];
        if (!inside) {
          l[p * nd + i] = static_cast<std::uint16_t>(c);
          continue;
        }
        const std::uint16_t* q = &l[(static_cast<std::size_t>(py) * w + px) * nd];
        const int qmin = *std::min_element(q, q + nd);
        int m = std::min(static_cast<int>(q[i]), qmin + p2);
        if (i > 0) m = std::min(m, q[i - 1] + p1);
        if (i < nd - 1) m = std::min(m, q[i + 1] + p1);
        l[p * nd + i] = static_cast<std::uint16_t>(c + m - qmin);
      }
    }
  }
  return l;
}

std::vector<std::uint32_t> sgm_aggregate(const CostVolume& cost, const SgmParams& params) {
  params.validate();
  std::vector<std::uint32_t> sum(cost.cost.size(), 0);
  for (int r = 0; r < params.paths; ++r) add_path(cost, r, params.p1, params.p2, sum);
  return sum;
}

std::vector<std::uint32_t> sgm_aggregate_serial(const CostVolume& cost, const SgmParams& params) {
  params.validate();
  std::vector<std::uint32_t> sum(cost.cost.size(), 0);
  for (int r = 0; r < params.paths; ++r) {
    const auto l = sgm_path_cost(cost, r, params.p1, params.p2);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += l[i];
  }
  return sum;
}

SgmResult select_disparities(const std::vector<std::uint32_t>& s, const CostVolume& cv, const SgmParams& params) {
  params.validate();
  const int w = cv.width, h = cv.height, nd = cv.range.count(), dmin = cv.range.min;
  if (s.size() != cv.cost.size()) throw Error(ErrorKind::ShapeMismatch, "aggregated volume does not match the cost volume");
  SgmResult r{DisparityMap(w, h), DisparityMap(w, h), DisparityMap(w, h)};
  const auto at = [&](int x, int y, int i) { return s[(static_cast<std::size_t>(y) * w + x) * nd + i]; };

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Winner lw = pick(nd, [&](int i) { return at(x, y, i); }, params.uniqueness);
      if (lw.unique) {
        double d = dmin + lw.index;
        if (params.subpixel && lw.index > 0 && lw.index < nd - 1)
          d += parabola_offset(at(x, y, lw.index - 1), at(x, y, lw.index), at(x, y, lw.index + 1));
        r.left_raw.set(x, y, d);
      }
      // Right view: the left pixel matching right pixel x at disparity d is x + d.
      const auto right_cost = [&](int i) {
        const int xl = x + dmin + i;
        return xl >= 0 && xl < w ? at(xl, y, i) : std::numeric_limits<std::uint32_t>::max();
      };
      const Winner rw = pick(nd, right_cost, params.uniqueness);
      if (rw.unique && right_cost(rw.index) != std::numeric_limits<std::uint32_t>::max()) {
        double d = dmin + rw.index;
        if (params.subpixel && rw.index > 0 && rw.index < nd - 1) {
          const auto c0 = right_cost(rw.index - 1), c2 = right_cost(rw.index + 1);
          if (c0 != std::numeric_limits<std::uint32_t>::max() && c2 != std::numeric_limits<std::uint32_t>::max())
            d += parabola_offset(c0, right_cost(rw.index), c2);
        }
        r.right.set(x, y, d);
      }
    }

  r.left = r.left_raw;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!r.left.is_valid(x, y)) continue;
      const double d = r.left.value(x, y);
      const int xr = round_half_up(x - d);
      if (xr < 0 || xr >= w || !r.right.is_valid(xr, y) || std::abs(d - r.right.value(xr, y)) > params.lr_threshold)
        r.left.invalidate(x, y);
    }
  return r;
}

SgmResult sgm(const GrayImage& left, const GrayImage& right, const SgmParams& params) {
  params.validate();
  if (left.width() != right.width() || left.height() != right.height() || left.channels() != 1 || right.channels() != 1)
    throw Error(ErrorKind::ShapeMismatch, "stereo images must be single-channel and equally sized");
  const auto cv = census_cost_volume(census_transform(left), census_transform(right), left.width(), left.height(), params.range);
  return select_disparities(sgm_aggregate(cv, params), cv, params);
}

DisparityMap remove_speckles(const DisparityMap& disp, int max_size, double max_diff) {
  DisparityMap out = disp;
  const int w = disp.width, h = disp.height;
  std::vector<int> label(disp.values.size(), -1);
  std::vector<std::size_t> stack, members;
  int next = 0;
  for (std::size_t start = 0; start < label.size(); ++start) {
    if (!disp.valid[start] || label[start] >= 0) continue;
    members.clear();
    stack.assign(1, start);
    label[start] = next;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      members.push_back(p);
      const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
      const int nx[4] = {x - 1, x + 1, x, x}, ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
        const std::size_t q = static_cast<std::size_t>(ny[k]) * w + nx[k];
        if (!disp.valid[q] || label[q] >= 0 || std::abs(disp.values[q] - disp.values[p]) > max_diff) continue;
        label[q] = next;
        stack.push_back(q);
      }
    }
    if (static_cast<int>(members.size()) < max_size)
      for (std::size_t p : members) {
        out.values[p] = 0.0f;
        out.valid[p] = 0;
      }
    ++next;
  }
  return out;
}

DisparityMap regularize(const DisparityMap& disp, const GrayImage& image, const RegularizeParams& params) {
  if (image.width() != disp.width || image.height() != disp.height)
    throw Error(ErrorKind::ShapeMismatch, "regularization image does not match the disparity map");
  DisparityMap out = remove_speckles(disp, params.speckle_size, params.speckle_max_diff);
  const auto texture = texture_population(image, params.texture_tolerance);
  for (std::size_t i = 0; i < texture.size(); ++i)
    if (out.valid[i] && texture[i] < params.min_texture) {
      out.values[i] = 0.0f;
      out.valid[i] = 0;
    }
  return out;
}

}  // namespace lfd
