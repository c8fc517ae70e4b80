#include "lfdepth/plenoptic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "lfdepth/error.hpp"

namespace lfd {

BayerPattern parse_bayer_pattern(const std::string& name) {
  if (name == "RGGB") return BayerPattern::RGGB;
  if (name == "BGGR") return BayerPattern::BGGR;
  if (name == "GRBG") return BayerPattern::GRBG;
  if (name == "GBRG") return BayerPattern::GBRG;
  throw Error(ErrorKind::FormatError, "unknown Bayer pattern '" + name + "'");
}

std::string to_string(BayerPattern p) {
  switch (p) {
    case BayerPattern::RGGB: return "RGGB";
    case BayerPattern::BGGR: return "BGGR";
    case BayerPattern::GRBG: return "GRBG";
    case BayerPattern::GBRG: return "GBRG";
  }
  return "RGGB";
}

int bayer_color(BayerPattern p, int x, int y) {
  // Colours of the 2x2 tile in reading order.
  static constexpr int kTiles[4][4] = {{0, 1, 1, 2}, {2, 1, 1, 0}, {1, 0, 2, 1}, {1, 2, 0, 1}};
  return kTiles[static_cast<int>(p)][(y & 1) * 2 + (x & 1)];
}

RawBayerImage to_raw(const Gray16& img, BayerPattern pattern) {
  return {img.width, img.height, pattern, img.samples};
}

Gray16 to_gray16(const RawBayerImage& raw) { return {raw.width, raw.height, raw.samples}; }

RgbImage debayer(const RawBayerImage& raw) {
  if (raw.width % 2 != 0 || raw.height % 2 != 0) {
    throw Error(ErrorKind::OddDimensions,
                std::to_string(raw.width) + "x" + std::to_string(raw.height) + " is not even in both axes");
  }
  if (raw.samples.size() != static_cast<std::size_t>(raw.width) * raw.height) {
    throw Error(ErrorKind::InvalidArgument, "sample count does not match dimensions");
  }
  const int w = raw.width, h = raw.height;
  RgbImage rgb(w, h, 3);
  if (w == 0 || h == 0) return rgb;
  auto reflect = [](int i, int n) { return i < 0 ? -i : (i >= n ? 2 * n - 2 - i : i); };
  constexpr float kScale = 65535.0f;

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int own = bayer_color(raw.pattern, x, y);
      float sum[3] = {0, 0, 0};
      int count[3] = {0, 0, 0};
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int sx = reflect(x + dx, w), sy = reflect(y + dy, h);
          // Colour is a function of the unreflected position's parity, which reflection preserves.
          const int c = bayer_color(raw.pattern, x + dx, y + dy);
          sum[c] += raw.samples[static_cast<std::size_t>(sy) * w + sx];
          ++count[c];
        }
      }
      for (int c = 0; c < 3; ++c) {
        const float v = c == own ? static_cast<float>(raw.samples[static_cast<std::size_t>(y) * w + x])
                                 : sum[c] / static_cast<float>(count[c]);
        rgb.at(x, y, c) = v / kScale;
      }
    }
  }
  return rgb;
}

RawBayerImage mosaic(const RgbImage& rgb, BayerPattern pattern) {
  RawBayerImage raw{rgb.width(), rgb.height(), pattern, {}};
  raw.samples.resize(rgb.plane_size());
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      const float v = std::clamp(rgb.at(x, y, bayer_color(pattern, x, y)), 0.0f, 1.0f);
      raw.samples[static_cast<std::size_t>(y) * rgb.width() + x] = static_cast<std::uint16_t>(std::lround(v * 65535.0f));
    }
  }
  return raw;
}

GrayImage to_gray(const RgbImage& rgb) {
  GrayImage g(rgb.width(), rgb.height(), 1);
  const auto n = rgb.plane_size();
  const auto r = rgb.plane(0), gg = rgb.plane(1), b = rgb.plane(2);
  for (std::size_t i = 0; i < n; ++i) g.data()[i] = (r[i] + gg[i] + b[i]) / 3.0f;
  return g;
}

std::vector<float> crop_microlens(const RgbImage& img, Pixel centroid, int size) {
  const int cx = round_half_up(centroid.x), cy = round_half_up(centroid.y);
  const int x0 = cx - size / 2, y0 = cy - size / 2;
  if (x0 < 0 || y0 < 0 || x0 + size > img.width() || y0 + size > img.height()) {
    throw Error(ErrorKind::OutOfBounds, "crop at (" + std::to_string(centroid.x) + ", " +
                                            std::to_string(centroid.y) + ") leaves the image");
  }
  std::vector<float> patch(static_cast<std::size_t>(3) * size * size);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < size; ++y) {
      const float* src = &img.at(x0, y0 + y, c);
      std::copy(src, src + size, patch.begin() + (static_cast<std::size_t>(c) * size + y) * size);
    }
  }
  return patch;
}

namespace {

bool crop_fits(const RgbImage& img, Pixel p, int size) {
  const int x0 = round_half_up(p.x) - size / 2, y0 = round_half_up(p.y) - size / 2;
  return x0 >= 0 && y0 >= 0 && x0 + size <= img.width() && y0 + size <= img.height();
}

}  // namespace

std::optional<FlowerStack> build_flower_stack(const RgbImage& img, const MicrolensGrid& grid, AxialCoord a) {
  const Lens& center = grid.lens(a);
  std::array<Pixel, kFlowerLenses> centers;
  centers[0] = center.center;
  for (std::size_t k = 0; k < kHexDirections.size(); ++k) {
    auto idx = grid.find(a + kHexDirections[k]);
    if (!idx) return std::nullopt;
    centers[k + 1] = grid.lenses()[*idx].center;
  }
  for (const auto& p : centers) {
    if (!crop_fits(img, p, kFlowerCropSize)) return std::nullopt;
  }
  FlowerStack stack{a, center.center, {}};
  const std::size_t per_lens = static_cast<std::size_t>(3) * kFlowerCropSize * kFlowerCropSize;
  stack.channels.resize(per_lens * kFlowerLenses);
  for (int k = 0; k < kFlowerLenses; ++k) {
    const auto patch = crop_microlens(img, centers[k], kFlowerCropSize);
    std::copy(patch.begin(), patch.end(), stack.channels.begin() + k * per_lens);
  }
  return stack;
}

std::vector<FlowerStack> build_all_flower_stacks(const RgbImage& img, const MicrolensGrid& grid) {
  const auto& lenses = grid.lenses();
  std::vector<std::optional<FlowerStack>> slots(lenses.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < lenses.size(); ++i) slots[i] = build_flower_stack(img, grid, lenses[i].coord);
  std::vector<FlowerStack> out;
  for (auto& s : slots) {
    if (s) out.push_back(std::move(*s));
  }
  return out;
}

double texture_score(const FlowerStack& stack) {
  constexpr int n = kFlowerCropSize;
  const std::size_t plane = static_cast<std::size_t>(n) * n;
  if (stack.channels.size() < 3 * plane) throw Error(ErrorKind::ShapeMismatch, "flower stack too small");
  std::array<double, n * n> gray{};
  for (std::size_t i = 0; i < plane; ++i) {
    gray[i] = (static_cast<double>(stack.channels[i]) + stack.channels[plane + i] + stack.channels[2 * plane + i]) / 3.0;
  }
  auto g = [&](int x, int y) { return gray[static_cast<std::size_t>(y) * n + x]; };
  double total = 0.0;
  for (int y = 1; y < n - 1; ++y) {
    for (int x = 1; x < n - 1; ++x) {
      const double gx = (g(x + 1, y - 1) + 2 * g(x + 1, y) + g(x + 1, y + 1)) - (g(x - 1, y - 1) + 2 * g(x - 1, y) + g(x - 1, y + 1));
      const double gy = (g(x - 1, y + 1) + 2 * g(x, y + 1) + g(x + 1, y + 1)) - (g(x - 1, y - 1) + 2 * g(x, y - 1) + g(x + 1, y - 1));
      total += std::sqrt(gx * gx + gy * gy);
    }
  }
  return total / ((n - 2) * (n - 2));
}

SparseDepthMap filter_sparse_depth(const SparseDepthMap& depths, const std::vector<FlowerStack>& stacks,
                                   double threshold) {
  std::unordered_map<AxialCoord, const FlowerStack*, AxialHash> by_coord;
  for (const auto& s : stacks) by_coord.emplace(s.center, &s);
  SparseDepthMap out;
  out.source = depths.source;
  for (const auto& e : depths.entries) {
    auto it = by_coord.find(e.coord);
    if (it == by_coord.end()) {
      throw Error(ErrorKind::MismatchedKeys,
                  "no flower stack for lens (" + std::to_string(e.coord.q) + "," + std::to_string(e.coord.r) + ")");
    }
    if (texture_score(*it->second) >= threshold) out.entries.push_back(e);
  }
  return out;
}

FlowerStackBatch make_batch(const std::vector<FlowerStack>& stacks) {
  FlowerStackBatch b;
  b.n = static_cast<int>(stacks.size());
  b.values.reserve(b.item_size() * stacks.size());
  for (const auto& s : stacks) {
    if (s.channels.size() != b.item_size()) throw Error(ErrorKind::ShapeMismatch, "flower stack has wrong size");
    b.values.insert(b.values.end(), s.channels.begin(), s.channels.end());
    b.coords.push_back(s.center);
    b.centroids.push_back(s.centroid);
  }
  return b;
}

std::vector<FlowerStack> split_batch(const FlowerStackBatch& batch) {
  std::vector<FlowerStack> out;
  out.reserve(batch.n);
  const auto sz = batch.item_size();
  for (int i = 0; i < batch.n; ++i) {
    FlowerStack s{batch.coords[i], batch.centroids[i], {}};
    s.channels.assign(batch.values.begin() + i * sz, batch.values.begin() + (i + 1) * sz);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

constexpr std::uint32_t kArchiveVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void save_stack_archive(const std::string& path, const FlowerStackBatch& batch) {
  if (batch.values.size() != batch.item_size() * batch.n) throw Error(ErrorKind::ShapeMismatch, "batch size mismatch");
  std::string buf = "LFST";
  put_u32(buf, kArchiveVersion);
  put_u32(buf, static_cast<std::uint32_t>(batch.n));
  put_u32(buf, static_cast<std::uint32_t>(batch.channels));
  put_u32(buf, static_cast<std::uint32_t>(batch.height));
  put_u32(buf, static_cast<std::uint32_t>(batch.width));
  buf.reserve(buf.size() + batch.values.size() * 4 + batch.n * 16);
  for (float v : batch.values) put_u32(buf, std::bit_cast<std::uint32_t>(v));
  for (int i = 0; i < batch.n; ++i) {
    put_u32(buf, static_cast<std::uint32_t>(batch.coords[i].q));
    put_u32(buf, static_cast<std::uint32_t>(batch.coords[i].r));
    put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(batch.centroids[i].x)));
    put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(batch.centroids[i].y)));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::MissingAsset, "cannot write " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

FlowerStackBatch load_stack_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingAsset, "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 24 || std::memcmp(bytes.data(), "LFST", 4) != 0) {
    throw Error(ErrorKind::FormatError, path + ": not a flower-stack archive");
  }
  if (get_u32(&bytes[4]) != kArchiveVersion) throw Error(ErrorKind::FormatError, path + ": unsupported version");
  FlowerStackBatch b;
  b.n = static_cast<int>(get_u32(&bytes[8]));
  b.channels = static_cast<int>(get_u32(&bytes[12]));
  b.height = static_cast<int>(get_u32(&bytes[16]));
  b.width = static_cast<int>(get_u32(&bytes[20]));
  const std::size_t count = b.item_size() * b.n;
  if (bytes.size() != 24 + count * 4 + static_cast<std::size_t>(b.n) * 16) {
    throw Error(ErrorKind::FormatError, path + ": size does not match header");
  }
  b.values.resize(count);
  const unsigned char* p = bytes.data() + 24;
  for (std::size_t i = 0; i < count; ++i, p += 4) b.values[i] = std::bit_cast<float>(get_u32(p));
  for (int i = 0; i < b.n; ++i, p += 16) {
    b.coords.push_back({static_cast<std::int32_t>(get_u32(p)), static_cast<std::int32_t>(get_u32(p + 4))});
    b.centroids.push_back({std::bit_cast<float>(get_u32(p + 8)), std::bit_cast<float>(get_u32(p + 12))});
  }
  return b;
}

}  // namespace lfd
