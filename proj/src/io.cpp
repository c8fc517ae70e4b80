#include "lfdepth/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "lfdepth/error.hpp"

namespace lfd {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingAsset, "cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::MissingAsset, "cannot write " + path);
  return out;
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in, const std::string& path) {
  std::string tok;
  while (true) {
    int c = in.peek();
    if (c == EOF) break;
    if (std::isspace(c)) {
      in.get();
      if (!tok.empty()) break;
      continue;
    }
    if (c == '#' && tok.empty()) {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    tok.push_back(static_cast<char>(in.get()));
  }
  if (tok.empty()) throw Error(ErrorKind::FormatError, path + ": truncated header");
  return tok;
}

int header_int(std::istream& in, const std::string& path) {
  const auto tok = header_token(in, path);
  try {
    std::size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::FormatError, path + ": bad header value '" + tok + "'");
  }
}

float load_f32_le(const unsigned char* p) {
  std::uint32_t u = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                    (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(u);
}

void store_f32_le(unsigned char* p, float f) {
  const auto u = std::bit_cast<std::uint32_t>(f);
  p[0] = u & 0xff;
  p[1] = (u >> 8) & 0xff;
  p[2] = (u >> 16) & 0xff;
  p[3] = (u >> 24) & 0xff;
}

float load_f32_be(const unsigned char* p) {
  std::uint32_t u = (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
                    (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
  return std::bit_cast<float>(u);
}

}  // namespace

Gray16 read_pgm16(const std::string& path) {
  auto in = open_in(path);
  if (header_token(in, path) != "P5") throw Error(ErrorKind::FormatError, path + ": not a binary PGM");
  Gray16 img;
  img.width = header_int(in, path);
  img.height = header_int(in, path);
  const int maxval = header_int(in, path);
  if (maxval > 65535) throw Error(ErrorKind::FormatError, path + ": maxval out of range");
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  img.samples.resize(n);
  if (maxval < 256) {
    std::vector<unsigned char> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (!in) throw Error(ErrorKind::FormatError, path + ": truncated pixel data");
    // Rescale to the 16-bit range so downstream normalization is uniform.
    for (std::size_t i = 0; i < n; ++i) img.samples[i] = static_cast<std::uint16_t>(raw[i] * 257);
  } else {
    std::vector<unsigned char> raw(2 * n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw Error(ErrorKind::FormatError, path + ": truncated pixel data");
    for (std::size_t i = 0; i < n; ++i) img.samples[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
  }
  return img;
}

void write_pgm16(const std::string& path, const Gray16& img) {
  if (img.samples.size() != static_cast<std::size_t>(img.width) * img.height) {
    throw Error(ErrorKind::InvalidArgument, "sample count does not match dimensions");
  }
  auto out = open_out(path);
  out << "P5\n" << img.width << " " << img.height << "\n65535\n";
  std::vector<unsigned char> raw(2 * img.samples.size());
  for (std::size_t i = 0; i < img.samples.size(); ++i) {
    raw[2 * i] = static_cast<unsigned char>(img.samples[i] >> 8);
    raw[2 * i + 1] = static_cast<unsigned char>(img.samples[i] & 0xff);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

void write_ppm(const std::string& path, const Image<float>& rgb) {
  if (rgb.channels() != 3) throw Error(ErrorKind::InvalidArgument, "PPM needs 3 channels");
  auto out = open_out(path);
  out << "P6\n" << rgb.width() << " " << rgb.height() << "\n255\n";
  std::vector<unsigned char> raw(rgb.plane_size() * 3);
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(rgb.at(x, y, c), 0.0f, 1.0f);
        raw[(static_cast<std::size_t>(y) * rgb.width() + x) * 3 + c] =
            static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

Image<float> read_ppm(const std::string& path) {
  auto in = open_in(path);
  if (header_token(in, path) != "P6") throw Error(ErrorKind::FormatError, path + ": not a binary PPM");
  const int w = header_int(in, path), h = header_int(in, path), maxval = header_int(in, path);
  if (maxval > 255) throw Error(ErrorKind::FormatError, path + ": only 8-bit PPM is supported");
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw Error(ErrorKind::FormatError, path + ": truncated pixel data");
  Image<float> img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(x, y, c) = raw[(static_cast<std::size_t>(y) * w + x) * 3 + c] / static_cast<float>(maxval);
  return img;
}

void write_pfm(const std::string& path, const Image<float>& img) {
  if (img.channels() != 1 && img.channels() != 3) throw Error(ErrorKind::InvalidArgument, "PFM needs 1 or 3 channels");
  auto out = open_out(path);
  out << (img.channels() == 3 ? "PF" : "Pf") << "\n" << img.width() << " " << img.height() << "\n-1.0\n";
  const int ch = img.channels();
  std::vector<unsigned char> raw(img.plane_size() * ch * 4);
  std::size_t k = 0;
  for (int y = img.height() - 1; y >= 0; --y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < ch; ++c) {
        store_f32_le(&raw[k], img.at(x, y, c));
        k += 4;
      }
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

Image<float> read_pfm(const std::string& path) {
  auto in = open_in(path);
  const auto magic = header_token(in, path);
  int ch = 0;
  if (magic == "PF") {
    ch = 3;
  } else if (magic == "Pf") {
    ch = 1;
  } else {
    throw Error(ErrorKind::FormatError, path + ": not a PFM");
  }
  const int w = header_int(in, path), h = header_int(in, path);
  const auto scale_tok = header_token(in, path);
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    throw Error(ErrorKind::FormatError, path + ": bad PFM scale");
  }
  if (scale == 0.0) throw Error(ErrorKind::FormatError, path + ": PFM scale must be non-zero");
  const bool little = scale < 0.0;
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * ch * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw Error(ErrorKind::FormatError, path + ": truncated pixel data");
  Image<float> img(w, h, ch);
  std::size_t k = 0;
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        img.at(x, y, c) = little ? load_f32_le(&raw[k]) : load_f32_be(&raw[k]);
        k += 4;
      }
    }
  }
  return img;
}

void write_map_pfm(const std::string& path, const ScalarMap& map) {
  Image<float> img(map.width, map.height, 1);
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    img.data()[i] = map.valid[i] ? static_cast<float>(map.values[i]) : std::numeric_limits<float>::quiet_NaN();
  }
  write_pfm(path, img);
}

ScalarMap read_map_pfm(const std::string& path) {
  const auto img = read_pfm(path);
  if (img.channels() != 1) throw Error(ErrorKind::FormatError, path + ": expected a single-channel PFM");
  ScalarMap map(img.width(), img.height());
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    const float v = img.data()[i];
    if (std::isfinite(v)) {
      map.values[i] = v;
      map.valid[i] = 1;
    }
  }
  return map;
}

std::string read_text_file(const std::string& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

std::string file_hash(const std::string& path) {
  auto in = open_in(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const auto got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace lfd
