#pragma once

#include <cstdint>
#include <string>

#include "lfdepth/image.hpp"

namespace lfd {

/// 16-bit single-channel samples, row-major.
struct Gray16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> samples;
};

/// Binary PGM (P5). maxval > 255 uses big-endian 16-bit samples.
Gray16 read_pgm16(const std::string& path);
void write_pgm16(const std::string& path, const Gray16& img);

/// Binary 8-bit PPM (P6) from a 3-channel [0,1] image, clamped and rounded.
void write_ppm(const std::string& path, const Image<float>& rgb);
Image<float> read_ppm(const std::string& path);

/// PFM with scale -1.0 (little-endian), rows stored bottom-to-top.
/// One channel ("Pf") or three ("PF").
void write_pfm(const std::string& path, const Image<float>& img);
Image<float> read_pfm(const std::string& path);

/// Scalar maps round-trip through single-channel PFM with NaN marking invalid pixels.
void write_map_pfm(const std::string& path, const ScalarMap& map);
ScalarMap read_map_pfm(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// FNV-1a 64-bit hash of a file's bytes, as 16 hex digits.
std::string file_hash(const std::string& path);

}  // namespace lfd
