#include "lfdepth/sparse.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "lfdepth/error.hpp"
#include "lfdepth/keyvalue.hpp"

namespace lfd {

std::string to_string(DepthSource s) {
  switch (s) {
    case DepthSource::Predicted: return "predicted";
    case DepthSource::StereoGroundTruth: return "stereo-gt";
    case DepthSource::Raytrix: return "raytrix";
    case DepthSource::Synthetic: return "synthetic";
  }
  return "unknown";
}

void save_sparse_csv(const std::string& path, const SparseDepthMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::MissingAsset, "cannot write " + path);
  out << "q,r,u,v,depth_m\n";
  for (const auto& e : map.entries) {
    out << e.coord.q << "," << e.coord.r << "," << format_double(e.centroid.x) << ","
        << format_double(e.centroid.y) << "," << format_double(e.depth) << "\n";
  }
}

SparseDepthMap load_sparse_csv(const std::string& path, DepthSource source) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingAsset, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::FormatError, path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "q,r,u,v,depth_m") throw Error(ErrorKind::FormatError, path + ": unexpected header '" + line + "'");
  SparseDepthMap map;
  map.source = source;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    SparseDepthEntry e;
    if (!(ls >> e.coord.q >> e.coord.r >> e.centroid.x >> e.centroid.y >> e.depth)) {
      throw Error(ErrorKind::FormatError, path + ":" + std::to_string(line_no) + ": malformed row");
    }
    map.entries.push_back(e);
  }
  return map;
}

}  // namespace lfd
