#pragma once

#include <string>
#include <vector>

#include "lfdepth/hexgrid.hpp"

namespace lfd {

enum class DepthSource { Predicted, StereoGroundTruth, Raytrix, Synthetic };

std::string to_string(DepthSource s);

struct SparseDepthEntry {
  AxialCoord coord;
  Pixel centroid;
  double depth = 0.0;  ///< meters, > 0
  bool operator==(const SparseDepthEntry&) const = default;
};

/// Metric depth samples anchored at microlens centroids.
struct SparseDepthMap {
  std::vector<SparseDepthEntry> entries;
  DepthSource source = DepthSource::Predicted;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }
  bool operator==(const SparseDepthMap&) const = default;
};

/// CSV with header "q,r,u,v,depth_m"; values written with round-trip precision.
void save_sparse_csv(const std::string& path, const SparseDepthMap& map);
SparseDepthMap load_sparse_csv(const std::string& path, DepthSource source = DepthSource::Predicted);

}  // namespace lfd
