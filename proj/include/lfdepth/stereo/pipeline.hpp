#pragma once

#include "lfdepth/camera.hpp"
#include "lfdepth/hexgrid.hpp"
#include "lfdepth/image.hpp"
#include "lfdepth/sparse.hpp"
#include "lfdepth/stereo/geometry.hpp"
#include "lfdepth/stereo/sgm.hpp"

namespace lfd {

struct StereoGtConfig {
  SgmParams sgm;
  RegularizeParams filters;
  bool regularize = true;
  bool distort_plenoptic = true;  // synthesize the plenoptic camera's distorted geometry
  double min_disparity = 1e-6;
};

struct StereoGtResult {
  StereoRig rig;  // rectified
  RectifiedPair rectified;
  DisparityMap disparity;
  DepthMap depth;  // rectified left frame
  Reprojection plenoptic;
  SparseDepthMap sparse;
};

/// Rectify (unless the rig already carries a rectification), match, filter, triangulate,
/// splat onto the plenoptic pose and sample at the lens centroids.
StereoGtResult stereo_ground_truth(const Image<float>& left, const Image<float>& right, const StereoRig& rig,
                                   const MicrolensGrid& grid, const StereoGtConfig& config = {});

}  // namespace lfd
