#include "lfdepth/stereo/pipeline.hpp"

#include "lfdepth/error.hpp"
#include "lfdepth/plenoptic.hpp"

namespace lfd {

namespace {

GrayImage as_gray(const Image<float>& img) { return img.channels() == 1 ? img : to_gray(img); }

}  // namespace

StereoGtResult stereo_ground_truth(const Image<float>& left, const Image<float>& right, const StereoRig& rig,
                                   const MicrolensGrid& grid, const StereoGtConfig& config) {
  StereoGtResult r;
  r.rig = rig.is_rectified() ? rig : rectify(rig).rig;
  r.rig.validate();
  r.rectified = rectify_images(left, right, r.rig);

  const GrayImage gl = as_gray(r.rectified.left.image), gr = as_gray(r.rectified.right.image);
  DisparityMap disp = sgm(gl, gr, config.sgm).left;
  for (std::size_t i = 0; i < disp.valid.size(); ++i)
    if (!r.rectified.left.valid[i]) {
      disp.valid[i] = 0;
      disp.values[i] = 0.0f;
    }
  r.disparity = config.regularize ? regularize(disp, gl, config.filters) : disp;

  const auto tri = triangulate(r.disparity, r.rig, r.rectified.left.image, config.min_disparity);
  r.depth = tri.depth;
  r.plenoptic = reproject(tri.cloud, r.rig.plenoptic_from_rectified(), r.rig.plenoptic, r.rig.plenoptic.width,
                          r.rig.plenoptic.height, config.distort_plenoptic);
  r.sparse = sample_at_centroids(r.plenoptic.depth, grid);
  return r;
}

}  // namespace lfd
