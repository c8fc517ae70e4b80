#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lfdepth/camera.hpp"
#include "lfdepth/image.hpp"
#include "lfdepth/sparse.hpp"

namespace lfd {

inline constexpr double kDefaultMinDisparity = 1e-6;

double depth_to_disparity(double z, double focal, double baseline);
double disparity_to_depth(double d, double focal, double baseline);

/// d = f B / z per valid pixel. Throws NonPositiveDepth. Needs a rectified rig.
DisparityMap depth_to_disparity(const DepthMap& depth, const StereoRig& rig);
/// z = f B / d; pixels with d <= d_min become invalid.
DepthMap disparity_to_depth(const DisparityMap& disp, const StereoRig& rig, double d_min = kDefaultMinDisparity);

struct Correspondence {
  double x = 0.0;  // relative disparity
  double y = 0.0;  // metric disparity
  Pixel position;
};

struct CorrespondenceSet {
  std::vector<Correspondence> pairs;
  std::size_t size() const { return pairs.size(); }
};

/// Dense value at the nearest pixel to each centroid paired with f B / depth.
/// Invalid or out-of-image lookups are skipped. Throws TooFewCorrespondences, NonPositiveDepth.
CorrespondenceSet sample_correspondences(const DisparityMap& dense, const SparseDepthMap& sparse, const StereoRig& rig);

enum class Estimator { TheilSen, Ransac, Huber, SgdHuber };
std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& name);  // throws InvalidArgument

struct LinearScaleModel {
  double m = 1.0;
  double b = 0.0;
  Estimator estimator = Estimator::TheilSen;
  std::size_t inliers = 0;
  std::size_t pairs = 0;
  double residual_median = 0.0;  // median |y - (m x + b)|
  bool converged = true;

  double apply(double x) const { return m * x + b; }
};

/// Median with the mean of the two central values for even counts. Reorders `v`.
double median_inplace(std::vector<double>& v);

/// Slopes (y_j - y_i) / (x_j - x_i) over all i < j with x_i != x_j, in (i, j) order.
std::vector<double> pairwise_slopes(const std::vector<double>& x, const std::vector<double>& y);
std::vector<double> pairwise_slopes_serial(const std::vector<double>& x, const std::vector<double>& y);

struct TheilSenOptions {
  enum class Mode { Auto, Exact, Sampled };
  Mode mode = Mode::Auto;
  std::size_t exact_limit = 2000;  // Auto switches to sampling above this many correspondences
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 0;
};

/// Throws TooFewCorrespondences, DegenerateX.
LinearScaleModel fit_theil_sen(const CorrespondenceSet& pairs, const TheilSenOptions& options = {});

struct RansacOptions {
  int iterations = 1000;
  double threshold = 0.1;
  std::uint64_t seed = 0;
};

/// Throws TooFewCorrespondences, DegenerateX, NoConsensus.
LinearScaleModel fit_ransac(const CorrespondenceSet& pairs, const RansacOptions& options = {});

struct HuberOptions {
  /// NaN: 1.345 x MAD-based scale of the current residuals, refreshed every iteration.
  double delta = std::numeric_limits<double>::quiet_NaN();
  int max_iters = 100;
  double tol = 1e-12;
};

/// IRLS on the Huber loss. Non-convergence returns the last iterate with converged = false.
LinearScaleModel fit_huber(const CorrespondenceSet& pairs, const HuberOptions& options = {});

struct SgdHuberOptions {
  double lr = 0.01;
  int epochs = 200;
  double delta = 1.345;  // in units of the y scale
  std::uint64_t seed = 0;
};

/// Plain SGD from (m, b) = (0, 0) over shuffled pairs. x is standardized and y divided by
/// its standard deviation during optimization; the result is expressed in the original frame.
LinearScaleModel fit_sgd_huber(const CorrespondenceSet& pairs, const SgdHuberOptions& options = {});

/// Ordinary least squares, for reference and refits.
LinearScaleModel fit_least_squares(const CorrespondenceSet& pairs);

/// Metric disparity m x + b per valid pixel, then depth; aligned disparities <= d_min become invalid.
DepthMap fuse(const DisparityMap& relative, const LinearScaleModel& model, const StereoRig& rig,
              double d_min = kDefaultMinDisparity);

/// Key-value model report.
void save_model(const std::string& path, const LinearScaleModel& model);
LinearScaleModel load_model(const std::string& path);

}  // namespace lfd
