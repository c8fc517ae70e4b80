#include "lfdepth/align.hpp"

#include <algorithm>
#include <cmath>

#include "lfdepth/error.hpp"
#include "lfdepth/keyvalue.hpp"
#include "lfdepth/random.hpp"

namespace lfd {

namespace {

void require_rectified(const StereoRig& rig) {
  if (!rig.is_rectified()) throw Error(ErrorKind::DegenerateGeometry, "rig has no rectified focal length and baseline");
}

void split(const CorrespondenceSet& c, std::vector<double>& x, std::vector<double>& y) {
  x.resize(c.size());
  y.resize(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    x[i] = c.pairs[i].x;
    y[i] = c.pairs[i].y;
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw Error(ErrorKind::InvalidArgument, "non-finite correspondence");
  }
}

void require_fit_input(const std::vector<double>& x) {
  if (x.size() < 2) throw Error(ErrorKind::TooFewCorrespondences, "need at least two correspondences");
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); })) {
    throw Error(ErrorKind::DegenerateX, "all relative disparities are equal");
  }
}

// Median of y - m x.
double intercept(const std::vector<double>& x, const std::vector<double>& y, double m) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = y[i] - m * x[i];
  return median_inplace(r);
}

void finish(LinearScaleModel& model, const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = std::abs(y[i] - model.apply(x[i]));
  model.residual_median = median_inplace(r);
  model.pairs = x.size();
  if (model.estimator != Estimator::Ransac) model.inliers = x.size();
}

// Weighted least squares in centered form.
bool weighted_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w,
                   double& m, double& b) {
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  if (!(sw > 0)) return false;
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0)) return false;
  m = sxy / sxx;
  b = my - m * mx;
  return true;
}

}  // namespace

double depth_to_disparity(double z, double focal, double baseline) { return focal * baseline / z; }
double disparity_to_depth(double d, double focal, double baseline) { return focal * baseline / d; }

DisparityMap depth_to_disparity(const DepthMap& depth, const StereoRig& rig) {
  require_rectified(rig);
  DisparityMap out(depth.width, depth.height, DisparityFrame::Metric);
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    if (!depth.valid[i]) continue;
    const double z = depth.values[i];
    if (!(z > 0.0) || !std::isfinite(z)) throw Error(ErrorKind::NonPositiveDepth, "depth must be positive and finite");
    out.values[i] = depth_to_disparity(z, rig.rectified_focal, rig.baseline);
    out.valid[i] = 1;
  }
  return out;
}

DepthMap disparity_to_depth(const DisparityMap& disp, const StereoRig& rig, double d_min) {
  require_rectified(rig);
  DepthMap out(disp.width, disp.height);
  for (std::size_t i = 0; i < disp.values.size(); ++i) {
    const double d = disp.values[i];
    if (!disp.valid[i] || !(d > d_min) || !std::isfinite(d)) continue;
    out.values[i] = disparity_to_depth(d, rig.rectified_focal, rig.baseline);
    out.valid[i] = 1;
  }
  return out;
}

CorrespondenceSet sample_correspondences(const DisparityMap& dense, const SparseDepthMap& sparse, const StereoRig& rig) {
  require_rectified(rig);
  CorrespondenceSet out;
  for (const auto& e : sparse.entries) {
    if (!(e.depth > 0.0) || !std::isfinite(e.depth)) throw Error(ErrorKind::NonPositiveDepth, "sparse depth must be positive");
    const int u = round_half_up(e.centroid.x), v = round_half_up(e.centroid.y);
    if (!dense.contains(u, v) || !dense.is_valid(u, v)) continue;
    out.pairs.push_back({dense.value(u, v), depth_to_disparity(e.depth, rig.rectified_focal, rig.baseline), e.centroid});
  }
  if (out.size() < 2) {
    throw Error(ErrorKind::TooFewCorrespondences,
                std::to_string(out.size()) + " of " + std::to_string(sparse.size()) + " sparse points hit valid dense pixels");
  }
  return out;
}

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::TheilSen: return "theil-sen";
    case Estimator::Ransac: return "ransac";
    case Estimator::Huber: return "huber";
    case Estimator::SgdHuber: return "sgd-huber";
  }
  return "theil-sen";
}

Estimator parse_estimator(const std::string& name) {
  if (name == "theil-sen") return Estimator::TheilSen;
  if (name == "ransac") return Estimator::Ransac;
  if (name == "huber") return Estimator::Huber;
  if (name == "sgd-huber") return Estimator::SgdHuber;
  throw Error(ErrorKind::InvalidArgument, "unknown estimator '" + name + "' (theil-sen, ransac, huber, sgd-huber)");
}

double median_inplace(std::vector<double>& v) {
  if (v.empty()) throw Error(ErrorKind::InvalidArgument, "median of an empty set");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return (lo + hi) / 2;
}

std::vector<double> pairwise_slopes_serial(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> s;
  const std::size_t n = x.size();
  s.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (x[i] != x[j]) s.push_back((y[j] - y[i]) / (x[j] - x[i]));
  return s;
}

std::vector<double> pairwise_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return {};
  std::vector<double> all(n * (n - 1) / 2);
  const std::int64_t rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t ii = 0; ii < rows; ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    double* out = all.data() + i * (2 * n - i - 1) / 2;
    for (std::size_t j = i + 1; j < n; ++j)
      *out++ = x[i] != x[j] ? (y[j] - y[i]) / (x[j] - x[i]) : std::numeric_limits<double>::quiet_NaN();
  }
  all.erase(std::remove_if(all.begin(), all.end(), [](double v) { return std::isnan(v); }), all.end());
  return all;
}

LinearScaleModel fit_theil_sen(const CorrespondenceSet& pairs, const TheilSenOptions& opt) {
  std::vector<double> x, y;
  split(pairs, x, y);
  require_fit_input(x);
  const bool sampled = opt.mode == TheilSenOptions::Mode::Sampled ||
                       (opt.mode == TheilSenOptions::Mode::Auto && x.size() > opt.exact_limit);
  std::vector<double> slopes;
  if (sampled) {
    std::mt19937_64 rng(opt.seed);
    slopes.reserve(opt.samples);
    // Distinct-x pairs exist, so rejection terminates.
    while (slopes.size() < std::max<std::size_t>(opt.samples, 1)) {
      const auto i = uniform_index(rng, x.size()), j = uniform_index(rng, x.size());
      if (x[i] == x[j]) continue;
      slopes.push_back((y[j] - y[i]) / (x[j] - x[i]));
    }
  } else {
    slopes = pairwise_slopes(x, y);
  }
  LinearScaleModel model;
  model.estimator = Estimator::TheilSen;
  model.m = median_inplace(slopes);
  model.b = intercept(x, y, model.m);
  finish(model, x, y);
  return model;
}

LinearScaleModel fit_least_squares(const CorrespondenceSet& pairs) {
  std::vector<double> x, y;
  split(pairs, x, y);
  require_fit_input(x);
  LinearScaleModel model;
  model.estimator = Estimator::Huber;
  weighted_line(x, y, std::vector<double>(x.size(), 1.0), model.m, model.b);
  finish(model, x, y);
  return model;
}

LinearScaleModel fit_ransac(const CorrespondenceSet& pairs, const RansacOptions& opt) {
  std::vector<double> x, y;
  split(pairs, x, y);
  require_fit_input(x);
  if (opt.iterations < 1 || !(opt.threshold >= 0.0)) throw Error(ErrorKind::InvalidArgument, "bad RANSAC options");
  std::mt19937_64 rng(opt.seed);
  std::size_t best = 0;
  std::vector<double> best_mask;
  std::vector<double> mask(x.size());
  for (int it = 0; it < opt.iterations; ++it) {
    const auto i = uniform_index(rng, x.size()), j = uniform_index(rng, x.size());
    if (x[i] == x[j]) continue;
    const double m = (y[j] - y[i]) / (x[j] - x[i]), b = y[i] - m * x[i];
    std::size_t count = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      mask[k] = std::abs(y[k] - (m * x[k] + b)) <= opt.threshold ? 1.0 : 0.0;
      count += mask[k] != 0.0;
    }
    if (count > best) {
      best = count;
      best_mask = mask;
    }
  }
  if (best < 2) throw Error(ErrorKind::NoConsensus, "best consensus set has " + std::to_string(best) + " points");
  LinearScaleModel model;
  model.estimator = Estimator::Ransac;
  if (!weighted_line(x, y, best_mask, model.m, model.b)) {
    throw Error(ErrorKind::NoConsensus, "consensus set has no spread in relative disparity");
  }
  model.inliers = best;
  finish(model, x, y);
  return model;
}

LinearScaleModel fit_huber(const CorrespondenceSet& pairs, const HuberOptions& opt) {
  std::vector<double> x, y;
  split(pairs, x, y);
  require_fit_input(x);
  LinearScaleModel model;
  model.estimator = Estimator::Huber;
  std::vector<double> w(x.size(), 1.0), r(x.size());
  weighted_line(x, y, w, model.m, model.b);
  model.converged = false;
  for (int it = 0; it < opt.max_iters; ++it) {
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = y[i] - model.apply(x[i]);
    double delta = opt.delta;
    if (std::isnan(delta)) {
      std::vector<double> a(r);
      const double med = median_inplace(a);
      for (auto& v : a) v = std::abs(v - med);
      const double scale = median_inplace(a) / 0.6745;
      if (!(scale > 0.0)) {  // at least half the points fit exactly: nothing to reweight
        model.converged = true;
        break;
      }
      delta = 1.345 * scale;
    }
    for (std::size_t i = 0; i < x.size(); ++i) w[i] = std::abs(r[i]) <= delta ? 1.0 : delta / std::abs(r[i]);
    double m = model.m, b = model.b;
    if (!weighted_line(x, y, w, m, b)) break;
    const double change = std::abs(m - model.m) + std::abs(b - model.b);
    model.m = m;
    model.b = b;
    if (change < opt.tol * (1.0 + std::abs(m) + std::abs(b))) {
      model.converged = true;
      break;
    }
  }
  finish(model, x, y);
  return model;
}

LinearScaleModel fit_sgd_huber(const CorrespondenceSet& pairs, const SgdHuberOptions& opt) {
  std::vector<double> x, y;
  split(pairs, x, y);
  require_fit_input(x);
  if (opt.epochs < 0 || !(opt.lr >= 0.0) || !(opt.delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "bad SGD options");
  const double n = static_cast<double>(x.size());
  double mx = 0, sx = 0, sy = 0;
  for (double v : x) mx += v;
  mx /= n;
  for (double v : x) sx += (v - mx) * (v - mx);
  sx = std::sqrt(sx / n);
  for (double v : y) sy += v * v;
  sy = std::sqrt(sy / n);
  if (!(sy > 0.0)) sy = 1.0;
  std::vector<double> xs(x.size()), ys(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xs[i] = (x[i] - mx) / sx;
    ys[i] = y[i] / sy;
  }
  // y/sy = a (x - mx)/sx + c, starting from m = b = 0.
  double a = 0.0, c = 0.0;
  std::mt19937_64 rng(opt.seed);
  for (int e = 0; e < opt.epochs; ++e) {
    for (const auto i : shuffled_indices(x.size(), rng)) {
      const double g = std::clamp(a * xs[i] + c - ys[i], -opt.delta, opt.delta);
      a -= opt.lr * g * xs[i];
      c -= opt.lr * g;
    }
  }
  LinearScaleModel model;
  model.estimator = Estimator::SgdHuber;
  model.m = sy * a / sx;
  model.b = sy * (c - a * mx / sx);
  finish(model, x, y);
  return model;
}

DepthMap fuse(const DisparityMap& relative, const LinearScaleModel& model, const StereoRig& rig, double d_min) {
  require_rectified(rig);
  if (!std::isfinite(model.m) || !std::isfinite(model.b)) throw Error(ErrorKind::InvalidArgument, "model is not finite");
  DepthMap out(relative.width, relative.height);
  const std::int64_t count = static_cast<std::int64_t>(relative.values.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    if (!relative.valid[i]) continue;
    const double d = model.apply(relative.values[i]);
    if (!(d > d_min) || !std::isfinite(d)) continue;
    out.values[i] = disparity_to_depth(d, rig.rectified_focal, rig.baseline);
    out.valid[i] = 1;
  }
  return out;
}

void save_model(const std::string& path, const LinearScaleModel& model) {
  KeyValues kv;
  kv.set("estimator", to_string(model.estimator));
  kv.set("m", model.m);
  kv.set("b", model.b);
  kv.set("inliers", static_cast<int>(model.inliers));
  kv.set("pairs", static_cast<int>(model.pairs));
  kv.set("residual_median", model.residual_median);
  kv.set("converged", std::string(model.converged ? "true" : "false"));
  kv.save(path);
}

LinearScaleModel load_model(const std::string& path) {
  const auto kv = KeyValues::load(path);
  LinearScaleModel model;
  model.estimator = parse_estimator(kv.get_string("estimator"));
  model.m = kv.get_double("m");
  model.b = kv.get_double("b");
  model.inliers = static_cast<std::size_t>(kv.get_int("inliers", 0));
  model.pairs = static_cast<std::size_t>(kv.get_int("pairs", 0));
  model.residual_median = kv.get_double("residual_median", 0.0);
  model.converged = kv.get_bool("converged", true);
  return model;
}

}  // namespace lfd
