#include "lfdepth/pipeline.hpp"

#include <charconv>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lfdepth/io.hpp"
#include "lfdepth/random.hpp"

namespace fs = std::filesystem;

namespace lfd {

// ---- thin lens ----

void ThinLens::validate() const {
  if (!(focal > 0.0) || !(main_to_mla > 0.0) || !(mla_to_sensor > 0.0) || !std::isfinite(focal) ||
      !std::isfinite(main_to_mla) || !std::isfinite(mla_to_sensor)) {
    throw Error(ErrorKind::InvalidArgument, "thin-lens focal length, MLA distance and MLA spacing must be positive");
  }
}

double virtual_to_metric(double v, const ThinLens& lens) {
  lens.validate();
  const double a = lens.main_to_mla - v * lens.mla_to_sensor;
  // Close to the focal plane z blows up; treat that as behind it.
  if (!std::isfinite(a) || !(a - lens.focal > 1e-9 * lens.focal)) {
    throw Error(ErrorKind::BehindFocalPlane, "virtual depth " + format_double(v) + " images at or behind the focal plane");
  }
  return lens.focal * a / (a - lens.focal);
}

DepthMap virtual_to_metric(const ScalarMap& virtual_depth, const ThinLens& lens) {
  lens.validate();
  DepthMap out(virtual_depth.width, virtual_depth.height);
  for (std::size_t i = 0; i < virtual_depth.values.size(); ++i) {
    if (!virtual_depth.valid[i] || !std::isfinite(virtual_depth.values[i]) || !(virtual_depth.values[i] > 0.0)) continue;
    try {
      out.values[i] = virtual_to_metric(virtual_depth.values[i], lens);
      out.valid[i] = 1;
    } catch (const Error&) {
    }
  }
  return out;
}

// ---- LFS ----

LfsCapture ingest_lfs(const std::string& dir, BayerPattern pattern) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::MissingAsset, "capture directory " + dir + " does not exist");
  for (const char* name : kLfsAssets) {
    if (!fs::exists(fs::path(dir) / name)) throw Error(ErrorKind::MissingAsset, dir + ": missing " + name);
  }
  LfsCapture c;
  c.id = fs::path(dir).filename().string();
  if (c.id.empty()) c.id = fs::path(dir).parent_path().filename().string();
  const auto at = [&](const char* name) { return (fs::path(dir) / name).string(); };
  c.plenoptic = to_raw(read_pgm16(at("plenoptic.pgm")), pattern);
  c.virtual_depth = read_map_pfm(at("virtual_depth.pfm"));
  c.natural = read_ppm(at("natural.ppm"));
  static_cast<ScalarMap&>(c.stereo_depth) = read_map_pfm(at("stereo_depth.pfm"));
  const auto check = [&](const char* name, int w, int h) {
    if (w != c.plenoptic.width || h != c.plenoptic.height) {
      throw Error(ErrorKind::FormatError, dir + ": " + name + " is " + std::to_string(w) + "x" + std::to_string(h) +
                                              ", the plenoptic image is " + std::to_string(c.plenoptic.width) + "x" +
                                              std::to_string(c.plenoptic.height));
    }
  };
  check("virtual_depth.pfm", c.virtual_depth.width, c.virtual_depth.height);
  check("natural.ppm", c.natural.width(), c.natural.height());
  check("stereo_depth.pfm", c.stereo_depth.width, c.stereo_depth.height);
  return c;
}

std::string to_string(Split s) { return s == Split::Train ? "train" : "test"; }

std::vector<ManifestEntry> LfsManifest::select(Split s) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(e);
  return out;
}

LfsManifest load_lfs_manifest(const std::string& path) {
  const std::string text = read_text_file(path);
  const fs::path base = fs::path(path).parent_path();
  LfsManifest m;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string dir, split, extra;
    if (!(fields >> dir)) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (!(fields >> split) || (fields >> extra)) throw Error(ErrorKind::FormatError, where + ": expected '<capture dir> <train|test>'");
    ManifestEntry e;
    e.id = fs::path(dir).filename().string();
    e.dir = fs::path(dir).is_absolute() ? dir : (base / dir).string();
    if (split == "train") {
      e.split = Split::Train;
    } else if (split == "test") {
      e.split = Split::Test;
    } else {
      throw Error(ErrorKind::FormatError, where + ": split must be train or test, got '" + split + "'");
    }
    if (!seen.insert(e.dir).second) throw Error(ErrorKind::FormatError, where + ": capture " + dir + " listed twice");
    m.entries.push_back(std::move(e));
  }
  return m;
}

// ---- stage helpers ----

FlowerStackBatch extract_stacks(const RawBayerImage& raw, const MicrolensGrid& grid) {
  const auto& c = grid.calibration();
  if (raw.width != c.sensor_width || raw.height != c.sensor_height) {
    throw Error(ErrorKind::ShapeMismatch, "raw image is " + std::to_string(raw.width) + "x" + std::to_string(raw.height) +
                                              ", the grid calibration expects " + std::to_string(c.sensor_width) + "x" +
                                              std::to_string(c.sensor_height));
  }
  return make_batch(build_all_flower_stacks(debayer(raw), grid));
}

net::TrainingSet load_training_captures(const std::string& list_path, const MicrolensGrid& grid, BayerPattern pattern) {
  const std::string text = read_text_file(list_path);
  const fs::path base = fs::path(list_path).parent_path();
  const auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (base / p).string(); };
  net::TrainingSet set;
  std::map<std::string, MicrolensGrid> grids;  // per-capture grids, by resolved path
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string raw, gt, grid_file, extra;
    if (!(fields >> raw)) continue;
    if (!(fields >> gt) || ((fields >> grid_file) && (fields >> extra))) {
      throw Error(ErrorKind::FormatError,
                  list_path + ":" + std::to_string(line_no) + ": expected '<raw.pgm> <truth.csv> [grid.txt]'");
    }
    const MicrolensGrid* g = &grid;
    if (!grid_file.empty()) {
      const std::string key = resolve(grid_file);
      auto it = grids.find(key);
      if (it == grids.end()) it = grids.emplace(key, build_grid(load_grid_calibration(key))).first;
      g = &it->second;
    }
    const auto stacks = extract_stacks(to_raw(read_pgm16(resolve(raw)), pattern), *g);
    net::append(set, net::make_training_set(stacks, load_sparse_csv(resolve(gt), DepthSource::StereoGroundTruth)));
  }
  return set;
}

// ---- configuration ----

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "input.raw", "input.grid", "input.rig", "input.relative", "input.weights", "input.train_captures",
      "input.train_grid", "input.gt_depth", "input.gt_sparse", "input.left", "input.right", "output_dir",
      "bayer", "seed", "stacks.crop_size",
      "train.enabled", "train.epochs", "train.batch_size", "train.lr", "train.beta1", "train.beta2", "train.eps",
      "train.seed", "filter.texture_threshold",
      "align.estimator", "align.seed", "align.theil_sen.mode", "align.theil_sen.exact_limit",
      "align.theil_sen.samples", "align.ransac.iterations", "align.ransac.threshold", "align.huber.delta",
      "align.huber.max_iters", "align.huber.tol", "align.sgd.lr", "align.sgd.epochs", "align.sgd.delta",
      "sgm.min_disparity", "sgm.max_disparity", "sgm.p1", "sgm.p2", "sgm.paths", "sgm.uniqueness", "sgm.subpixel",
      "sgm.lr_threshold", "stereo.regularize", "stereo.speckle_size", "stereo.speckle_max_diff",
      "stereo.texture_tolerance", "stereo.min_texture", "stereo.distort_plenoptic", "stereo.min_depth_disparity",
      "eval.mode", "eval.bpr_threshold", "thin_lens.focal", "thin_lens.main_to_mla", "thin_lens.mla_to_sensor"};
  return keys;
}

std::uint64_t parse_seed(const KeyValues& kv, const std::string& key) {
  const std::string s = kv.get_string(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw Error(ErrorKind::FormatError, key + " must be a non-negative integer");
  return v;
}

std::string theil_sen_mode_name(TheilSenOptions::Mode m) {
  switch (m) {
    case TheilSenOptions::Mode::Exact: return "exact";
    case TheilSenOptions::Mode::Sampled: return "sampled";
    case TheilSenOptions::Mode::Auto: break;
  }
  return "auto";
}

TheilSenOptions::Mode parse_theil_sen_mode(const std::string& s) {
  if (s == "auto") return TheilSenOptions::Mode::Auto;
  if (s == "exact") return TheilSenOptions::Mode::Exact;
  if (s == "sampled") return TheilSenOptions::Mode::Sampled;
  throw Error(ErrorKind::FormatError, "align.theil_sen.mode must be auto, exact or sampled");
}

std::string absolute_or_empty(const std::string& p) {
  return p.empty() ? p : fs::absolute(p).lexically_normal().string();
}

}  // namespace

PipelineConfig PipelineConfig::from_keyvalues(const KeyValues& kv, const std::string& base_dir) {
  for (const auto& [key, value] : kv.entries()) {
    if (key.rfind("artifact.", 0) == 0) continue;  // run manifests carry hashes
    if (!known_keys().contains(key)) throw Error(ErrorKind::FormatError, "unknown config key '" + key + "'");
  }
  if (!kv.has("seed")) throw Error(ErrorKind::FormatError, "config must set 'seed' explicitly");
  PipelineConfig c;
  const auto path = [&](const std::string& key) -> std::string {
    const std::string v = kv.get_string(key, "");
    if (v.empty()) return v;
    return fs::path(v).is_absolute() ? v : (fs::path(base_dir) / v).lexically_normal().string();
  };
  c.raw = path("input.raw");
  c.grid = path("input.grid");
  c.rig = path("input.rig");
  c.relative = path("input.relative");
  c.weights = path("input.weights");
  c.train_captures = path("input.train_captures");
  c.train_grid = path("input.train_grid");
  c.gt_depth = path("input.gt_depth");
  c.gt_sparse = path("input.gt_sparse");
  c.left = path("input.left");
  c.right = path("input.right");
  c.output_dir = kv.has("output_dir") ? path("output_dir") : (fs::path(base_dir) / "out").lexically_normal().string();

  c.bayer = parse_bayer_pattern(kv.get_string("bayer", "RGGB"));
  c.seed = parse_seed(kv, "seed");
  c.crop_size = kv.get_int("stacks.crop_size", kFlowerCropSize);
  if (c.crop_size != kFlowerCropSize) {
    throw Error(ErrorKind::InvalidArgument, "stacks.crop_size must be " + std::to_string(kFlowerCropSize) + " for the network");
  }

  c.train_enabled = kv.get_bool("train.enabled", false);
  c.train.epochs = kv.get_int("train.epochs", c.train.epochs);
  c.train.batch_size = kv.get_int("train.batch_size", c.train.batch_size);
  c.train.lr = kv.get_double("train.lr", c.train.lr);
  c.train.beta1 = kv.get_double("train.beta1", c.train.beta1);
  c.train.beta2 = kv.get_double("train.beta2", c.train.beta2);
  c.train.eps = kv.get_double("train.eps", c.train.eps);
  c.train.seed = kv.has("train.seed") ? parse_seed(kv, "train.seed") : c.seed;
  c.train.validate();

  c.texture_threshold = kv.get_double("filter.texture_threshold", c.texture_threshold);

  c.estimator = parse_estimator(kv.get_string("align.estimator", to_string(c.estimator)));
  const std::uint64_t align_seed = kv.has("align.seed") ? parse_seed(kv, "align.seed") : c.seed;
  c.theil_sen.seed = c.ransac.seed = c.sgd.seed = align_seed;
  c.theil_sen.mode = parse_theil_sen_mode(kv.get_string("align.theil_sen.mode", "auto"));
  c.theil_sen.exact_limit = static_cast<std::size_t>(kv.get_int("align.theil_sen.exact_limit", static_cast<int>(c.theil_sen.exact_limit)));
  c.theil_sen.samples = static_cast<std::size_t>(kv.get_int("align.theil_sen.samples", static_cast<int>(c.theil_sen.samples)));
  c.ransac.iterations = kv.get_int("align.ransac.iterations", c.ransac.iterations);
  c.ransac.threshold = kv.get_double("align.ransac.threshold", c.ransac.threshold);
  const std::string delta = kv.get_string("align.huber.delta", "auto");
  c.huber.delta = delta == "auto" ? std::numeric_limits<double>::quiet_NaN() : kv.get_double("align.huber.delta");
  c.huber.max_iters = kv.get_int("align.huber.max_iters", c.huber.max_iters);
  c.huber.tol = kv.get_double("align.huber.tol", c.huber.tol);
  c.sgd.lr = kv.get_double("align.sgd.lr", c.sgd.lr);
  c.sgd.epochs = kv.get_int("align.sgd.epochs", c.sgd.epochs);
  c.sgd.delta = kv.get_double("align.sgd.delta", c.sgd.delta);

  auto& sgm = c.stereo.sgm;
  sgm.range.min = kv.get_int("sgm.min_disparity", sgm.range.min);
  sgm.range.max = kv.get_int("sgm.max_disparity", sgm.range.max);
  sgm.p1 = kv.get_int("sgm.p1", sgm.p1);
  sgm.p2 = kv.get_int("sgm.p2", sgm.p2);
  sgm.paths = kv.get_int("sgm.paths", sgm.paths);
  sgm.uniqueness = kv.get_double("sgm.uniqueness", sgm.uniqueness);
  sgm.subpixel = kv.get_bool("sgm.subpixel", sgm.subpixel);
  sgm.lr_threshold = kv.get_double("sgm.lr_threshold", sgm.lr_threshold);
  sgm.validate();
  auto& reg = c.stereo.filters;
  c.stereo.regularize = kv.get_bool("stereo.regularize", c.stereo.regularize);
  reg.speckle_size = kv.get_int("stereo.speckle_size", reg.speckle_size);
  reg.speckle_max_diff = kv.get_double("stereo.speckle_max_diff", reg.speckle_max_diff);
  reg.texture_tolerance = static_cast<float>(kv.get_double("stereo.texture_tolerance", reg.texture_tolerance));
  reg.min_texture = kv.get_int("stereo.min_texture", reg.min_texture);
  c.stereo.distort_plenoptic = kv.get_bool("stereo.distort_plenoptic", c.stereo.distort_plenoptic);
  c.stereo.min_disparity = kv.get_double("stereo.min_depth_disparity", c.stereo.min_disparity);

  c.metrics_mode = parse_aggregation(kv.get_string("eval.mode", to_string(c.metrics_mode)));
  c.bpr_threshold = kv.get_double("eval.bpr_threshold", c.bpr_threshold);

  c.thin_lens.focal = kv.get_double("thin_lens.focal", 0.0);
  c.thin_lens.main_to_mla = kv.get_double("thin_lens.main_to_mla", 0.0);
  c.thin_lens.mla_to_sensor = kv.get_double("thin_lens.mla_to_sensor", 0.0);
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  return from_keyvalues(KeyValues::load(path), fs::path(path).parent_path().string());
}

KeyValues PipelineConfig::to_keyvalues() const {
  KeyValues kv;
  const auto put_path = [&](const std::string& key, const std::string& v) {
    if (!v.empty()) kv.set(key, absolute_or_empty(v));
  };
  put_path("input.raw", raw);
  put_path("input.grid", grid);
  put_path("input.rig", rig);
  put_path("input.relative", relative);
  put_path("input.weights", weights);
  put_path("input.train_captures", train_captures);
  put_path("input.train_grid", train_grid);
  put_path("input.gt_depth", gt_depth);
  put_path("input.gt_sparse", gt_sparse);
  put_path("input.left", left);
  put_path("input.right", right);
  put_path("output_dir", output_dir);
  kv.set("bayer", to_string(bayer));
  kv.set("seed", std::to_string(seed));
  kv.set("stacks.crop_size", crop_size);
  kv.set("train.enabled", std::string(train_enabled ? "true" : "false"));
  kv.set("train.epochs", train.epochs);
  kv.set("train.batch_size", train.batch_size);
  kv.set("train.lr", train.lr);
  kv.set("train.beta1", train.beta1);
  kv.set("train.beta2", train.beta2);
  kv.set("train.eps", train.eps);
  kv.set("train.seed", std::to_string(train.seed));
  kv.set("filter.texture_threshold", texture_threshold);
  kv.set("align.estimator", to_string(estimator));
  kv.set("align.seed", std::to_string(theil_sen.seed));
  kv.set("align.theil_sen.mode", theil_sen_mode_name(theil_sen.mode));
  kv.set("align.theil_sen.exact_limit", static_cast<int>(theil_sen.exact_limit));
  kv.set("align.theil_sen.samples", static_cast<int>(theil_sen.samples));
  kv.set("align.ransac.iterations", ransac.iterations);
  kv.set("align.ransac.threshold", ransac.threshold);
  if (std::isnan(huber.delta)) {
    kv.set("align.huber.delta", std::string("auto"));
  } else {
    kv.set("align.huber.delta", huber.delta);
  }
  kv.set("align.huber.max_iters", huber.max_iters);
  kv.set("align.huber.tol", huber.tol);
  kv.set("align.sgd.lr", sgd.lr);
  kv.set("align.sgd.epochs", sgd.epochs);
  kv.set("align.sgd.delta", sgd.delta);
  kv.set("sgm.min_disparity", stereo.sgm.range.min);
  kv.set("sgm.max_disparity", stereo.sgm.range.max);
  kv.set("sgm.p1", stereo.sgm.p1);
  kv.set("sgm.p2", stereo.sgm.p2);
  kv.set("sgm.paths", stereo.sgm.paths);
  kv.set("sgm.uniqueness", stereo.sgm.uniqueness);
  kv.set("sgm.subpixel", std::string(stereo.sgm.subpixel ? "true" : "false"));
  kv.set("sgm.lr_threshold", stereo.sgm.lr_threshold);
  kv.set("stereo.regularize", std::string(stereo.regularize ? "true" : "false"));
  kv.set("stereo.speckle_size", stereo.filters.speckle_size);
  kv.set("stereo.speckle_max_diff", stereo.filters.speckle_max_diff);
  kv.set("stereo.texture_tolerance", static_cast<double>(stereo.filters.texture_tolerance));
  kv.set("stereo.min_texture", stereo.filters.min_texture);
  kv.set("stereo.distort_plenoptic", std::string(stereo.distort_plenoptic ? "true" : "false"));
  kv.set("stereo.min_depth_disparity", stereo.min_disparity);
  kv.set("eval.mode", to_string(metrics_mode));
  kv.set("eval.bpr_threshold", bpr_threshold);
  kv.set("thin_lens.focal", thin_lens.focal);
  kv.set("thin_lens.main_to_mla", thin_lens.main_to_mla);
  kv.set("thin_lens.mla_to_sensor", thin_lens.mla_to_sensor);
  return kv;
}

LinearScaleModel fit_model(const CorrespondenceSet& pairs, const PipelineConfig& cfg) {
  switch (cfg.estimator) {
    case Estimator::TheilSen: return fit_theil_sen(pairs, cfg.theil_sen);
    case Estimator::Ransac: return fit_ransac(pairs, cfg.ransac);
    case Estimator::Huber: return fit_huber(pairs, cfg.huber);
    case Estimator::SgdHuber: return fit_sgd_huber(pairs, cfg.sgd);
  }
  return fit_theil_sen(pairs, cfg.theil_sen);
}

// ---- run ----

namespace {

void require_file(const std::string& what, const std::string& path) {
  if (path.empty()) throw Error(ErrorKind::MissingAsset, what + " is not configured");
  if (!fs::exists(path)) throw Error(ErrorKind::MissingAsset, what + " " + path + " does not exist");
}

}  // namespace

RunResult run_pipeline(const PipelineConfig& cfg) {
  RunResult out;
  fs::create_directories(cfg.output_dir);
  const auto at = [&](const char* name) { return (fs::path(cfg.output_dir) / name).string(); };
  const auto record = [&](const std::string& name, const std::string& path) {
    out.artifacts.push_back({name, path, file_hash(path)});
  };

  // extract-stacks
  const auto [grid, stacks] = run_stage("extract-stacks", [&] {
    require_file("plenoptic raw", cfg.raw);
    require_file("grid calibration", cfg.grid);
    auto g = build_grid(load_grid_calibration(cfg.grid));
    auto s = extract_stacks(to_raw(read_pgm16(cfg.raw), cfg.bayer), g);
    if (s.n == 0) throw Error(ErrorKind::EmptyGrid, "no complete flower stack in " + cfg.raw);
    save_stack_archive(at("stacks.lfst"), s);
    return std::pair{std::move(g), std::move(s)};
  });
  record("stacks", at("stacks.lfst"));

  // train | load weights
  const net::Network<float> network = run_stage("train", [&] {
    if (cfg.train_enabled) {
      require_file("training capture list", cfg.train_captures);
      const std::string grid_path = cfg.train_grid.empty() ? cfg.grid : cfg.train_grid;
      require_file("training grid calibration", grid_path);
      const auto train_grid = build_grid(load_grid_calibration(grid_path));
      auto result = net::train(load_training_captures(cfg.train_captures, train_grid, cfg.bayer), cfg.train);
      save_network(at("weights.mldn"), result.network);
      net::save_loss_history(at("loss.csv"), result.epoch_loss);
      return std::move(result.network);
    }
    if (cfg.weights.empty() || !fs::exists(cfg.weights)) {
      throw Error(ErrorKind::MissingAsset, "training is disabled and no weights file exists at '" + cfg.weights +
                                               "'; set train.enabled = true or input.weights");
    }
    return net::load_network(cfg.weights);
  });
  if (cfg.train_enabled) {
    record("weights", at("weights.mldn"));
    record("loss", at("loss.csv"));
  }

  // predict
  const SparseDepthMap predicted = run_stage("predict", [&] {
    auto p = net::predict_sparse(network, stacks);
    save_sparse_csv(at("sparse_pred.csv"), p);
    return p;
  });
  record("sparse_pred", at("sparse_pred.csv"));

  // filter
  const SparseDepthMap filtered = run_stage("filter", [&] {
    auto f = filter_sparse_depth(predicted, split_batch(stacks), cfg.texture_threshold);
    save_sparse_csv(at("sparse_filtered.csv"), f);
    return f;
  });
  record("sparse_filtered", at("sparse_filtered.csv"));

  // align
  StereoRig rig;
  DisparityMap relative;
  out.model = run_stage("align", [&] {
    require_file("rig calibration", cfg.rig);
    require_file("relative disparity map", cfg.relative);
    rig = load_rig(cfg.rig);
    static_cast<ScalarMap&>(relative) = read_map_pfm(cfg.relative);
    relative.frame = DisparityFrame::Relative;
    auto model = fit_model(sample_correspondences(relative, filtered, rig), cfg);
    save_model(at("model.txt"), model);
    return model;
  });
  record("model", at("model.txt"));

  // fuse
  const DepthMap fused = run_stage("fuse", [&] {
    auto d = fuse(relative, out.model, rig);
    write_map_pfm(at("depth.pfm"), d);
    return d;
  });
  record("depth", at("depth.pfm"));

  // eval, only against the truth that is present
  run_stage("eval", [&] {
    std::vector<std::pair<std::string, MetricsReport>> rows;
    if (!cfg.gt_depth.empty()) {
      require_file("dense ground truth", cfg.gt_depth);
      DepthMap gt;
      static_cast<ScalarMap&>(gt) = read_map_pfm(cfg.gt_depth);
      out.dense_metrics = evaluate(std::vector{pair_depths(fused, gt)}, cfg.metrics_mode, cfg.bpr_threshold);
      rows.push_back({"fused", *out.dense_metrics});
    }
    if (!cfg.gt_sparse.empty()) {
      require_file("sparse ground truth", cfg.gt_sparse);
      const auto gt = load_sparse_csv(cfg.gt_sparse, DepthSource::StereoGroundTruth);
      out.sparse_metrics = evaluate(std::vector{pair_depths(filtered, gt)}, cfg.metrics_mode, cfg.bpr_threshold);
      rows.push_back({"sparse", *out.sparse_metrics});
    }
    if (!rows.empty()) write_text_file(at("metrics.csv"), to_csv(compare_reports(rows)));
    return 0;
  });
  if (out.dense_metrics || out.sparse_metrics) record("metrics", at("metrics.csv"));

  KeyValues manifest = cfg.to_keyvalues();
  for (const auto& a : out.artifacts) manifest.set("artifact." + a.name, a.hash);
  out.manifest_path = at("run_manifest.txt");
  manifest.save(out.manifest_path);
  record("manifest", out.manifest_path);
  return out;
}

// ---- synthetic dataset ----

void SynthDatasetConfig::validate() const {
  if (!(near_depth > 0.0) || !(far_depth > 0.0)) throw Error(ErrorKind::InvalidArgument, "plane depths must be positive");
  if (m == 0.0 || !std::isfinite(m) || !std::isfinite(b)) throw Error(ErrorKind::InvalidArgument, "relative frame needs finite m != 0");
  if (rows < 3 || cols < 3) throw Error(ErrorKind::InvalidArgument, "the lattice needs at least 3 x 3 lenses");
  if (!(pitch >= kFlowerCropSize)) throw Error(ErrorKind::InvalidArgument, "pitch must hold a flower crop");
  if (!(rig_focal > 0.0) || !(rig_baseline > 0.0)) throw Error(ErrorKind::InvalidArgument, "rig focal and baseline must be positive");
  if (train_scenes < 1) throw Error(ErrorKind::InvalidArgument, "need at least one training scene");
}

std::string write_synthetic_dataset(const SynthDatasetConfig& cfg, const std::string& dir) {
  cfg.validate();
  const fs::path root(dir);
  fs::create_directories(root / "train");

  GridCalibration calib;
  calib.pitch = cfg.pitch;
  calib.origin = {cfg.pitch, cfg.pitch};
  calib.rows = cfg.rows;
  calib.cols = cfg.cols;
  double max_x = 0.0, max_y = 0.0;
  for (int r = 0; r < calib.rows; ++r)
    for (int q = 0; q < calib.cols; ++q) {
      const Pixel p = centroid(calib, lattice_site(calib, r, q));
      max_x = std::max(max_x, p.x);
      max_y = std::max(max_y, p.y);
    }
  calib.sensor_width = (static_cast<int>(std::ceil(max_x + cfg.pitch)) + 1) / 2 * 2;
  calib.sensor_height = (static_cast<int>(std::ceil(max_y + cfg.pitch)) + 1) / 2 * 2;
  const auto grid = build_grid(calib);
  save_grid_calibration((root / "grid.txt").string(), calib);

  SyntheticScene scene;
  scene.rig = make_rectified_rig(cfg.rig_focal, cfg.rig_baseline, calib.sensor_width, calib.sensor_height);
  scene.optics = cfg.optics;
  std::mt19937_64 rng(cfg.seed);
  TexturedPlane near{cfg.near_depth, rng()};
  near.x1 = cfg.split_x;
  near.cell = cfg.texture_cell;
  TexturedPlane far{cfg.far_depth, rng()};
  far.cell = cfg.texture_cell;
  scene.planes = {near, far};
  save_rig((root / "rig.txt").string(), scene.rig);

  const auto plen = render_plenoptic(scene, grid);
  write_pgm16((root / "plenoptic.pgm").string(), to_gray16(plen.raw));
  save_sparse_csv((root / "truth_sparse.csv").string(), plen.depth);
  const auto truth = render_view(scene, scene.rig.plenoptic, scene.rig.plenoptic_from_left).depth;
  write_map_pfm((root / "truth_depth.pfm").string(), truth);
  write_map_pfm((root / "relative.pfm").string(),
                render_relative_disparity(scene, cfg.m, cfg.b, calib.sensor_width, calib.sensor_height));
  const auto stereo = render_stereo(scene);
  write_pgm16((root / "left.pgm").string(), to_gray16(stereo.left));
  write_pgm16((root / "right.pgm").string(), to_gray16(stereo.right));

  TrainingScenes ts;
  ts.count = cfg.train_scenes;
  ts.min_depth = cfg.train_min_depth;
  ts.max_depth = cfg.train_max_depth;
  ts.seed = rng();
  ts.optics = cfg.optics;
  ts.texture_cell = cfg.texture_cell;
  ts.pitch = cfg.pitch;
  std::string list;
  const auto captures = training_captures(ts);
  for (std::size_t i = 0; i < captures.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04zu", i);
    const std::string name = buf;
    const auto& c = captures[i];
    const auto r = render_plenoptic(c.scene, build_grid(c.grid));
    write_pgm16((root / "train" / (name + ".pgm")).string(), to_gray16(r.raw));
    save_sparse_csv((root / "train" / (name + ".csv")).string(), single_flower_truth(r.depth, c.grid));
    save_grid_calibration((root / "train" / (name + "_grid.txt")).string(), c.grid);
    list += name + ".pgm " + name + ".csv " + name + "_grid.txt\n";
  }
  write_text_file((root / "train" / "captures.txt").string(), list);

  KeyValues kv;
  kv.set("seed", std::to_string(cfg.seed));
  kv.set("input.raw", std::string("plenoptic.pgm"));
  kv.set("input.grid", std::string("grid.txt"));
  kv.set("input.rig", std::string("rig.txt"));
  kv.set("input.relative", std::string("relative.pfm"));
  kv.set("input.train_captures", std::string("train/captures.txt"));
  kv.set("input.gt_depth", std::string("truth_depth.pfm"));
  kv.set("input.gt_sparse", std::string("truth_sparse.csv"));
  kv.set("input.left", std::string("left.pgm"));
  kv.set("input.right", std::string("right.pgm"));
  kv.set("output_dir", std::string("out"));
  kv.set("bayer", to_string(scene.pattern));
  kv.set("train.enabled", std::string("true"));
  kv.set("train.epochs", cfg.epochs);
  kv.set("train.batch_size", cfg.batch_size);
  kv.set("train.lr", cfg.lr);
  kv.set("sgm.max_disparity", static_cast<int>(std::ceil(cfg.rig_focal * cfg.rig_baseline / std::min(cfg.near_depth, cfg.far_depth) * 1.25)));
  const std::string path = (root / "config.txt").string();
  kv.save(path);
  return path;
}

}  // namespace lfd
