#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lfdepth/align.hpp"
#include "lfdepth/error.hpp"
#include "lfdepth/hexgrid.hpp"
#include "lfdepth/keyvalue.hpp"
#include "lfdepth/metrics.hpp"
#include "lfdepth/net/train.hpp"
#include "lfdepth/plenoptic.hpp"
#include "lfdepth/stereo/pipeline.hpp"
#include "lfdepth/synth.hpp"

namespace lfd {

// ---- thin-lens conversion of virtual depth ----

struct ThinLens {
  double focal = 0.0;          // main lens f_L, m
  double main_to_mla = 0.0;    // main lens to MLA distance D, m
  double mla_to_sensor = 0.0;  // MLA to sensor spacing B_s, m
  void validate() const;       // throws InvalidArgument
};

/// a = D - v B_s, z = f a / (a - f). Throws BehindFocalPlane unless a exceeds f by a relative 1e-9.
double virtual_to_metric(double v, const ThinLens& lens);

/// Per pixel. Invalid, non-finite and at-or-behind-focal-plane pixels come out invalid.
DepthMap virtual_to_metric(const ScalarMap& virtual_depth, const ThinLens& lens);

// ---- LFS captures ----

/// The four per-scene assets of a capture directory:
/// plenoptic.pgm (16-bit Bayer raw), virtual_depth.pfm, natural.ppm, stereo_depth.pfm (metres, plenoptic view).
struct LfsCapture {
  std::string id;
  RawBayerImage plenoptic;
  ScalarMap virtual_depth;
  RgbImage natural;
  DepthMap stereo_depth;
};

inline constexpr const char* kLfsAssets[] = {"plenoptic.pgm", "virtual_depth.pfm", "natural.ppm", "stereo_depth.pfm"};

/// Throws MissingAsset naming the absent file and FormatError for unreadable or mis-sized assets
/// (virtual depth, natural image and stereo depth must share the plenoptic image size).
LfsCapture ingest_lfs(const std::string& dir, BayerPattern pattern = BayerPattern::RGGB);

enum class Split { Train, Test };
std::string to_string(Split s);

struct ManifestEntry {
  std::string id;
  std::string dir;  // absolute or relative to the manifest
  Split split = Split::Train;
};

struct LfsManifest {
  std::vector<ManifestEntry> entries;
  std::vector<ManifestEntry> select(Split s) const;
};

/// One "<capture dir> <train|test>" per line, '#' comments. Throws MissingAsset, FormatError
/// (bad split names, duplicated captures).
LfsManifest load_lfs_manifest(const std::string& path);

// ---- stage helpers shared by the CLI ----

/// Debayer and cut every complete flower stack.
FlowerStackBatch extract_stacks(const RawBayerImage& raw, const MicrolensGrid& grid);

/// Training capture list: one "<raw.pgm> <ground-truth.csv> [grid.txt]" per line, relative to the list.
/// Each raw is cut with its own grid when the line names one, otherwise with `grid`, and paired
/// with its ground truth by lens.
net::TrainingSet load_training_captures(const std::string& list_path, const MicrolensGrid& grid, BayerPattern pattern);

// ---- configuration ----

struct PipelineConfig {
  // inputs; relative paths in a config file resolve against its directory
  std::string raw;             // plenoptic 16-bit Bayer PGM
  std::string grid;            // grid calibration
  std::string rig;             // rig calibration
  std::string relative;        // dense relative-disparity PFM
  std::string weights;         // MLDN weights; the training output when train_enabled
  std::string train_captures;  // training capture list
  std::string train_grid;      // grid for capture lines without one, defaults to `grid`
  std::string gt_depth;        // optional dense truth PFM for eval
  std::string gt_sparse;       // optional sparse truth CSV for eval
  std::string left, right;     // optional stereo raws for stereo-gt
  std::string output_dir = "out";

  BayerPattern bayer = BayerPattern::RGGB;
  std::uint64_t seed = 0;
  int crop_size = kFlowerCropSize;
  bool train_enabled = false;
  net::TrainConfig train;
  double texture_threshold = kDefaultTextureThreshold;
  Estimator estimator = Estimator::TheilSen;
  TheilSenOptions theil_sen;
  RansacOptions ransac;
  HuberOptions huber;
  SgdHuberOptions sgd;
  StereoGtConfig stereo;
  Aggregation metrics_mode = Aggregation::Pooled;
  double bpr_threshold = kDefaultBprThreshold;
  ThinLens thin_lens;

  /// `seed` is required; stage seeds (train.seed, align.seed) default to it. Unknown keys are
  /// FormatError so typos surface. Throws FormatError, InvalidArgument.
  static PipelineConfig from_keyvalues(const KeyValues& kv, const std::string& base_dir = ".");
  static PipelineConfig load(const std::string& path);
  /// Every parameter explicit with absolute paths; from_keyvalues(to_keyvalues()) reproduces the config.
  KeyValues to_keyvalues() const;
};

/// Fits the configured estimator.
LinearScaleModel fit_model(const CorrespondenceSet& pairs, const PipelineConfig& cfg);

// ---- end-to-end run ----

struct Artifact {
  std::string name;
  std::string path;
  std::string hash;  // FNV-1a of the file bytes
};

struct RunResult {
  std::vector<Artifact> artifacts;  // in stage order, the manifest last
  LinearScaleModel model;
  std::optional<MetricsReport> dense_metrics;
  std::optional<MetricsReport> sparse_metrics;
  std::string manifest_path;
};

/// extract-stacks, train or load weights, predict, filter, align, fuse, eval. Every intermediate
/// is written to output_dir together with run_manifest.txt (the full config plus artifact hashes);
/// the manifest loads back as a config. Failures rethrow with "stage <name>:" prepended.
RunResult run_pipeline(const PipelineConfig& cfg);

/// Wraps `fn` so that any lfd::Error it throws names the stage.
template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), "stage " + stage + ": " + e.message());
  }
}

// ---- synthetic dataset ----

struct SynthDatasetConfig {
  std::uint64_t seed = 1;
  // evaluation scene: left part at near_depth, the rest at far_depth
  double near_depth = 1.0;
  double far_depth = 2.0;
  double split_x = 0.0;  // left-frame x of the depth edge, m
  double m = 2.0;        // relative-disparity frame of the dense input map
  double b = 5.0;
  int rows = 10;
  int cols = 12;
  double pitch = 24.0;
  MicrolensOptics optics{30.0, 0.1};
  double texture_cell = 0.3;
  double rig_focal = 1000.0;
  double rig_baseline = 0.1;
  // training captures: one plane each, inverse depth uniform on [1/train_max, 1/train_min]
  int train_scenes = 512;
  double train_min_depth = 0.6;
  double train_max_depth = 3.0;
  int epochs = 125;
  int batch_size = 128;
  double lr = 1e-3;
  void validate() const;  // throws InvalidArgument
};

/// Writes raws, calibrations, truth, the relative map, the training captures and config.txt
/// (a complete run config with training enabled) into `dir`. Returns the config path.
std::string write_synthetic_dataset(const SynthDatasetConfig& cfg, const std::string& dir);

}  // namespace lfd
