// lfdepth: command-line front end, one subcommand per pipeline stage plus `synth`, `ingest` and `run`.
#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "lfdepth/error.hpp"
#include "lfdepth/io.hpp"
#include "lfdepth/pipeline.hpp"

namespace fs = std::filesystem;
using namespace lfd;

namespace {

constexpr const char* kOutputEnv = "LFDEPTH_OUTPUT_DIR";

// Relative output paths land under $LFDEPTH_OUTPUT_DIR when it is set.
std::string output_path(const std::string& p) {
  const char* env = std::getenv(kOutputEnv);
  if (!env || !*env || fs::path(p).is_absolute()) return p;
  fs::create_directories(env);
  return (fs::path(env) / p).string();
}

void ensure_parent(const std::string& p) {
  const auto parent = fs::path(p).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

bool is_csv(const std::string& p) { return fs::path(p).extension() == ".csv"; }

DepthMap read_depth(const std::string& p) {
  DepthMap d;
  static_cast<ScalarMap&>(d) = read_map_pfm(p);
  return d;
}

/// --config file (optional) and repeated --set key=value overrides.
struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;

  void add(CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("-c,--config", path, "pipeline config file");
    if (required) opt->required()->check(CLI::ExistingFile);
    cmd->add_option("--set", overrides, "override a config key, key=value (repeatable)");
  }

  PipelineConfig load() const {
    KeyValues kv = path.empty() ? KeyValues{} : KeyValues::load(path);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::Usage, "--set expects key=value, got '" + o + "'");
      kv.set(o.substr(0, eq), o.substr(eq + 1));
    }
    if (path.empty() && !kv.has("seed")) kv.set("seed", std::string("0"));
    const std::string base = path.empty() ? std::string(".") : fs::path(path).parent_path().string();
    auto cfg = PipelineConfig::from_keyvalues(kv, base.empty() ? "." : base);
    if (const char* env = std::getenv(kOutputEnv); env && *env) cfg.output_dir = env;
    return cfg;
  }
};

void print_metrics(const std::vector<std::pair<std::string, MetricsReport>>& reports, MetricColumn sort_by,
                   const std::string& csv) {
  const auto rows = compare_reports(reports, sort_by);
  std::cout << to_text_table(rows);
  if (!csv.empty()) {
    ensure_parent(csv);
    write_text_file(csv, to_csv(rows));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-shot metric depth for focused plenoptic cameras"};
  app.require_subcommand(1);

  // extract-stacks
  std::string raw, grid, bayer = "RGGB", out;
  auto* extract = app.add_subcommand("extract-stacks", "cut flower stacks from a raw plenoptic image");
  extract->add_option("--raw", raw, "16-bit Bayer PGM")->required()->check(CLI::ExistingFile);
  extract->add_option("--grid", grid, "grid calibration")->required()->check(CLI::ExistingFile);
  extract->add_option("--bayer", bayer, "CFA pattern (RGGB, BGGR, GRBG, GBRG)");
  extract->add_option("-o,--out", out, "stack archive")->required();

  // train
  ConfigArgs train_cfg;
  std::string loss_out;
  auto* train = app.add_subcommand("train", "train the microlens depth network on the configured captures");
  train_cfg.add(train, true);
  train->add_option("-o,--out", out, "weights file")->required();
  train->add_option("--loss", loss_out, "per-epoch loss CSV");

  // predict
  std::string weights, stacks;
  auto* predict = app.add_subcommand("predict", "sparse depth from flower stacks");
  predict->add_option("--weights", weights)->required()->check(CLI::ExistingFile);
  predict->add_option("--stacks", stacks)->required()->check(CLI::ExistingFile);
  predict->add_option("-o,--out", out, "sparse depth CSV")->required();

  // filter
  std::string sparse;
  double threshold = kDefaultTextureThreshold;
  auto* filter = app.add_subcommand("filter", "drop sparse depths of low-texture stacks");
  filter->add_option("--sparse", sparse)->required()->check(CLI::ExistingFile);
  filter->add_option("--stacks", stacks)->required()->check(CLI::ExistingFile);
  filter->add_option("--threshold", threshold, "minimum texture score");
  filter->add_option("-o,--out", out)->required();

  // align
  std::string relative, rig_path, estimator = "theil-sen";
  std::uint64_t seed = 0;
  auto* align = app.add_subcommand("align", "fit relative disparity to sparse metric disparity");
  align->add_option("--relative", relative, "relative disparity PFM")->required()->check(CLI::ExistingFile);
  align->add_option("--sparse", sparse)->required()->check(CLI::ExistingFile);
  align->add_option("--rig", rig_path)->required()->check(CLI::ExistingFile);
  align->add_option("--estimator", estimator, "theil-sen, ransac, huber, sgd-huber");
  align->add_option("--seed", seed);
  align->add_option("-o,--out", out, "model file")->required();

  // fuse
  std::string model_path;
  auto* fuse_cmd = app.add_subcommand("fuse", "dense metric depth from relative disparity and a model");
  fuse_cmd->add_option("--relative", relative)->required()->check(CLI::ExistingFile);
  fuse_cmd->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  fuse_cmd->add_option("--rig", rig_path)->required()->check(CLI::ExistingFile);
  fuse_cmd->add_option("-o,--out", out, "depth PFM")->required();

  // eval
  std::vector<std::string> preds;
  std::string gt, mode = "pooled", sort_by = "rmse", csv_out;
  double bpr = kDefaultBprThreshold;
  auto* eval = app.add_subcommand("eval", "compare depth predictions against truth");
  eval->add_option("--pred", preds, "name=path or path, PFM or CSV (repeatable)")->required();
  eval->add_option("--gt", gt, "truth PFM or CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--mode", mode, "pooled or per-image");
  eval->add_option("--bpr-threshold", bpr);
  eval->add_option("--sort", sort_by, "column to rank by");
  eval->add_option("--csv", csv_out, "also write the table as CSV");

  // stereo-gt
  ConfigArgs stereo_cfg;
  std::string depth_out;
  auto* stereo = app.add_subcommand("stereo-gt", "sparse ground truth from the stereo pair");
  stereo_cfg.add(stereo, true);
  stereo->add_option("-o,--out", out, "sparse depth CSV")->required();
  stereo->add_option("--depth", depth_out, "also write the plenoptic-view depth PFM");

  // synth
  SynthDatasetConfig synth_cfg;
  std::string synth_dir;
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset and its run config");
  synth->add_option("-o,--out", synth_dir, "dataset directory")->required();
  synth->add_option("--seed", synth_cfg.seed);
  synth->add_option("--near", synth_cfg.near_depth, "near plane depth, m");
  synth->add_option("--far", synth_cfg.far_depth, "far plane depth, m");
  synth->add_option("--m", synth_cfg.m, "relative frame scale");
  synth->add_option("--b", synth_cfg.b, "relative frame shift");
  synth->add_option("--rows", synth_cfg.rows);
  synth->add_option("--cols", synth_cfg.cols);
  synth->add_option("--train-scenes", synth_cfg.train_scenes);
  synth->add_option("--epochs", synth_cfg.epochs);
  synth->add_option("--batch-size", synth_cfg.batch_size);
  synth->add_option("--lr", synth_cfg.lr);

  // ingest
  ConfigArgs ingest_cfg;
  std::string manifest, ingest_dir;
  auto* ingest = app.add_subcommand("ingest", "validate LFS captures and derive sparse truth and metric depth");
  ingest_cfg.add(ingest, false);
  ingest->add_option("--manifest", manifest, "capture manifest")->required()->check(CLI::ExistingFile);
  ingest->add_option("--grid", grid, "grid calibration")->required()->check(CLI::ExistingFile);
  ingest->add_option("-o,--out", ingest_dir, "output directory")->required();

  // run
  ConfigArgs run_cfg;
  auto* run = app.add_subcommand("run", "the whole pipeline with every artifact on disk");
  run_cfg.add(run, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*extract) {
      const auto g = build_grid(load_grid_calibration(grid));
      const auto batch = extract_stacks(to_raw(read_pgm16(raw), parse_bayer_pattern(bayer)), g);
      out = output_path(out);
      ensure_parent(out);
      save_stack_archive(out, batch);
      std::cout << batch.n << " stacks from " << g.size() << " lenses -> " << out << "\n";
    } else if (*train) {
      const auto cfg = train_cfg.load();
      const std::string gpath = cfg.train_grid.empty() ? cfg.grid : cfg.train_grid;
      if (cfg.train_captures.empty() || gpath.empty())
        throw Error(ErrorKind::Usage, "config needs input.train_captures and input.grid (or input.train_grid)");
      const auto g = build_grid(load_grid_calibration(gpath));
      const auto data = load_training_captures(cfg.train_captures, g, cfg.bayer);
      std::cout << data.size() << " training stacks\n";
      auto result = net::train(data, cfg.train, [](int epoch, double loss) {
        std::cout << "epoch " << epoch << " loss " << loss << "\n" << std::flush;
      });
      out = output_path(out);
      ensure_parent(out);
      net::save_network(out, result.network);
      if (!loss_out.empty()) {
        loss_out = output_path(loss_out);
        ensure_parent(loss_out);
        net::save_loss_history(loss_out, result.epoch_loss);
      }
    } else if (*predict) {
      const auto network = net::load_network(weights);
      const auto result = net::predict_sparse(network, load_stack_archive(stacks));
      out = output_path(out);
      ensure_parent(out);
      save_sparse_csv(out, result);
      std::cout << result.size() << " depths -> " << out << "\n";
    } else if (*filter) {
      const auto batch = load_stack_archive(stacks);
      const auto kept = filter_sparse_depth(load_sparse_csv(sparse), split_batch(batch), threshold);
      out = output_path(out);
      ensure_parent(out);
      save_sparse_csv(out, kept);
      std::cout << kept.size() << " of " << batch.n << " depths kept\n";
    } else if (*align) {
      KeyValues kv;
      kv.set("seed", std::to_string(seed));
      kv.set("align.estimator", estimator);
      const auto cfg = PipelineConfig::from_keyvalues(kv);
      const auto rig = load_rig(rig_path);
      DisparityMap rel;
      static_cast<ScalarMap&>(rel) = read_map_pfm(relative);
      rel.frame = DisparityFrame::Relative;
      const auto model = fit_model(sample_correspondences(rel, load_sparse_csv(sparse), rig), cfg);
      out = output_path(out);
      ensure_parent(out);
      save_model(out, model);
      std::cout << "m = " << format_double(model.m) << ", b = " << format_double(model.b) << " from " << model.pairs
                << " pairs\n";
    } else if (*fuse_cmd) {
      DisparityMap rel;
      static_cast<ScalarMap&>(rel) = read_map_pfm(relative);
      rel.frame = DisparityFrame::Relative;
      const auto depth = fuse(rel, load_model(model_path), load_rig(rig_path));
      out = output_path(out);
      ensure_parent(out);
      write_map_pfm(out, depth);
      std::cout << depth.valid_count() << " depth pixels -> " << out << "\n";
    } else if (*eval) {
      const auto agg = parse_aggregation(mode);
      std::vector<std::pair<std::string, MetricsReport>> reports;
      for (const auto& p : preds) {
        const auto eq = p.find('=');
        const std::string name = eq == std::string::npos ? fs::path(p).stem().string() : p.substr(0, eq);
        const std::string path = eq == std::string::npos ? p : p.substr(eq + 1);
        if (!fs::exists(path)) throw Error(ErrorKind::MissingAsset, "prediction " + path + " does not exist");
        if (is_csv(path) != is_csv(gt)) throw Error(ErrorKind::Usage, "prediction and truth must both be PFM or both CSV");
        const PairedDepths pairs = is_csv(gt) ? pair_depths(load_sparse_csv(path), load_sparse_csv(gt))
                                              : pair_depths(read_depth(path), read_depth(gt));
        reports.push_back({name, evaluate(std::vector{pairs}, agg, bpr)});
      }
      print_metrics(reports, parse_column(sort_by), csv_out.empty() ? csv_out : output_path(csv_out));
    } else if (*stereo) {
      const auto cfg = stereo_cfg.load();
      if (cfg.left.empty() || cfg.right.empty() || cfg.rig.empty() || cfg.grid.empty())
        throw Error(ErrorKind::Usage, "config needs input.left, input.right, input.rig and input.grid");
      const auto rig = load_rig(cfg.rig);
      const auto l = debayer(to_raw(read_pgm16(cfg.left), cfg.bayer));
      const auto r = debayer(to_raw(read_pgm16(cfg.right), cfg.bayer));
      const auto result = stereo_ground_truth(l, r, rig, build_grid(load_grid_calibration(cfg.grid)), cfg.stereo);
      out = output_path(out);
      ensure_parent(out);
      save_sparse_csv(out, result.sparse);
      if (!depth_out.empty()) {
        depth_out = output_path(depth_out);
        ensure_parent(depth_out);
        write_map_pfm(depth_out, result.plenoptic.depth);
      }
      std::cout << result.sparse.size() << " lens depths -> " << out << "\n";
    } else if (*synth) {
      const auto path = write_synthetic_dataset(synth_cfg, output_path(synth_dir));
      std::cout << "config -> " << path << "\n";
    } else if (*ingest) {
      const auto cfg = ingest_cfg.load();
      const auto g = build_grid(load_grid_calibration(grid));
      const bool convert = cfg.thin_lens.focal > 0.0;
      const auto m = load_lfs_manifest(manifest);
      const fs::path dir = output_path(ingest_dir);
      fs::create_directories(dir);
      std::string train_list, test_list;
      for (const auto& e : m.entries) {
        const auto capture = ingest_lfs(e.dir, cfg.bayer);
        const auto stacks = extract_stacks(capture.plenoptic, g);
        auto truth = sample_at_centroids(capture.stereo_depth, g);
        truth.source = DepthSource::StereoGroundTruth;
        const std::string truth_name = e.id + "_stereo.csv";
        save_sparse_csv((dir / truth_name).string(), truth);
        if (convert) write_map_pfm((dir / (e.id + "_raytrix.pfm")).string(), virtual_to_metric(capture.virtual_depth, cfg.thin_lens));
        const std::string line = fs::absolute(e.dir).lexically_normal().string() + "/plenoptic.pgm " + truth_name + "\n";
        (e.split == Split::Train ? train_list : test_list) += line;
        std::cout << e.id << " (" << to_string(e.split) << "): " << stacks.n << " stacks, " << truth.size()
                  << " stereo depths\n";
      }
      write_text_file((dir / "train_captures.txt").string(), train_list);
      write_text_file((dir / "test_captures.txt").string(), test_list);
      std::cout << m.select(Split::Train).size() << " train / " << m.select(Split::Test).size() << " test captures\n";
    } else if (*run) {
      const auto result = run_pipeline(run_cfg.load());
      for (const auto& a : result.artifacts) std::cout << a.hash << "  " << a.name << "  " << a.path << "\n";
      std::cout << "m = " << format_double(result.model.m) << ", b = " << format_double(result.model.b) << "\n";
      if (result.dense_metrics) print_metrics({{"fused", *result.dense_metrics}}, MetricColumn::Rmse, "");
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
