#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lfdepth/image.hpp"
#include "lfdepth/sparse.hpp"

namespace lfd {

enum class Aggregation { Pooled, PerImageMean };
std::string to_string(Aggregation a);
Aggregation parse_aggregation(const std::string& name);  // "pooled" | "per-image"; throws InvalidArgument

inline constexpr double kDefaultBprThreshold = 0.25;

struct MetricsReport {
  double mse = 0.0;     // cm^2
  double rmse = 0.0;    // cm
  double mare = 0.0;    // percent
  double msre = 0.0;
  double delta1 = 0.0;  // percent
  double delta2 = 0.0;
  double delta3 = 0.0;
  double bpr = 0.0;     // fraction
  std::size_t count = 0;
  std::size_t images = 0;
  Aggregation mode = Aggregation::Pooled;
  double bpr_threshold = kDefaultBprThreshold;
};

/// Jointly valid (prediction, truth) depths in metres from one image.
struct PairedDepths {
  std::vector<double> pred;
  std::vector<double> gt;
  std::size_t size() const { return gt.size(); }
};

/// Pixels valid in both maps. Throws ShapeMismatch.
PairedDepths pair_depths(const DepthMap& pred, const DepthMap& gt);
/// Entries sharing a lens coordinate.
PairedDepths pair_depths(const SparseDepthMap& pred, const SparseDepthMap& gt);

/// Pooled: every metric over the union of samples. Per-image: the mean of each image's metrics,
/// skipping images without samples. Throws NoOverlap, NonPositiveDepth.
MetricsReport evaluate(const std::vector<PairedDepths>& images, Aggregation mode = Aggregation::Pooled,
                       double bpr_threshold = kDefaultBprThreshold);
MetricsReport evaluate(const DepthMap& pred, const DepthMap& gt, double bpr_threshold = kDefaultBprThreshold);
MetricsReport evaluate(const SparseDepthMap& pred, const SparseDepthMap& gt, double bpr_threshold = kDefaultBprThreshold);

enum class MetricColumn { Mse, Rmse, Mare, Msre, Delta1, Delta2, Delta3, Bpr };
inline constexpr int kMetricColumns = 8;
std::string column_name(MetricColumn c);
MetricColumn parse_column(const std::string& name);  // throws InvalidArgument
double column_value(const MetricsReport& r, MetricColumn c);
bool higher_is_better(MetricColumn c);

struct RankedRow {
  std::string name;
  MetricsReport report;
  std::vector<bool> best;  // per column; ties share the mark
};

/// Rows sorted best-first by `sort_by`, ties kept in input order.
std::vector<RankedRow> compare_reports(const std::vector<std::pair<std::string, MetricsReport>>& reports,
                                       MetricColumn sort_by = MetricColumn::Rmse);

std::string to_csv(const std::vector<RankedRow>& rows);
/// Aligned plain-text table; best values carry a trailing '*'.
std::string to_text_table(const std::vector<RankedRow>& rows);

}  // namespace lfd
