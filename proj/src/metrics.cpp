#include "lfdepth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "lfdepth/error.hpp"

namespace lfd {

std::string to_string(Aggregation a) { return a == Aggregation::Pooled ? "pooled" : "per-image"; }

Aggregation parse_aggregation(const std::string& name) {
  if (name == "pooled") return Aggregation::Pooled;
  if (name == "per-image") return Aggregation::PerImageMean;
  throw Error(ErrorKind::InvalidArgument, "unknown aggregation '" + name + "' (pooled, per-image)");
}

PairedDepths pair_depths(const DepthMap& pred, const DepthMap& gt) {
  if (pred.width != gt.width || pred.height != gt.height) throw Error(ErrorKind::ShapeMismatch, "depth maps differ in size");
  PairedDepths p;
  for (std::size_t i = 0; i < gt.values.size(); ++i)
    if (pred.valid[i] && gt.valid[i]) {
      p.pred.push_back(pred.values[i]);
      p.gt.push_back(gt.values[i]);
    }
  return p;
}

PairedDepths pair_depths(const SparseDepthMap& pred, const SparseDepthMap& gt) {
  std::map<AxialCoord, double> by_coord;
  for (const auto& e : pred.entries) by_coord[e.coord] = e.depth;
  PairedDepths p;
  for (const auto& e : gt.entries)
    if (auto it = by_coord.find(e.coord); it != by_coord.end()) {
      p.pred.push_back(it->second);
      p.gt.push_back(e.depth);
    }
  return p;
}

namespace {

// Sums over one sample set; metrics are formed from these.
struct Sums {
  double sq_cm = 0, abs_rel = 0, sq_rel = 0;
  std::size_t d1 = 0, d2 = 0, d3 = 0, bad = 0, n = 0;

  void add(double yhat, double y, double tau) {
    if (!(y > 0.0) || !(yhat > 0.0) || !std::isfinite(y) || !std::isfinite(yhat))
      throw Error(ErrorKind::NonPositiveDepth, "evaluated depths must be positive and finite");
    const double e = yhat - y, ratio = std::max(yhat / y, y / yhat);
    sq_cm += (100.0 * e) * (100.0 * e);
    abs_rel += std::abs(e) / y;
    sq_rel += e * e / (y * y);
    d1 += ratio < 1.25;
    d2 += ratio < 1.25 * 1.25;
    d3 += ratio < 1.25 * 1.25 * 1.25;
    bad += std::abs(e) / y > tau;
    ++n;
  }

  MetricsReport report() const {
    const double m = static_cast<double>(n);
    MetricsReport r;
    r.mse = sq_cm / m;
    r.rmse = std::sqrt(r.mse);
    r.mare = 100.0 * abs_rel / m;
    r.msre = sq_rel / m;
    r.delta1 = 100.0 * d1 / m;
    r.delta2 = 100.0 * d2 / m;
    r.delta3 = 100.0 * d3 / m;
    r.bpr = bad / m;
    r.count = n;
    r.images = 1;
    return r;
  }
};

}  // namespace

MetricsReport evaluate(const std::vector<PairedDepths>& images, Aggregation mode, double tau) {
  if (!(tau >= 0.0)) throw Error(ErrorKind::InvalidArgument, "BPR threshold must be non-negative");
  MetricsReport out;
  if (mode == Aggregation::Pooled) {
    Sums s;
    std::size_t used = 0;
    for (const auto& img : images) {
      if (img.pred.size() != img.gt.size()) throw Error(ErrorKind::ShapeMismatch, "paired depth lists differ in length");
      for (std::size_t i = 0; i < img.size(); ++i) s.add(img.pred[i], img.gt[i], tau);
      used += img.size() > 0;
    }
    if (s.n == 0) throw Error(ErrorKind::NoOverlap, "no jointly valid depth samples");
    out = s.report();
    out.images = used;
  } else {
    std::vector<MetricsReport> per;
    for (const auto& img : images) {
      if (img.pred.size() != img.gt.size()) throw Error(ErrorKind::ShapeMismatch, "paired depth lists differ in length");
      if (img.size() == 0) continue;
      Sums s;
      for (std::size_t i = 0; i < img.size(); ++i) s.add(img.pred[i], img.gt[i], tau);
      per.push_back(s.report());
    }
    if (per.empty()) throw Error(ErrorKind::NoOverlap, "no image has jointly valid depth samples");
    const double k = static_cast<double>(per.size());
    for (const auto& r : per) {
      out.mse += r.mse / k;
      out.rmse += r.rmse / k;
      out.mare += r.mare / k;
      out.msre += r.msre / k;
      out.delta1 += r.delta1 / k;
      out.delta2 += r.delta2 / k;
      out.delta3 += r.delta3 / k;
      out.bpr += r.bpr / k;
      out.count += r.count;
    }
    out.images = per.size();
  }
  out.mode = mode;
  out.bpr_threshold = tau;
  return out;
}

MetricsReport evaluate(const DepthMap& pred, const DepthMap& gt, double tau) {
  return evaluate(std::vector{pair_depths(pred, gt)}, Aggregation::Pooled, tau);
}

MetricsReport evaluate(const SparseDepthMap& pred, const SparseDepthMap& gt, double tau) {
  return evaluate(std::vector{pair_depths(pred, gt)}, Aggregation::Pooled, tau);
}

namespace {

constexpr const char* kColumnNames[kMetricColumns] = {"mse_cm2", "rmse_cm", "mare_pct", "msre",
                                                      "delta1_pct", "delta2_pct", "delta3_pct", "bpr"};

}  // namespace

std::string column_name(MetricColumn c) { return kColumnNames[static_cast<int>(c)]; }

MetricColumn parse_column(const std::string& name) {
  for (int i = 0; i < kMetricColumns; ++i)
    if (name == kColumnNames[i]) return static_cast<MetricColumn>(i);
  static const std::map<std::string, MetricColumn> short_names{
      {"mse", MetricColumn::Mse},       {"rmse", MetricColumn::Rmse},     {"mare", MetricColumn::Mare},
      {"delta1", MetricColumn::Delta1}, {"delta2", MetricColumn::Delta2}, {"delta3", MetricColumn::Delta3}};
  if (auto it = short_names.find(name); it != short_names.end()) return it->second;
  throw Error(ErrorKind::InvalidArgument, "unknown metric column '" + name + "'");
}

double column_value(const MetricsReport& r, MetricColumn c) {
  switch (c) {
    case MetricColumn::Mse: return r.mse;
    case MetricColumn::Rmse: return r.rmse;
    case MetricColumn::Mare: return r.mare;
    case MetricColumn::Msre: return r.msre;
    case MetricColumn::Delta1: return r.delta1;
    case MetricColumn::Delta2: return r.delta2;
    case MetricColumn::Delta3: return r.delta3;
    case MetricColumn::Bpr: return r.bpr;
  }
  return 0.0;
}

bool higher_is_better(MetricColumn c) {
  return c == MetricColumn::Delta1 || c == MetricColumn::Delta2 || c == MetricColumn::Delta3;
}

std::vector<RankedRow> compare_reports(const std::vector<std::pair<std::string, MetricsReport>>& reports, MetricColumn sort_by) {
  std::vector<RankedRow> rows;
  for (const auto& [name, r] : reports) rows.push_back({name, r, std::vector<bool>(kMetricColumns, false)});
  for (int c = 0; c < kMetricColumns && !rows.empty(); ++c) {
    const auto col = static_cast<MetricColumn>(c);
    double best = column_value(rows[0].report, col);
    for (const auto& row : rows) {
      const double v = column_value(row.report, col);
      best = higher_is_better(col) ? std::max(best, v) : std::min(best, v);
    }
    for (auto& row : rows) row.best[c] = column_value(row.report, col) == best;
  }
  const bool up = higher_is_better(sort_by);
  std::stable_sort(rows.begin(), rows.end(), [&](const RankedRow& a, const RankedRow& b) {
    const double va = column_value(a.report, sort_by), vb = column_value(b.report, sort_by);
    return up ? va > vb : va < vb;
  });
  return rows;
}

std::string to_csv(const std::vector<RankedRow>& rows) {
  std::ostringstream os;
  os << std::setprecision(17) << "name";
  for (const char* c : kColumnNames) os << ',' << c;
  os << ",count,images,mode,bpr_threshold\n";
  for (const auto& row : rows) {
    os << row.name;
    for (int c = 0; c < kMetricColumns; ++c) os << ',' << column_value(row.report, static_cast<MetricColumn>(c));
    os << ',' << row.report.count << ',' << row.report.images << ',' << to_string(row.report.mode) << ','
       << row.report.bpr_threshold << '\n';
  }
  return os.str();
}

std::string to_text_table(const std::vector<RankedRow>& rows) {
  static const char* headers[kMetricColumns] = {"MSE [cm2]", "RMSE [cm]", "MARE [%]", "MSRE",
                                                "d1 [%]", "d2 [%]", "d3 [%]", "BPR"};
  std::vector<std::vector<std::string>> cells(rows.size() + 1);
  cells[0].push_back("method");
  for (const char* h : headers) cells[0].push_back(h);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    cells[i + 1].push_back(rows[i].name);
    for (int c = 0; c < kMetricColumns; ++c) {
      std::ostringstream v;
      v << std::fixed << std::setprecision(c == 3 || c == 7 ? 4 : 2) << column_value(rows[i].report, static_cast<MetricColumn>(c))
        << (rows[i].best[c] ? "*" : " ");
      cells[i + 1].push_back(v.str());
    }
  }
  std::vector<std::size_t> width(kMetricColumns + 1, 0);
  for (const auto& line : cells)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  std::ostringstream os;
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c == 0) os << std::left << std::setw(static_cast<int>(width[c])) << line[c];
      else os << "  " << std::right << std::setw(static_cast<int>(width[c])) << line[c];
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace lfd
