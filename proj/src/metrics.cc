#include "pixsr/metrics.h"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "pixsr/errors.h"

namespace pixsr {

namespace {

void CheckPair(const TargetImage& a, const TargetImage& b) {
  if (!a.SameShape(b) || a.empty()) {
    throw DimensionError("metric operands differ in size: " +
                         std::to_string(a.height()) + "x" +
                         std::to_string(a.width()) + "x" +
                         std::to_string(a.channels()) + " vs " +
                         std::to_string(b.height()) + "x" +
                         std::to_string(b.width()) + "x" +
                         std::to_string(b.channels()));
  }
}

}  // namespace

double Mse(const TargetImage& prediction, const TargetImage& truth) {
  CheckPair(prediction, truth);
  const auto p = prediction.data();
  const auto t = truth.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double e = p[i] - t[i];
    sum += e * e;
  }
  return sum / static_cast<double>(p.size());
}

double Mae(const TargetImage& prediction, const TargetImage& truth) {
  CheckPair(prediction, truth);
  const auto p = prediction.data();
  const auto t = truth.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - t[i]);
  return sum / static_cast<double>(p.size());
}

double Pbp(const TargetImage& prediction, const TargetImage& truth,
           double delta) {
  CheckPair(prediction, truth);
  if (!(delta > 0.0)) throw ArgumentError("PBP threshold must be > 0");
  const auto p = prediction.data();
  const auto t = truth.data();
  std::size_t bad = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (std::abs(p[i] - t[i]) > delta) ++bad;
  }
  return 100.0 * static_cast<double>(bad) / static_cast<double>(p.size());
}

EvalReport Evaluate(const TargetImage& prediction, const TargetImage& truth,
                    double delta) {
  return {Mse(prediction, truth), Mae(prediction, truth),
          Pbp(prediction, truth, delta), delta};
}

namespace {

// Welford accumulator.
class RunningStats {
 public:
  void Add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  MetricSummary Summary() const {
    return {mean_, n_ > 0 ? std::sqrt(m2_ / static_cast<double>(n_)) : 0.0};
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace

AggregateReport Aggregate(std::span<const EvalReport> reports) {
  if (reports.empty()) throw ArgumentError("cannot aggregate zero reports");
  RunningStats mse, mae, pbp;
  for (const auto& r : reports) {
    mse.Add(r.mse);
    mae.Add(r.mae);
    pbp.Add(r.pbp);
  }
  return {mse.Summary(), mae.Summary(), pbp.Summary(), reports.size()};
}

namespace {

std::string Cell(const MetricSummary& s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << s.mean << " (" << s.stddev << ")";
  return os.str();
}

}  // namespace

void WriteResultsTable(std::ostream& out, std::span<const int> factors,
                       std::span<const TableColumn> columns, double delta) {
  std::ostringstream pbp_label;
  pbp_label << "PBP_d=" << delta;
  constexpr int kLead = 6;
  constexpr int kMetric = 12;
  constexpr int kCell = 20;
  out << std::left << std::setw(kLead) << "" << std::setw(kMetric) << "";
  for (const auto& col : columns) out << std::setw(kCell) << col.method;
  out << '\n';
  for (std::size_t f = 0; f < factors.size(); ++f) {
    const std::string label = "x" + std::to_string(factors[f]);
    const char* names[] = {"MSE", "MAE", nullptr};
    for (int row = 0; row < 3; ++row) {
      out << std::setw(kLead) << (row == 0 ? label : "")
          << std::setw(kMetric)
          << (row < 2 ? std::string(names[row]) : pbp_label.str());
      for (const auto& col : columns) {
        const AggregateReport& agg = col.per_factor.at(f);
        const MetricSummary& s = row == 0 ? agg.mse : row == 1 ? agg.mae : agg.pbp;
        out << std::setw(kCell) << (agg.count ? Cell(s) : "-");
      }
      out << '\n';
    }
  }
}

}  // namespace pixsr
