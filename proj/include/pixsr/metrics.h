#ifndef PIXSR_METRICS_H_
#define PIXSR_METRICS_H_

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pixsr/image.h"

namespace pixsr {

// All metrics compare single-channel images of identical size and throw
// DimensionError otherwise.
double Mse(const TargetImage& prediction, const TargetImage& truth);
double Mae(const TargetImage& prediction, const TargetImage& truth);
// Percentage (0..100) of pixels with |prediction - truth| > delta.
double Pbp(const TargetImage& prediction, const TargetImage& truth,
           double delta);

struct EvalReport {
  double mse = 0.0;
  double mae = 0.0;
  double pbp = 0.0;
  double delta = 1.0;
};

EvalReport Evaluate(const TargetImage& prediction, const TargetImage& truth,
                    double delta);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

struct AggregateReport {
  MetricSummary mse;
  MetricSummary mae;
  MetricSummary pbp;
  std::size_t count = 0;
};

// Throws ArgumentError on an empty list.
AggregateReport Aggregate(std::span<const EvalReport> reports);

// One column of a results table: method name and its aggregate per factor.
struct TableColumn {
  std::string method;
  std::vector<AggregateReport> per_factor;  // parallel to the factor list
};

// Rows are factor x {MSE, MAE, PBP_delta}; cells read "mean (std)".
void WriteResultsTable(std::ostream& out, std::span<const int> factors,
                       std::span<const TableColumn> columns, double delta);

}  // namespace pixsr

#endif  // PIXSR_METRICS_H_
