#ifndef PIXSR_CLI_H_
#define PIXSR_CLI_H_

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pixsr/model.h"
#include "pixsr/solver.h"
#include "pixsr/synthdata.h"

namespace pixsr {

enum class Baseline { kNone, kBicubic, kGuidedFilter };

std::string_view BaselineName(Baseline baseline);
std::optional<Baseline> ParseBaseline(std::string_view name);

struct RunConfig {
  std::filesystem::path source;
  std::filesystem::path guide;
  std::filesystem::path truth;
  std::filesystem::path out;
  std::filesystem::path trace;
  std::filesystem::path model_out;
  std::filesystem::path bench_dir;
  std::filesystem::path csv_out;
  std::filesystem::path table_out;
  // Empty: infer from sizes. Several values only matter for `bench`.
  std::vector<int> factors;
  ModelConfig model;
  TrainConfig train;
  std::vector<Baseline> baselines;
  double delta = 1.0;
  GuidedFilterBaselineOptions guided_filter;
  SceneSpec scene;
  std::string prefix;
};

// Each command returns a process exit code and reports errors on `err`.
int CmdUpsample(const RunConfig& config, std::ostream& out, std::ostream& err);
int CmdBaseline(const RunConfig& config, std::ostream& out, std::ostream& err);
int CmdSynth(const RunConfig& config, std::ostream& out, std::ostream& err);
int CmdBench(const RunConfig& config, std::ostream& out, std::ostream& err);
int CmdCheckGrad(const RunConfig& config, std::ostream& out,
                 std::ostream& err);

// Parses argv (verbs: upsample, baseline, synth, bench, check-grad) and runs
// the selected command.
int RunCli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace pixsr

#endif  // PIXSR_CLI_H_
