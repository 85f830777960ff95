#include "pixsr/cli.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "pixsr/errors.h"
#include "pixsr/imaging.h"
#include "pixsr/io.h"
#include "pixsr/metrics.h"

namespace pixsr {

std::string_view BaselineName(Baseline baseline) {
  switch (baseline) {
    case Baseline::kNone:
      return "none";
    case Baseline::kBicubic:
      return "bicubic";
    case Baseline::kGuidedFilter:
      return "guided_filter";
  }
  return "unknown";
}

std::optional<Baseline> ParseBaseline(std::string_view name) {
  for (Baseline b :
       {Baseline::kNone, Baseline::kBicubic, Baseline::kGuidedFilter}) {
    if (BaselineName(b) == name) return b;
  }
  return std::nullopt;
}

namespace {

constexpr int kExitFailure = 1;

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void PrintReportHeader(std::ostream& out) {
  out << "method,mse,mae,pbp,delta\n";
}

void PrintReport(std::ostream& out, std::string_view method,
                 const EvalReport& r) {
  out << method << ',' << Num(r.mse) << ',' << Num(r.mae) << ','
      << Num(r.pbp) << ',' << Num(r.delta) << '\n';
}

Image ReadSingleChannel(const std::filesystem::path& path,
                        std::string_view role) {
  Image image = ReadImage(path);
  if (image.channels() != 1) {
    throw DimensionError(std::string(role) + " image " + path.string() +
                         " has " + std::to_string(image.channels()) +
                         " channels, expected 1");
  }
  return image;
}

UpsamplingFactor ResolveFactor(const Image& source, const Image& guide,
                               const std::vector<int>& requested) {
  const UpsamplingFactor inferred = InferFactor(source, guide);
  if (!requested.empty() && requested.front() != inferred.value()) {
    throw DimensionError("--factor " + std::to_string(requested.front()) +
                         " does not match the sizes (guide/source = " +
                         std::to_string(inferred.value()) + ")");
  }
  return inferred;
}

void Require(const std::filesystem::path& path, std::string_view flag) {
  if (path.empty()) {
    throw ArgumentError("missing required option " + std::string(flag));
  }
}

template <typename Fn>
int Guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const DimensionError& e) {
    err << "error: dimension mismatch: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kExitFailure;
}

TargetImage RunBaseline(Baseline baseline, const SourceImage& source,
                        const GuideImage* guide, UpsamplingFactor factor,
                        const GuidedFilterBaselineOptions& gf) {
  switch (baseline) {
    case Baseline::kBicubic:
      return BicubicUpsample(source, factor);
    case Baseline::kGuidedFilter:
      if (guide == nullptr) {
        throw ArgumentError("guided_filter baseline needs --guide");
      }
      return GuidedFilterBaseline(source, *guide, gf);
    case Baseline::kNone:
      break;
  }
  throw ArgumentError("no baseline selected");
}

}  // namespace

int CmdUpsample(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return Guarded(err, [&] {
    Require(config.source, "--source");
    Require(config.guide, "--guide");
    Require(config.out, "--out");
    const SourceImage source = ReadSingleChannel(config.source, "source");
    const GuideImage guide = ReadImage(config.guide);
    const UpsamplingFactor factor =
        ResolveFactor(source, guide, config.factors);
    std::optional<TargetImage> truth;
    if (!config.truth.empty()) {
      truth = ReadSingleChannel(config.truth, "truth");
      if (truth->height() != guide.height() ||
          truth->width() != guide.width()) {
        throw DimensionError("truth size differs from guide size");
      }
    }
    const FitResult fit = Fit(source, guide, config.model, config.train);
    WriteImage(config.out, fit.prediction, ImageFormat::kPfm);
    if (!config.trace.empty()) {
      std::ofstream trace(config.trace);
      if (!trace) throw IoError("cannot write " + config.trace.string());
      WriteTraceCsv(trace, fit.loss_trace);
    }
    if (!config.model_out.empty()) SaveModel(config.model_out, fit.params);
    out << "factor=" << factor.value()
        << " consistency_mae_initial=" << Num(fit.initial_consistency_mae)
        << " consistency_mae_final=" << Num(fit.final_consistency_mae) << '\n';
    if (truth) {
      PrintReportHeader(out);
      PrintReport(out, "pixel_mlp", Evaluate(fit.prediction, *truth, config.delta));
      for (Baseline b : config.baselines) {
        if (b == Baseline::kNone) continue;
        PrintReport(out, BaselineName(b),
                    Evaluate(RunBaseline(b, source, &guide, factor,
                                         config.guided_filter),
                             *truth, config.delta));
      }
    }
    return 0;
  });
}

int CmdBaseline(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return Guarded(err, [&] {
    Require(config.source, "--source");
    Require(config.out, "--out");
    Baseline baseline = Baseline::kBicubic;
    for (Baseline b : config.baselines) {
      if (b != Baseline::kNone) baseline = b;
    }
    const SourceImage source = ReadSingleChannel(config.source, "source");
    std::optional<GuideImage> guide;
    if (!config.guide.empty()) guide = ReadImage(config.guide);
    if (baseline == Baseline::kGuidedFilter && !guide) {
      throw ArgumentError("guided_filter baseline needs --guide");
    }
    UpsamplingFactor factor(1);
    if (guide) {
      factor = ResolveFactor(source, *guide, config.factors);
    } else if (!config.factors.empty()) {
      factor = UpsamplingFactor(config.factors.front());
    } else {
      throw ArgumentError("bicubic without --guide needs --factor");
    }
    const TargetImage result = RunBaseline(
        baseline, source, guide ? &*guide : nullptr, factor,
        config.guided_filter);
    WriteImage(config.out, result, ImageFormat::kPfm);
    if (!config.truth.empty()) {
      const TargetImage truth = ReadSingleChannel(config.truth, "truth");
      PrintReportHeader(out);
      PrintReport(out, BaselineName(baseline),
                  Evaluate(result, truth, config.delta));
    }
    return 0;
  });
}

int CmdSynth(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return Guarded(err, [&] {
    if (config.prefix.empty()) throw ArgumentError("missing --prefix");
    if (config.scene.channels != 1 && config.scene.channels != 3) {
      throw ConfigError("synthetic guides are written as PNG: use 1 or 3 channels");
    }
    const UpsamplingFactor factor(config.factors.empty() ? 8
                                                         : config.factors.front());
    const Scene scene = GenerateScene(config.scene);
    const SourceImage source = MakeSource(scene.target, factor);
    const std::string guide_path = config.prefix + "_guide.png";
    const std::string target_path = config.prefix + "_target.pfm";
    const std::string source_path = config.prefix + "_source.pfm";
    WriteImage(guide_path, scene.guide, ImageFormat::kPng,
               {8, PngMapping::kIdentity});
    WriteImage(target_path, scene.target, ImageFormat::kPfm);
    WriteImage(source_path, source, ImageFormat::kPfm);
    out << "wrote " << guide_path << ' ' << target_path << ' ' << source_path
        << " (N=" << scene.target.height() << ", M=" << source.height()
        << ", D=" << factor.value() << ")\n";
    return 0;
  });
}

namespace {

struct Triplet {
  std::string name;
  std::filesystem::path guide;
  std::filesystem::path target;
  std::filesystem::path source;  // may be empty
};

std::filesystem::path FindWithExtensions(const std::filesystem::path& dir,
                                         const std::string& stem) {
  for (const char* ext : {".pfm", ".png"}) {
    const auto p = dir / (stem + ext);
    if (std::filesystem::exists(p)) return p;
  }
  return {};
}

std::vector<Triplet> DiscoverTriplets(const std::filesystem::path& dir) {
  std::vector<Triplet> triplets;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string file = entry.path().filename().string();
    const std::string ext = entry.path().extension().string();
    if (ext != ".png" && ext != ".pfm") continue;
    const std::string stem = entry.path().stem().string();
    constexpr std::string_view kSuffix = "_guide";
    if (stem.size() <= kSuffix.size() ||
        stem.compare(stem.size() - kSuffix.size(), kSuffix.size(), kSuffix) !=
            0) {
      continue;
    }
    Triplet t;
    t.name = stem.substr(0, stem.size() - kSuffix.size());
    t.guide = entry.path();
    t.target = FindWithExtensions(dir, t.name + "_target");
    t.source = FindWithExtensions(dir, t.name + "_source");
    triplets.push_back(std::move(t));
  }
  std::sort(triplets.begin(), triplets.end(),
            [](const Triplet& a, const Triplet& b) { return a.name < b.name; });
  return triplets;
}

std::string CsvQuote(const std::string& s) {
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

}  // namespace

int CmdBench(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return Guarded(err, [&]() -> int {
    Require(config.bench_dir, "--dir");
    if (!std::filesystem::is_directory(config.bench_dir)) {
      throw IoError(config.bench_dir.string() + " is not a directory");
    }
    const std::vector<Triplet> triplets = DiscoverTriplets(config.bench_dir);
    if (triplets.empty()) {
      err << "error: no *_guide.{png,pfm} files in "
          << config.bench_dir.string() << '\n';
      return kExitFailure;
    }
    std::vector<Baseline> baselines;
    for (Baseline b : config.baselines) {
      if (b != Baseline::kNone &&
          std::find(baselines.begin(), baselines.end(), b) == baselines.end()) {
        baselines.push_back(b);
      }
    }
    if (config.baselines.empty()) {
      baselines = {Baseline::kBicubic, Baseline::kGuidedFilter};
    }
    std::vector<std::string> methods;
    for (Baseline b : baselines) methods.emplace_back(BaselineName(b));
    methods.emplace_back("pixel_mlp");

    std::ostringstream csv;
    csv << "image,factor,method,mse,mae,pbp,delta,status\n";
    // (factor, method) -> reports
    std::map<std::pair<int, std::string>, std::vector<EvalReport>> results;
    std::vector<int> factors_seen;
    std::size_t evaluated = 0;

    for (const Triplet& t : triplets) {
      try {
        if (t.target.empty()) throw IoError("no matching _target file");
        const GuideImage guide = ReadImage(t.guide);
        const TargetImage truth = ReadSingleChannel(t.target, "target");
        if (truth.height() != guide.height() || truth.width() != guide.width()) {
          throw DimensionError("target and guide sizes differ");
        }
        std::vector<std::pair<UpsamplingFactor, SourceImage>> cases;
        if (config.factors.empty()) {
          if (t.source.empty()) {
            throw IoError("no _source file and no --factor given");
          }
          SourceImage source = ReadSingleChannel(t.source, "source");
          const UpsamplingFactor f = InferFactor(source, guide);
          cases.emplace_back(f, std::move(source));
        } else {
          for (int d : config.factors) {
            const UpsamplingFactor f(d);
            cases.emplace_back(f, MakeSource(truth, f));
          }
        }
        for (const auto& [factor, source] : cases) {
          const int d = factor.value();
          if (std::find(factors_seen.begin(), factors_seen.end(), d) ==
              factors_seen.end()) {
            factors_seen.push_back(d);
          }
          auto record = [&](const std::string& method,
                            const TargetImage& prediction) {
            const EvalReport r = Evaluate(prediction, truth, config.delta);
            results[{d, method}].push_back(r);
            csv << CsvQuote(t.name) << ',' << d << ',' << method << ','
                << Num(r.mse) << ',' << Num(r.mae) << ',' << Num(r.pbp) << ','
                << Num(r.delta) << ",ok\n";
          };
          for (Baseline b : baselines) {
            record(std::string(BaselineName(b)),
                   RunBaseline(b, source, &guide, factor, config.guided_filter));
          }
          record("pixel_mlp",
                 Fit(source, guide, config.model, config.train).prediction);
        }
        ++evaluated;
      } catch (const std::exception& e) {
        err << "warning: skipping " << t.name << ": " << e.what() << '\n';
        csv << CsvQuote(t.name) << ",,,,,,," << CsvQuote(std::string("skipped: ") + e.what())
            << '\n';
      }
    }
    if (evaluated == 0) {
      err << "error: no triplet could be evaluated\n";
      return kExitFailure;
    }
    std::sort(factors_seen.begin(), factors_seen.end());

    std::vector<TableColumn> columns;
    for (const std::string& method : methods) {
      TableColumn col{method, {}};
      for (int d : factors_seen) {
        const auto it = results.find({d, method});
        if (it == results.end()) {
          col.per_factor.push_back({});
          continue;
        }
        const AggregateReport agg = Aggregate(it->second);
        col.per_factor.push_back(agg);
        csv << "mean," << d << ',' << method << ',' << Num(agg.mse.mean) << ','
            << Num(agg.mae.mean) << ',' << Num(agg.pbp.mean) << ','
            << Num(config.delta) << ",aggregate\n";
        csv << "std," << d << ',' << method << ',' << Num(agg.mse.stddev)
            << ',' << Num(agg.mae.stddev) << ',' << Num(agg.pbp.stddev) << ','
            << Num(config.delta) << ",aggregate\n";
      }
      columns.push_back(std::move(col));
    }

    if (!config.csv_out.empty()) {
      std::ofstream f(config.csv_out);
      if (!f) throw IoError("cannot write " + config.csv_out.string());
      f << csv.str();
    } else {
      out << csv.str() << '\n';
    }
    std::ostringstream table;
    WriteResultsTable(table, factors_seen, columns, config.delta);
    if (!config.table_out.empty()) {
      std::ofstream f(config.table_out);
      if (!f) throw IoError("cannot write " + config.table_out.string());
      f << table.str();
    }
    out << table.str();
    return 0;
  });
}

int CmdCheckGrad(const RunConfig& config, std::ostream& out,
                 std::ostream& err) {
  return Guarded(err, [&]() -> int {
    // Random 8x8 source with a 32x32x3 guide.
    std::mt19937_64 rng(config.train.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    SourceImage source(8, 8, 1);
    GuideImage guide(32, 32, 3);
    for (double& v : source.data()) v = normal(rng);
    for (double& v : guide.data()) v = normal(rng);
    const FitProblem problem = PrepareProblem(source, guide);
    const MlpParams params = InitModel(config.model, guide.channels());
    const std::vector<int> batch =
        SampleBatch(rng, problem.block_count(), config.train.batch_blocks);
    const GradientCheckReport report =
        CheckObjectiveGradients(params, problem, batch);
    out << "parameters=" << params.parameter_count()
        << " checked=" << report.checked
        << " skipped_kinks=" << report.skipped_kinks
        << " failures=" << report.failures
        << " max_relative_error=" << Num(report.max_relative_error) << '\n';
    out << (report.passed ? "PASS" : "FAIL") << '\n';
    return report.passed ? 0 : kExitFailure;
  });
}

int RunCli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Guided super-resolution by per-image pixel-to-pixel fitting",
               "pixsr"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value file; flags override it");

  RunConfig config;
  std::vector<std::string> baseline_names;
  std::string kind_name = "two_tone";

  app.add_option("--source", config.source, "Low-resolution source (PFM/PNG)");
  app.add_option("--guide", config.guide, "High-resolution guide (PNG/PFM)");
  app.add_option("--truth", config.truth, "Ground-truth target for reporting");
  app.add_option("--out", config.out, "Output PFM");
  app.add_option("--trace", config.trace, "Loss trace CSV");
  app.add_option("--model-out", config.model_out, "Save fitted parameters");
  app.add_option("--factor", config.factors, "Upsampling factor(s)")
      ->check(CLI::PositiveNumber);
  app.add_option("--iters", config.train.iterations, "Training iterations")
      ->capture_default_str();
  app.add_option("--lr", config.train.learning_rate, "ADAM learning rate")
      ->capture_default_str();
  app.add_option("--batch", config.train.batch_blocks, "Blocks per batch")
      ->capture_default_str();
  app.add_option("--log-every", config.train.log_every, "Trace cadence")
      ->capture_default_str();
  app.add_option("--lambda-g", config.model.lambda_g, "Colour-branch decay")
      ->capture_default_str();
  app.add_option("--lambda-x", config.model.lambda_x, "Spatial-branch decay")
      ->capture_default_str();
  app.add_option("--lambda-head", config.model.lambda_head, "Head decay")
      ->capture_default_str();
  app.add_option("--width", config.model.hidden_width, "Hidden width")
      ->capture_default_str();
  app.add_option("--color-depth", config.model.color_depth)
      ->capture_default_str();
  app.add_option("--spatial-depth", config.model.spatial_depth)
      ->capture_default_str();
  app.add_option("--head-depth", config.model.head_depth)
      ->capture_default_str();
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Seed for init, sampling and scenes");
  app.add_option("--baseline", baseline_names,
                 "none | bicubic | guided_filter (repeatable)")
      ->check(CLI::IsMember({"none", "bicubic", "guided_filter"}));
  app.add_option("--delta", config.delta, "PBP threshold")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--gf-radius", config.guided_filter.radius,
                 "Guided filter radius (0 = factor)");
  app.add_option("--gf-eps", config.guided_filter.eps, "Guided filter eps");

  auto* upsample = app.add_subcommand("upsample", "Fit and super-resolve");
  auto* baseline = app.add_subcommand("baseline", "Bicubic / guided filter");
  auto* synth = app.add_subcommand("synth", "Write a synthetic scene");
  auto* bench = app.add_subcommand("bench", "Evaluate a directory of triplets");
  auto* check = app.add_subcommand("check-grad",
                                   "Finite-difference check of the objective");

  synth->add_option("--kind", kind_name, "Scene kind")
      ->check(CLI::IsMember(
          {"two_tone", "stripes", "gradient_ramp", "textured_confuser"}));
  synth->add_option("--size", config.scene.size, "Target size N");
  synth->add_option("--channels", config.scene.channels, "Guide channels");
  synth->add_option("--prefix", config.prefix, "Output path prefix")
      ->required();
  synth->add_option("--boundary", config.scene.boundary_column);
  synth->add_option("--stripe-width", config.scene.stripe_width);
  synth->add_option("--ramp-step", config.scene.ramp_step);
  synth->add_option("--ramp-period", config.scene.ramp_period);
  synth->add_option("--tone-low", config.scene.tone_low);
  synth->add_option("--tone-high", config.scene.tone_high);
  bench->add_option("--dir", config.bench_dir, "Directory of triplets")
      ->required();
  bench->add_option("--csv", config.csv_out, "Per-image CSV output");
  bench->add_option("--table", config.table_out, "Text table output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  config.train.seed = seed;
  config.model.init_seed = seed;
  config.scene.seed = seed;
  for (const auto& name : baseline_names) {
    config.baselines.push_back(*ParseBaseline(name));
  }
  config.scene.kind = *ParseSceneKind(kind_name);

  if (upsample->parsed()) return CmdUpsample(config, out, err);
  if (baseline->parsed()) return CmdBaseline(config, out, err);
  if (synth->parsed()) return CmdSynth(config, out, err);
  if (bench->parsed()) return CmdBench(config, out, err);
  if (check->parsed()) return CmdCheckGrad(config, out, err);
  return kExitFailure;
}

}  // namespace pixsr
