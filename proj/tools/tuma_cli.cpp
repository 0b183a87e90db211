// Command-line front end: run | sweep | priors | hist | validate.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tuma/harness.hpp"
#include "tuma/specfun.hpp"

namespace {

using namespace tuma;
using nlohmann::json;

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kValidation = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string decoder;
  std::string out;
  std::optional<int> runs;
  std::string preset;
  std::optional<double> snr_db;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

SystemConfig resolve_config(const Common& c) {
  json j = c.config.empty() ? json::object() : read_json_file(c.config);
  if (!c.preset.empty() && !j.contains("preset")) j["preset"] = c.preset;
  if (c.seed) j["master_seed"] = *c.seed;
  if (c.snr_db) j["snr_rx_db"] = *c.snr_db;
  return config_from_json(j);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed on '" + path + "'");
}

void print_summary(const std::vector<PointSummary>& pts, SweepAxis axis) {
  std::cout << std::setprecision(6);
  for (const auto& p : pts) {
    std::cout << axis_name(axis) << '=' << p.point_value << "  " << decoder_name(p.decoder) << "  runs=" << p.runs
              << "  tv=" << p.tv.mean << "  W=" << p.wasserstein.mean << "  gospa=" << p.gospa.mean
              << "  p_md=" << p.p_md.mean << "  (degenerate " << p.no_active + p.empty_type << ", failed " << p.failed
              << ")\n";
  }
}

int cmd_run(const Common& c) {
  ExperimentSpec spec;
  spec.base = resolve_config(c);
  spec.master_seed = spec.base.master_seed;
  spec.decoders = {decoder_from_name(c.decoder.empty() ? "centralized" : c.decoder)};
  spec.runs = c.runs.value_or(1);
  spec.out_dir = c.out;
  if (!c.out.empty()) spec.prior_cache_dir = (std::filesystem::path(c.out) / "priors").string();
  const MetricsReport rep = run_sweep(spec);
  print_summary(rep.points, spec.axis);
  return kOk;
}

int cmd_sweep(const Common& c) {
  if (c.config.empty()) throw ConfigError("sweep needs --config <spec.json>");
  json j = read_json_file(c.config);
  if (!c.preset.empty() && !j.contains("preset")) j["preset"] = c.preset;
  if (c.seed) j["master_seed"] = *c.seed;
  if (c.runs) j["runs"] = *c.runs;
  if (!c.decoder.empty()) j["decoders"] = c.decoder;
  if (!c.out.empty()) j["out_dir"] = c.out;
  ExperimentSpec spec = spec_from_json(j);
  if (spec.prior_cache_dir.empty() && !spec.out_dir.empty())
    spec.prior_cache_dir = (std::filesystem::path(spec.out_dir) / "priors").string();
  const MetricsReport rep = run_sweep(spec, &std::cerr);
  print_summary(rep.points, spec.axis);
  return kOk;
}

int cmd_priors(const Common& c) {
  const SystemConfig cfg = resolve_config(c);
  const Topology topo = build_topology(cfg);
  const std::string dir = c.out.empty() ? std::string("priors") : c.out;
  const MultiplicityPrior p = load_or_compute_prior(cfg, topo, dir);
  std::cout << "p_active=" << p.p_active << " k_max=" << p.k_max << " zones=" << p.zones
            << " messages=" << p.messages << "\ncache: "
            << (std::filesystem::path(dir) / ("prior-" + prior_config_hash(cfg) + ".json")).string() << '\n';
  RVector mean_pk = RVector::Zero(p.k_max + 1);
  for (Eigen::Index r = 0; r < p.probs.rows(); ++r) mean_pk += p.probs.row(r).transpose();
  mean_pk /= static_cast<double>(p.probs.rows());
  std::cout << "mean p(k):";
  for (Eigen::Index k = 0; k < mean_pk.size(); ++k) std::cout << ' ' << mean_pk[k];
  std::cout << '\n';
  return kOk;
}

int cmd_hist(const Common& c) {
  const SystemConfig cfg = resolve_config(c);
  const int runs = c.runs.value_or(100);
  const MultiplicityHistogram h = multiplicity_histogram(cfg, runs, cfg.master_seed);
  json j;
  j["runs"] = runs;
  j["codewords"] = h.codewords;
  j["transmissions"] = h.transmissions;
  j["collision_fraction_transmissions"] = h.collision_fraction();
  j["collision_fraction_codewords"] = h.codeword_collision_fraction();
  json probs = json::object();
  for (int k = 1; k < static_cast<int>(h.counts.size()); ++k) {
    probs[std::to_string(k)] = h.probability(k);
    std::cout << "k=" << k << "  P=" << std::setprecision(5) << h.probability(k) << "  count=" << h.counts[k] << '\n';
  }
  j["probabilities"] = probs;
  std::cout << "colliding transmissions: " << h.collision_fraction()
            << "  colliding codewords: " << h.codeword_collision_fraction() << '\n';
  if (!c.out.empty()) {
    std::filesystem::create_directories(c.out);
    write_text((std::filesystem::path(c.out) / "histogram.json").string(), j.dump(2) + "\n");
  }
  return kOk;
}

// Quick self-checks on the configured system. The full oracle suites live in
// the test binaries; these run in seconds and need no test data.
int cmd_validate(const Common& c) {
  SystemConfig cfg = resolve_config(c);
  int failures = 0;
  auto report = [&](const char* name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS  " : "FAIL  ") << name << "  " << detail << '\n';
    if (!ok) ++failures;
  };
  report("config", true, "valid, B=" + std::to_string(ap_count(cfg)) + " F=" + std::to_string(antenna_count(cfg)));

  {
    double worst = 0;
    for (double b : {0.0, 1.0, 3.0, 7.0}) worst = std::max(worst, std::abs(marcum_q1(0, b) - std::exp(-b * b / 2)));
    report("marcum_q1 closed form", worst < 1e-12, "max err " + std::to_string(worst));
  }

  SystemConfig small = cfg;
  small.sensors = std::min(cfg.sensors, 8);
  small.k_max = std::min(cfg.k_max, std::max(1, small.sensors));
  small.messages = std::min(cfg.messages, 16);
  small.n_mc = std::min(cfg.n_mc, 50);
  small.amp_iters = std::min(cfg.amp_iters, 3);
  small.prior_sampling = {2000, 20, 200, 2};
  validate(small);
  ExperimentContext ctx(small);
  const auto& prior = ctx.prior();
  double row_sum_max = 0;
  for (Eigen::Index r = 0; r < prior.probs.rows(); ++r) row_sum_max = std::max(row_sum_max, prior.probs.row(r).sum());
  report("prior mass", row_sum_max <= 1 + 1e-12, "max truncated row mass " + std::to_string(row_sum_max));

  const RunRecord perfect = run_single(ctx, Decoder::perfect, small.master_seed);
  report("perfect decoder TV", !perfect.tv || *perfect.tv == 0.0, perfect.tv ? std::to_string(*perfect.tv) : "degenerate");

  const RunRecord central = run_single(ctx, Decoder::centralized, small.master_seed);
  report("centralized decode", central.status != RunStatus::decode_error, status_name(central.status));
  const RunRecord dist = run_single(ctx, Decoder::distributed, small.master_seed);
  report("distributed decode", dist.status != RunStatus::decode_error, status_name(dist.status));

  {
    WeightedPointSet a{{Point(0, 0), Point(10, 0)}, RVector::Constant(2, 0.5)};
    WeightedPointSet b{{Point(0, 1), Point(10, 1)}, RVector::Constant(2, 0.5)};
    const double w = wasserstein_p(a, b, 2);
    report("wasserstein", std::abs(w - 1.0) < 1e-12, "W2 = " + std::to_string(w));
  }
  return failures ? kValidation : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TUMA over D-MIMO: simulation, decoding and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Common c;
  std::uint64_t seed = 0;
  int runs = 0;
  double snr = 0;
  app.add_option("--config", c.config, "JSON config (run/priors/hist/validate) or sweep spec (sweep)");
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  app.add_option("--decoder", c.decoder, "centralized | distributed | perfect")
      ->check(CLI::IsMember({"centralized", "distributed", "perfect"}));
  app.add_option("--out", c.out, "output directory");
  auto* runs_opt = app.add_option("--runs", runs, "runs per point")->check(CLI::PositiveNumber);
  app.add_option("--preset", c.preset, "desk | paper")->check(CLI::IsMember({"desk", "paper"}));
  auto* snr_opt = app.add_option("--snr-db", snr, "receive SNR in dB (overrides the config)");

  auto* run = app.add_subcommand("run", "single configuration, one or more runs");
  auto* sweep = app.add_subcommand("sweep", "sweep described by a spec file");
  auto* priors = app.add_subcommand("priors", "build and cache the multiplicity prior");
  auto* hist = app.add_subcommand("hist", "histogram of nonzero local multiplicities");
  auto* val = app.add_subcommand("validate", "quick self-checks on a configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  if (*seed_opt) c.seed = seed;
  if (*runs_opt) c.runs = runs;
  if (*snr_opt) c.snr_db = snr;

  try {
    if (*run) return cmd_run(c);
    if (*sweep) return cmd_sweep(c);
    if (*priors) return cmd_priors(c);
    if (*hist) return cmd_hist(c);
    if (*val) return cmd_validate(c);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
