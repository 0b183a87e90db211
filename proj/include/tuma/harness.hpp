#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tuma/amp.hpp"
#include "tuma/config.hpp"
#include "tuma/metrics.hpp"
#include "tuma/priors.hpp"
#include "tuma/scene.hpp"

namespace tuma {

enum class Decoder { centralized, distributed, perfect };
enum class SweepAxis { none, snr_rx_db, ns, bits };

Decoder decoder_from_name(const std::string& s);
const char* decoder_name(Decoder d);
SweepAxis axis_from_name(const std::string& s);
const char* axis_name(SweepAxis a);

struct ExperimentSpec {
  SystemConfig base;
  SweepAxis axis = SweepAxis::none;
  std::vector<double> points;  // ignored for SweepAxis::none
  std::vector<Decoder> decoders{Decoder::centralized};
  int runs = 1;
  std::uint64_t master_seed = 1;
  std::string out_dir;
  std::string prior_cache_dir;  // empty: no cache
  int total_blocklength = 2000; // N for Ns sweeps, Nc = N - Ns
  // Same scene/fading/noise seeds at every sweep point.
  bool common_random_numbers = true;
  bool write_diagnostics = false;  // per-iteration AMP JSON lines
};

/// Throws ConfigError on unknown keys or invalid values.
ExperimentSpec spec_from_json(const nlohmann::json& j);
ExperimentSpec load_spec(const std::string& path);
void validate(const ExperimentSpec& spec);

/// Configuration at one sweep point. Ns points move symbols between sensing
/// and communication and scale Ec with Nc (fixed energy per symbol).
SystemConfig config_at(const ExperimentSpec& spec, std::size_t point);

/// 64-bit seed of run r at sweep point i; the point only enters without
/// common random numbers. Stream-specific generators derive from it.
std::uint64_t run_seed(std::uint64_t master, std::size_t point, int run, bool common_random_numbers);

/// Everything that is fixed for one configuration: geometry, quantizer,
/// prior, MC table and codebook (the last three are built lazily).
class ExperimentContext {
 public:
  ExperimentContext(SystemConfig cfg, std::string prior_cache_dir = {});

  const SystemConfig& config() const { return cfg_; }
  const Topology& topology() const { return topo_; }
  const Quantizer& quantizer() const { return q_; }
  const MultiplicityPrior& prior();
  const McTable& mc_table();
  const Codebook& codebook();

 private:
  SystemConfig cfg_;
  std::string cache_dir_;
  Topology topo_;
  Quantizer q_;
  std::optional<MultiplicityPrior> prior_;
  std::optional<McTable> mc_;
  std::optional<Codebook> codebook_;
};

enum class RunStatus { ok, no_active_sensor, empty_type, decode_error };
const char* status_name(RunStatus s);

struct RunRecord {
  std::size_t point = 0;
  double point_value = 0;
  int run = 0;
  Decoder decoder = Decoder::perfect;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::ok;
  std::string error;
  int active = 0;    // K_a
  int detected = 0;  // T_d
  int targets = 0;
  double p_md = 1;
  std::optional<double> tv, wasserstein, gospa;
  std::vector<IterationRecord> trace;
  double wall_seconds = 0;

  /// Byte-stable record; timing lives under "timing".
  nlohmann::json to_json() const;
};

struct Stat {
  int n = 0;
  double mean = 0;
  double stderr_ = 0;
};
Stat summarize(const std::vector<double>& xs);

struct PointSummary {
  std::size_t point = 0;
  double point_value = 0;
  Decoder decoder = Decoder::perfect;
  int runs = 0;
  int no_active = 0, empty_type = 0, failed = 0;
  Stat tv, wasserstein, gospa, p_md, detected;
};

struct MetricsReport {
  std::vector<RunRecord> runs;
  std::vector<PointSummary> points;
};

struct RunOptions {
  bool track_error = false;  // pass ground truth to AMP
  std::ostream* diagnostics = nullptr;
};

/// Scene -> sensing -> quantization -> messages -> (decode) -> metrics.
RunRecord run_single(ExperimentContext& ctx, Decoder decoder, std::uint64_t seed, const RunOptions& opts = {});

/// Aggregates the records of one (point, decoder) pair in run order.
PointSummary aggregate(const std::vector<RunRecord>& runs, std::size_t point, double value, Decoder decoder);

/// Runs every point x decoder x run. With a non-empty out_dir, writes
/// runs.jsonl and summary.csv there; I/O failures throw IoError.
MetricsReport run_sweep(const ExperimentSpec& spec, std::ostream* progress = nullptr);

void write_summary_csv(std::ostream& os, const std::vector<PointSummary>& points, SweepAxis axis);

struct MultiplicityHistogram {
  std::vector<long> counts;  // counts[k] for k >= 1 over nonzero k_{u,m}; counts[0] unused
  long transmissions = 0;
  long colliding_transmissions = 0;  // sent on a codeword with k >= 2
  long codewords = 0;                // nonzero k_{u,m}
  long colliding_codewords = 0;

  double probability(int k) const;
  double collision_fraction() const;           // per transmission
  double codeword_collision_fraction() const;  // per distinct codeword
};

/// Pooled local multiplicities over `runs` sensing rounds.
MultiplicityHistogram multiplicity_histogram(const SystemConfig& cfg, int runs, std::uint64_t seed);

}  // namespace tuma
