#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tuma/types.hpp"

namespace tuma {

enum class ApLayout { lattice, explicit_list };
enum class CodebookKind { normalized, gaussian };

// Radar link budget for the per-pair detection model.
struct SensingParams {
  double rcs_m2 = 10.0;
  double carrier_hz = 28e9;
  double noise_w = 1e-8;
  double power_w = 1e-3;  // per-symbol sensing power
  double threshold = 36.84;
  // Multiplicative gain on the detection SNR, in dB. 0 is the bare formula;
  // the presets use 50 dB, which reproduces the reference misdetection curve.
  double gain_db = 0.0;
};

// Monte-Carlo budgets for the sensing-driven multiplicity prior.
struct PriorSampling {
  int active_samples = 20000;   // sensor positions for p_active
  int sensor_samples = 200;     // sensor positions per zone
  int target_samples = 2000;    // shared target positions for the inner integrals
  int cell_samples = 10;        // target positions per quantizer cell, per sensor sample
};

struct SystemConfig {
  // topology
  double area_side = 300.0;
  int zone_rows = 3;
  int zone_cols = 3;
  ApLayout ap_layout = ApLayout::lattice;
  std::vector<Point> ap_positions;  // explicit_list only
  int antennas = 4;

  // communication
  int messages = 1024;  // M, per zone
  int nc = 1000;
  int ns = 1000;
  double ec = 1.0;
  double sigma_w2 = 1e-6;
  double beta = 3.67;
  double d0 = 13.57;
  CodebookKind codebook = CodebookKind::normalized;

  // scenario
  int sensors = 200;  // K
  int targets = 50;   // T

  // decoder
  int n_mc = 500;
  int amp_iters = 10;
  int k_max = 11;
  bool k_max_auto = false;

  // metrics
  double c_gospa = 37.5;
  double p_order = 2.0;

  SensingParams sensing;
  PriorSampling prior_sampling;
  std::uint64_t master_seed = 1;
};

int ap_count(const SystemConfig& cfg);
inline int zone_count(const SystemConfig& cfg) { return cfg.zone_rows * cfg.zone_cols; }
inline int antenna_count(const SystemConfig& cfg) { return cfg.antennas * ap_count(cfg); }
int quantizer_bits(const SystemConfig& cfg);

/// Throws ConfigError naming the first violated invariant.
void validate(const SystemConfig& cfg);

/// Full-scale setup of the reference simulations (3x3 zones, 40 APs, M=2^10).
SystemConfig paper_preset();
/// Reduced setup that runs the decoder checks in minutes.
SystemConfig desk_preset();
SystemConfig preset_by_name(const std::string& name);

nlohmann::json to_json(const SystemConfig& cfg);
/// Unknown keys are rejected; missing keys keep their defaults.
SystemConfig config_from_json(const nlohmann::json& j);
SystemConfig load_config(const std::string& path);
void save_config(const SystemConfig& cfg, const std::string& path);

}  // namespace tuma
