#include "tuma/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "tuma/topology.hpp"

namespace tuma {

using nlohmann::json;

int ap_count(const SystemConfig& cfg) {
  if (cfg.ap_layout == ApLayout::explicit_list) return static_cast<int>(cfg.ap_positions.size());
  const int r = cfg.zone_rows, c = cfg.zone_cols;
  return (r + 1) * (c + 1) + r * (c + 1) + c * (r + 1);
}

int quantizer_bits(const SystemConfig& cfg) {
  int bits = 0;
  while ((1 << bits) < cfg.messages) ++bits;
  if ((1 << bits) != cfg.messages) throw ConfigError("messages must be a power of two");
  return bits;
}

void validate(const SystemConfig& cfg) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid configuration: ") + what);
  };
  require(cfg.area_side > 0, "area_side > 0");
  require(cfg.zone_rows >= 1 && cfg.zone_cols >= 1, "zone grid must be at least 1x1");
  require(cfg.antennas >= 1, "antennas >= 1");
  require(ap_count(cfg) >= 1, "at least one AP");
  require(cfg.messages >= 2, "messages >= 2");
  require(cfg.nc >= 1, "nc >= 1");
  require(cfg.ns >= 1, "ns >= 1");
  require(cfg.ec >= 0 && std::isfinite(cfg.ec), "ec >= 0");
  require(cfg.sigma_w2 > 0, "sigma_w2 > 0");
  require(cfg.beta > 2, "beta > 2");
  require(cfg.d0 > 0, "d0 > 0");
  require(cfg.sensors >= 0 && cfg.targets >= 0, "sensor/target counts nonnegative");
  require(cfg.n_mc >= 1, "n_mc >= 1");
  require(cfg.amp_iters >= 1, "amp_iters >= 1");
  require(cfg.k_max >= 1, "k_max >= 1");
  require(cfg.k_max <= std::max(cfg.sensors, 1), "k_max <= K");
  require(cfg.c_gospa > 0, "c_gospa > 0");
  require(cfg.p_order >= 1, "p_order >= 1");
  require(cfg.sensing.threshold >= 0, "sensing threshold >= 0");
  require(cfg.sensing.noise_w > 0 && cfg.sensing.carrier_hz > 0, "sensing noise/carrier > 0");
  require(cfg.prior_sampling.active_samples >= 1 && cfg.prior_sampling.sensor_samples >= 1 && cfg.prior_sampling.target_samples >= 1 &&
              cfg.prior_sampling.cell_samples >= 1,
          "prior sample counts >= 1");
  const int bits = quantizer_bits(cfg);
  require(bits >= 1 && bits <= 16, "quantizer bits in [1,16]");
  if (cfg.ap_layout == ApLayout::explicit_list) {
    for (const auto& p : cfg.ap_positions)
      require(p.allFinite(), "explicit AP positions must be finite");
  }
}

SystemConfig paper_preset() {
  SystemConfig cfg;
  cfg.sensing.gain_db = 50.0;
  cfg.ec = cfg.sensing.power_w * cfg.nc;
  set_snr_rx_db(cfg, 10.0);
  return cfg;
}

SystemConfig desk_preset() {
  SystemConfig cfg;
  cfg.area_side = 200.0;
  cfg.zone_rows = 2;
  cfg.zone_cols = 2;
  cfg.antennas = 2;
  cfg.messages = 64;
  cfg.nc = 300;
  cfg.sensors = 40;
  cfg.targets = 10;
  cfg.n_mc = 100;
  cfg.k_max = 5;
  cfg.c_gospa = 200.0 / 8.0;
  cfg.sensing.gain_db = 50.0;
  cfg.ec = cfg.sensing.power_w * cfg.nc;
  set_snr_rx_db(cfg, 10.0);
  return cfg;
}

SystemConfig preset_by_name(const std::string& name) {
  if (name == "paper") return paper_preset();
  if (name == "desk") return desk_preset();
  throw ConfigError("unknown preset '" + name + "' (expected desk|paper)");
}

namespace {

const char* layout_name(ApLayout l) { return l == ApLayout::lattice ? "lattice" : "explicit-list"; }
const char* codebook_name(CodebookKind k) {
  return k == CodebookKind::normalized ? "normalized" : "gaussian";
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ConfigError("unknown configuration key '" + where + it.key() + "'");
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

}  // namespace

json to_json(const SystemConfig& cfg) {
  json aps = json::array();
  for (const auto& p : cfg.ap_positions) aps.push_back({p.x(), p.y()});
  return json{
      {"area_side", cfg.area_side},
      {"zone_grid", {cfg.zone_rows, cfg.zone_cols}},
      {"ap_layout", layout_name(cfg.ap_layout)},
      {"ap_positions", aps},
      {"antennas", cfg.antennas},
      {"messages", cfg.messages},
      {"nc", cfg.nc},
      {"ns", cfg.ns},
      {"ec", cfg.ec},
      {"sigma_w2", cfg.sigma_w2},
      {"beta", cfg.beta},
      {"d0", cfg.d0},
      {"codebook", codebook_name(cfg.codebook)},
      {"sensors", cfg.sensors},
      {"targets", cfg.targets},
      {"n_mc", cfg.n_mc},
      {"amp_iters", cfg.amp_iters},
      {"k_max", cfg.k_max},
      {"k_max_auto", cfg.k_max_auto},
      {"c_gospa", cfg.c_gospa},
      {"p_order", cfg.p_order},
      {"sensing",
       {{"rcs_m2", cfg.sensing.rcs_m2},
        {"carrier_hz", cfg.sensing.carrier_hz},
        {"noise_w", cfg.sensing.noise_w},
        {"power_w", cfg.sensing.power_w},
        {"threshold", cfg.sensing.threshold},
        {"gain_db", cfg.sensing.gain_db}}},
      {"prior_sampling",
       {{"active_samples", cfg.prior_sampling.active_samples},
        {"sensor_samples", cfg.prior_sampling.sensor_samples},
        {"target_samples", cfg.prior_sampling.target_samples},
        {"cell_samples", cfg.prior_sampling.cell_samples}}},
      {"master_seed", cfg.master_seed},
  };
}

SystemConfig config_from_json(const json& j) {
  reject_unknown(j,
                 {"preset", "area_side", "zone_grid", "ap_layout", "ap_positions", "antennas", "messages",
                  "nc", "ns", "ec", "sigma_w2", "snr_rx_db", "beta", "d0", "codebook", "sensors",
                  "targets", "n_mc", "amp_iters", "k_max", "k_max_auto", "c_gospa", "p_order",
                  "sensing", "prior_sampling", "master_seed"},
                 "");
  SystemConfig cfg;
  if (auto it = j.find("preset"); it != j.end()) cfg = preset_by_name(it->get<std::string>());

  read(j, "area_side", cfg.area_side);
  if (auto it = j.find("zone_grid"); it != j.end()) {
    if (!it->is_array() || it->size() != 2) throw ConfigError("zone_grid must be [rows, cols]");
    cfg.zone_rows = (*it)[0].get<int>();
    cfg.zone_cols = (*it)[1].get<int>();
  }
  if (auto it = j.find("ap_layout"); it != j.end()) {
    const auto s = it->get<std::string>();
    if (s == "lattice" || s == "grid3x3-corners-and-midpoints")
      cfg.ap_layout = ApLayout::lattice;
    else if (s == "explicit-list")
      cfg.ap_layout = ApLayout::explicit_list;
    else
      throw ConfigError("unsupported ap_layout '" + s + "'");
  }
  if (auto it = j.find("ap_positions"); it != j.end()) {
    cfg.ap_positions.clear();
    for (const auto& p : *it) {
      if (!p.is_array() || p.size() != 2) throw ConfigError("ap_positions entries must be [x, y]");
      cfg.ap_positions.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
  }
  read(j, "antennas", cfg.antennas);
  read(j, "messages", cfg.messages);
  read(j, "nc", cfg.nc);
  read(j, "ns", cfg.ns);
  read(j, "ec", cfg.ec);
  read(j, "sigma_w2", cfg.sigma_w2);
  read(j, "beta", cfg.beta);
  read(j, "d0", cfg.d0);
  if (auto it = j.find("codebook"); it != j.end()) {
    const auto s = it->get<std::string>();
    if (s == "normalized")
      cfg.codebook = CodebookKind::normalized;
    else if (s == "gaussian")
      cfg.codebook = CodebookKind::gaussian;
    else
      throw ConfigError("unsupported codebook '" + s + "'");
  }
  read(j, "sensors", cfg.sensors);
  read(j, "targets", cfg.targets);
  read(j, "n_mc", cfg.n_mc);
  read(j, "amp_iters", cfg.amp_iters);
  read(j, "k_max", cfg.k_max);
  read(j, "k_max_auto", cfg.k_max_auto);
  read(j, "c_gospa", cfg.c_gospa);
  read(j, "p_order", cfg.p_order);
  if (auto it = j.find("sensing"); it != j.end()) {
    reject_unknown(*it, {"rcs_m2", "carrier_hz", "noise_w", "power_w", "threshold", "gain_db"}, "sensing.");
    read(*it, "rcs_m2", cfg.sensing.rcs_m2);
    read(*it, "carrier_hz", cfg.sensing.carrier_hz);
    read(*it, "noise_w", cfg.sensing.noise_w);
    read(*it, "power_w", cfg.sensing.power_w);
    read(*it, "threshold", cfg.sensing.threshold);
    read(*it, "gain_db", cfg.sensing.gain_db);
  }
  if (auto it = j.find("prior_sampling"); it != j.end()) {
    reject_unknown(*it, {"active_samples", "sensor_samples", "target_samples", "cell_samples"}, "prior_sampling.");
    read(*it, "active_samples", cfg.prior_sampling.active_samples);
    read(*it, "sensor_samples", cfg.prior_sampling.sensor_samples);
    read(*it, "target_samples", cfg.prior_sampling.target_samples);
    read(*it, "cell_samples", cfg.prior_sampling.cell_samples);
  }
  read(j, "master_seed", cfg.master_seed);
  // A received-SNR target overrides sigma_w2 and is applied last so it sees
  // the final topology and energy.
  if (auto it = j.find("snr_rx_db"); it != j.end()) set_snr_rx_db(cfg, it->get<double>());
  validate(cfg);
  return cfg;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

void save_config(const SystemConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file '" + path + "'");
  out << to_json(cfg).dump(2) << '\n';
}

}  // namespace tuma
