#include "tuma/harness.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>

#include "tuma/amp_dist.hpp"
#include "tuma/rng.hpp"

namespace tuma {

using nlohmann::json;

Decoder decoder_from_name(const std::string& s) {
  if (s == "centralized") return Decoder::centralized;
  if (s == "distributed") return Decoder::distributed;
  if (s == "perfect" || s == "perfect-comm") return Decoder::perfect;
  throw ConfigError("unknown decoder '" + s + "' (expected centralized|distributed|perfect)");
}

const char* decoder_name(Decoder d) {
  switch (d) {
    case Decoder::centralized: return "centralized";
    case Decoder::distributed: return "distributed";
    case Decoder::perfect: return "perfect";
  }
  return "?";
}

SweepAxis axis_from_name(const std::string& s) {
  if (s == "none") return SweepAxis::none;
  if (s == "snr_rx_db" || s == "snr") return SweepAxis::snr_rx_db;
  if (s == "ns") return SweepAxis::ns;
  if (s == "bits") return SweepAxis::bits;
  throw ConfigError("unknown sweep axis '" + s + "' (expected none|snr_rx_db|ns|bits)");
}

const char* axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::none: return "none";
    case SweepAxis::snr_rx_db: return "snr_rx_db";
    case SweepAxis::ns: return "ns";
    case SweepAxis::bits: return "bits";
  }
  return "?";
}

const char* status_name(RunStatus s) {
  switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::no_active_sensor: return "no_active_sensor";
    case RunStatus::empty_type: return "empty_type";
    case RunStatus::decode_error: return "decode_error";
  }
  return "?";
}

// ---------------------------------------------------------------- spec

ExperimentSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("experiment spec must be a JSON object");
  static const std::set<std::string> known{"preset",      "config",          "axis",
                                           "points",      "decoders",        "runs",
                                           "master_seed", "out_dir",         "prior_cache_dir",
                                           "total_blocklength", "common_random_numbers", "write_diagnostics"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ConfigError("unknown spec key '" + it.key() + "'");

  ExperimentSpec s;
  try {
    json cfg_json = j.value("config", json::object());
    if (j.contains("preset") && !cfg_json.contains("preset")) cfg_json["preset"] = j.at("preset");
    s.base = config_from_json(cfg_json);
    s.master_seed = j.contains("master_seed") ? j.at("master_seed").get<std::uint64_t>() : s.base.master_seed;
    if (j.contains("axis")) s.axis = axis_from_name(j.at("axis").get<std::string>());
    if (j.contains("points")) s.points = j.at("points").get<std::vector<double>>();
    if (j.contains("decoders")) {
      const json& d = j.at("decoders");
      s.decoders.clear();
      if (d.is_string() && d.get<std::string>() == "all") {
        s.decoders = {Decoder::centralized, Decoder::distributed, Decoder::perfect};
      } else if (d.is_string()) {
        s.decoders.push_back(decoder_from_name(d.get<std::string>()));
      } else {
        for (const auto& x : d) s.decoders.push_back(decoder_from_name(x.get<std::string>()));
      }
    }
    s.runs = j.value("runs", s.runs);
    s.out_dir = j.value("out_dir", s.out_dir);
    s.prior_cache_dir = j.value("prior_cache_dir", s.prior_cache_dir);
    s.total_blocklength = j.value("total_blocklength", s.total_blocklength);
    s.common_random_numbers = j.value("common_random_numbers", s.common_random_numbers);
    s.write_diagnostics = j.value("write_diagnostics", s.write_diagnostics);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad experiment spec: ") + e.what());
  }
  validate(s);
  return s;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spec file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("spec file '" + path + "' is not valid JSON: " + e.what());
  }
  return spec_from_json(j);
}

namespace {

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

std::size_t point_count(const ExperimentSpec& s) { return s.axis == SweepAxis::none ? 1 : s.points.size(); }

}  // namespace

void validate(const ExperimentSpec& s) {
  if (s.runs < 1) throw ConfigError("runs must be >= 1");
  if (s.decoders.empty()) throw ConfigError("at least one decoder is required");
  if (s.axis != SweepAxis::none && s.points.empty()) throw ConfigError("sweep axis given without points");
  if (s.total_blocklength < 2) throw ConfigError("total_blocklength must be >= 2");
  for (double v : s.points) {
    if (s.axis == SweepAxis::ns && (!is_integer(v) || v < 1 || v >= s.total_blocklength))
      throw ConfigError("Ns points must be integers in [1, N-1]");
    if (s.axis == SweepAxis::bits && (!is_integer(v) || v < 1 || v > 16))
      throw ConfigError("bits points must be integers in [1, 16]");
    if (s.axis == SweepAxis::snr_rx_db && !std::isfinite(v)) throw ConfigError("SNR points must be finite");
  }
  for (std::size_t i = 0; i < point_count(s); ++i) validate(config_at(s, i));
}

SystemConfig config_at(const ExperimentSpec& spec, std::size_t point) {
  SystemConfig cfg = spec.base;
  cfg.master_seed = spec.master_seed;
  if (spec.axis == SweepAxis::none) return cfg;
  const double v = spec.points.at(point);
  switch (spec.axis) {
    case SweepAxis::snr_rx_db:
      set_snr_rx_db(cfg, v);
      break;
    case SweepAxis::ns: {
      const int ns = static_cast<int>(v);
      const int nc = spec.total_blocklength - ns;
      cfg.ec *= static_cast<double>(nc) / cfg.nc;
      cfg.ns = ns;
      cfg.nc = nc;
      break;
    }
    case SweepAxis::bits:
      cfg.messages = 1 << static_cast<int>(v);
      break;
    case SweepAxis::none:
      break;
  }
  return cfg;
}

std::uint64_t run_seed(std::uint64_t master, std::size_t point, int run, bool common_random_numbers) {
  if (common_random_numbers) return mix_seed({master, 0x72756eULL, static_cast<std::uint64_t>(run)});
  return mix_seed({master, 0x72756eULL, static_cast<std::uint64_t>(run), 0x707421ULL, point});
}

// ---------------------------------------------------------------- context

ExperimentContext::ExperimentContext(SystemConfig cfg, std::string prior_cache_dir)
    : cfg_(std::move(cfg)), cache_dir_(std::move(prior_cache_dir)) {
  validate(cfg_);
  topo_ = build_topology(cfg_);
  q_ = build_quantizer(quantizer_bits(cfg_), cfg_.area_side);
}

const MultiplicityPrior& ExperimentContext::prior() {
  if (!prior_) prior_ = load_or_compute_prior(cfg_, topo_, cache_dir_);
  return *prior_;
}

const McTable& ExperimentContext::mc_table() {
  if (!mc_) mc_ = build_mc_table(cfg_, topo_, prior().k_max, cfg_.master_seed);
  return *mc_;
}

const Codebook& ExperimentContext::codebook() {
  if (!codebook_) codebook_ = gen_codebook(cfg_, cfg_.master_seed);
  return *codebook_;
}

// ---------------------------------------------------------------- runs

json RunRecord::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j{{"point", point},     {"point_value", point_value}, {"run", run},
         {"decoder", decoder_name(decoder)}, {"seed", seed},   {"status", status_name(status)},
         {"active", active},   {"detected", detected},       {"targets", targets},
         {"p_md", p_md},       {"tv", opt(tv)},              {"wasserstein", opt(wasserstein)},
         {"gospa", opt(gospa)}};
  if (!error.empty()) j["error"] = error;
  if (!trace.empty()) {
    json tr = json::array();
    for (const auto& r : trace)
      tr.push_back({{"t", r.t},
                    {"est_error", r.est_error ? json(*r.est_error) : json(nullptr)},
                    {"tau_excess", r.tau_excess ? json(*r.tau_excess) : json(nullptr)}});
    j["trace"] = tr;
  }
  j["timing"] = {{"wall_seconds", wall_seconds}};
  return j;
}

RunRecord run_single(ExperimentContext& ctx, Decoder decoder, std::uint64_t seed, const RunOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const SystemConfig& cfg = ctx.config();
  RunRecord rec;
  rec.decoder = decoder;
  rec.seed = seed;
  rec.targets = cfg.targets;
  auto finish = [&]() -> RunRecord {
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
  };

  Rng rng = make_rng(seed, Stream::scene);
  Scene scene = sense_all(sample_scene(cfg, ctx.topology(), rng), cfg, rng);
  const auto tt = target_type(scene);
  if (!tt) {
    rec.status = RunStatus::no_active_sensor;
    rec.p_md = cfg.targets > 0 ? 1.0 : 0.0;
    return finish();
  }
  rec.active = tt->active;
  rec.detected = tt->detected;
  rec.p_md = misdetection(tt->detected, cfg.targets);

  const TransmissionRound round = messages_of(scene, ctx.quantizer(), zone_count(cfg));
  const RVector t = round.type();
  std::optional<RVector> t_hat;
  if (decoder == Decoder::perfect) {
    t_hat = t;
  } else {
    const auto fading = sample_round_fading(round, ctx.topology(), cfg, seed);
    const EffectiveChannelSet x = effective_channels(round, fading, antenna_count(cfg));
    const CMatrix y = synthesize_rx(ctx.codebook(), x, cfg, seed);
    AmpOptions ao;
    if (opts.track_error) ao.truth = &x;
    ao.diagnostics = opts.diagnostics;
    try {
      DecodeResult r = decoder == Decoder::centralized
                           ? amp_run(y, ctx.codebook(), ctx.prior(), ctx.mc_table(), cfg, ao)
                           : distributed_decode(y, ctx.codebook(), ctx.prior(), ctx.mc_table(), cfg, ao);
      t_hat = std::move(r.t_hat);
      if (opts.track_error) rec.trace = std::move(r.trace);
    } catch (const DecodeError& e) {
      rec.status = RunStatus::decode_error;
      rec.error = e.what();
      return finish();
    }
  }
  if (!t_hat) {
    rec.status = RunStatus::empty_type;
    return finish();
  }
  rec.tv = tv_distance(t, *t_hat);
  rec.wasserstein = wasserstein_p(target_measure(scene, *tt), type_measure(*t_hat, ctx.quantizer()), cfg.p_order);
  rec.gospa = gospa_like(*rec.wasserstein, tt->detected, cfg.targets, cfg.c_gospa, cfg.p_order);
  return finish();
}

Stat summarize(const std::vector<double>& xs) {
  Stat s;
  s.n = static_cast<int>(xs.size());
  if (s.n == 0) {
    s.mean = std::nan("");
    s.stderr_ = std::nan("");
    return s;
  }
  double sum = 0;
  for (double x : xs) sum += x;
  s.mean = sum / s.n;
  if (s.n > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stderr_ = std::sqrt(ss / (s.n - 1) / s.n);
  }
  return s;
}

PointSummary aggregate(const std::vector<RunRecord>& runs, std::size_t point, double value, Decoder decoder) {
  PointSummary p;
  p.point = point;
  p.point_value = value;
  p.decoder = decoder;
  std::vector<double> tv, w, g, pmd, td;
  for (const auto& r : runs) {
    if (r.point != point || r.decoder != decoder) continue;
    ++p.runs;
    pmd.push_back(r.p_md);
    td.push_back(r.detected);
    switch (r.status) {
      case RunStatus::no_active_sensor: ++p.no_active; break;
      case RunStatus::empty_type: ++p.empty_type; break;
      case RunStatus::decode_error: ++p.failed; break;
      case RunStatus::ok:
        tv.push_back(*r.tv);
        w.push_back(*r.wasserstein);
        g.push_back(*r.gospa);
        break;
    }
  }
  p.tv = summarize(tv);
  p.wasserstein = summarize(w);
  p.gospa = summarize(g);
  p.p_md = summarize(pmd);
  p.detected = summarize(td);
  return p;
}

void write_summary_csv(std::ostream& os, const std::vector<PointSummary>& points, SweepAxis axis) {
  os << "axis,value,decoder,runs,no_active,empty_type,failed,"
        "tv_n,tv_mean,tv_se,w_n,w_mean,w_se,gospa_n,gospa_mean,gospa_se,pmd_n,pmd_mean,pmd_se,td_mean\n";
  os << std::setprecision(17);
  for (const auto& p : points) {
    os << axis_name(axis) << ',' << p.point_value << ',' << decoder_name(p.decoder) << ',' << p.runs << ','
       << p.no_active << ',' << p.empty_type << ',' << p.failed;
    for (const Stat* s : {&p.tv, &p.wasserstein, &p.gospa, &p.p_md}) os << ',' << s->n << ',' << s->mean << ',' << s->stderr_;
    os << ',' << p.detected.mean << '\n';
  }
}

MetricsReport run_sweep(const ExperimentSpec& spec, std::ostream* progress) {
  validate(spec);
  std::ofstream jsonl, diag;
  std::string jsonl_path, csv_path;
  if (!spec.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(spec.out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + spec.out_dir + "': " + ec.message());
    jsonl_path = (std::filesystem::path(spec.out_dir) / "runs.jsonl").string();
    csv_path = (std::filesystem::path(spec.out_dir) / "summary.csv").string();
    jsonl.open(jsonl_path);
    if (!jsonl) throw IoError("cannot write '" + jsonl_path + "'");
    if (spec.write_diagnostics) {
      const std::string p = (std::filesystem::path(spec.out_dir) / "amp_diagnostics.jsonl").string();
      diag.open(p);
      if (!diag) throw IoError("cannot write '" + p + "'");
    }
  }

  MetricsReport report;
  for (std::size_t i = 0; i < point_count(spec); ++i) {
    const double value = spec.axis == SweepAxis::none ? 0.0 : spec.points[i];
    ExperimentContext ctx(config_at(spec, i), spec.prior_cache_dir);
    for (Decoder d : spec.decoders) {
      for (int r = 0; r < spec.runs; ++r) {
        RunOptions opts;
        opts.diagnostics = diag.is_open() ? &diag : nullptr;
        RunRecord rec = run_single(ctx, d, run_seed(spec.master_seed, i, r, spec.common_random_numbers), opts);
        rec.point = i;
        rec.point_value = value;
        rec.run = r;
        if (jsonl.is_open()) {
          jsonl << rec.to_json().dump() << '\n';
          if (!jsonl) throw IoError("write failed on '" + jsonl_path + "'");
        }
        report.runs.push_back(std::move(rec));
      }
      report.points.push_back(aggregate(report.runs, i, value, d));
      if (progress) {
        const auto& p = report.points.back();
        *progress << axis_name(spec.axis) << '=' << value << ' ' << decoder_name(d) << ": tv=" << p.tv.mean
                  << " w=" << p.wasserstein.mean << " gospa=" << p.gospa.mean << " p_md=" << p.p_md.mean
                  << " (ok " << p.tv.n << '/' << p.runs << ")\n";
      }
    }
  }
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot write '" + csv_path + "'");
    write_summary_csv(csv, report.points, spec.axis);
    if (!csv) throw IoError("write failed on '" + csv_path + "'");
  }
  return report;
}

// ---------------------------------------------------------------- histogram

double MultiplicityHistogram::probability(int k) const {
  if (codewords == 0 || k < 1 || k >= static_cast<int>(counts.size())) return 0.0;
  return static_cast<double>(counts[k]) / codewords;
}

double MultiplicityHistogram::collision_fraction() const {
  return transmissions ? static_cast<double>(colliding_transmissions) / transmissions : 0.0;
}

double MultiplicityHistogram::codeword_collision_fraction() const {
  return codewords ? static_cast<double>(colliding_codewords) / codewords : 0.0;
}

MultiplicityHistogram multiplicity_histogram(const SystemConfig& cfg, int runs, std::uint64_t seed) {
  validate(cfg);
  const Topology topo = build_topology(cfg);
  const Quantizer q = build_quantizer(quantizer_bits(cfg), cfg.area_side);
  MultiplicityHistogram h;
  h.counts.assign(2, 0);
  for (int r = 0; r < runs; ++r) {
    Rng rng = make_rng(run_seed(seed, 0, r, true), Stream::scene);
    const Scene scene = sense_all(sample_scene(cfg, topo, rng), cfg, rng);
    const Eigen::MatrixXi k = messages_of(scene, q, zone_count(cfg)).multiplicities();
    for (Eigen::Index i = 0; i < k.size(); ++i) {
      const int v = k.data()[i];
      if (v == 0) continue;
      if (v >= static_cast<int>(h.counts.size())) h.counts.resize(v + 1, 0);
      ++h.counts[v];
      ++h.codewords;
      h.transmissions += v;
      if (v >= 2) {
        ++h.colliding_codewords;
        h.colliding_transmissions += v;
      }
    }
  }
  return h;
}

}  // namespace tuma
