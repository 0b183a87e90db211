#include "tuma/priors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tuma/specfun.hpp"

namespace tuma {

using nlohmann::json;

DetectionProfile::DetectionProfile(const SystemConfig& cfg, double max_range, int nodes)
    : step_(max_range / (nodes - 1)), values_(nodes) {
  for (int i = 0; i < nodes; ++i) values_[i] = detection_prob_at(i * step_, cfg);
}

double DetectionProfile::operator()(double distance) const {
  const double x = distance / step_;
  const auto i = static_cast<std::size_t>(x);
  if (i + 1 >= values_.size()) return values_.back();
  const double f = x - static_cast<double>(i);
  return values_[i] + f * (values_[i + 1] - values_[i]);
}

double MultiplicityPrior::log_prob(int u, int m, int k) const {
  const double p = probs(static_cast<Eigen::Index>(u) * messages + m, k);
  return p > 0 ? std::log(p) : kNegInf;
}

namespace {

double area_diagonal(const SystemConfig& cfg) { return cfg.area_side * std::sqrt(2.0) * 1.0001; }

std::vector<Point> draw_points(Rng& rng, int n, const Rect& r) {
  std::vector<Point> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) pts.push_back(uniform_point(rng, r.x0, r.x1, r.y0, r.y1));
  return pts;
}

Rect whole_area(const SystemConfig& cfg) { return {0, 0, cfg.area_side, cfg.area_side}; }

// For a fixed sensor, J(d) = 1 - mean_j p_d(r_j) 1{r_j < d} over sorted sample ranges r_j.
class ClosestKernel {
 public:
  ClosestKernel(const Point& s, const std::vector<Point>& targets, const DetectionProfile& pd) {
    ranges_.reserve(targets.size());
    for (const auto& p : targets) ranges_.push_back((s - p).norm());
    std::sort(ranges_.begin(), ranges_.end());
    cumulative_.resize(ranges_.size() + 1, 0.0);
    for (std::size_t j = 0; j < ranges_.size(); ++j) cumulative_[j + 1] = cumulative_[j] + pd(ranges_[j]);
  }

  double j_of(double d) const {
    const auto n = std::lower_bound(ranges_.begin(), ranges_.end(), d) - ranges_.begin();
    return 1.0 - cumulative_[n] / static_cast<double>(ranges_.size());
  }

 private:
  std::vector<double> ranges_;
  std::vector<double> cumulative_;
};

}  // namespace

double compute_p_active(const SystemConfig& cfg, const Topology& topo, int sensor_samples, int target_samples,
                        std::uint64_t seed) {
  (void)topo;
  Rng rng = make_rng(seed, Stream::priors);
  const DetectionProfile pd(cfg, area_diagonal(cfg));
  const auto targets = draw_points(rng, target_samples, whole_area(cfg));
  const auto sensors = draw_points(rng, sensor_samples, whole_area(cfg));
  double acc = 0;
  for (const auto& s : sensors) {
    double miss = 0;
    for (const auto& p : targets) miss += 1.0 - pd((s - p).norm());
    acc += 1.0 - std::pow(miss / target_samples, cfg.targets);
  }
  return acc / sensor_samples;
}

double compute_p_closest(const Point& s, const Point& p, const SystemConfig& cfg, int target_samples,
                         std::uint64_t seed) {
  if (cfg.targets <= 1) return 1.0;
  Rng rng = make_rng(seed, Stream::priors);
  const DetectionProfile pd(cfg, area_diagonal(cfg));
  const ClosestKernel kernel(s, draw_points(rng, target_samples, whole_area(cfg)), pd);
  return std::pow(kernel.j_of((s - p).norm()), cfg.targets - 1);
}

RMatrix compute_msg_probs(const SystemConfig& cfg, const Topology& topo, const Quantizer& q,
                          const PriorSampling& sampling, std::uint64_t seed, RMatrix* raw) {
  Rng rng = make_rng(mix_seed({seed, 0x6d7367}), Stream::priors);
  const DetectionProfile pd(cfg, area_diagonal(cfg));
  const auto shared_targets = draw_points(rng, sampling.target_samples, whole_area(cfg));
  const int zones = topo.zone_count(), m_count = q.size();
  RMatrix est = RMatrix::Zero(zones, m_count);

  for (int u = 0; u < zones; ++u) {
    const auto sensors = draw_points(rng, sampling.sensor_samples, topo.zone_rects[u]);
    for (const auto& s : sensors) {
      const ClosestKernel kernel(s, shared_targets, pd);
      for (int m = 0; m < m_count; ++m) {
        const Rect cell = q.cell(m);
        double acc = 0;
        for (int i = 0; i < sampling.cell_samples; ++i) {
          const Point p = uniform_point(rng, cell.x0, cell.x1, cell.y0, cell.y1);
          const double d = (s - p).norm();
          const double closest = cfg.targets > 1 ? std::pow(kernel.j_of(d), cfg.targets - 1) : 1.0;
          acc += pd(d) * closest;
        }
        est(u, m) += acc;
      }
    }
  }
  // Mean over (s, p) pairs times |R_m| / |D| = 1 / M for the uniform grid.
  est /= static_cast<double>(sampling.sensor_samples) * sampling.cell_samples * m_count;
  if (raw) *raw = est;

  RMatrix out(zones, m_count);
  for (int u = 0; u < zones; ++u) {
    const double total = est.row(u).sum();
    if (total > 0)
      out.row(u) = est.row(u) / total;
    else
      out.row(u).setConstant(1.0 / m_count);  // nobody can detect anything; value is irrelevant
  }
  return out;
}

RVector zone_activity_distribution(int sensors, int zones, double p_active) {
  RVector q = RVector::Zero(sensors + 1);
  const double share = 1.0 / zones;
  for (int ka = 0; ka <= sensors; ++ka) {
    const double lw = log_binom_pmf(ka, sensors, p_active);
    if (lw == kNegInf) continue;
    for (int kau = 0; kau <= ka; ++kau) q[kau] += std::exp(lw + log_binom_pmf(kau, ka, share));
  }
  return q;
}

namespace {

RVector multiplicity_from_activity(const RVector& activity, double msg_prob, int k_limit) {
  const int sensors = static_cast<int>(activity.size()) - 1;
  RVector p = RVector::Zero(k_limit + 1);
  for (int kau = 0; kau <= sensors; ++kau) {
    if (activity[kau] == 0) continue;
    const double lw = std::log(activity[kau]);
    for (int k = 0; k <= std::min(k_limit, kau); ++k) p[k] += std::exp(lw + log_binom_pmf(k, kau, msg_prob));
  }
  return p;
}

}  // namespace

RVector full_multiplicity_distribution(int sensors, int zones, double p_active, double msg_prob) {
  return multiplicity_from_activity(zone_activity_distribution(sensors, zones, p_active), msg_prob, sensors);
}

int auto_k_max(int sensors, int zones, double p_active, const RMatrix& msg_probs, double tol) {
  const RVector activity = zone_activity_distribution(sensors, zones, p_active);
  int k_star = 1;
  for (Eigen::Index u = 0; u < msg_probs.rows(); ++u)
    for (Eigen::Index m = 0; m < msg_probs.cols(); ++m) {
      const RVector p = multiplicity_from_activity(activity, msg_probs(u, m), sensors);
      double cum = 0;
      int k = 0;
      for (; k <= sensors; ++k) {
        cum += p[k];
        if (cum >= 1.0 - tol) break;
      }
      k_star = std::max(k_star, std::min(k, sensors));
    }
  return k_star;
}

MultiplicityPrior build_prior(const SystemConfig& cfg, double p_active, const RMatrix& msg_probs) {
  MultiplicityPrior prior;
  prior.zones = static_cast<int>(msg_probs.rows());
  prior.messages = static_cast<int>(msg_probs.cols());
  prior.sensors = cfg.sensors;
  prior.p_active = p_active;
  prior.msg_probs = msg_probs;
  prior.sampling = cfg.prior_sampling;
  prior.k_max = cfg.k_max_auto ? auto_k_max(cfg.sensors, prior.zones, p_active, msg_probs) : cfg.k_max;

  const RVector activity = zone_activity_distribution(cfg.sensors, prior.zones, p_active);
  prior.probs.resize(static_cast<Eigen::Index>(prior.zones) * prior.messages, prior.k_max + 1);
  for (int u = 0; u < prior.zones; ++u)
    for (int m = 0; m < prior.messages; ++m)
      prior.probs.row(static_cast<Eigen::Index>(u) * prior.messages + m) =
          multiplicity_from_activity(activity, msg_probs(u, m), prior.k_max).transpose();
  return prior;
}

MultiplicityPrior compute_prior(const SystemConfig& cfg, const Topology& topo) {
  const auto& s = cfg.prior_sampling;
  const double p_active = compute_p_active(cfg, topo, s.active_samples, s.target_samples, cfg.master_seed);
  const Quantizer q = build_quantizer(quantizer_bits(cfg), cfg.area_side);
  const RMatrix msg = compute_msg_probs(cfg, topo, q, s, cfg.master_seed);
  return build_prior(cfg, p_active, msg);
}

std::string prior_config_hash(const SystemConfig& cfg) {
  const json full = to_json(cfg);
  json key;
  for (const char* k : {"area_side", "zone_grid", "messages", "ns", "sensors", "targets", "k_max", "k_max_auto",
                        "sensing", "prior_sampling", "master_seed"})
    key[k] = full[k];
  key["format"] = 1;
  // FNV-1a over the canonical dump
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : key.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

void save_prior(const MultiplicityPrior& prior, const std::string& hash, const std::string& path) {
  json j;
  j["version"] = 1;
  j["config_hash"] = hash;
  j["zones"] = prior.zones;
  j["messages"] = prior.messages;
  j["k_max"] = prior.k_max;
  j["sensors"] = prior.sensors;
  j["p_active"] = prior.p_active;
  json msg = json::array(), probs = json::array();
  for (Eigen::Index u = 0; u < prior.msg_probs.rows(); ++u) {
    std::vector<double> row(prior.msg_probs.cols());
    for (Eigen::Index m = 0; m < prior.msg_probs.cols(); ++m) row[m] = prior.msg_probs(u, m);
    msg.push_back(row);
  }
  for (Eigen::Index r = 0; r < prior.probs.rows(); ++r) {
    std::vector<double> row(prior.probs.cols());
    for (Eigen::Index k = 0; k < prior.probs.cols(); ++k) row[k] = prior.probs(r, k);
    probs.push_back(row);
  }
  j["msg_probs"] = msg;
  j["probs"] = probs;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write prior cache '" + path + "'");
  out << j.dump() << '\n';
  if (!out) throw IoError("short write to prior cache '" + path + "'");
}

std::optional<MultiplicityPrior> load_prior(const std::string& path, const std::string& expected_hash) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  json j;
  try {
    in >> j;
    if (j.at("version").get<int>() != 1 || j.at("config_hash").get<std::string>() != expected_hash)
      return std::nullopt;
    MultiplicityPrior p;
    p.zones = j.at("zones").get<int>();
    p.messages = j.at("messages").get<int>();
    p.k_max = j.at("k_max").get<int>();
    p.sensors = j.at("sensors").get<int>();
    p.p_active = j.at("p_active").get<double>();
    p.msg_probs.resize(p.zones, p.messages);
    for (int u = 0; u < p.zones; ++u)
      for (int m = 0; m < p.messages; ++m) p.msg_probs(u, m) = j.at("msg_probs").at(u).at(m).get<double>();
    p.probs.resize(static_cast<Eigen::Index>(p.zones) * p.messages, p.k_max + 1);
    for (Eigen::Index r = 0; r < p.probs.rows(); ++r)
      for (int k = 0; k <= p.k_max; ++k) p.probs(r, k) = j.at("probs").at(r).at(k).get<double>();
    return p;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

MultiplicityPrior load_or_compute_prior(const SystemConfig& cfg, const Topology& topo, const std::string& dir) {
  if (dir.empty()) return compute_prior(cfg, topo);
  const std::string hash = prior_config_hash(cfg);
  const std::string path = (std::filesystem::path(dir) / ("prior-" + hash + ".json")).string();
  if (auto cached = load_prior(path, hash)) {
    cached->sampling = cfg.prior_sampling;
    return *cached;
  }
  MultiplicityPrior p = compute_prior(cfg, topo);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  save_prior(p, hash, path);
  return p;
}

}  // namespace tuma
