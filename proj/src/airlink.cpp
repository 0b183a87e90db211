#include "tuma/airlink.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "tuma/rng.hpp"

namespace tuma {

static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");

Eigen::VectorXi TransmissionRound::zone_multiplicities(int u) const {
  Eigen::VectorXi k = Eigen::VectorXi::Zero(messages);
  for (const auto& t : per_zone.at(u)) ++k[t.message];
  return k;
}

Eigen::MatrixXi TransmissionRound::multiplicities() const {
  Eigen::MatrixXi k(zones, messages);
  for (int u = 0; u < zones; ++u) k.row(u) = zone_multiplicities(u).transpose();
  return k;
}

Eigen::VectorXi TransmissionRound::global_multiplicities() const {
  return multiplicities().colwise().sum().transpose();
}

int TransmissionRound::active_count() const {
  int n = 0;
  for (const auto& z : per_zone) n += static_cast<int>(z.size());
  return n;
}

RVector TransmissionRound::type() const {
  const int ka = active_count();
  RVector t = RVector::Zero(messages);
  if (ka == 0) return t;
  return global_multiplicities().cast<double>() / ka;
}

CMatrix EffectiveChannelSet::stacked() const {
  if (per_zone.empty()) return {};
  const Eigen::Index m = per_zone.front().rows(), f = per_zone.front().cols();
  CMatrix out(m * static_cast<Eigen::Index>(per_zone.size()), f);
  for (std::size_t u = 0; u < per_zone.size(); ++u) out.middleRows(static_cast<Eigen::Index>(u) * m, m) = per_zone[u];
  return out;
}

Codebook gen_codebook(const SystemConfig& cfg, std::uint64_t seed) {
  Codebook cb;
  cb.zones = zone_count(cfg);
  cb.messages = cfg.messages;
  cb.seed = seed;
  const Eigen::Index cols = static_cast<Eigen::Index>(cb.zones) * cb.messages;
  cb.entries.resize(cfg.nc, cols);
  Rng rng = make_rng(seed, Stream::codebook);
  const double var = 1.0 / cfg.nc;
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index n = 0; n < cfg.nc; ++n) cb.entries(n, c) = complex_normal(rng, var);
  if (cfg.codebook == CodebookKind::normalized) cb.entries.colwise().normalize();
  return cb;
}

std::vector<CVector> sample_fading(const std::vector<std::pair<int, Point>>& positions, const Topology& topo,
                                   const SystemConfig& cfg, std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::fading);
  const int nb = topo.ap_count(), na = cfg.antennas;
  std::vector<CVector> out;
  out.reserve(positions.size());
  for (const auto& [zone, rho] : positions) {
    (void)zone;
    const RVector g = lsfc_vector(rho, topo, cfg);
    CVector h(static_cast<Eigen::Index>(nb) * na);
    for (int b = 0; b < nb; ++b)
      for (int a = 0; a < na; ++a) h[b * na + a] = std::sqrt(g[b]) * complex_normal(rng, 1.0);
    out.push_back(std::move(h));
  }
  return out;
}

std::vector<std::vector<CVector>> sample_round_fading(const TransmissionRound& round, const Topology& topo,
                                                      const SystemConfig& cfg, std::uint64_t seed) {
  std::vector<std::pair<int, Point>> flat;
  for (int u = 0; u < round.zones; ++u)
    for (const auto& t : round.per_zone[u]) flat.emplace_back(u, t.position);
  auto h = sample_fading(flat, topo, cfg, seed);
  std::vector<std::vector<CVector>> out(round.zones);
  std::size_t i = 0;
  for (int u = 0; u < round.zones; ++u)
    for (std::size_t j = 0; j < round.per_zone[u].size(); ++j) out[u].push_back(std::move(h[i++]));
  return out;
}

EffectiveChannelSet effective_channels(const TransmissionRound& round,
                                       const std::vector<std::vector<CVector>>& fadings, int antennas_total) {
  if (static_cast<int>(fadings.size()) != round.zones) throw InternalError("effective_channels: zone count mismatch");
  EffectiveChannelSet x;
  x.ground_truth = true;
  for (int u = 0; u < round.zones; ++u) {
    if (fadings[u].size() != round.per_zone[u].size())
      throw InternalError("effective_channels: fading/transmission count mismatch");
    CMatrix xu = CMatrix::Zero(round.messages, antennas_total);
    for (std::size_t i = 0; i < fadings[u].size(); ++i) {
      if (fadings[u][i].size() != antennas_total) throw InternalError("effective_channels: channel length mismatch");
      xu.row(round.per_zone[u][i].message) += fadings[u][i].transpose();
    }
    x.per_zone.push_back(std::move(xu));
  }
  return x;
}

CMatrix synthesize_rx(const Codebook& codebook, const EffectiveChannelSet& x, const SystemConfig& cfg,
                      std::uint64_t seed) {
  if (static_cast<int>(x.per_zone.size()) != codebook.zones) throw InternalError("synthesize_rx: zone count mismatch");
  const Eigen::Index f = x.per_zone.front().cols();
  CMatrix y = CMatrix::Zero(codebook.entries.rows(), f);
  for (int u = 0; u < codebook.zones; ++u) {
    if (x.per_zone[u].rows() != codebook.messages || x.per_zone[u].cols() != f)
      throw InternalError("synthesize_rx: effective channel shape mismatch");
    y.noalias() += codebook.block(u) * x.per_zone[u];
  }
  y *= std::sqrt(cfg.ec);
  Rng rng = make_rng(seed, Stream::noise);
  for (Eigen::Index c = 0; c < y.cols(); ++c)
    for (Eigen::Index n = 0; n < y.rows(); ++n) y(n, c) += complex_normal(rng, cfg.sigma_w2);
  return y;
}

namespace {
constexpr char kMagic[8] = {'T', 'U', 'M', 'A', 'C', 'M', 'X', '1'};
}

void write_cmatrix(const std::string& path, const CMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(kMagic, sizeof kMagic);
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v[2] = {m(r, c).real(), m(r, c).imag()};
      out.write(reinterpret_cast<const char*>(v), sizeof v);
    }
  if (!out) throw IoError("short write to '" + path + "'");
}

CMatrix read_cmatrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw IoError("'" + path + "' is not a matrix dump");
  std::uint64_t dims[2];
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  CMatrix m(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double v[2];
      in.read(reinterpret_cast<char*>(v), sizeof v);
      m(r, c) = {v[0], v[1]};
    }
  if (!in) throw IoError("truncated matrix dump '" + path + "'");
  return m;
}

}  // namespace tuma
