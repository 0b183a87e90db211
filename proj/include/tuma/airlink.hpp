#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tuma/config.hpp"
#include "tuma/topology.hpp"
#include "tuma/types.hpp"

namespace tuma {

/// Nc x (U*M) codebook, zone u owning columns [u*M, (u+1)*M).
struct Codebook {
  CMatrix entries;
  int zones = 0;
  int messages = 0;
  std::uint64_t seed = 0;

  auto block(int u) const { return entries.middleCols(static_cast<Eigen::Index>(u) * messages, messages); }
  const auto column(int u, int m) const { return entries.col(static_cast<Eigen::Index>(u) * messages + m); }
};

struct Transmission {
  int message = 0;
  Point position = Point::Zero();
  int sensor = -1;  // originating sensor, -1 when synthetic
};

/// One communication round: who sent what, from where, per zone.
struct TransmissionRound {
  int zones = 0;
  int messages = 0;
  std::vector<std::vector<Transmission>> per_zone;

  TransmissionRound() = default;
  TransmissionRound(int zones, int messages) : zones(zones), messages(messages), per_zone(zones) {}

  Eigen::VectorXi zone_multiplicities(int u) const;
  /// U x M matrix of k_{u,m}.
  Eigen::MatrixXi multiplicities() const;
  Eigen::VectorXi global_multiplicities() const;
  int active_count() const;
  int active_in_zone(int u) const { return static_cast<int>(per_zone.at(u).size()); }
  /// Empirical message distribution; all zeros when nobody is active.
  RVector type() const;
};

/// Row m of zone u is the summed channel of every user sending (u, m).
struct EffectiveChannelSet {
  std::vector<CMatrix> per_zone;  // each M x F
  bool ground_truth = true;
  int iteration = -1;

  /// (U*M) x F with zone blocks stacked in zone order.
  CMatrix stacked() const;
};

Codebook gen_codebook(const SystemConfig& cfg, std::uint64_t seed);

/// One channel vector per position, h ~ CN(0, diag(lsfc) kron I_A), AP-major.
std::vector<CVector> sample_fading(const std::vector<std::pair<int, Point>>& positions, const Topology& topo,
                                   const SystemConfig& cfg, std::uint64_t seed);

/// `fadings[u][i]` is the channel of `round.per_zone[u][i]`.
EffectiveChannelSet effective_channels(const TransmissionRound& round,
                                       const std::vector<std::vector<CVector>>& fadings, int antennas_total);

/// Y = sqrt(Ec) * sum_u C_u X_u + W, W ~ iid CN(0, sigma_w2).
CMatrix synthesize_rx(const Codebook& codebook, const EffectiveChannelSet& x, const SystemConfig& cfg,
                      std::uint64_t seed);

/// Fading for every transmission of a round, drawn in zone/transmission order.
std::vector<std::vector<CVector>> sample_round_fading(const TransmissionRound& round, const Topology& topo,
                                                      const SystemConfig& cfg, std::uint64_t seed);

// Binary matrix dump: 8-byte magic "TUMACMX1", uint64 rows, uint64 cols,
// then rows*cols (re, im) little-endian doubles in row-major order.
void write_cmatrix(const std::string& path, const CMatrix& m);
CMatrix read_cmatrix(const std::string& path);

}  // namespace tuma
