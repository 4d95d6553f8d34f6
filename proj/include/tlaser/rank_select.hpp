#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tlaser/tensorize.hpp"

namespace tlaser {

enum class RankMode { EnergySquared, EnergyUnsquared, FixedRatio, FixedRank };

std::string to_string(RankMode mode);
// Accepts energy_squared, energy_unsquared, fixed_ratio, fixed_rank. The
// task-loss driven mode is recognised and rejected with an explanation.
RankMode rank_mode_from_string(const std::string& name);

/// How a layer's truncation rank is chosen. Only the field belonging to
/// `mode` is meaningful: tau for the energy modes, rho for fixed_ratio and r
/// for fixed_rank.
struct RankPolicy {
  RankMode mode = RankMode::EnergySquared;
  double tau = 0.9;
  double rho = 1.0;
  Index r = 1;

  static RankPolicy Energy(double tau, bool squared = true);
  static RankPolicy Ratio(double rho);
  static RankPolicy Fixed(Index r);

  // Throws DomainError if the meaningful field is out of range.
  void validate() const;
  bool is_energy() const {
    return mode == RankMode::EnergySquared || mode == RankMode::EnergyUnsquared;
  }
};

struct LayerSelection {
  std::string layer_name;
  bool delta = false;
  RankPolicy policy;
  std::optional<WeightKind> weight_kind;
};

/// Smallest r with sum_{i<=r} s_i^e / sum_i s_i^e >= tau, e = 2 when squared.
/// `tube_norms` must be non-empty, non-negative, non-increasing and not all 0.
Index energy_rank(std::span<const double> tube_norms, double tau, bool squared);

/// max(1, floor(rho * r_max)).
Index ratio_rank(Index r_max, double rho);

/// Rank chosen by `policy` for a layer with maximal rank r_max. Energy modes
/// need the layer's tube-norm spectrum; fixed_rank is clamped to r_max.
Index policy_rank(const RankPolicy& policy, Index r_max,
                  std::span<const double> tube_norms = {});

/// Per-layer ranks; unselected layers (delta = false) map to nullopt.
/// r_max for ratio/fixed layers comes from the weight kind (min(d_h, d_m)) or,
/// failing that, from the spectrum length.
std::map<std::string, std::optional<Index>> allocate_ranks(
    std::span<const LayerSelection> selections,
    const std::map<std::string, std::vector<double>>& spectra);

}  // namespace tlaser
