#include "tlaser/rank_select.hpp"

#include <algorithm>
#include <cmath>

namespace tlaser {

std::string to_string(RankMode mode) {
  switch (mode) {
    case RankMode::EnergySquared: return "energy_squared";
    case RankMode::EnergyUnsquared: return "energy_unsquared";
    case RankMode::FixedRatio: return "fixed_ratio";
    case RankMode::FixedRank: return "fixed_rank";
  }
  return "?";
}

RankMode rank_mode_from_string(const std::string& name) {
  if (name == "energy_squared" || name == "energy") return RankMode::EnergySquared;
  if (name == "energy_unsquared") return RankMode::EnergyUnsquared;
  if (name == "fixed_ratio") return RankMode::FixedRatio;
  if (name == "fixed_rank") return RankMode::FixedRank;
  if (name == "task_loss")
    throw DomainError(
        "rank mode 'task_loss' needs model inference and is not supported");
  throw DomainError("unknown rank mode '" + name + "'");
}

RankPolicy RankPolicy::Energy(double tau, bool squared) {
  RankPolicy p;
  p.mode = squared ? RankMode::EnergySquared : RankMode::EnergyUnsquared;
  p.tau = tau;
  p.validate();
  return p;
}

RankPolicy RankPolicy::Ratio(double rho) {
  RankPolicy p;
  p.mode = RankMode::FixedRatio;
  p.rho = rho;
  p.validate();
  return p;
}

RankPolicy RankPolicy::Fixed(Index r) {
  RankPolicy p;
  p.mode = RankMode::FixedRank;
  p.r = r;
  p.validate();
  return p;
}

void RankPolicy::validate() const {
  switch (mode) {
    case RankMode::EnergySquared:
    case RankMode::EnergyUnsquared:
      if (!(tau > 0.0 && tau <= 1.0))
        throw DomainError("tau must lie in (0, 1], got " + std::to_string(tau));
      break;
    case RankMode::FixedRatio:
      if (!(rho > 0.0 && rho <= 1.0))
        throw DomainError("rho must lie in (0, 1], got " + std::to_string(rho));
      break;
    case RankMode::FixedRank:
      if (r < 1) throw DomainError("fixed rank must be positive");
      break;
  }
}

Index energy_rank(std::span<const double> tube_norms, double tau, bool squared) {
  if (tube_norms.empty()) throw DomainError("energy_rank: empty spectrum");
  if (!(tau > 0.0 && tau <= 1.0))
    throw DomainError("energy_rank: tau must lie in (0, 1]");
  for (std::size_t i = 0; i < tube_norms.size(); ++i) {
    if (!(tube_norms[i] >= 0.0))
      throw DomainError("energy_rank: tube norms must be non-negative");
    if (i > 0 && tube_norms[i] > tube_norms[i - 1])
      throw DomainError("energy_rank: tube norms must be non-increasing");
  }
  auto weight = [squared](double s) { return squared ? s * s : s; };
  double total = 0.0;
  for (double s : tube_norms) total += weight(s);
  if (total == 0.0) throw DomainError("energy_rank: spectrum is all zero");

  // The running sum uses the same order as `total`, so the last prefix equals
  // it exactly and tau = 1 selects the full length.
  double running = 0.0;
  for (std::size_t i = 0; i < tube_norms.size(); ++i) {
    running += weight(tube_norms[i]);
    if (running / total >= tau) return static_cast<Index>(i + 1);
  }
  return static_cast<Index>(tube_norms.size());
}

Index ratio_rank(Index r_max, double rho) {
  if (r_max < 1) throw DomainError("ratio_rank: r_max must be positive");
  if (!(rho > 0.0 && rho <= 1.0)) throw DomainError("ratio_rank: rho must lie in (0, 1]");
  // Guard against products such as 0.29 * 100 = 28.999999999999996.
  const double scaled = rho * static_cast<double>(r_max);
  const auto r = static_cast<Index>(std::floor(scaled + 1e-9 * std::max(1.0, scaled)));
  return std::clamp<Index>(r, 1, r_max);
}

Index policy_rank(const RankPolicy& policy, Index r_max,
                  std::span<const double> tube_norms) {
  policy.validate();
  switch (policy.mode) {
    case RankMode::EnergySquared:
    case RankMode::EnergyUnsquared:
      return std::min(r_max, energy_rank(tube_norms, policy.tau,
                                         policy.mode == RankMode::EnergySquared));
    case RankMode::FixedRatio: return ratio_rank(r_max, policy.rho);
    case RankMode::FixedRank: return std::min(policy.r, r_max);
  }
  throw DomainError("unknown rank mode");
}

std::map<std::string, std::optional<Index>> allocate_ranks(
    std::span<const LayerSelection> selections,
    const std::map<std::string, std::vector<double>>& spectra) {
  std::map<std::string, std::optional<Index>> ranks;
  for (const LayerSelection& sel : selections) {
    if (!sel.delta) {
      ranks[sel.layer_name] = std::nullopt;
      continue;
    }
    const auto it = spectra.find(sel.layer_name);
    if (sel.policy.is_energy() && it == spectra.end())
      throw DomainError("layer '" + sel.layer_name +
                        "' uses an energy policy but has no spectrum");
    Index r_max = 0;
    if (sel.weight_kind)
      r_max = std::min(sel.weight_kind->d_h(), sel.weight_kind->d_m);
    else if (it != spectra.end())
      r_max = static_cast<Index>(it->second.size());
    else
      throw DomainError("layer '" + sel.layer_name +
                        "' has neither a weight kind nor a spectrum");
    ranks[sel.layer_name] =
        it != spectra.end() ? policy_rank(sel.policy, r_max, it->second)
                            : policy_rank(sel.policy, r_max);
  }
  return ranks;
}

}  // namespace tlaser
