#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ecoval/types.hpp"
#include "ecoval/utility.hpp"

namespace ecoval {

inline constexpr std::size_t kExactShapleyMaxPlayers = 14;

struct TmcConfig {
  // 0 means 3 |B|.
  std::size_t max_permutations = 0;
  std::size_t convergence_window = 100;
  // Stop once no running mean moved by this much over the window; 0 disables.
  double convergence_tol = 1e-3;
  // Truncate a permutation once |U(prefix) - U(B)| <= truncation_tol; 0
  // disables truncation.
  double truncation_tol = 0.01;
  std::uint64_t seed = 0;
  // Permutations evaluated concurrently; merging is in permutation order, so
  // values never depend on this.
  std::size_t threads = 1;

  void validate() const;
};

struct ShapleyResult {
  std::vector<double> values;  // aligned with the valued index set
  std::size_t permutations_used = 0;
  RunLedger ledger;
};

// U(B) - U(B \ {z}) for every z in B.
std::vector<double> loo(const SubsetUtility& game, std::span<const Index> players);

// Full enumeration over the 2^|B| coalitions. Throws kOracleGuard when |B|
// exceeds kExactShapleyMaxPlayers.
std::vector<double> exact_shapley(const SubsetUtility& game, std::span<const Index> players);

// Truncated Monte Carlo over random permutations of `players`.
ShapleyResult tmc_shapley(const SubsetUtility& game, std::span<const Index> players,
                          const TmcConfig& config);

// Ledger snapshot when `game` is a UtilityEvaluator, zeros otherwise.
RunLedger ledger_of(const SubsetUtility& game);

}  // namespace ecoval
