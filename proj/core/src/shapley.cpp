#include "ecoval/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <exception>
#include <numeric>
#include <random>
#include <thread>

#include "ecoval/error.hpp"

namespace ecoval {
namespace {

std::vector<double> permutation_marginals(const SubsetUtility& game, std::span<const Index> players,
                                          const TmcConfig& config, std::size_t permutation,
                                          double full, double empty) {
  const std::size_t n = players.size();
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                    static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(permutation),
                    static_cast<std::uint32_t>(permutation >> 32)};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> marginals(n, 0.0);
  IndexSet prefix;
  prefix.reserve(n);
  double previous = empty;
  for (std::size_t pos : order) {
    if (config.truncation_tol > 0.0 && std::abs(previous - full) <= config.truncation_tol) break;
    prefix.push_back(players[pos]);
    const double current = game.utility(prefix);
    marginals[pos] = current - previous;
    previous = current;
  }
  return marginals;
}

}  // namespace

void TmcConfig::validate() const {
  if (convergence_window < 1) throw Error(ErrorCode::kInvalidArgument, "convergence_window must be >= 1");
  if (!(convergence_tol >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "convergence_tol must be >= 0");
  if (!(truncation_tol >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "truncation_tol must be >= 0");
  if (threads < 1) throw Error(ErrorCode::kInvalidArgument, "threads must be >= 1");
}

RunLedger ledger_of(const SubsetUtility& game) {
  if (const auto* ev = dynamic_cast<const UtilityEvaluator*>(&game)) return ev->ledger();
  return {};
}

std::vector<double> loo(const SubsetUtility& game, std::span<const Index> players) {
  if (players.empty()) throw Error(ErrorCode::kInvalidArgument, "LOO needs at least one point");
  const double full = game.utility(players);
  std::vector<double> values(players.size());
  IndexSet rest;
  rest.reserve(players.size());
  for (std::size_t z = 0; z < players.size(); ++z) {
    rest.clear();
    for (std::size_t j = 0; j < players.size(); ++j) {
      if (j != z) rest.push_back(players[j]);
    }
    values[z] = full - game.utility(rest);
  }
  return values;
}

std::vector<double> exact_shapley(const SubsetUtility& game, std::span<const Index> players) {
  const std::size_t n = players.size();
  if (n > kExactShapleyMaxPlayers) {
    throw Error(ErrorCode::kOracleGuard,
                "exact Shapley enumerates 2^|B| subsets and is limited to |B| <= " +
                    std::to_string(kExactShapleyMaxPlayers) + " (got " + std::to_string(n) +
                    "); use the tmc method instead");
  }
  if (n == 0) return {};
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<double> u(subsets);
  IndexSet members;
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    members.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (mask & (std::size_t{1} << j)) members.push_back(players[j]);
    }
    u[mask] = game.utility(members);
  }
  // weight(s) = 1 / (n * C(n-1, s)) for a coalition of size s not containing z.
  std::vector<double> weight(n);
  double binom = 1.0;
  for (std::size_t s = 0; s < n; ++s) {
    weight[s] = 1.0 / (static_cast<double>(n) * binom);
    binom = binom * static_cast<double>(n - 1 - s) / static_cast<double>(s + 1);
  }
  std::vector<double> values(n, 0.0);
  for (std::size_t z = 0; z < n; ++z) {
    const std::size_t bit = std::size_t{1} << z;
    double sum = 0.0;
    for (std::size_t mask = 0; mask < subsets; ++mask) {
      if (mask & bit) continue;
      sum += weight[static_cast<std::size_t>(std::popcount(mask))] * (u[mask | bit] - u[mask]);
    }
    values[z] = sum;
  }
  return values;
}

ShapleyResult tmc_shapley(const SubsetUtility& game, std::span<const Index> players,
                          const TmcConfig& config) {
  config.validate();
  const std::size_t n = players.size();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "TMC needs at least one point");
  const std::size_t cap = config.max_permutations > 0 ? config.max_permutations : 3 * n;
  const double full = game.utility(players);
  const double empty = game.utility(std::span<const Index>{});

  ShapleyResult result;
  result.values.assign(n, 0.0);
  std::deque<std::vector<double>> history;  // running means, oldest first
  const bool check_convergence = config.convergence_tol > 0.0;

  std::size_t next = 0;
  bool done = false;
  while (!done && next < cap) {
    const std::size_t batch = std::min(config.threads, cap - next);
    std::vector<std::vector<double>> marginals(batch);
    if (batch == 1) {
      marginals[0] = permutation_marginals(game, players, config, next, full, empty);
    } else {
      std::vector<std::exception_ptr> errors(batch);
      {
        std::vector<std::jthread> workers;
        for (std::size_t b = 0; b < batch; ++b) {
          workers.emplace_back([&, b] {
            try {
              marginals[b] = permutation_marginals(game, players, config, next + b, full, empty);
            } catch (...) {
              errors[b] = std::current_exception();
            }
          });
        }
      }
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    for (std::size_t b = 0; b < batch && !done; ++b) {
      const double t = static_cast<double>(++result.permutations_used);
      for (std::size_t j = 0; j < n; ++j) result.values[j] += (marginals[b][j] - result.values[j]) / t;
      if (!check_convergence) continue;
      history.push_back(result.values);
      if (history.size() > config.convergence_window + 1) history.pop_front();
      if (history.size() == config.convergence_window + 1) {
        double drift = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          drift = std::max(drift, std::abs(history.back()[j] - history.front()[j]));
        }
        if (drift < config.convergence_tol) done = true;
      }
    }
    next += batch;
  }
  result.ledger = ledger_of(game);
  return result;
}

}  // namespace ecoval
