#include "ecoval/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "ecoval/error.hpp"

namespace ecoval {
namespace {

struct Ordered {
  IndexSet order;  // dataset rows in removal / addition order
};

bool is_random(CurveDirection d) {
  return d == CurveDirection::kRemoveRandom || d == CurveDirection::kAddRandom;
}

Ordered order_pool(const EmbeddingDataset& ds, const ValueReport& values, CurveDirection direction,
                   std::uint64_t seed, Warnings* warnings) {
  if (values.records.empty()) throw Error(ErrorCode::kInvalidArgument, "the report values no points");
  std::vector<std::size_t> idx(values.records.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto& recs = values.records;
  for (const auto& r : recs) {
    if (!ds.contains(r.id)) {
      throw Error(ErrorCode::kInvalidArgument, "report id '" + r.id + "' is not in the dataset");
    }
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return recs[a].id < recs[b].id; });
  if (is_random(direction)) {
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
  } else {
    const bool all_equal = std::all_of(recs.begin(), recs.end(),
                                       [&](const PointRecord& r) { return r.value == recs.front().value; });
    if (all_equal && warnings) warnings->push_back("all values are equal; ordering falls back to id order");
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return recs[a].value > recs[b].value; });
  }
  Ordered out;
  for (std::size_t j : idx) out.order.push_back(ds.index_of(recs[j].id));
  return out;
}

Curve run_curve(const SubsetUtility& game, const EmbeddingDataset& ds, const ValueReport& values,
                std::size_t steps, CurveDirection direction, std::uint64_t seed, Warnings* warnings,
                bool removal) {
  if (steps < 2) throw Error(ErrorCode::kInvalidArgument, "a curve needs steps >= 2");
  const auto pool = order_pool(ds, values, direction, seed, warnings);
  const std::size_t n = pool.order.size();
  Curve curve;
  curve.direction = direction;
  curve.method = values.method;
  curve.seed = seed;
  curve.pool_size = n;
  IndexSet subset;
  for (std::size_t s = 0; s <= steps; ++s) {
    const std::size_t count = (s * n + steps / 2) / steps;
    subset.clear();
    if (removal) {
      subset.assign(pool.order.begin() + static_cast<std::ptrdiff_t>(count), pool.order.end());
      if (subset.empty()) {
        curve.truncated = true;
        if (warnings) {
          warnings->push_back("removal curve truncated at fraction " +
                              format_double(static_cast<double>(s) / static_cast<double>(steps)) +
                              ": no training points left");
        }
        break;
      }
    } else {
      subset.assign(pool.order.begin(), pool.order.begin() + static_cast<std::ptrdiff_t>(count));
    }
    const double acc = game.utility(subset);
    curve.fractions.push_back(static_cast<double>(s) / static_cast<double>(steps));
    curve.accuracy.push_back(acc);
    curve.delta.push_back(acc - curve.accuracy.front());
  }
  return curve;
}

}  // namespace

std::string_view to_string(CurveDirection direction) {
  switch (direction) {
    case CurveDirection::kRemoveHighFirst: return "remove_high_first";
    case CurveDirection::kAddHighFirst: return "add_high_first";
    case CurveDirection::kRemoveRandom: return "remove_random";
    case CurveDirection::kAddRandom: return "add_random";
  }
  return "unknown";
}

Curve removal_curve(const SubsetUtility& game, const EmbeddingDataset& ds, const ValueReport& values,
                    std::size_t steps, CurveDirection direction, std::uint64_t seed, Warnings* warnings) {
  if (direction != CurveDirection::kRemoveHighFirst && direction != CurveDirection::kRemoveRandom) {
    throw Error(ErrorCode::kInvalidArgument, "removal curves take a remove_* direction");
  }
  return run_curve(game, ds, values, steps, direction, seed, warnings, true);
}

Curve addition_curve(const SubsetUtility& game, const EmbeddingDataset& ds, const ValueReport& values,
                     std::size_t steps, CurveDirection direction, std::uint64_t seed, Warnings* warnings) {
  if (direction != CurveDirection::kAddHighFirst && direction != CurveDirection::kAddRandom) {
    throw Error(ErrorCode::kInvalidArgument, "addition curves take an add_* direction");
  }
  return run_curve(game, ds, values, steps, direction, seed, warnings, false);
}

double curve_area(const Curve& curve) {
  double area = 0.0;
  for (std::size_t s = 1; s < curve.fractions.size(); ++s) {
    area += 0.5 * (curve.accuracy[s] + curve.accuracy[s - 1]) * (curve.fractions[s] - curve.fractions[s - 1]);
  }
  return area;
}

std::optional<double> fraction_reaching(const Curve& curve, double target) {
  for (std::size_t s = 0; s < curve.fractions.size(); ++s) {
    if (curve.accuracy[s] >= target) return curve.fractions[s];
  }
  return std::nullopt;
}

void write_curve(const Curve& curve, const std::filesystem::path& csv_path,
                 const std::filesystem::path& manifest_path) {
  std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
  if (!csv) throw Error(ErrorCode::kIo, "cannot write " + csv_path.string());
  csv << "fraction,accuracy,delta\n";
  for (std::size_t s = 0; s < curve.fractions.size(); ++s) {
    csv << format_double(curve.fractions[s]) << ',' << format_double(curve.accuracy[s]) << ','
        << format_double(curve.delta[s]) << '\n';
  }
  if (!csv) throw Error(ErrorCode::kIo, "short write to " + csv_path.string());

  nlohmann::json manifest;
  manifest["csv"] = csv_path.filename().string();
  manifest["method"] = to_string(curve.method);
  manifest["direction"] = to_string(curve.direction);
  manifest["seed"] = curve.seed;
  manifest["pool_size"] = curve.pool_size;
  manifest["points"] = curve.fractions.size();
  manifest["truncated"] = curve.truncated;
  manifest["baseline_accuracy"] = curve.accuracy.empty() ? 0.0 : curve.accuracy.front();
  manifest["area"] = curve_area(curve);
  manifest["valuation"] = "frozen";
  manifest["clustering_retrained"] = false;
  manifest["utility_retrained_per_point"] = true;
  std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + manifest_path.string());
  out << manifest.dump(2) << '\n';
}

std::optional<std::size_t> CostReport::runs(std::string_view method) const {
  for (const auto& e : entries) {
    if (e.method == method) return e.training_runs;
  }
  return std::nullopt;
}

std::optional<double> CostReport::ratio(std::string_view numerator, std::string_view denominator) const {
  const auto num = runs(numerator);
  const auto den = runs(denominator);
  if (!num || !den || *den == 0) return std::nullopt;
  return static_cast<double>(*num) / static_cast<double>(*den);
}

std::string CostReport::to_json() const {
  nlohmann::json j;
  j["m"] = m;
  j["p"] = p;
  j["clusters"] = clusters;
  auto& rows = j["methods"] = nlohmann::json::array();
  for (const auto& e : entries) {
    rows.push_back({{"method", e.method}, {"training_runs", e.training_runs}, {"predicted", e.predicted}});
  }
  auto& ratios = j["ratios"] = nlohmann::json::object();
  if (auto r = ratio("ecoval", "tmc")) ratios["ecoval/tmc"] = *r;
  if (auto r = ratio("ecoval_no_alpha", "tmc")) ratios["ecoval_no_alpha/tmc"] = *r;
  return j.dump(2);
}

CostReport cost_report(const std::vector<std::pair<std::string, RunLedger>>& ledgers, std::size_t m,
                       std::size_t p, std::size_t clusters) {
  CostReport report;
  report.m = m;
  report.p = p;
  report.clusters = clusters;
  const double md = static_cast<double>(m);
  const double pd = static_cast<double>(p);
  const double cd = static_cast<double>(clusters);
  for (const auto& [method, ledger] : ledgers) {
    CostEntry e;
    e.method = method;
    e.training_runs = ledger.training_runs;
    if (method == "loo") e.predicted = md + 1.0;
    else if (method == "tmc") e.predicted = 3.0 * md * md;
    else if (method == "ecoval" || method == "ecoval_no_beta") e.predicted = cd + 1.0 + 3.0 * pd * pd;
    else if (method == "ecoval_no_alpha" || method == "ecoval_no_adjustment") e.predicted = cd + 1.0;
    else if (method == "exact") e.predicted = std::ldexp(1.0, static_cast<int>(m)) - 1.0;
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace ecoval
