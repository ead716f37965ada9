#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecoval/dataset.hpp"
#include "ecoval/report.hpp"
#include "ecoval/utility.hpp"

namespace ecoval {

enum class CurveDirection { kRemoveHighFirst, kAddHighFirst, kRemoveRandom, kAddRandom };

std::string_view to_string(CurveDirection direction);

struct Curve {
  std::vector<double> fractions;  // strictly increasing from 0
  std::vector<double> accuracy;
  std::vector<double> delta;  // accuracy - accuracy at fraction 0
  CurveDirection direction = CurveDirection::kRemoveHighFirst;
  Method method = Method::kEcoVal;
  std::uint64_t seed = 0;
  std::size_t pool_size = 0;
  bool truncated = false;
};

// Removes the report's points from the pool they form, highest value first
// (value ties broken by ascending id) or in a seeded random order, retraining
// from scratch at each of steps + 1 evenly spaced fractions. Stops before the
// pool empties.
Curve removal_curve(const SubsetUtility& game, const EmbeddingDataset& ds, const ValueReport& values,
                    std::size_t steps, CurveDirection direction, std::uint64_t seed,
                    Warnings* warnings = nullptr);

// Mirror image starting from the empty set.
Curve addition_curve(const SubsetUtility& game, const EmbeddingDataset& ds, const ValueReport& values,
                     std::size_t steps, CurveDirection direction, std::uint64_t seed,
                     Warnings* warnings = nullptr);

// Trapezoidal area under accuracy over fraction.
double curve_area(const Curve& curve);

// First fraction at which accuracy reaches `target`, if any.
std::optional<double> fraction_reaching(const Curve& curve, double target);

// CSV `fraction,accuracy,delta` plus a JSON manifest.
void write_curve(const Curve& curve, const std::filesystem::path& csv_path,
                 const std::filesystem::path& manifest_path);

struct CostEntry {
  std::string method;
  std::size_t training_runs = 0;
  double predicted = 0.0;  // closed-form order estimate
};

struct CostReport {
  std::vector<CostEntry> entries;
  std::size_t m = 0;
  std::size_t p = 0;
  std::size_t clusters = 0;

  std::optional<std::size_t> runs(std::string_view method) const;
  // runs(numerator) / runs(denominator) when both are present.
  std::optional<double> ratio(std::string_view numerator, std::string_view denominator) const;
  std::string to_json() const;
};

// Tabulates cold-cache ledgers. Predictions: loo m + 1, tmc 3m * m,
// ecoval (|C| + 1) + 3p * p, ecoval_no_alpha |C| + 1.
CostReport cost_report(const std::vector<std::pair<std::string, RunLedger>>& ledgers, std::size_t m,
                       std::size_t p, std::size_t clusters);

}  // namespace ecoval
