#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecoval/types.hpp"

namespace ecoval {

enum class Method {
  kEcoVal,
  kEcoValNoAlpha,
  kEcoValNoBeta,
  kEcoValNoAdjustment,
  kTmc,
  kLoo,
  kExact,
};

// Tags as they appear in report headers: "ecoval", "ecoval_no_alpha", ...
std::string_view to_string(Method method);
std::optional<Method> parse_method(std::string_view tag);
bool is_ecoval(Method method);

// One valued point with every intermediate of the cluster pipeline. Baseline
// methods only fill `id` and `value`; the rest stay NaN (cluster_id -1, n_c 0).
struct PointRecord {
  std::string id;
  long cluster_id = -1;
  double cluster_value = 0.0;  // V_c
  std::size_t cluster_size = 0;  // n_c
  double initial_value = 0.0;  // V_i = V_c / n_c
  double predicted = 0.0;  // Q_i
  double distance = 0.0;  // d_i
  double gamma_alpha = 0.0;
  double gamma_beta = 0.0;
  double value = 0.0;
};

struct ValueReport {
  Method method = Method::kEcoVal;
  std::uint64_t seed = 0;
  RunLedger ledger;
  // Free-form header annotations (fit set, OOS rule, ...).
  std::map<std::string, std::string> notes;
  std::vector<PointRecord> records;

  // Unique ids; for cluster methods value == V_i (gamma_alpha + gamma_beta - 1)
  // to 1e-12 relative. Throws kInvalidArgument.
  void validate() const;
};

PointRecord baseline_record(std::string id, double value);

// CSV columns, exactly in this order, after a '#'-prefixed JSON header line.
inline constexpr std::string_view kReportColumns =
    "id,cluster_id,V_c,n_c,V_i,Q_i,d_i,gamma_alpha,gamma_beta,value";

void write_report(const ValueReport& report, const std::filesystem::path& path);
ValueReport read_report(const std::filesystem::path& path);

// Shortest round-trip decimal form; "nan"/"inf"/"-inf" for non-finite values.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace ecoval
