#include "ecoval/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "ecoval/error.hpp"

namespace ecoval {
namespace {

constexpr std::pair<Method, std::string_view> kMethodTags[] = {
    {Method::kEcoVal, "ecoval"},
    {Method::kEcoValNoAlpha, "ecoval_no_alpha"},
    {Method::kEcoValNoBeta, "ecoval_no_beta"},
    {Method::kEcoValNoAdjustment, "ecoval_no_adjustment"},
    {Method::kTmc, "tmc"},
    {Method::kLoo, "loo"},
    {Method::kExact, "exact"},
};

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    fields.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

}  // namespace

std::string_view to_string(Method method) {
  for (const auto& [m, tag] : kMethodTags) {
    if (m == method) return tag;
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view tag) {
  for (const auto& [m, t] : kMethodTags) {
    if (t == tag) return m;
  }
  return std::nullopt;
}

bool is_ecoval(Method method) {
  return method == Method::kEcoVal || method == Method::kEcoValNoAlpha ||
         method == Method::kEcoValNoBeta || method == Method::kEcoValNoAdjustment;
}

PointRecord baseline_record(std::string id, double value) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  PointRecord r;
  r.id = std::move(id);
  r.cluster_value = r.initial_value = r.predicted = r.distance = nan;
  r.gamma_alpha = r.gamma_beta = nan;
  r.value = value;
  return r;
}

void ValueReport::validate() const {
  std::unordered_set<std::string_view> ids;
  for (const auto& r : records) {
    if (!ids.insert(r.id).second) {
      throw Error(ErrorCode::kInvalidArgument, "report lists id '" + r.id + "' twice");
    }
    if (is_ecoval(method)) {
      const double expected = r.initial_value * (r.gamma_alpha + r.gamma_beta - 1.0);
      const double scale = std::max({std::abs(expected), std::abs(r.value), 1e-300});
      if (std::abs(expected - r.value) > 1e-12 * scale) {
        throw Error(ErrorCode::kInvalidArgument,
                    "record '" + r.id + "' value does not equal V_i (gamma_alpha + gamma_beta - 1)");
      }
    }
  }
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kMalformed, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

void write_report(const ValueReport& report, const std::filesystem::path& path) {
  report.validate();
  nlohmann::json header;
  header["method"] = to_string(report.method);
  header["seed"] = report.seed;
  header["ledger"] = {{"training_runs", report.ledger.training_runs},
                      {"cache_hits", report.ledger.cache_hits}};
  header["notes"] = report.notes;

  std::ostringstream out;
  out << '#' << header.dump() << '\n' << kReportColumns << '\n';
  for (const auto& r : report.records) {
    if (r.id.find_first_of(",\n\r") != std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "id '" + r.id + "' cannot be written to CSV");
    }
    out << r.id << ',' << r.cluster_id << ',' << format_double(r.cluster_value) << ','
        << r.cluster_size << ',' << format_double(r.initial_value) << ','
        << format_double(r.predicted) << ',' << format_double(r.distance) << ','
        << format_double(r.gamma_alpha) << ',' << format_double(r.gamma_beta) << ','
        << format_double(r.value) << '\n';
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  file << out.str();
  if (!file) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

ValueReport read_report(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(file, line) || line.empty() || line.front() != '#') {
    throw Error(ErrorCode::kMalformed, path.string() + ": missing '#' JSON header line");
  }
  ValueReport report;
  try {
    const auto header = nlohmann::json::parse(line.substr(1));
    const auto tag = header.at("method").get<std::string>();
    const auto method = parse_method(tag);
    if (!method) throw Error(ErrorCode::kMalformed, "unknown method tag '" + tag + "'");
    report.method = *method;
    report.seed = header.at("seed").get<std::uint64_t>();
    report.ledger.training_runs = header.at("ledger").at("training_runs").get<std::size_t>();
    report.ledger.cache_hits = header.at("ledger").at("cache_hits").get<std::size_t>();
    if (header.contains("notes")) {
      report.notes = header["notes"].get<std::map<std::string, std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformed, path.string() + ": bad header: " + e.what());
  }

  if (!std::getline(file, line) || line != kReportColumns) {
    throw Error(ErrorCode::kMalformed, path.string() + ": expected columns '" +
                                           std::string(kReportColumns) + "'");
  }
  std::size_t row = 2;
  while (std::getline(file, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_commas(line);
    if (f.size() != 10) {
      throw Error(ErrorCode::kMalformed, path.string() + ": row " + std::to_string(row) + " has " +
                                             std::to_string(f.size()) + " fields, expected 10");
    }
    PointRecord r;
    r.id = std::string(f[0]);
    {
      long cid = 0;
      const auto res = std::from_chars(f[1].data(), f[1].data() + f[1].size(), cid);
      if (res.ec != std::errc() || res.ptr != f[1].data() + f[1].size()) {
        throw Error(ErrorCode::kMalformed, "bad cluster_id on row " + std::to_string(row));
      }
      r.cluster_id = cid;
    }
    r.cluster_value = parse_double(f[2]);
    {
      std::size_t n = 0;
      const auto res = std::from_chars(f[3].data(), f[3].data() + f[3].size(), n);
      if (res.ec != std::errc() || res.ptr != f[3].data() + f[3].size()) {
        throw Error(ErrorCode::kMalformed, "bad n_c on row " + std::to_string(row));
      }
      r.cluster_size = n;
    }
    r.initial_value = parse_double(f[4]);
    r.predicted = parse_double(f[5]);
    r.distance = parse_double(f[6]);
    r.gamma_alpha = parse_double(f[7]);
    r.gamma_beta = parse_double(f[8]);
    r.value = parse_double(f[9]);
    report.records.push_back(std::move(r));
  }
  try {
    report.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformed, path.string() + ": " + e.what());
  }
  return report;
}

}  // namespace ecoval
