#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "config.hpp"
#include "ecoval/bench.hpp"
#include "ecoval/dataset.hpp"
#include "ecoval/ecoval.hpp"
#include "ecoval/error.hpp"
#include "ecoval/report.hpp"
#include "ecoval/shapley.hpp"
#include "ecoval/synth.hpp"

namespace ecoval::cli {
namespace {

namespace fs = std::filesystem;

struct Context {
  RunConfig cfg;
  std::shared_ptr<const EmbeddingDataset> ds;
  SplitSpec splits;
};

Context load_context(const fs::path& config_path, const std::optional<fs::path>& out_override) {
  Context ctx;
  ctx.cfg = load_config(config_path);
  if (out_override) ctx.cfg.output_dir = *out_override;
  double total = 0.0;
  for (double f : ctx.cfg.fractions) {
    if (!(f >= 0.0)) throw ConfigError("split fractions must be nonnegative");
    total += f;
  }
  if (total > 1.0 + 1e-9) throw ConfigError("split fractions sum to more than 1");
  ctx.ds = std::make_shared<const EmbeddingDataset>(load_dataset(ctx.cfg.embeddings, ctx.cfg.meta));
  ctx.splits = make_splits(*ctx.ds, ctx.cfg.fractions, ctx.cfg.split_seed);
  if (ctx.splits.train.empty()) throw Error(ErrorCode::kInvalidArgument, "the train split is empty");
  fs::create_directories(ctx.cfg.output_dir);
  return ctx;
}

UtilityEvaluator make_evaluator(const Context& ctx) {
  return UtilityEvaluator(ctx.ds, ctx.splits.test, ctx.cfg.utility);
}

std::shared_ptr<const ClusterModel> fit_clusters(const Context& ctx) {
  IndexSet fit_rows = ctx.splits.train;
  fit_rows.insert(fit_rows.end(), ctx.splits.distribution_pool.begin(), ctx.splits.distribution_pool.end());
  std::sort(fit_rows.begin(), fit_rows.end());
  Matrix points(static_cast<Eigen::Index>(fit_rows.size()), static_cast<Eigen::Index>(ctx.ds->dim()));
  for (std::size_t r = 0; r < fit_rows.size(); ++r) points.row(static_cast<Eigen::Index>(r)) = ctx.ds->point(fit_rows[r]);
  return std::make_shared<const ClusterModel>(fit_gmm(points, ctx.cfg.clustering));
}

void report_warnings(const Warnings& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text << '\n';
}

std::optional<Variant> variant_of(Method m) {
  switch (m) {
    case Method::kEcoVal: return Variant::kFull;
    case Method::kEcoValNoAlpha: return Variant::kNoAlpha;
    case Method::kEcoValNoBeta: return Variant::kNoBeta;
    case Method::kEcoValNoAdjustment: return Variant::kNoAdjustment;
    default: return std::nullopt;
  }
}

ValueReport baseline_report(Method method, std::uint64_t seed, const UtilityEvaluator& ev,
                            const EmbeddingDataset& ds, const IndexSet& players,
                            const std::vector<double>& values) {
  ValueReport report;
  report.method = method;
  report.seed = seed;
  for (std::size_t j = 0; j < players.size(); ++j) {
    report.records.push_back(baseline_record(ds.id(players[j]), values[j]));
  }
  report.ledger = ev.ledger();
  return report;
}

int cmd_value(const fs::path& config, const std::string& method_flag,
              const std::optional<fs::path>& out_dir, std::ostream& out, std::ostream& err) {
  std::string tag = method_flag;
  std::replace(tag.begin(), tag.end(), '-', '_');
  const auto method = parse_method(tag);
  if (!method) throw ConfigError("unknown method '" + method_flag + "'");

  auto ctx = load_context(config, out_dir);
  auto ev = make_evaluator(ctx);
  const auto& players = ctx.splits.train;
  const fs::path dir = ctx.cfg.output_dir;
  ValueReport report;

  if (const auto variant = variant_of(*method)) {
    auto model = fit_clusters(ctx);
    write_text(dir / "cluster_model.json", model->to_json());
    EcoValConfig ecfg = ctx.cfg.ecoval;
    ecfg.variant = *variant;
    auto run = ecoval_values(ev, *ctx.ds, model, players, ecfg);
    report_warnings(run.warnings, err);
    report = std::move(run.report);
    if (!ctx.splits.oos.empty()) {
      auto oos = value_points(run.fitted, *ctx.ds, ctx.splits.oos, *method, ecfg.seed);
      oos.ledger = report.ledger;
      const auto oos_path = dir / ("values_" + tag + "_oos.csv");
      write_report(oos, oos_path);
      out << "wrote " << oos_path.string() << '\n';
    }
  } else if (*method == Method::kLoo) {
    report = baseline_report(*method, ctx.cfg.split_seed, ev, *ctx.ds, players, loo(ev, players));
  } else if (*method == Method::kExact) {
    report = baseline_report(*method, ctx.cfg.split_seed, ev, *ctx.ds, players, exact_shapley(ev, players));
  } else {
    const auto res = tmc_shapley(ev, players, ctx.cfg.tmc);
    report = baseline_report(*method, ctx.cfg.tmc.seed, ev, *ctx.ds, players, res.values);
    report.notes["permutations_used"] = std::to_string(res.permutations_used);
  }
  const auto path = dir / ("values_" + tag + ".csv");
  write_report(report, path);
  out << "wrote " << path.string() << " (" << report.records.size() << " points, "
      << report.ledger.training_runs << " training runs)\n";
  return kExitOk;
}

int cmd_curve(const fs::path& config, const fs::path& report_path, const std::string& mode,
              const std::string& direction, std::size_t steps, std::optional<std::uint64_t> seed,
              const std::optional<fs::path>& out_dir, std::ostream& out, std::ostream& err) {
  auto ctx = load_context(config, out_dir);
  const auto report = read_report(report_path);
  for (const auto& r : report.records) {
    if (!ctx.ds->contains(r.id)) {
      throw Error(ErrorCode::kInvalidArgument, "report id '" + r.id + "' does not match the dataset");
    }
  }
  auto ev = make_evaluator(ctx);
  const bool removal = mode == "remove";
  const bool by_value = direction == "value";
  const CurveDirection dir = removal ? (by_value ? CurveDirection::kRemoveHighFirst : CurveDirection::kRemoveRandom)
                                     : (by_value ? CurveDirection::kAddHighFirst : CurveDirection::kAddRandom);
  Warnings warnings;
  const std::uint64_t curve_seed = seed.value_or(report.seed);
  const Curve curve = removal ? removal_curve(ev, *ctx.ds, report, steps, dir, curve_seed, &warnings)
                              : addition_curve(ev, *ctx.ds, report, steps, dir, curve_seed, &warnings);
  report_warnings(warnings, err);
  const std::string stem = "curve_" + report_path.stem().string() + "_" + mode + "_" + direction;
  const auto csv = ctx.cfg.output_dir / (stem + ".csv");
  write_curve(curve, csv, ctx.cfg.output_dir / (stem + ".json"));
  out << "wrote " << csv.string() << " (" << curve.fractions.size() << " points)\n";
  return kExitOk;
}

int cmd_cost(const fs::path& config, const std::optional<fs::path>& out_dir, std::ostream& out,
             std::ostream& err) {
  auto ctx = load_context(config, out_dir);
  const auto& players = ctx.splits.train;
  auto model = fit_clusters(ctx);
  std::vector<std::pair<std::string, RunLedger>> ledgers;

  {
    auto ev = make_evaluator(ctx);
    loo(ev, players);
    ledgers.emplace_back("loo", ev.ledger());
  }
  std::size_t p = 0;
  std::size_t clusters = 0;
  for (Variant v : {Variant::kFull, Variant::kNoAlpha}) {
    auto ev = make_evaluator(ctx);
    EcoValConfig ecfg = ctx.cfg.ecoval;
    ecfg.variant = v;
    const auto run = ecoval_values(ev, *ctx.ds, model, players, ecfg);
    report_warnings(run.warnings, err);
    if (v == Variant::kFull) p = run.curated.size();
    clusters = run.clusters.size();
    ledgers.emplace_back(std::string(to_string(method_of(v))), ev.ledger());
  }
  {
    auto ev = make_evaluator(ctx);
    tmc_shapley(ev, players, ctx.cfg.tmc);
    ledgers.emplace_back("tmc", ev.ledger());
  }
  const auto report = cost_report(ledgers, players.size(), p, clusters);
  const auto path = ctx.cfg.output_dir / "cost.json";
  write_text(path, report.to_json());
  out << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_audit(const fs::path& config, const std::optional<fs::path>& out_dir, std::ostream& out,
              std::ostream& err) {
  auto ctx = load_context(config, out_dir);
  const auto& players = ctx.splits.train;
  auto ev = make_evaluator(ctx);
  const auto exact = exact_shapley(ev, players);
  auto model = fit_clusters(ctx);
  EcoValConfig ecfg = ctx.cfg.ecoval;
  ecfg.variant = Variant::kFull;
  const auto run = ecoval_values(ev, *ctx.ds, model, players, ecfg);
  report_warnings(run.warnings, err);
  const auto audit = audit_error_bound(run, exact, ctx.cfg.audit_slack);
  const auto path = ctx.cfg.output_dir / "audit.json";
  write_text(path, audit.to_json());
  out << "wrote " << path.string() << " (satisfied fraction " << audit.satisfied_fraction << ")\n";
  return kExitOk;
}

int cmd_synth(const BlobOptions& options, const fs::path& prefix, std::ostream& out) {
  const auto ds = make_blobs(options);
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  const fs::path emb = prefix.string() + ".f32";
  const fs::path meta = prefix.string() + ".json";
  save_dataset(ds, emb, meta);
  out << "wrote " << emb.string() << " and " << meta.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"EcoVal data valuation"};
  app.require_subcommand(1);

  fs::path config;
  std::optional<fs::path> out_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  };

  std::string method;
  auto* value = app.add_subcommand("value", "Value the training split");
  add_common(value);
  value->add_option("--method", method, "Valuation method")
      ->required()
      ->check(CLI::IsMember({"ecoval", "ecoval-no-alpha", "ecoval-no-beta", "ecoval-no-adjustment", "tmc",
                             "loo", "exact"}));

  fs::path report_path;
  std::string mode;
  std::string direction = "value";
  std::size_t steps = 20;
  std::optional<std::uint64_t> curve_seed;
  auto* curve = app.add_subcommand("curve", "Point addition / removal curve for a value report");
  add_common(curve);
  curve->add_option("--report", report_path, "Value report CSV")->required();
  curve->add_option("--mode", mode, "add or remove")->required()->check(CLI::IsMember({"add", "remove"}));
  curve->add_option("--direction", direction, "value or random")->check(CLI::IsMember({"value", "random"}));
  curve->add_option("--steps", steps, "Number of increments")->check(CLI::Range(2, 100000));
  curve->add_option("--seed", curve_seed, "Seed for the random direction (default: report seed)");

  auto* cost = app.add_subcommand("cost", "Training-run counts per method with cold caches");
  add_common(cost);
  auto* audit = app.add_subcommand("audit", "Error-bound audit against the exact oracle");
  add_common(audit);

  BlobOptions blobs;
  std::string preset = "blobs";
  fs::path prefix;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic embedding dataset");
  synth->add_option("--preset", preset, "Generator preset")->check(CLI::IsMember({"blobs"}));
  synth->add_option("--m", blobs.m, "Number of points")->check(CLI::PositiveNumber);
  synth->add_option("--noise", blobs.label_noise, "Label-flip probability")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--seed", blobs.seed, "Generator seed");
  synth->add_option("--classes", blobs.classes, "Number of classes")->check(CLI::Range(2, 1000));
  synth->add_option("--blobs-per-class", blobs.blobs_per_class, "Blobs per class")->check(CLI::PositiveNumber);
  synth->add_option("--dim", blobs.dim, "Embedding dimension")->check(CLI::PositiveNumber);
  synth->add_option("--radius", blobs.radius, "Radius of the blob circle");
  synth->add_option("--spread", blobs.spread, "Per-blob standard deviation");
  synth->add_option("--out", prefix, "Output prefix (writes PREFIX.f32 and PREFIX.json)")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*value) return cmd_value(config, method, out_dir, out, err);
    if (*curve) return cmd_curve(config, report_path, mode, direction, steps, curve_seed, out_dir, out, err);
    if (*cost) return cmd_cost(config, out_dir, out, err);
    if (*audit) return cmd_audit(config, out_dir, out, err);
    if (*synth) return cmd_synth(blobs, prefix, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace ecoval::cli
