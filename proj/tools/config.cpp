#include "config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "ecoval/error.hpp"

namespace ecoval::cli {
namespace {

using nlohmann::json;

void only_keys(const json& block, std::string_view name, std::set<std::string> allowed) {
  if (!block.is_object()) throw ConfigError("'" + std::string(name) + "' must be an object");
  for (const auto& [key, _] : block.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("unknown key '" + key + "' in '" + std::string(name) + "'");
    }
  }
}

template <class T>
void read(const json& block, const char* key, T& out) {
  if (block.contains(key)) out = block.at(key).get<T>();
}

TmcConfig read_tmc(const json& j) {
  TmcConfig t;
  only_keys(j, "tmc", {"max_permutations", "convergence_window", "convergence_tol", "truncation_tol",
                       "seed", "threads"});
  read(j, "max_permutations", t.max_permutations);
  read(j, "convergence_window", t.convergence_window);
  read(j, "convergence_tol", t.convergence_tol);
  read(j, "truncation_tol", t.truncation_tol);
  read(j, "seed", t.seed);
  read(j, "threads", t.threads);
  return t;
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  RunConfig cfg;
  try {
    only_keys(j, "config", {"dataset", "splits", "utility", "clustering", "tmc", "ecoval", "audit",
                            "output_dir"});
    const auto& data = j.at("dataset");
    only_keys(data, "dataset", {"embeddings", "meta"});
    cfg.embeddings = resolve(data.at("embeddings").get<std::string>());
    cfg.meta = resolve(data.at("meta").get<std::string>());
    for (const auto& p : {cfg.embeddings, cfg.meta}) {
      if (!std::filesystem::exists(p)) throw ConfigError("dataset file " + p.string() + " does not exist");
    }

    if (j.contains("splits")) {
      const auto& s = j["splits"];
      only_keys(s, "splits", {"fractions", "seed"});
      read(s, "fractions", cfg.fractions);
      read(s, "seed", cfg.split_seed);
    }
    if (j.contains("utility")) {
      const auto& u = j["utility"];
      only_keys(u, "utility", {"model", "knn_k", "learning_rate", "epochs", "l2", "metric", "seed",
                               "empty_set_utility"});
      const auto model = u.value("model", std::string("knn"));
      if (model == "knn") cfg.utility.model = ModelKind::kKnn;
      else if (model == "logistic") cfg.utility.model = ModelKind::kLogistic;
      else throw ConfigError("utility.model must be 'knn' or 'logistic'");
      if (u.value("metric", std::string("accuracy")) != "accuracy") {
        throw ConfigError("utility.metric must be 'accuracy'");
      }
      read(u, "knn_k", cfg.utility.knn_k);
      read(u, "learning_rate", cfg.utility.logistic.learning_rate);
      read(u, "epochs", cfg.utility.logistic.epochs);
      read(u, "l2", cfg.utility.logistic.l2);
      read(u, "seed", cfg.utility.seed);
      if (u.contains("empty_set_utility") && !u["empty_set_utility"].is_null()) {
        cfg.utility.empty_set_utility = u["empty_set_utility"].get<double>();
      }
      cfg.utility.validate();
    }
    if (j.contains("clustering")) {
      const auto& c = j["clustering"];
      only_keys(c, "clustering", {"n_components", "covariance_type", "tol", "reg_covar", "max_iter",
                                  "n_init", "init", "seed"});
      read(c, "n_components", cfg.clustering.n_components);
      const auto type = c.value("covariance_type", std::string("full"));
      if (type == "full") cfg.clustering.covariance_type = CovarianceType::kFull;
      else if (type == "diag") cfg.clustering.covariance_type = CovarianceType::kDiag;
      else throw ConfigError("clustering.covariance_type must be 'full' or 'diag'");
      if (c.value("init", std::string("kmeans")) != "kmeans") throw ConfigError("clustering.init must be 'kmeans'");
      read(c, "tol", cfg.clustering.tol);
      read(c, "reg_covar", cfg.clustering.reg_covar);
      read(c, "max_iter", cfg.clustering.max_iter);
      read(c, "n_init", cfg.clustering.n_init);
      read(c, "seed", cfg.clustering.seed);
      cfg.clustering.validate();
    }
    if (j.contains("tmc")) cfg.tmc = read_tmc(j["tmc"]);
    cfg.tmc.validate();
    cfg.ecoval.tmc = cfg.tmc;
    if (j.contains("ecoval")) {
      const auto& e = j["ecoval"];
      only_keys(e, "ecoval", {"per_cluster_sample", "regressor_k", "seed"});
      read(e, "per_cluster_sample", cfg.ecoval.per_cluster_sample);
      read(e, "regressor_k", cfg.ecoval.regressor_k);
      read(e, "seed", cfg.ecoval.seed);
      cfg.ecoval.validate();
    }
    if (j.contains("audit")) {
      only_keys(j["audit"], "audit", {"slack"});
      read(j["audit"], "slack", cfg.audit_slack);
    }
    if (j.contains("output_dir")) cfg.output_dir = resolve(j["output_dir"].get<std::string>());
    else cfg.output_dir = resolve("out");
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  } catch (const ecoval::Error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return cfg;
}

}  // namespace ecoval::cli
