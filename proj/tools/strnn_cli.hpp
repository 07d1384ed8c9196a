#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "strnn/audit.hpp"
#include "strnn/causal.hpp"
#include "strnn/checkpoint.hpp"
#include "strnn/datagen.hpp"
#include "strnn/factorizer.hpp"
#include "strnn/flow.hpp"
#include "strnn/train.hpp"

namespace strnn::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kUsage = 2 };

/// Raised for bad configs; maps to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a produced artifact fails its own check; maps to exit code 1.
struct VerifyFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// JSON object reader that remembers which keys were read, so leftovers can be rejected.
class ConfigReader {
 public:
  explicit ConfigReader(Json j, std::string where = "config") : j_(std::move(j)), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    return read<T>(key);
  }

  template <class T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing key '" + key + "'");
    return read<T>(key);
  }

  Json raw(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) ? j_.at(key) : Json();
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
    }
  }

 private:
  template <class T>
  T read(const std::string& key) const {
    try {
      return j_.at(key).get<T>();
    } catch (const Json::exception&) {
      throw ConfigError(where_ + ": key '" + key + "' has the wrong type");
    }
  }

  Json j_;
  std::string where_;
  std::set<std::string> used_;
};

inline std::uint64_t env_seed_or(std::uint64_t fallback) {
  if (const char* s = std::getenv("STRNN_SEED")) {
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(s, &pos);
      if (pos == std::string(s).size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("STRNN_SEED must be a non-negative integer");
  }
  return fallback;
}

inline Method parse_method(const std::string& s) {
  if (s == "greedy") return Method::Greedy;
  if (s == "exact") return Method::Exact;
  if (s == "zuko") return Method::Zuko;
  throw ConfigError("unknown method '" + s + "' (greedy, exact, zuko)");
}

inline Objective parse_objective(const std::string& s) {
  if (s == "max_connections") return Objective::MaxConnections;
  if (s == "connections_minus_variance") return Objective::ConnectionsMinusVariance;
  throw ConfigError("unknown objective '" + s + "' (max_connections, connections_minus_variance)");
}

inline std::string objective_name(Objective o) {
  return o == Objective::MaxConnections ? "max_connections" : "connections_minus_variance";
}

inline std::string method_name(Method m) {
  switch (m) {
    case Method::Greedy: return "greedy";
    case Method::Exact: return "exact";
    case Method::Zuko: return "zuko";
  }
  return "?";
}

inline Json with_version(Json j) {
  j["version"] = kToolVersion;
  return j;
}

// ---------------------------------------------------------------------------
// factor

struct FactorArgs {
  std::string adjacency;
  std::vector<std::size_t> widths;
  std::string method = "greedy";
  std::string objective = "max_connections";
  std::string out;
  // comparison mode
  bool compare = false;
  std::size_t d = 6;
  std::size_t h = 8;
  std::vector<double> thresholds{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::size_t instances = 10;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

inline int cmd_factor_compare(const FactorArgs& a, std::ostream& out) {
  const Objective obj = parse_objective(a.objective);
  const std::uint64_t seed = a.seed_given ? a.seed : env_seed_or(a.seed);
  Json rows = Json::array();
  std::uint64_t k = 0;
  for (double thr : a.thresholds) {
    for (std::size_t i = 0; i < a.instances; ++i) {
      Rng rng(mix_seed(seed, k++));
      const auto adj = gen_random_sparse(a.d, thr, rng);
      const std::vector<std::size_t> hidden{a.h};
      Json row{{"threshold", thr}, {"instance", i}, {"edges", adj.edge_count()}};
      for (Method m : {Method::Greedy, Method::Exact, Method::Zuko}) {
        try {
          const auto masks = factor_multilayer(adj, hidden, m, obj);
          const IntMatrix p = mask_product(masks);
          if (!check_sparsity_equal(p, adj)) throw VerifyFailure(method_name(m) + " broke sparsity");
          row[method_name(m)] = objective_value(p, obj);
        } catch (const Error& e) {
          row[method_name(m)] = nullptr;
          row[method_name(m) + "_error"] = std::string(to_string(e.code()));
        }
      }
      rows.push_back(row);
    }
  }
  Json report = with_version({{"mode", "compare"},
                              {"objective", objective_name(obj)},
                              {"config", {{"d", a.d}, {"h", a.h}, {"thresholds", a.thresholds}, {"instances", a.instances}, {"seed", seed}}},
                              {"rows", rows}});
  if (a.out.empty()) {
    out << report.dump(2) << '\n';
  } else {
    fs::create_directories(a.out);
    write_json_file(fs::path(a.out) / "compare.json", report);
  }
  return kOk;
}

inline int cmd_factor(const FactorArgs& a, std::ostream& out) {
  if (a.compare) return cmd_factor_compare(a, out);
  if (a.adjacency.empty()) throw ConfigError("factor needs --adjacency (or --compare)");
  const Method method = parse_method(a.method);
  const Objective obj = parse_objective(a.objective);
  const auto adj = read_matrix(a.adjacency);
  const auto t0 = std::chrono::steady_clock::now();
  const auto masks = factor_multilayer(adj, a.widths, method, obj);
  const auto t1 = std::chrono::steady_clock::now();
  const IntMatrix product = mask_product(masks);
  const bool ok = check_sparsity_equal(product, adj);
  Json report = with_version({{"method", method_name(method)},
                              {"objective", objective_name(obj)},
                              {"widths", a.widths},
                              {"adjacency", a.adjacency},
                              {"objective_value", objective_value(product, obj)},
                              {"max_connections", objective_value(product, Objective::MaxConnections)},
                              {"connections_minus_variance", objective_value(product, Objective::ConnectionsMinusVariance)},
                              {"sparsity_ok", ok},
                              {"wall_time_ms", std::chrono::duration<double, std::milli>(t1 - t0).count()}});
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    for (std::size_t l = 0; l < masks.size(); ++l) {
      write_matrix(masks.masks[l], fs::path(a.out) / ("mask_" + std::to_string(l + 1) + ".txt"));
    }
    write_matrix(product, fs::path(a.out) / "product.txt");
    write_json_file(fs::path(a.out) / "report.json", report);
  } else {
    out << report.dump(2) << '\n';
  }
  if (!ok) throw VerifyFailure("mask product does not match the adjacency sparsity");
  return kOk;
}

// ---------------------------------------------------------------------------
// datagen

inline GeneratorSpec parse_generator(ConfigReader r) {
  const auto scheme = r.require<std::string>("scheme");
  GeneratorSpec g;
  g.seed = r.get<std::uint64_t>("seed", 0);
  if (scheme == "prev_k") {
    g.scheme = PrevK{r.require<std::size_t>("k")};
  } else if (scheme == "every_other") {
    g.scheme = EveryOther{};
  } else if (scheme == "random_sparse") {
    g.scheme = RandomSparse{r.require<double>("threshold")};
  } else if (scheme == "neighborhood") {
    g.scheme = Neighborhood{r.require<std::size_t>("rows"), r.require<std::size_t>("cols"), r.require<std::size_t>("nbr_size")};
  } else {
    throw ConfigError("unknown adjacency scheme '" + scheme + "'");
  }
  r.finish();
  return g;
}

inline int cmd_datagen(const std::string& config_path, const std::string& out_dir, std::ostream& out) {
  if (config_path.empty()) throw ConfigError("datagen needs --config");
  const fs::path base = fs::path(config_path).parent_path();
  ConfigReader r(read_json_file(config_path), config_path);
  SynthSpec spec;
  spec.family = parse_family(r.require<std::string>("family"));
  spec.d = r.get<std::size_t>("d", 0);
  spec.n = r.require<std::size_t>("n");
  spec.seed = r.has("seed") ? r.require<std::uint64_t>("seed") : env_seed_or(0);
  spec.threshold = r.get<double>("threshold", 0.8);
  spec.cutoff = r.get<double>("cutoff", 1.5);
  const auto ratios = r.get<std::vector<double>>("ratios", {0.6, 0.2, 0.2});
  if (ratios.size() != 3) throw ConfigError("ratios must have three entries");
  spec.ratios = {ratios[0], ratios[1], ratios[2]};
  try {
    spec.ratios.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const Json adj = r.raw("adjacency");
  std::string out_path = r.get<std::string>("out", out_dir);
  if (!out_dir.empty()) out_path = out_dir;
  r.finish();
  if (out_path.empty()) throw ConfigError("datagen needs an output directory (--out or \"out\")");
  if (spec.family == Family::BinarySem || spec.family == Family::GaussianSem) {
    if (adj.is_null()) throw ConfigError("family needs an \"adjacency\" entry");
    if (adj.is_string()) {
      const fs::path p = fs::path(adj.get<std::string>()).is_absolute() ? fs::path(adj.get<std::string>()) : base / adj.get<std::string>();
      spec.adjacency = read_matrix(p);
    } else {
      spec.adjacency = parse_generator(ConfigReader(adj, "adjacency"));
    }
  } else if (spec.family == Family::NonlinearMultimodal || spec.family == Family::LinearSem) {
    if (!adj.is_null()) throw ConfigError("this family derives its own adjacency; remove \"adjacency\"");
    if (spec.d == 0) throw ConfigError("family needs \"d\"");
  }
  if (spec.family != Family::NonlinearMultimodal && spec.family != Family::LinearSem && spec.d == 0) {
    if (const auto* g = std::get_if<GeneratorSpec>(&spec.adjacency); g && !std::holds_alternative<Neighborhood>(g->scheme)) {
      throw ConfigError("family needs \"d\"");
    }
  }
  const Synthetic syn = generate_synthetic(spec);
  fs::create_directories(out_path);
  write_text_file(fs::path(out_path) / "data.txt", format_dataset(syn.data));
  write_matrix(syn.adjacency, fs::path(out_path) / "adjacency.txt");
  Json resolved = read_json_file(config_path);
  resolved["seed"] = spec.seed;
  resolved["ratios"] = ratios;
  resolved.erase("out");
  Json side = with_version({{"spec", resolved},
                            {"family", std::string(to_string(spec.family))},
                            {"seed", spec.seed},
                            {"n", syn.data.size()},
                            {"d", syn.data.dim()},
                            {"kind", std::string(to_string(syn.data.kind))},
                            {"data_path", "data.txt"},
                            {"adjacency_path", "adjacency.txt"},
                            {"coefficients", syn.coefficients},
                            {"split", split_json(syn.data.split)}});
  write_json_file(fs::path(out_path) / "sidecar.json", side);
  out << "wrote " << (fs::path(out_path) / "data.txt").string() << " (" << syn.data.size() << " x " << syn.data.dim() << ")\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// train

inline fs::path resolve_near(const fs::path& anchor_file, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : anchor_file.parent_path() / path;
}

inline int cmd_train(const std::string& config_path, const std::string& out_dir, std::ostream& out) {
  if (config_path.empty()) throw ConfigError("train needs --config");
  ConfigReader r(read_json_file(config_path), config_path);
  const fs::path cfg_file(config_path);
  const std::string model = r.get<std::string>("model", "strnn");
  if (model != "strnn" && model != "made" && model != "flow") throw ConfigError("model must be strnn, made or flow");
  const fs::path sidecar = resolve_near(cfg_file, r.require<std::string>("sidecar"));
  const Json side = read_json_file(sidecar);
  const fs::path data_path = r.has("data") ? resolve_near(cfg_file, r.require<std::string>("data"))
                                           : resolve_near(sidecar, side.value("data_path", "data.txt"));
  const fs::path adj_path = r.has("adjacency") ? resolve_near(cfg_file, r.require<std::string>("adjacency"))
                                               : resolve_near(sidecar, side.value("adjacency_path", "adjacency.txt"));
  const auto hidden = r.get<std::vector<std::size_t>>("hidden", {});
  const Method method = parse_method(r.get<std::string>("method", "greedy"));
  const Objective objective = parse_objective(r.get<std::string>("objective", "max_connections"));
  const std::string structure = r.get<std::string>("structure", "adjacency");
  if (structure != "adjacency" && structure != "dense") throw ConfigError("structure must be adjacency or dense");
  const std::size_t layers = r.get<std::size_t>("layers", 5);
  const bool standardize = r.get<bool>("standardize", true);
  const bool made_shuffle = r.get<bool>("made_shuffle", false);
  TrainConfig tc;
  tc.learning_rate = r.get<double>("learning_rate", tc.learning_rate);
  tc.weight_decay = r.get<double>("weight_decay", tc.weight_decay);
  tc.batch_size = r.get<std::size_t>("batch_size", tc.batch_size);
  tc.max_epochs = r.get<std::size_t>("max_epochs", tc.max_epochs);
  tc.early_stop_patience = r.get<std::size_t>("early_stop_patience", tc.early_stop_patience);
  tc.seed = r.has("seed") ? r.require<std::uint64_t>("seed") : env_seed_or(0);
  tc.eps = r.get<double>("eps", tc.eps);
  const std::string schedule = r.get<std::string>("lr_schedule", "fixed");
  if (schedule == "plateau") {
    tc.lr_schedule = LrSchedule::Plateau;
  } else if (schedule != "fixed") {
    throw ConfigError("lr_schedule must be fixed or plateau");
  }
  tc.plateau_factor = r.get<double>("plateau_factor", tc.plateau_factor);
  tc.plateau_patience = r.get<std::size_t>("plateau_patience", tc.plateau_patience);
  std::string out_path = r.get<std::string>("out", "");
  if (!out_dir.empty()) out_path = out_dir;
  r.finish();
  if (out_path.empty()) throw ConfigError("train needs an output directory (--out or \"out\")");
  try {
    tc.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  const Dataset data = load_dataset(data_path, sidecar);
  AdjacencyMatrix adj = read_matrix(adj_path);
  if (adj.dim() != data.dim()) throw Error(ErrorCode::DimMismatch, "adjacency and dataset dimensions differ");
  if (structure == "dense") adj = AdjacencyMatrix::dense(adj.dim());
  Rng init_rng(mix_seed(tc.seed, 0x1417u));
  fs::create_directories(out_path);

  Json resolved{{"model", model},         {"sidecar", sidecar.string()},  {"data", data_path.string()},
                {"adjacency", adj_path.string()}, {"hidden", hidden},    {"method", method_name(method)},
                {"objective", objective_name(objective)}, {"structure", structure}, {"layers", layers},
                {"standardize", standardize}, {"made_shuffle", made_shuffle},
                {"learning_rate", tc.learning_rate}, {"weight_decay", tc.weight_decay},
                {"batch_size", tc.batch_size}, {"max_epochs", tc.max_epochs},
                {"early_stop_patience", tc.early_stop_patience}, {"seed", tc.seed}, {"eps", tc.eps},
                {"lr_schedule", schedule}, {"plateau_factor", tc.plateau_factor},
                {"plateau_patience", tc.plateau_patience}, {"out", out_path}};

  TrainResult res;
  MeanWithError test;
  if (model == "flow") {
    if (data.kind != DataKind::Real) throw ConfigError("flow models need a real-valued dataset");
    AffineFlow flow(adj, layers, hidden, init_rng);
    res = train_flow(flow, data, tc, standardize);
    test = test_nll(flow, data);
    save_flow(fs::path(out_path) / "checkpoint.json", flow);
  } else {
    const Head head = data.kind == DataKind::Binary ? Head::Binary : Head::Gaussian;
    MaskedMLP net;
    std::optional<AdjacencyMatrix> stored;
    if (model == "made") {
      Rng made_rng(mix_seed(tc.seed, 0x3ADEu));
      net = MaskedMLP(made_masks(data.dim(), hidden, made_rng, made_shuffle).masks, head, init_rng);
    } else {
      net = MaskedMLP(factor_multilayer(adj, hidden, method, objective), head, init_rng);
      stored = adj;
    }
    res = train(net, data, tc, standardize);
    test = test_nll(net, data);
    save_mlp(fs::path(out_path) / "checkpoint.json", net, stored);
  }
  {
    std::ofstream csv(fs::path(out_path) / "history.csv");
    if (!csv) throw Error(ErrorCode::IoError, "cannot write history.csv");
    write_history_csv(csv, res.history);
  }
  Json summary = with_version({{"model", model},
                               {"test_nll", test.mean},
                               {"test_nll_stderr", test.std_error},
                               {"n_test", data.split.test.size()},
                               {"best_epoch", res.best_epoch},
                               {"best_val_nll", res.best_val_nll},
                               {"epochs_run", res.history.size()},
                               {"config", resolved}});
  write_json_file(fs::path(out_path) / "summary.json", summary);
  out << "test NLL " << test.mean << " +/- " << test.std_error << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// causal-eval

struct CausalArgs {
  std::string flow;
  std::string sidecar;
  std::size_t value_count = 8;
  std::size_t samples = 1000;
  std::size_t n_obs = 1000;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool mc_truth = false;
  bool parallel = false;
  std::string out;
};

inline Json report_json(const CausalReport& r) {
  Json q = Json::array();
  for (const auto& e : r.queries) q.push_back({{"target", e.target}, {"alpha", e.alpha}, {"squared_error", e.squared_error}});
  return q;
}

inline int cmd_causal_eval(const CausalArgs& a, std::ostream& out) {
  if (a.flow.empty() || a.sidecar.empty()) throw ConfigError("causal-eval needs --flow and --sidecar");
  if (!fs::exists(a.sidecar)) throw ConfigError("sidecar not found: " + a.sidecar);
  if (!fs::exists(a.flow)) throw ConfigError("flow checkpoint not found: " + a.flow);
  const Json side = read_json_file(a.sidecar);
  if (!side.contains("coefficients") || !side.at("coefficients").contains("weights")) {
    throw ConfigError("sidecar does not describe a linear SEM (no coefficients.weights)");
  }
  LinearSEM sem{matrix_from_json(side.at("coefficients").at("weights"))};
  sem.validate();
  const AffineFlow flow = load_flow(a.flow);
  if (flow.dim() != sem.dim()) throw Error(ErrorCode::DimMismatch, "flow and SEM dimensions differ");
  const std::uint64_t seed = a.seed_given ? a.seed : env_seed_or(a.seed);
  const auto im = total_imse(flow, sem, seed, {a.value_count, a.samples, a.mc_truth, a.parallel});
  const auto cm = total_cmse(flow, sem, seed, a.value_count, a.n_obs);
  Json report = with_version({{"total_imse", im.total},
                              {"total_cmse", cm.total},
                              {"imse_queries", report_json(im)},
                              {"cmse_queries", report_json(cm)},
                              {"settings",
                               {{"flow", a.flow}, {"sidecar", a.sidecar}, {"value_count", a.value_count},
                                {"samples", a.samples}, {"n_obs", a.n_obs}, {"seed", seed},
                                {"monte_carlo_truth", a.mc_truth}, {"parallel_sampler", a.parallel}}}});
  if (a.out.empty()) {
    out << report.dump(2) << '\n';
  } else {
    write_json_file(a.out, report);
    out << "total I-MSE " << im.total << ", total C-MSE " << cm.total << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// verify

inline Json violations_json(const std::vector<Violation>& v, int layer = -1) {
  Json arr = Json::array();
  for (const auto& x : v) {
    Json e{{"output", x.output}, {"input", x.input}, {"magnitude", x.magnitude}};
    if (layer >= 0) e["layer"] = layer;
    arr.push_back(e);
  }
  return arr;
}

inline int cmd_verify(const std::string& path, std::uint64_t seed, std::ostream& out) {
  if (path.empty()) throw ConfigError("verify needs a checkpoint path");
  const Json j = read_json_file(path);
  const std::string format = j.value("format", "");
  Rng rng(seed);
  Json report;
  bool ok = true;
  if (format == "strnn-mlp") {
    const MaskedMLP net = mlp_from_json(j);
    IntMatrix reference;
    std::string against;
    if (auto adj = stored_adjacency(j)) {
      reference = adj->entries();
      against = "stored adjacency";
      if (!check_sparsity_equal(IntMatrix(net.connectivity().topRows(static_cast<Eigen::Index>(net.variable_dim()))), *adj)) {
        ok = false;
        report["mask_product_matches_adjacency"] = false;
      }
    } else {
      reference = net.connectivity().topRows(static_cast<Eigen::Index>(net.variable_dim()));
      against = "mask product";
    }
    const auto v = audit_network(net, reference, rng, {.points = 32, .perturbations = 4});
    report["violations"] = violations_json(v);
    report["masks_respected"] = net.masks_respected();
    report["reference"] = against;
    ok = ok && v.empty() && net.masks_respected();
  } else if (format == "strnn-flow") {
    const AffineFlow flow = flow_from_json(j);
    Json all = Json::array();
    for (std::size_t k = 0; k < flow.num_layers(); ++k) {
      const auto v = audit_network(flow.layers()[k], flow.adjacency().entries(), rng, {.points = 32, .perturbations = 4});
      for (auto& e : violations_json(v, static_cast<int>(k))) all.push_back(e);
    }
    const auto zv = perturbation_audit([&](const Matrix& x) { return flow.to_noise(x).first; },
                                       flow.adjacency().ancestor_closure(), rng);
    for (auto& e : violations_json(zv, -1)) {
      e["layer"] = "composed";
      all.push_back(e);
    }
    report["violations"] = all;
    report["masks_respected"] = flow.masks_respected();
    report["reference"] = "flow adjacency";
    ok = all.empty() && flow.masks_respected();
  } else {
    throw ConfigError(path + " is not a network or flow checkpoint");
  }
  report["checkpoint"] = path;
  report["ok"] = ok;
  out << with_version(report).dump(2) << '\n';
  return ok ? kOk : kVerifyFailed;
}

// ---------------------------------------------------------------------------

/// Runs the command line in-process; returns the exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Structured neural networks: mask factorization, density estimation and causal queries"};
  app.name("strnn");
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  FactorArgs fa;
  auto* factor = app.add_subcommand("factor", "Factorize an adjacency matrix into layer masks");
  factor->add_option("--adjacency,-a", fa.adjacency, "Adjacency matrix file");
  factor->add_option("--widths,-w", fa.widths, "Hidden widths, e.g. 40,40")->delimiter(',');
  factor->add_option("--method,-m", fa.method, "greedy | exact | zuko")->capture_default_str();
  factor->add_option("--objective", fa.objective, "max_connections | connections_minus_variance")->capture_default_str();
  factor->add_option("--out,-o", fa.out, "Output directory (prints the report when omitted)");
  factor->add_flag("--compare", fa.compare, "Compare greedy/exact/zuko on random matrices");
  factor->add_option("--dim", fa.d, "Compare: matrix dimension")->capture_default_str();
  factor->add_option("--width", fa.h, "Compare: hidden width")->capture_default_str();
  factor->add_option("--thresholds", fa.thresholds, "Compare: sparsity thresholds")->delimiter(',');
  factor->add_option("--instances", fa.instances, "Compare: matrices per threshold")->capture_default_str();
  factor->add_option("--seed", fa.seed, "Compare: seed (falls back to STRNN_SEED)");

  std::string dg_config, dg_out;
  auto* datagen = app.add_subcommand("datagen", "Generate a synthetic dataset from a JSON spec");
  datagen->add_option("--config,-c", dg_config, "Dataset spec (JSON)")->required();
  datagen->add_option("--out,-o", dg_out, "Output directory (overrides \"out\")");

  std::string tr_config, tr_out;
  auto* trainc = app.add_subcommand("train", "Train a StrNN, MADE or StrAF model from a JSON config");
  trainc->add_option("--config,-c", tr_config, "Training config (JSON)")->required();
  trainc->add_option("--out,-o", tr_out, "Output directory (overrides \"out\")");

  CausalArgs ca;
  auto* causal = app.add_subcommand("causal-eval", "Total I-MSE and C-MSE of a flow against a linear SEM");
  causal->add_option("--flow,-f", ca.flow, "Flow checkpoint")->required();
  causal->add_option("--sidecar,-s", ca.sidecar, "Sidecar of a linear_sem dataset")->required();
  causal->add_option("--value-count", ca.value_count, "Intervention values per variable")->capture_default_str();
  causal->add_option("--samples", ca.samples, "Flow samples per interventional query")->capture_default_str();
  causal->add_option("--n-obs", ca.n_obs, "Observations for counterfactuals")->capture_default_str();
  causal->add_option("--seed", ca.seed, "Seed (falls back to STRNN_SEED)");
  causal->add_flag("--mc-truth", ca.mc_truth, "Estimate ground-truth means by Monte Carlo");
  causal->add_flag("--parallel", ca.parallel, "Use the two-pass interventional sampler");
  causal->add_option("--out,-o", ca.out, "Metrics file (prints when omitted)");

  std::string vf_path;
  std::uint64_t vf_seed = 0;
  auto* verify = app.add_subcommand("verify", "Perturbation audit of a saved network or flow");
  verify->add_option("checkpoint", vf_path, "Checkpoint file")->required();
  verify->add_option("--seed", vf_seed, "Audit seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << kToolVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  fa.seed_given = factor->count("--seed") > 0;
  ca.seed_given = causal->count("--seed") > 0;

  try {
    if (*factor) return cmd_factor(fa, out);
    if (*datagen) return cmd_datagen(dg_config, dg_out, out);
    if (*trainc) return cmd_train(tr_config, tr_out, out);
    if (*causal) return cmd_causal_eval(ca, out);
    if (*verify) return cmd_verify(vf_path, vf_seed, out);
  } catch (const VerifyFailure& e) {
    err << "verification failed: " << e.what() << '\n';
    return kVerifyFailed;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace strnn::cli
