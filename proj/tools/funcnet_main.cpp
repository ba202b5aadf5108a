// funcnet: scalar-on-function classification from the command line.
//
// Subcommands: simulate, fit, predict, cv, tune, export-weights. Every run
// writes a manifest.json echoing the fully resolved options (defaults and
// seed included) next to its outputs, so a run can be reproduced exactly.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "funcnet/csv.hpp"
#include "funcnet/evaluate.hpp"
#include "funcnet/model_io.hpp"
#include "funcnet/seeds.hpp"
#include "funcnet/simgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace funcnet;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    // trim surrounding spaces
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> out;
  if (text.empty()) return out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw std::runtime_error("cannot parse " + what + " entry '" + item + "' as an integer");
    }
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  if (text.empty()) return out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw std::runtime_error("cannot parse " + what + " entry '" + item + "' as a number");
    }
  }
  return out;
}

int parse_int(const std::string& text, const std::string& what) {
  return parse_int_list(text, what).at(0);
}

double parse_double(const std::string& text, const std::string& what) {
  return parse_double_list(text, what).at(0);
}

bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw std::runtime_error("cannot parse " + what + " value '" + text + "' as a boolean");
}

fs::path ensure_out_dir(const std::string& out_dir) {
  fs::path dir(out_dir);
  fs::create_directories(dir);
  return dir;
}

void write_manifest(const fs::path& dir, const json& manifest) {
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest.json");
  out << manifest.dump(2) << "\n";
}

// Flat key = value configuration file (TOML-compatible subset: comments with
// '#', optionally quoted string values). Values apply only to options the
// command line did not set, so flags always win.
void apply_config_file(const std::string& path, CLI::App* cmd,
                       const std::map<std::string, std::function<void(const std::string&)>>&
                           setters) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                              (value.front() == '\'' && value.back() == '\'')))
      value = value.substr(1, value.size() - 2);
    const auto setter = setters.find(key);
    if (setter == setters.end())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": unknown key '" +
                               key + "'");
    const CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt != nullptr && opt->count() > 0) continue;  // flag overrides config
    try {
      setter->second(value);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

// ---------------------------------------------------------------------------
// dataset schema flags shared by fit / predict / cv / tune

struct SchemaFlags {
  std::string data;
  std::string label;
  std::vector<std::string> func_cols;   // first:last, one per covariate
  std::vector<std::string> grid_files;  // one per covariate, optional
  std::string scalar_cols;              // comma list of names or ranges
  std::string basis = "fourier";        // comma list, broadcast over covariates
  std::string n_basis = "35";           // comma list, broadcast
  int order = 4;

  void attach(CLI::App* cmd, bool data_required = true) {
    auto* d = cmd->add_option("--data", data, "input dataset CSV");
    if (data_required) d->required();
    cmd->add_option("--label", label, "name of the label column");
    cmd->add_option("--func_cols", func_cols,
                    "functional covariate column range first:last (repeatable)");
    cmd->add_option("--grid_file", grid_files,
                    "grid sidecar CSV per functional covariate (repeatable)");
    cmd->add_option("--scalar_cols", scalar_cols,
                    "comma list of scalar covariate columns (names or first:last)");
    cmd->add_option("--basis", basis, "smoothing basis kind(s): fourier|bspline|legendre");
    cmd->add_option("--n_basis", n_basis, "smoothing basis size(s)");
    cmd->add_option("--order", order, "B-spline order");
  }

  DatasetSchema build() const {
    DatasetSchema schema;
    schema.label_column = label;
    const auto kinds = split_list(basis);
    const auto sizes = parse_int_list(n_basis, "n_basis");
    auto pick = [](const auto& list, std::size_t i, const auto& fallback) {
      if (list.empty()) return fallback;
      return list.size() == 1 ? list[0] : list.at(i);
    };
    for (std::size_t k = 0; k < func_cols.size(); ++k) {
      const auto sep = func_cols[k].find(':');
      if (sep == std::string::npos)
        throw std::runtime_error("--func_cols expects first:last, got '" + func_cols[k] + "'");
      CovariateSchema cov;
      cov.range = {func_cols[k].substr(0, sep), func_cols[k].substr(sep + 1)};
      cov.basis_kind = basis_kind_from_string(pick(kinds, k, std::string("fourier")));
      cov.n_basis = pick(sizes, k, 35);
      cov.order = order;
      if (k < grid_files.size()) cov.grid_file = grid_files[k];
      schema.functional.push_back(cov);
    }
    if (!scalar_cols.empty()) schema.scalar_columns = split_list(scalar_cols);
    schema.default_covariate.basis_kind = basis_kind_from_string(kinds.empty()
                                                                     ? "fourier"
                                                                     : kinds.front());
    schema.default_covariate.n_basis = sizes.empty() ? 35 : sizes.front();
    schema.default_covariate.order = order;
    if (schema.functional.empty() && !grid_files.empty())
      schema.default_covariate.grid_file = grid_files.front();
    return schema;
  }

  json to_json() const {
    return {{"data", data},         {"label", label},
            {"func_cols", func_cols}, {"grid_file", grid_files},
            {"scalar_cols", scalar_cols}, {"basis", basis},
            {"n_basis", n_basis},   {"order", order}};
  }

  std::map<std::string, std::function<void(const std::string&)>> setters() {
    return {
        {"label", [this](const std::string& v) { label = v; }},
        {"func_cols", [this](const std::string& v) { func_cols = split_list(v); }},
        {"grid_file", [this](const std::string& v) { grid_files = split_list(v); }},
        {"scalar_cols", [this](const std::string& v) { scalar_cols = v; }},
        {"basis", [this](const std::string& v) { basis = v; }},
        {"n_basis", [this](const std::string& v) { n_basis = v; }},
        {"order", [this](const std::string& v) { order = parse_int(v, "order"); }},
    };
  }
};

// ---------------------------------------------------------------------------
// network / model flags shared by fit / cv / tune

struct ModelFlags {
  std::string model_kind = "fnn";
  std::string neurons = "64";       // hidden layers; softmax output appended
  std::string activations = "";     // defaults to relu per hidden layer
  std::string dropout = "0.5";
  double learn_rate = 0.003;
  double decay_rate = 0.0;
  double validation_split = 0.2;
  std::string weight_basis = "35";  // comma list, broadcast over covariates
  std::string weight_basis_kind = "fourier";
  int epochs = 1500;
  int batch_size = 8;
  int patience = 100;
  int layers = -1;  // optional cross-check against the neurons list
  std::string optimizer = "adam";
  bool no_standardize = false;
  int restarts = 1;
  std::string lambda_grid = "0,1e-6,1e-4,1e-2,1,100";

  void attach(CLI::App* cmd) {
    cmd->add_option("--model_kind", model_kind, "fnn or flm")
        ->check(CLI::IsMember({"fnn", "flm"}));
    cmd->add_option("--neurons", neurons, "comma list of hidden layer widths");
    cmd->add_option("--activations", activations,
                    "comma list of hidden activations (relu|sigmoid|tanh|linear)");
    cmd->add_option("--dropout", dropout, "comma list of hidden dropout rates");
    cmd->add_option("--learn_rate", learn_rate, "learning rate");
    cmd->add_option("--decay_rate", decay_rate, "inverse-time learning rate decay");
    cmd->add_option("--validation_split", validation_split, "fraction held out per fit");
    cmd->add_option("--weight_basis", weight_basis, "functional weight basis size(s)");
    cmd->add_option("--weight_basis_kind", weight_basis_kind, "functional weight basis kind");
    cmd->add_option("--epochs", epochs, "training iterations");
    cmd->add_option("--batch_size", batch_size, "mini-batch size");
    cmd->add_option("--patience", patience, "early-stopping patience (0 disables)");
    cmd->add_option("--layers", layers, "expected hidden layer count (cross-check)");
    cmd->add_option("--optimizer", optimizer, "sgd or adam")
        ->check(CLI::IsMember({"sgd", "adam"}));
    cmd->add_flag("--no_standardize", no_standardize, "skip feature standardization");
    cmd->add_option("--restarts", restarts, "random restarts, best kept by monitored loss");
    cmd->add_option("--lambda_grid", lambda_grid, "flm penalty candidates");
  }

  NetworkConfig network_config(int k_covariates, int h_classes, std::uint64_t seed) const {
    NetworkConfig cfg;
    const auto hidden = parse_int_list(neurons, "neurons");
    if (layers >= 0 && layers != static_cast<int>(hidden.size()))
      throw std::runtime_error("--layers says " + std::to_string(layers) +
                               " but --neurons lists " + std::to_string(hidden.size()));
    cfg.neurons = hidden;
    cfg.neurons.push_back(h_classes);
    auto acts = split_list(activations.empty() ? "" : activations);
    if (activations.empty()) acts.assign(hidden.size(), "relu");
    if (acts.size() != hidden.size())
      throw std::runtime_error("--activations must list one entry per hidden layer");
    for (const auto& a : acts) cfg.activations.push_back(activation_from_string(a));
    cfg.activations.push_back(Activation::Softmax);
    if (!dropout.empty()) {
      cfg.dropout_rates = parse_double_list(dropout, "dropout");
      if (cfg.dropout_rates.size() != hidden.size())
        throw std::runtime_error("--dropout must list one rate per hidden layer");
      cfg.dropout_rates.push_back(0.0);
    }
    cfg.learn_rate = learn_rate;
    cfg.decay_rate = decay_rate;
    cfg.validation_split = validation_split;
    const auto wb = parse_int_list(weight_basis, "weight_basis");
    if (k_covariates > 0) {
      if (wb.size() == 1)
        cfg.weight_basis_sizes.assign(k_covariates, wb.front());
      else if (static_cast<int>(wb.size()) == k_covariates)
        cfg.weight_basis_sizes = wb;
      else
        throw std::runtime_error("--weight_basis must list one size (broadcast) or one per "
                                 "functional covariate");
    }
    cfg.weight_basis_kind = basis_kind_from_string(weight_basis_kind);
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.early_stop_patience = patience;
    cfg.optimizer = optimizer_from_string(optimizer);
    cfg.standardize = !no_standardize;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
  }

  std::vector<int> flm_basis_sizes(int k_covariates) const {
    const auto wb = parse_int_list(weight_basis, "weight_basis");
    if (k_covariates == 0) return {};
    if (wb.size() == 1) return std::vector<int>(k_covariates, wb.front());
    if (static_cast<int>(wb.size()) == k_covariates) return wb;
    throw std::runtime_error("--weight_basis must list one size (broadcast) or one per "
                             "functional covariate");
  }

  json to_json() const {
    return {{"model_kind", model_kind},
            {"neurons", neurons},
            {"activations", activations},
            {"dropout", dropout},
            {"learn_rate", learn_rate},
            {"decay_rate", decay_rate},
            {"validation_split", validation_split},
            {"weight_basis", weight_basis},
            {"weight_basis_kind", weight_basis_kind},
            {"epochs", epochs},
            {"batch_size", batch_size},
            {"patience", patience},
            {"optimizer", optimizer},
            {"standardize", !no_standardize},
            {"restarts", restarts},
            {"lambda_grid", lambda_grid}};
  }

  std::map<std::string, std::function<void(const std::string&)>> setters() {
    return {
        {"model_kind", [this](const std::string& v) { model_kind = v; }},
        {"layers", [this](const std::string& v) { layers = parse_int(v, "layers"); }},
        {"neurons", [this](const std::string& v) { neurons = v; }},
        {"activations", [this](const std::string& v) { activations = v; }},
        {"dropout", [this](const std::string& v) { dropout = v; }},
        {"learn_rate",
         [this](const std::string& v) { learn_rate = parse_double(v, "learn_rate"); }},
        {"decay_rate",
         [this](const std::string& v) { decay_rate = parse_double(v, "decay_rate"); }},
        {"validation_split",
         [this](const std::string& v) {
           validation_split = parse_double(v, "validation_split");
         }},
        {"weight_basis", [this](const std::string& v) { weight_basis = v; }},
        {"weight_basis_kind", [this](const std::string& v) { weight_basis_kind = v; }},
        {"epochs", [this](const std::string& v) { epochs = parse_int(v, "epochs"); }},
        {"batch_size",
         [this](const std::string& v) { batch_size = parse_int(v, "batch_size"); }},
        {"patience", [this](const std::string& v) { patience = parse_int(v, "patience"); }},
        {"optimizer", [this](const std::string& v) { optimizer = v; }},
        {"standardize",
         [this](const std::string& v) { no_standardize = !parse_bool(v, "standardize"); }},
        {"restarts", [this](const std::string& v) { restarts = parse_int(v, "restarts"); }},
        {"lambda_grid", [this](const std::string& v) { lambda_grid = v; }},
    };
  }
};

json label_map_json(const std::vector<std::string>& names) {
  json m = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) m[std::to_string(i)] = names[i];
  return m;
}

std::vector<BasisSystem> dataset_bases(const Dataset& ds) {
  std::vector<BasisSystem> out;
  for (const auto& fc : ds.functional) out.push_back(fc.basis);
  return out;
}

json bases_json(const std::vector<BasisSystem>& bases) {
  json arr = json::array();
  for (const auto& b : bases) arr.push_back(basis_to_json(b));
  return arr;
}

void write_history_csv(const fs::path& path, const TrainHistory& history) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t e = 0; e < history.train_loss.size(); ++e)
    rows.push_back({std::to_string(e + 1), format_double(history.train_loss[e]),
                    format_double(history.val_loss[e]),
                    format_double(history.val_accuracy[e])});
  write_csv(path.string(), {"epoch", "train_loss", "val_loss", "val_accuracy"}, rows);
}

json metrics_json(const Metrics& m) {
  return {{"accuracy", m.accuracy},
          {"mspe", m.mspe},
          {"sensitivity", m.sensitivity},
          {"specificity", m.specificity},
          {"ppv", m.ppv},
          {"npv", m.npv},
          {"rates_defined", m.rates_defined},
          {"fold_accuracy", m.fold_accuracy},
          {"sd_accuracy", m.sd_accuracy}};
}

double labeled_accuracy(const std::vector<int>& truth, const std::vector<int>& pred) {
  return 1.0 - mspe(truth, pred);
}

// ---------------------------------------------------------------------------
// subcommand bodies

struct SimulateArgs {
  int scenario = 1;
  int n = 300;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  int grid_points = 100;
  int kl_terms = 35;
  bool no_noise = false;
  bool per_point_noise = false;
};

int run_simulate(const SimulateArgs& a) {
  SimOptions opts;
  opts.grid_points = a.grid_points;
  opts.kl_terms = a.kl_terms;
  opts.with_noise = !a.no_noise;
  opts.per_point_noise = a.per_point_noise;
  const Simulated sim = simulate_scenario(a.scenario, a.n, a.seed, opts);

  const fs::path dir = ensure_out_dir(a.out_dir);
  std::vector<std::string> header;
  for (double t : sim.grid.points) header.push_back(format_double(t));
  header.push_back("label");
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < sim.raw.rows(); ++i) {
    std::vector<std::string> row;
    for (int p = 0; p < sim.raw.cols(); ++p) row.push_back(format_double(sim.raw(i, p)));
    row.push_back(std::to_string(sim.labels[i]));
    rows.push_back(std::move(row));
  }
  write_csv((dir / "dataset.csv").string(), header, rows);

  json manifest = {{"command", "simulate"},
                   {"options",
                    {{"scenario", a.scenario},
                     {"n", a.n},
                     {"seed", a.seed},
                     {"grid_points", a.grid_points},
                     {"kl_terms", a.kl_terms},
                     {"noise", !a.no_noise},
                     {"per_point_noise", a.per_point_noise},
                     {"out", a.out_dir}}},
                   {"outputs", {"dataset.csv"}}};
  write_manifest(dir, manifest);
  std::cout << "wrote " << (dir / "dataset.csv").string() << " (" << a.n << " observations)\n";
  return 0;
}

struct FitArgs {
  SchemaFlags schema;
  ModelFlags model;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string config;
};

int run_fit(const FitArgs& a) {
  const LoadedDataset loaded = load_dataset(a.schema.data, a.schema.build());
  const Dataset& ds = loaded.dataset;
  if (ds.labels.empty()) throw std::runtime_error("fit requires a --label column");
  const fs::path dir = ensure_out_dir(a.out_dir);

  json results;
  std::vector<std::string> outputs;
  if (a.model.model_kind == "fnn") {
    NetworkConfig cfg = a.model.network_config(ds.k(), ds.n_classes, a.seed);
    auto monitored = [](const TrainResult& r) {
      if (!r.history.val_loss.empty() && !std::isnan(r.history.val_loss.back()))
        return r.history.val_loss.back();
      return r.history.train_loss.back();
    };
    // restarts keep the attempt with the best monitored loss
    TrainResult r = train(ds, cfg);
    double best_loss = monitored(r);
    for (int attempt = 1; attempt < a.model.restarts; ++attempt) {
      NetworkConfig alt = cfg;
      alt.seed = derive_seed(a.seed, 0xab5 + attempt);
      TrainResult candidate = train(ds, alt);
      if (monitored(candidate) < best_loss) {
        best_loss = monitored(candidate);
        r = std::move(candidate);
      }
    }
    save_fnn(r.model, (dir / "model.json").string(), loaded.label_names);
    write_history_csv(dir / "history.csv", r.history);
    outputs = {"model.json", "history.csv"};
    const Prediction train_pred = predict(r.model, ds);
    results["train_accuracy"] = labeled_accuracy(ds.labels, train_pred.labels);
    results["stopped_early"] = r.history.stopped_early;
    results["epochs_run"] = r.history.stopped_epoch;
  } else {
    const auto lambdas = parse_double_list(a.model.lambda_grid, "lambda_grid");
    std::vector<BasisSystem> bases;
    const auto sizes = a.model.flm_basis_sizes(ds.k());
    for (int k = 0; k < ds.k(); ++k) {
      const auto& db = ds.functional[k].basis;
      bases.push_back(BasisSystem::make(
          basis_kind_from_string(a.model.weight_basis_kind), db.a(), db.b(), sizes[k]));
    }
    FlmModel model = fit_flm_tuned(ds, bases, lambdas, a.seed);
    if (!model.converged)
      std::cerr << "warning: flm stopped before reaching the gradient tolerance"
                << " (final gradient norm " << model.final_grad_norm << ")\n";
    save_flm(model, (dir / "model.json").string(), loaded.label_names);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < model.objective_path.size(); ++i)
      rows.push_back({std::to_string(i), format_double(model.objective_path[i])});
    write_csv((dir / "history.csv").string(), {"iteration", "objective"}, rows);
    outputs = {"model.json", "history.csv"};
    const Prediction train_pred = predict_flm(model, ds);
    results["train_accuracy"] = labeled_accuracy(ds.labels, train_pred.labels);
    results["lambda"] = model.lambda;
    results["converged"] = model.converged;
  }

  json manifest = {{"command", "fit"},
                   {"options",
                    {{"schema", a.schema.to_json()},
                     {"model", a.model.to_json()},
                     {"config", a.config},
                     {"seed", a.seed},
                     {"out", a.out_dir}}},
                   {"label_mapping", label_map_json(loaded.label_names)},
                   {"data_bases", bases_json(dataset_bases(ds))},
                   {"results", results},
                   {"outputs", outputs}};
  write_manifest(dir, manifest);
  std::cout << "train accuracy " << results["train_accuracy"].get<double>() << ", model at "
            << (dir / "model.json").string() << "\n";
  return 0;
}

struct PredictArgs {
  std::string model_path;
  SchemaFlags schema;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

int run_predict(const PredictArgs& a) {
  const LoadedModel loaded = load_model(a.model_path);
  const LoadedDataset data = load_dataset(a.schema.data, a.schema.build());
  const Dataset& ds = data.dataset;
  const fs::path dir = ensure_out_dir(a.out_dir);

  Prediction pred;
  if (loaded.kind == "fnn")
    pred = predict(*loaded.fnn, ds);
  else
    pred = predict_flm(*loaded.flm, ds);

  auto class_name = [&](int id) {
    if (id < static_cast<int>(loaded.label_names.size())) return loaded.label_names[id];
    return std::to_string(id);
  };
  std::vector<std::string> header = {"row", "label"};
  for (int h = 0; h < pred.probs.cols(); ++h) header.push_back("prob_" + class_name(h));
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < static_cast<int>(pred.labels.size()); ++i) {
    std::vector<std::string> row = {std::to_string(i), class_name(pred.labels[i])};
    for (int h = 0; h < pred.probs.cols(); ++h)
      row.push_back(format_double(pred.probs(i, h)));
    rows.push_back(std::move(row));
  }
  write_csv((dir / "predictions.csv").string(), header, rows);

  json results;
  if (!ds.labels.empty()) results["accuracy"] = labeled_accuracy(ds.labels, pred.labels);
  json manifest = {{"command", "predict"},
                   {"options",
                    {{"model", a.model_path},
                     {"schema", a.schema.to_json()},
                     {"seed", a.seed},
                     {"out", a.out_dir}}},
                   {"results", results},
                   {"outputs", {"predictions.csv"}}};
  write_manifest(dir, manifest);
  std::cout << "wrote " << (dir / "predictions.csv").string() << "\n";
  return 0;
}

struct CvArgs {
  SchemaFlags schema;
  ModelFlags model;
  int k = 5;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = ".";
  std::string config;
};

int run_cv(const CvArgs& a) {
  const LoadedDataset loaded = load_dataset(a.schema.data, a.schema.build());
  const Dataset& ds = loaded.dataset;
  if (ds.labels.empty()) throw std::runtime_error("cv requires a --label column");
  const fs::path dir = ensure_out_dir(a.out_dir);

  std::unique_ptr<ClassifierSpec> spec;
  if (a.model.model_kind == "fnn") {
    spec = std::make_unique<FnnSpec>(a.model.network_config(ds.k(), ds.n_classes, a.seed),
                                     "fnn", a.model.restarts);
  } else {
    spec = std::make_unique<FlmSpec>(basis_kind_from_string(a.model.weight_basis_kind),
                                     a.model.flm_basis_sizes(ds.k()),
                                     parse_double_list(a.model.lambda_grid, "lambda_grid"));
  }
  const CvResult cv = kfold_cv(ds, a.k, *spec, a.seed, a.threads);

  json pooled = json::array();
  for (int t = 0; t < cv.pooled.n_classes(); ++t) {
    json row = json::array();
    for (int p = 0; p < cv.pooled.n_classes(); ++p) row.push_back(cv.pooled.at(t, p));
    pooled.push_back(std::move(row));
  }
  json metrics = metrics_json(cv.metrics);
  metrics["pooled_confusion"] = pooled;
  metrics["k"] = a.k;
  {
    std::ofstream out(dir / "metrics.json");
    if (!out) throw std::runtime_error("cannot write metrics.json");
    out << metrics.dump(2) << "\n";
  }

  std::vector<std::vector<std::string>> rows;
  for (const auto& fr : cv.folds)
    rows.push_back({std::to_string(fr.fold), std::to_string(fr.test_indices.size()),
                    format_double(fr.accuracy)});
  write_csv((dir / "folds.csv").string(), {"fold", "test_size", "accuracy"}, rows);

  json manifest = {{"command", "cv"},
                   {"options",
                    {{"schema", a.schema.to_json()},
                     {"model", a.model.to_json()},
                     {"config", a.config},
                     {"k", a.k},
                     {"seed", a.seed},
                     {"threads", a.threads},
                     {"out", a.out_dir}}},
                   {"label_mapping", label_map_json(loaded.label_names)},
                   {"results", {{"accuracy", cv.metrics.accuracy}, {"mspe", cv.metrics.mspe}}},
                   {"outputs", {"metrics.json", "folds.csv"}}};
  write_manifest(dir, manifest);
  std::cout << a.k << "-fold cv accuracy " << cv.metrics.accuracy << " (sd "
            << cv.metrics.sd_accuracy << ")\n";
  return 0;
}

struct TuneArgs {
  SchemaFlags schema;
  ModelFlags model;
  std::string grid_path;
  int k = 5;
  bool holdout = false;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = ".";
  std::string config;
};

int run_tune(const TuneArgs& a) {
  const LoadedDataset loaded = load_dataset(a.schema.data, a.schema.build());
  const Dataset& ds = loaded.dataset;
  if (ds.labels.empty()) throw std::runtime_error("tune requires a --label column");
  const fs::path dir = ensure_out_dir(a.out_dir);

  std::ifstream grid_in(a.grid_path);
  if (!grid_in) throw std::runtime_error("cannot open grid file " + a.grid_path);
  json grid_doc;
  grid_in >> grid_doc;
  if (!grid_doc.is_object()) throw std::runtime_error("grid file must be a JSON object");

  // cartesian product of candidate lists over the base flags
  std::vector<ModelFlags> cells = {a.model};
  std::vector<std::string> cell_descs = {"base"};
  for (const auto& [key, values] : grid_doc.items()) {
    if (!values.is_array() || values.empty())
      throw std::runtime_error("grid key '" + key + "' must map to a non-empty array");
    std::vector<ModelFlags> expanded;
    std::vector<std::string> descs;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      for (const auto& v : values) {
        ModelFlags m = cells[i];
        const std::string text = v.is_string() ? v.get<std::string>() : v.dump();
        if (key == "neurons") m.neurons = text;
        else if (key == "activations") m.activations = text;
        else if (key == "dropout") m.dropout = text;
        else if (key == "learn_rate") m.learn_rate = v.get<double>();
        else if (key == "decay_rate") m.decay_rate = v.get<double>();
        else if (key == "validation_split") m.validation_split = v.get<double>();
        else if (key == "weight_basis") m.weight_basis = text;
        else if (key == "epochs") m.epochs = v.get<int>();
        else if (key == "batch_size") m.batch_size = v.get<int>();
        else if (key == "patience") m.patience = v.get<int>();
        else if (key == "optimizer") m.optimizer = text;
        else throw std::runtime_error("unknown grid key '" + key + "'");
        expanded.push_back(std::move(m));
        const std::string d = key + "=" + text;
        descs.push_back(cell_descs[i] == "base" ? d : cell_descs[i] + " " + d);
      }
    }
    cells = std::move(expanded);
    cell_descs = std::move(descs);
  }

  std::vector<std::shared_ptr<ClassifierSpec>> specs;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (a.model.model_kind == "fnn")
      specs.push_back(std::make_shared<FnnSpec>(
          cells[i].network_config(ds.k(), ds.n_classes, a.seed), cell_descs[i],
          cells[i].restarts));
    else
      specs.push_back(std::make_shared<FlmSpec>(
          basis_kind_from_string(cells[i].weight_basis_kind),
          cells[i].flm_basis_sizes(ds.k()),
          parse_double_list(cells[i].lambda_grid, "lambda_grid"), cell_descs[i]));
  }

  GridSearchOptions opts;
  opts.k = a.k;
  opts.holdout = a.holdout;
  opts.threads = a.threads;
  const GridSearchResult result = grid_search(ds, specs, opts, a.seed);

  std::vector<std::vector<std::string>> rows;
  int rank = 1;
  for (const auto& cell : result.leaderboard)
    rows.push_back({std::to_string(rank++), std::to_string(cell.index), cell.name,
                    cell.failed ? "" : format_double(cell.cv_accuracy),
                    cell.failed ? "" : format_double(cell.sd_accuracy),
                    std::to_string(cell.param_count), cell.failed ? "failed" : "ok",
                    cell.error});
  write_csv((dir / "leaderboard.csv").string(),
            {"rank", "grid_index", "config", "cv_accuracy", "sd_accuracy", "param_count",
             "status", "error"},
            rows);

  if (result.best_index < 0) throw std::runtime_error("every grid cell failed to train");

  // refit the winner on the full dataset
  const ModelFlags& best = cells[result.best_index];
  json results = {{"best_index", result.best_index},
                  {"best_config", cell_descs[result.best_index]},
                  {"best_cv_accuracy", result.leaderboard.front().cv_accuracy}};
  if (a.model.model_kind == "fnn") {
    NetworkConfig cfg = best.network_config(ds.k(), ds.n_classes, a.seed);
    TrainResult r = train(ds, cfg);
    save_fnn(r.model, (dir / "best_model.json").string(), loaded.label_names);
  } else {
    std::vector<BasisSystem> bases;
    const auto sizes = best.flm_basis_sizes(ds.k());
    for (int k = 0; k < ds.k(); ++k) {
      const auto& db = ds.functional[k].basis;
      bases.push_back(BasisSystem::make(basis_kind_from_string(best.weight_basis_kind),
                                        db.a(), db.b(), sizes[k]));
    }
    FlmModel model = fit_flm_tuned(ds, bases,
                                   parse_double_list(best.lambda_grid, "lambda_grid"), a.seed);
    save_flm(model, (dir / "best_model.json").string(), loaded.label_names);
  }

  json manifest = {{"command", "tune"},
                   {"options",
                    {{"schema", a.schema.to_json()},
                     {"model", a.model.to_json()},
                     {"config", a.config},
                     {"grid", a.grid_path},
                     {"k", a.k},
                     {"holdout", a.holdout},
                     {"seed", a.seed},
                     {"threads", a.threads},
                     {"out", a.out_dir}}},
                   {"label_mapping", label_map_json(loaded.label_names)},
                   {"results", results},
                   {"outputs", {"leaderboard.csv", "best_model.json"}}};
  write_manifest(dir, manifest);
  std::cout << "best config: " << cell_descs[result.best_index] << " (cv accuracy "
            << result.leaderboard.front().cv_accuracy << ")\n";
  return 0;
}

struct ExportArgs {
  std::string model_path;
  int covariate = -1;  // -1 exports all
  int grid_points = 201;
  std::string grid_file;
  std::string out_dir = ".";
};

int run_export_weights(const ExportArgs& a) {
  const LoadedModel loaded = load_model(a.model_path);
  const fs::path dir = ensure_out_dir(a.out_dir);

  const std::vector<BasisSystem>& bases =
      loaded.kind == "fnn" ? loaded.fnn->weight_bases() : loaded.flm->weight_bases;
  if (bases.empty()) throw std::runtime_error("model has no functional covariates");

  std::vector<int> covariates;
  if (a.covariate >= 0) {
    if (a.covariate >= static_cast<int>(bases.size()))
      throw std::runtime_error("covariate index out of range");
    covariates.push_back(a.covariate);
  } else {
    for (int k = 0; k < static_cast<int>(bases.size()); ++k) covariates.push_back(k);
  }

  std::vector<std::string> outputs;
  for (int k : covariates) {
    Grid grid = a.grid_file.empty()
                    ? Grid::uniform(bases[k].a(), bases[k].b(), a.grid_points)
                    : [&] {
                        CsvTable t = read_csv(a.grid_file);
                        std::vector<double> pts;
                        for (const auto& row : t.rows) pts.push_back(std::stod(row[0]));
                        Grid g(std::move(pts));
                        g.validate();
                        return g;
                      }();

    std::vector<std::string> header = {"t"};
    std::vector<std::vector<std::string>> rows(grid.size());
    for (int p = 0; p < grid.size(); ++p) rows[p].push_back(format_double(grid.points[p]));
    if (loaded.kind == "fnn") {
      header.push_back("beta_hat");
      const Eigen::VectorXd beta = loaded.fnn->extract_functional_weights(k, grid);
      for (int p = 0; p < grid.size(); ++p) rows[p].push_back(format_double(beta(p)));
    } else {
      for (int h = 0; h < loaded.flm->n_classes(); ++h) {
        header.push_back("beta_class" + std::to_string(h));
        const Eigen::VectorXd beta = flm_beta(*loaded.flm, h, k, grid);
        for (int p = 0; p < grid.size(); ++p) rows[p].push_back(format_double(beta(p)));
      }
    }
    const std::string name = "beta_" + std::to_string(k + 1) + ".csv";
    write_csv((dir / name).string(), header, rows);
    outputs.push_back(name);
  }

  json manifest = {{"command", "export-weights"},
                   {"options",
                    {{"model", a.model_path},
                     {"covariate", a.covariate},
                     {"grid_points", a.grid_points},
                     {"grid_file", a.grid_file},
                     {"out", a.out_dir}}},
                   {"outputs", outputs}};
  write_manifest(dir, manifest);
  std::cout << "wrote " << outputs.size() << " weight file(s) under " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"funcnet: functional-data classification (functional network, "
               "functional linear model, simulation and evaluation harness)"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic scenario dataset");
  simulate->add_option("--scenario", sim.scenario, "scenario number")->check(CLI::Range(1, 3));
  simulate->add_option("--n", sim.n, "observations to generate");
  simulate->add_option("--seed", sim.seed, "random seed");
  simulate->add_option("--out", sim.out_dir, "output directory");
  simulate->add_option("--grid_points", sim.grid_points, "grid resolution on [0,1]");
  simulate->add_option("--kl_terms", sim.kl_terms, "expansion terms for the random curves");
  simulate->add_flag("--no_noise", sim.no_noise, "skip the level-shift noise");
  simulate->add_flag("--per_point_noise", sim.per_point_noise,
                     "independent noise per sample point");

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "train a model on a labeled CSV");
  fit_args.schema.attach(fit_cmd);
  fit_args.model.attach(fit_cmd);
  fit_cmd->add_option("--seed", fit_args.seed, "random seed");
  fit_cmd->add_option("--out", fit_args.out_dir, "output directory");
  fit_cmd->add_option("--config", fit_args.config, "key = value configuration file");

  PredictArgs pred_args;
  auto* predict_cmd = app.add_subcommand("predict", "label new observations with a model");
  predict_cmd->add_option("--model", pred_args.model_path, "model JSON file")->required();
  pred_args.schema.attach(predict_cmd);
  predict_cmd->add_option("--seed", pred_args.seed, "random seed");
  predict_cmd->add_option("--out", pred_args.out_dir, "output directory");

  CvArgs cv_args;
  auto* cv_cmd = app.add_subcommand("cv", "k-fold cross-validated metrics");
  cv_args.schema.attach(cv_cmd);
  cv_args.model.attach(cv_cmd);
  cv_cmd->add_option("--k", cv_args.k, "number of folds");
  cv_cmd->add_option("--seed", cv_args.seed, "random seed");
  cv_cmd->add_option("--threads", cv_args.threads, "worker cap (1 = reference run)");
  cv_cmd->add_option("--out", cv_args.out_dir, "output directory");
  cv_cmd->add_option("--config", cv_args.config, "key = value configuration file");

  TuneArgs tune_args;
  auto* tune_cmd = app.add_subcommand("tune", "grid search over hyperparameters");
  tune_args.schema.attach(tune_cmd);
  tune_args.model.attach(tune_cmd);
  tune_cmd->add_option("--grid", tune_args.grid_path, "JSON grid of candidate values")
      ->required();
  tune_cmd->add_option("--k", tune_args.k, "folds for scoring");
  tune_cmd->add_flag("--holdout", tune_args.holdout, "score on one fixed split instead of CV");
  tune_cmd->add_option("--seed", tune_args.seed, "random seed");
  tune_cmd->add_option("--threads", tune_args.threads, "worker cap (1 = reference run)");
  tune_cmd->add_option("--out", tune_args.out_dir, "output directory");
  tune_cmd->add_option("--config", tune_args.config, "key = value configuration file");

  ExportArgs export_args;
  auto* export_cmd =
      app.add_subcommand("export-weights", "evaluate fitted functional weights on a grid");
  export_cmd->add_option("--model", export_args.model_path, "model JSON file")->required();
  export_cmd->add_option("--covariate", export_args.covariate,
                         "covariate index (default: all)");
  export_cmd->add_option("--grid_points", export_args.grid_points, "uniform grid resolution");
  export_cmd->add_option("--grid", export_args.grid_file, "one-column CSV of t values");
  export_cmd->add_option("--out", export_args.out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    auto apply_config = [](const std::string& path, CLI::App* cmd, SchemaFlags& schema,
                           ModelFlags& model, std::uint64_t* seed) {
      if (path.empty()) return;
      auto setters = model.setters();
      auto schema_setters = schema.setters();
      setters.insert(schema_setters.begin(), schema_setters.end());
      if (seed != nullptr)
        setters.emplace("seed", [seed](const std::string& v) { *seed = std::stoull(v); });
      apply_config_file(path, cmd, setters);
    };
    if (simulate->parsed()) return run_simulate(sim);
    if (fit_cmd->parsed()) {
      apply_config(fit_args.config, fit_cmd, fit_args.schema, fit_args.model, &fit_args.seed);
      return run_fit(fit_args);
    }
    if (predict_cmd->parsed()) return run_predict(pred_args);
    if (cv_cmd->parsed()) {
      apply_config(cv_args.config, cv_cmd, cv_args.schema, cv_args.model, &cv_args.seed);
      return run_cv(cv_args);
    }
    if (tune_cmd->parsed()) {
      apply_config(tune_args.config, tune_cmd, tune_args.schema, tune_args.model,
                   &tune_args.seed);
      return run_tune(tune_args);
    }
    if (export_cmd->parsed()) return run_export_weights(export_args);
  } catch (const std::exception& e) {
    std::cerr << "funcnet: error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "funcnet: no subcommand given\n";
  return 1;
}
