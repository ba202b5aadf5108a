#include "funcnet/model_io.hpp"

#include <fstream>
#include <stdexcept>

namespace funcnet {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "funcnet-model";
constexpr int kVersion = 1;

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (long i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<long>(i)) = arr[i].get<double>();
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (long r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (long c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  const long nr = static_cast<long>(rows.size());
  const long nc = nr > 0 ? static_cast<long>(rows[0].size()) : 0;
  Eigen::MatrixXd m(nr, nc);
  for (long r = 0; r < nr; ++r) {
    if (static_cast<long>(rows[r].size()) != nc)
      throw std::runtime_error("ragged matrix in model file");
    for (long c = 0; c < nc; ++c) m(r, c) = rows[r][c].get<double>();
  }
  return m;
}

json document_shell(const std::string& kind, const std::vector<std::string>& label_names) {
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["kind"] = kind;
  if (!label_names.empty()) doc["label_names"] = label_names;
  return doc;
}

void write_document(const json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << doc.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed for " + path);
}

json read_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": not a valid model file (" + e.what() + ")");
  }
  if (doc.value("format", "") != kFormat)
    throw std::runtime_error(path + ": not a " + std::string(kFormat) + " document");
  if (doc.value("version", -1) != kVersion)
    throw std::runtime_error(path + ": unsupported model version " +
                             doc.value("version", json(-1)).dump() + ", expected " +
                             std::to_string(kVersion));
  return doc;
}

}  // namespace

json basis_to_json(const BasisSystem& basis) {
  json j;
  j["kind"] = to_string(basis.kind());
  j["a"] = basis.a();
  j["b"] = basis.b();
  j["n_basis"] = basis.n_basis();
  if (basis.kind() == BasisKind::BSpline) j["order"] = basis.order();
  return j;
}

BasisSystem basis_from_json(const json& j) {
  return BasisSystem::make(basis_kind_from_string(j.at("kind").get<std::string>()),
                           j.at("a").get<double>(), j.at("b").get<double>(),
                           j.at("n_basis").get<int>(), j.value("order", 4));
}

json config_to_json(const NetworkConfig& config) {
  json j;
  j["neurons"] = config.neurons;
  json acts = json::array();
  for (auto a : config.activations) acts.push_back(to_string(a));
  j["activations"] = acts;
  j["dropout"] = config.dropout_rates;
  j["learn_rate"] = config.learn_rate;
  j["decay_rate"] = config.decay_rate;
  j["validation_split"] = config.validation_split;
  j["weight_basis"] = config.weight_basis_sizes;
  j["weight_basis_kind"] = to_string(config.weight_basis_kind);
  j["epochs"] = config.epochs;
  j["batch_size"] = config.batch_size;
  j["patience"] = config.early_stop_patience;
  j["optimizer"] = to_string(config.optimizer);
  j["standardize"] = config.standardize;
  j["seed"] = config.seed;
  return j;
}

NetworkConfig config_from_json(const json& j) {
  NetworkConfig c;
  c.neurons = j.at("neurons").get<std::vector<int>>();
  for (const auto& a : j.at("activations"))
    c.activations.push_back(activation_from_string(a.get<std::string>()));
  c.dropout_rates = j.value("dropout", std::vector<double>{});
  c.learn_rate = j.at("learn_rate").get<double>();
  c.decay_rate = j.value("decay_rate", 0.0);
  c.validation_split = j.value("validation_split", 0.0);
  c.weight_basis_sizes = j.value("weight_basis", std::vector<int>{});
  c.weight_basis_kind =
      basis_kind_from_string(j.value("weight_basis_kind", std::string("fourier")));
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.early_stop_patience = j.value("patience", 0);
  c.optimizer = optimizer_from_string(j.value("optimizer", std::string("adam")));
  c.standardize = j.value("standardize", true);
  c.seed = j.value("seed", std::uint64_t{0});
  return c;
}

void save_fnn(const FnnModel& model, const std::string& path,
              const std::vector<std::string>& label_names) {
  json doc = document_shell("fnn", label_names);
  doc["config"] = config_to_json(model.config());
  doc["dims"] = {{"k", model.n_functional()},
                 {"j", model.n_scalars()},
                 {"h", model.n_classes()}};
  json bases = json::array();
  for (const auto& b : model.weight_bases()) bases.push_back(basis_to_json(b));
  doc["weight_bases"] = bases;
  doc["scaler"] = {{"mean", vector_to_json(model.scaler().mean)},
                   {"scale", vector_to_json(model.scaler().scale)}};
  doc["params"] = vector_to_json(model.params());
  doc["optimizer_state"] = {{"adam_m", vector_to_json(model.adam_m())},
                            {"adam_v", vector_to_json(model.adam_v())},
                            {"adam_t", model.adam_t()},
                            {"sgd_steps", model.sgd_steps()}};
  write_document(doc, path);
}

void save_flm(const FlmModel& model, const std::string& path,
              const std::vector<std::string>& label_names) {
  json doc = document_shell("flm", label_names);
  json bases = json::array();
  for (const auto& b : model.weight_bases) bases.push_back(basis_to_json(b));
  doc["weight_bases"] = bases;
  doc["theta"] = matrix_to_json(model.theta);
  doc["lambda"] = model.lambda;
  doc["block_sizes"] = model.block_sizes;
  doc["n_scalars"] = model.n_scalars;
  doc["fit"] = {{"converged", model.converged},
                {"final_grad_norm", model.final_grad_norm},
                {"iterations", model.iterations}};
  write_document(doc, path);
}

LoadedModel load_model(const std::string& path) {
  const json doc = read_document(path);
  LoadedModel out;
  out.kind = doc.at("kind").get<std::string>();
  if (doc.contains("label_names"))
    out.label_names = doc["label_names"].get<std::vector<std::string>>();

  if (out.kind == "fnn") {
    const NetworkConfig config = config_from_json(doc.at("config"));
    const auto& dims = doc.at("dims");
    FnnModel model = FnnModel::init(config, dims.at("k").get<int>(), dims.at("j").get<int>(),
                                    dims.at("h").get<int>(), config.seed);
    std::vector<BasisSystem> bases;
    for (const auto& b : doc.at("weight_bases")) bases.push_back(basis_from_json(b));
    if (static_cast<int>(bases.size()) == model.n_functional())
      model.set_weight_bases(std::move(bases));
    Scaler scaler;
    scaler.mean = vector_from_json(doc.at("scaler").at("mean"));
    scaler.scale = vector_from_json(doc.at("scaler").at("scale"));
    model.set_scaler(std::move(scaler));
    model.set_params(vector_from_json(doc.at("params")));
    const auto& opt = doc.at("optimizer_state");
    model.restore_optimizer_state(vector_from_json(opt.at("adam_m")),
                                  vector_from_json(opt.at("adam_v")),
                                  opt.at("adam_t").get<long>(),
                                  opt.at("sgd_steps").get<long>());
    out.fnn = std::move(model);
  } else if (out.kind == "flm") {
    FlmModel model;
    for (const auto& b : doc.at("weight_bases")) model.weight_bases.push_back(basis_from_json(b));
    model.theta = matrix_from_json(doc.at("theta"));
    model.lambda = doc.at("lambda").get<double>();
    model.block_sizes = doc.at("block_sizes").get<std::vector<int>>();
    model.n_scalars = doc.at("n_scalars").get<int>();
    out.flm = std::move(model);
  } else {
    throw std::runtime_error(path + ": unknown model kind '" + out.kind + "'");
  }
  return out;
}

}  // namespace funcnet
