#include "funcnet/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "funcnet/parallel.hpp"
#include "funcnet/seeds.hpp"

namespace funcnet {

std::uint64_t hash_bytes(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_vector(const Eigen::VectorXd& v) {
  return hash_bytes(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

namespace {

class FnnClassifier : public Classifier {
 public:
  explicit FnnClassifier(FnnModel model) : model_(std::move(model)) {}
  Prediction classify(const Dataset& ds) const override { return predict(model_, ds); }
  std::uint64_t param_hash() const override {
    std::uint64_t h = hash_vector(model_.params());
    h = hash_bytes(model_.scaler().mean.data(),
                   sizeof(double) * model_.scaler().mean.size(), h);
    h = hash_bytes(model_.scaler().scale.data(),
                   sizeof(double) * model_.scaler().scale.size(), h);
    return h;
  }
  const FnnModel& model() const { return model_; }

 private:
  FnnModel model_;
};

class FlmClassifier : public Classifier {
 public:
  explicit FlmClassifier(FlmModel model) : model_(std::move(model)) {}
  Prediction classify(const Dataset& ds) const override { return predict_flm(model_, ds); }
  std::uint64_t param_hash() const override {
    return hash_bytes(model_.theta.data(), sizeof(double) * model_.theta.size());
  }
  const FlmModel& model() const { return model_; }

 private:
  FlmModel model_;
};

double monitored_loss(const TrainResult& r) {
  if (!r.history.val_loss.empty() && !std::isnan(r.history.val_loss.back()))
    return r.history.val_loss.back();
  return r.history.train_loss.back();
}

TrainResult train_with_restarts(const Dataset& ds, NetworkConfig config, std::uint64_t seed,
                                int restarts) {
  TrainResult best;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(restarts, 1); ++r) {
    NetworkConfig attempt = config;
    attempt.seed = derive_seed(seed, 0xab5 + r);
    TrainResult result = train(ds, attempt);
    const double loss = monitored_loss(result);
    if (loss < best_loss) {
      best_loss = loss;
      best = std::move(result);
    }
  }
  return best;
}

}  // namespace

FnnSpec::FnnSpec(NetworkConfig config, std::string name, int restarts)
    : config_(std::move(config)), name_(std::move(name)), restarts_(restarts) {
  if (restarts_ < 1) throw std::invalid_argument("restarts must be >= 1");
}

std::unique_ptr<Classifier> FnnSpec::fit(const Dataset& train_ds, std::uint64_t seed) const {
  return std::make_unique<FnnClassifier>(
      train_with_restarts(train_ds, config_, seed, restarts_).model);
}

long FnnSpec::param_count(const Dataset& ds) const {
  int dim = ds.j();
  for (int m : config_.weight_basis_sizes) dim += m;
  long count = static_cast<long>(config_.neurons.front()) * (dim + 1);
  for (std::size_t u = 1; u < config_.neurons.size(); ++u)
    count += static_cast<long>(config_.neurons[u]) * (config_.neurons[u - 1] + 1);
  return count;
}

FlmSpec::FlmSpec(BasisKind kind, std::vector<int> basis_sizes, std::vector<double> lambdas,
                 std::string name)
    : kind_(kind),
      basis_sizes_(std::move(basis_sizes)),
      lambdas_(std::move(lambdas)),
      name_(std::move(name)) {
  if (lambdas_.empty()) throw std::invalid_argument("lambda grid is empty");
}

std::unique_ptr<Classifier> FlmSpec::fit(const Dataset& train_ds, std::uint64_t seed) const {
  if (static_cast<int>(basis_sizes_.size()) != train_ds.k())
    throw std::invalid_argument("one weight basis size per functional covariate required");
  std::vector<BasisSystem> bases;
  for (int k = 0; k < train_ds.k(); ++k) {
    const auto& db = train_ds.functional[k].basis;
    bases.push_back(BasisSystem::make(kind_, db.a(), db.b(), basis_sizes_[k]));
  }
  return std::make_unique<FlmClassifier>(fit_flm_tuned(train_ds, bases, lambdas_, seed));
}

long FlmSpec::param_count(const Dataset& ds) const {
  int dim = ds.j() + 1;
  for (int m : basis_sizes_) dim += m;
  return static_cast<long>(ds.n_classes) * dim;
}

std::vector<std::vector<int>> stratified_folds(const std::vector<int>& labels, int n_classes,
                                               int k, std::uint64_t seed) {
  const int n = static_cast<int>(labels.size());
  if (k < 2) throw std::invalid_argument("k must be at least 2");
  if (k > n) throw std::invalid_argument("more folds than observations");
  std::vector<std::vector<int>> by_class(n_classes);
  for (int i = 0; i < n; ++i) by_class.at(labels[i]).push_back(i);
  for (int c = 0; c < n_classes; ++c) {
    if (by_class[c].empty())
      throw std::invalid_argument("class " + std::to_string(c) + " has no observations");
    std::mt19937_64 rng(derive_seed(seed, 0xf01d + c));
    std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
  }
  // deal continuously across classes so fold sizes differ by at most one
  std::vector<std::vector<int>> folds(k);
  int f = 0;
  for (int c = 0; c < n_classes; ++c)
    for (int idx : by_class[c]) {
      folds[f].push_back(idx);
      f = (f + 1) % k;
    }
  for (const auto& fold : folds)
    if (fold.empty()) throw std::invalid_argument("a fold has no test observations");
  return folds;
}

CvResult kfold_cv(const Dataset& ds, int k, const ClassifierSpec& spec, std::uint64_t seed,
                  int threads) {
  ds.validate();
  if (ds.labels.empty()) throw std::invalid_argument("cross-validation requires labels");
  const auto folds = stratified_folds(ds.labels, ds.n_classes, k, seed);

  CvResult result;
  result.pooled = ConfusionMatrix(ds.n_classes);
  result.folds.assign(k, FoldResult{});

  parallel_for(k, threads, [&](int f) {
    std::vector<int> train_idx;
    train_idx.reserve(ds.n() - folds[f].size());
    for (int g = 0; g < k; ++g)
      if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
    std::sort(train_idx.begin(), train_idx.end());

    const Dataset train_ds = ds.subset(train_idx);
    const Dataset test_ds = ds.subset(folds[f]);
    const std::uint64_t model_seed = derive_seed(seed, 0xf17 + f);
    const auto model = spec.fit(train_ds, model_seed);
    const Prediction pred = model->classify(test_ds);

    FoldResult& fr = result.folds[f];
    fr.fold = f;
    fr.model_seed = model_seed;
    fr.test_indices = folds[f];
    fr.confusion = ConfusionMatrix::from_labels(test_ds.labels, pred.labels, ds.n_classes);
    fr.accuracy = 1.0 - mspe(test_ds.labels, pred.labels);
    fr.model_hash = model->param_hash();
  });

  for (const auto& fr : result.folds) result.pooled += fr.confusion;
  result.metrics = metrics_from_confusion(result.pooled);
  for (const auto& fr : result.folds) result.metrics.fold_accuracy.push_back(fr.accuracy);
  result.metrics.sd_accuracy = sample_sd(result.metrics.fold_accuracy);
  return result;
}

GridSearchResult grid_search(const Dataset& ds,
                             const std::vector<std::shared_ptr<ClassifierSpec>>& grid,
                             const GridSearchOptions& options, std::uint64_t seed) {
  if (grid.empty()) throw std::invalid_argument("empty configuration grid");
  GridSearchResult result;
  result.leaderboard.assign(grid.size(), GridCell{});

  // a fixed holdout split, shared by every cell, when requested
  std::vector<int> holdout_train, holdout_test;
  if (options.holdout) {
    std::vector<int> perm(ds.n());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(derive_seed(seed, 0x42a));
    std::shuffle(perm.begin(), perm.end(), rng);
    const int n_test = std::max(1, static_cast<int>(ds.n() * options.holdout_fraction));
    if (n_test >= ds.n()) throw std::invalid_argument("holdout fraction leaves no training data");
    holdout_test.assign(perm.begin(), perm.begin() + n_test);
    holdout_train.assign(perm.begin() + n_test, perm.end());
  }

  parallel_for(static_cast<int>(grid.size()), options.threads, [&](int i) {
    GridCell& cell = result.leaderboard[i];
    cell.index = i;
    cell.name = grid[i]->name();
    try {
      cell.param_count = grid[i]->param_count(ds);
      if (options.holdout) {
        const Dataset train_ds = ds.subset(holdout_train);
        const Dataset test_ds = ds.subset(holdout_test);
        const auto model = grid[i]->fit(train_ds, derive_seed(seed, 0x9a1d));
        const Prediction pred = model->classify(test_ds);
        cell.cv_accuracy = 1.0 - mspe(test_ds.labels, pred.labels);
        cell.sd_accuracy = std::numeric_limits<double>::quiet_NaN();
      } else {
        const CvResult cv = kfold_cv(ds, options.k, *grid[i], seed, 1);
        cell.cv_accuracy = cv.metrics.accuracy;
        cell.sd_accuracy = cv.metrics.sd_accuracy;
      }
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.error = e.what();
      cell.cv_accuracy = std::numeric_limits<double>::quiet_NaN();
    }
  });

  std::stable_sort(result.leaderboard.begin(), result.leaderboard.end(),
                   [](const GridCell& a, const GridCell& b) {
                     if (a.failed != b.failed) return !a.failed;
                     if (a.failed) return a.index < b.index;
                     if (a.cv_accuracy != b.cv_accuracy) return a.cv_accuracy > b.cv_accuracy;
                     if (a.param_count != b.param_count) return a.param_count < b.param_count;
                     return a.index < b.index;
                   });
  if (!result.leaderboard.empty() && !result.leaderboard.front().failed)
    result.best_index = result.leaderboard.front().index;
  return result;
}

namespace {

Simulated slice_sim(const Simulated& sim, int start, int count) {
  Simulated out;
  out.grid = sim.grid;
  out.raw = sim.raw.middleRows(start, count);
  out.labels.assign(sim.labels.begin() + start, sim.labels.begin() + start + count);
  return out;
}

}  // namespace

ReplicateResult replicate_harness(int scenario, int n_replicates,
                                  const std::vector<SimModelSpec>& specs, std::uint64_t seed,
                                  const SimOptions& opts, int threads) {
  if (n_replicates < 1) throw std::invalid_argument("need at least one replicate");
  if (specs.empty()) throw std::invalid_argument("no models to evaluate");

  ReplicateResult result;
  for (const auto& s : specs) result.model_names.push_back(s.name);
  result.errors.setConstant(n_replicates, static_cast<int>(specs.size()),
                            std::numeric_limits<double>::quiet_NaN());
  std::vector<std::pair<int, std::string>> failures(n_replicates, {-1, ""});

  parallel_for(n_replicates, threads, [&](int r) {
    try {
      const Simulated sim = simulate_scenario(scenario, 300, derive_seed(seed, 0x5e9 + r), opts);
      const Simulated train_half = slice_sim(sim, 0, 150);
      const Simulated test_half = slice_sim(sim, 150, 150);
      for (std::size_t m = 0; m < specs.size(); ++m) {
        const auto pred = specs[m].run(train_half, test_half,
                                       derive_seed(seed, 0x10000 + r * 64 + static_cast<int>(m)));
        result.errors(r, static_cast<int>(m)) = mspe(test_half.labels, pred);
      }
    } catch (const std::exception& e) {
      failures[r] = {r, e.what()};
    }
  });

  for (const auto& f : failures)
    if (f.first >= 0) result.failures.push_back(f);
  return result;
}

SimModelSpec sim_fnn_spec(std::string name, NetworkConfig config, int smooth_basis,
                          int restarts) {
  return {std::move(name),
          [config, smooth_basis, restarts](const Simulated& train_half,
                                           const Simulated& test_half, std::uint64_t seed) {
            const Dataset train_ds = to_functional_dataset(train_half, smooth_basis);
            const Dataset test_ds = to_functional_dataset(test_half, smooth_basis);
            const TrainResult r = train_with_restarts(train_ds, config, seed, restarts);
            return predict(r.model, test_ds).labels;
          }};
}

SimModelSpec sim_nn_spec(std::string name, NetworkConfig config, int restarts) {
  return {std::move(name),
          [config, restarts](const Simulated& train_half, const Simulated& test_half,
                             std::uint64_t seed) {
            const Dataset train_ds = to_conventional_dataset(train_half);
            const Dataset test_ds = to_conventional_dataset(test_half);
            const TrainResult r = train_with_restarts(train_ds, config, seed, restarts);
            return predict(r.model, test_ds).labels;
          }};
}

SimModelSpec sim_flm_spec(std::string name, BasisKind kind, int weight_basis,
                          std::vector<double> lambdas, int smooth_basis) {
  return {std::move(name),
          [kind, weight_basis, lambdas, smooth_basis](const Simulated& train_half,
                                                      const Simulated& test_half,
                                                      std::uint64_t seed) {
            const Dataset train_ds = to_functional_dataset(train_half, smooth_basis);
            const Dataset test_ds = to_functional_dataset(test_half, smooth_basis);
            const auto& db = train_ds.functional[0].basis;
            const std::vector<BasisSystem> bases = {
                BasisSystem::make(kind, db.a(), db.b(), weight_basis)};
            const FlmModel model = fit_flm_tuned(train_ds, bases, lambdas, seed);
            return predict_flm(model, test_ds).labels;
          }};
}

}  // namespace funcnet
