#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "funcnet/dataset.hpp"
#include "funcnet/flm.hpp"
#include "funcnet/fnn.hpp"
#include "funcnet/metrics.hpp"
#include "funcnet/simgen.hpp"

namespace funcnet {

std::uint64_t hash_bytes(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t hash_vector(const Eigen::VectorXd& v);

/// A fitted model that can label new observations.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual Prediction classify(const Dataset& ds) const = 0;
  virtual std::uint64_t param_hash() const = 0;
};

/// A recipe that turns a training set into a Classifier. Implementations must
/// be deterministic given (train, seed).
class ClassifierSpec {
 public:
  virtual ~ClassifierSpec() = default;
  virtual std::unique_ptr<Classifier> fit(const Dataset& train, std::uint64_t seed) const = 0;
  virtual std::string name() const = 0;
  virtual long param_count(const Dataset& ds) const = 0;
};

/// Functional (or conventional, with K = 0) network spec. The seed passed to
/// fit overrides the config seed.
class FnnSpec : public ClassifierSpec {
 public:
  FnnSpec(NetworkConfig config, std::string name = "fnn", int restarts = 1);
  std::unique_ptr<Classifier> fit(const Dataset& train, std::uint64_t seed) const override;
  std::string name() const override { return name_; }
  long param_count(const Dataset& ds) const override;
  const NetworkConfig& config() const { return config_; }

 private:
  NetworkConfig config_;
  std::string name_;
  int restarts_;  // > 1 keeps the restart with the best monitored loss
};

/// Penalized functional linear model spec with a lambda candidate grid.
class FlmSpec : public ClassifierSpec {
 public:
  FlmSpec(BasisKind kind, std::vector<int> basis_sizes, std::vector<double> lambdas,
          std::string name = "flm");
  std::unique_ptr<Classifier> fit(const Dataset& train, std::uint64_t seed) const override;
  std::string name() const override { return name_; }
  long param_count(const Dataset& ds) const override;

 private:
  BasisKind kind_;
  std::vector<int> basis_sizes_;
  std::vector<double> lambdas_;
  std::string name_;
};

struct FoldResult {
  int fold = 0;
  std::uint64_t model_seed = 0;
  std::vector<int> test_indices;
  ConfusionMatrix confusion{1};
  double accuracy = 0.0;
  std::uint64_t model_hash = 0;
};

struct CvResult {
  Metrics metrics;
  ConfusionMatrix pooled{1};
  std::vector<FoldResult> folds;
};

/// Stratified fold assignment: per-class seeded shuffle, then indices dealt
/// round-robin across folds so fold sizes are as equal as possible.
std::vector<std::vector<int>> stratified_folds(const std::vector<int>& labels, int n_classes,
                                               int k, std::uint64_t seed);

/// Train on k-1 folds, evaluate on the held-out fold, pool the confusion
/// matrices and report the per-fold accuracy spread.
CvResult kfold_cv(const Dataset& ds, int k, const ClassifierSpec& spec, std::uint64_t seed,
                  int threads = 1);

struct GridCell {
  int index = 0;
  std::string name;
  bool failed = false;
  std::string error;
  double cv_accuracy = 0.0;
  double sd_accuracy = 0.0;
  long param_count = 0;
};

struct GridSearchResult {
  int best_index = -1;  // index into the original grid
  std::vector<GridCell> leaderboard;  // ranked best first, failures last
};

struct GridSearchOptions {
  int k = 5;
  bool holdout = false;           // score on one fixed split instead of CV
  double holdout_fraction = 0.25;
  int threads = 1;
};

/// Exhaustive evaluation of the candidate specs; ranking by CV accuracy with
/// ties broken by fewer parameters, then lower grid index. Cells that throw
/// are recorded as failed rather than dropped.
GridSearchResult grid_search(const Dataset& ds,
                             const std::vector<std::shared_ptr<ClassifierSpec>>& grid,
                             const GridSearchOptions& options, std::uint64_t seed);

/// One model entry in the simulation harness: fit on the training half and
/// return predicted labels for the test half.
struct SimModelSpec {
  std::string name;
  std::function<std::vector<int>(const Simulated& train, const Simulated& test,
                                 std::uint64_t seed)>
      run;
};

struct ReplicateResult {
  std::vector<std::string> model_names;
  Eigen::MatrixXd errors;  // n_replicates x n_models test MSPE
  std::vector<std::pair<int, std::string>> failures;  // replicate index, message

  Eigen::VectorXd mean_errors() const { return errors.colwise().mean().transpose(); }
};

/// Generate -> split 150/150 -> fit -> test error, repeated per replicate
/// with derived seeds. Replicates run independently, so threading never
/// changes the result.
ReplicateResult replicate_harness(int scenario, int n_replicates,
                                  const std::vector<SimModelSpec>& specs, std::uint64_t seed,
                                  const SimOptions& opts = {}, int threads = 1);

/// Standard simulation-model wrappers.
SimModelSpec sim_fnn_spec(std::string name, NetworkConfig config, int smooth_basis = 35,
                          int restarts = 1);
SimModelSpec sim_nn_spec(std::string name, NetworkConfig config, int restarts = 1);
SimModelSpec sim_flm_spec(std::string name, BasisKind kind, int weight_basis,
                          std::vector<double> lambdas, int smooth_basis = 35);

}  // namespace funcnet
