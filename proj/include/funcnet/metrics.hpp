#pragma once

#include <Eigen/Dense>
#include <vector>

namespace funcnet {

/// H x H counts, entry (true class, predicted class).
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int h);
  static ConfusionMatrix from_labels(const std::vector<int>& y_true,
                                     const std::vector<int>& y_pred, int h);

  void add(int truth, int predicted, long count = 1);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  long at(int truth, int predicted) const { return counts_(truth, predicted); }
  long total() const { return counts_.sum(); }
  long correct() const { return counts_.diagonal().sum(); }
  int n_classes() const { return static_cast<int>(counts_.rows()); }

 private:
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts_;
};

/// Pooled classification rates. accuracy is defined as 1 - mspe, so the two
/// always sum to one exactly.
struct Metrics {
  double accuracy = 0.0;
  double mspe = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double ppv = 0.0;
  double npv = 0.0;
  bool rates_defined = true;  // false when every one-vs-rest ratio was 0/0
  std::vector<double> fold_accuracy;
  double sd_accuracy = 0.0;  // sample SD over fold accuracies
};

/// Misclassification rate; coincides with mean((y_hat - y)^2) for 0/1 labels.
double mspe(const std::vector<int>& y_true, const std::vector<int>& y_pred);

/// One-vs-rest sensitivity/specificity/PPV/NPV. Binary problems report the
/// class-1 rates directly; multiclass problems report unweighted means over
/// classes, skipping ratios that are 0/0.
Metrics metrics_from_confusion(const ConfusionMatrix& cm);

double sample_sd(const std::vector<double>& values);

}  // namespace funcnet
