#include "funcnet/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace funcnet {

ConfusionMatrix::ConfusionMatrix(int h) {
  if (h < 1) throw std::invalid_argument("confusion matrix needs at least one class");
  counts_.setZero(h, h);
}

ConfusionMatrix ConfusionMatrix::from_labels(const std::vector<int>& y_true,
                                             const std::vector<int>& y_pred, int h) {
  if (y_true.size() != y_pred.size())
    throw std::invalid_argument("label vectors differ in length");
  ConfusionMatrix cm(h);
  for (std::size_t i = 0; i < y_true.size(); ++i) cm.add(y_true[i], y_pred[i]);
  return cm;
}

void ConfusionMatrix::add(int truth, int predicted, long count) {
  if (truth < 0 || truth >= n_classes() || predicted < 0 || predicted >= n_classes())
    throw std::out_of_range("class index out of range");
  if (count < 0) throw std::invalid_argument("counts must be nonnegative");
  counts_(truth, predicted) += count;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.n_classes() != n_classes())
    throw std::invalid_argument("confusion matrices differ in class count");
  counts_ += other.counts_;
  return *this;
}

double mspe(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size())
    throw std::invalid_argument("label vectors differ in length");
  if (y_true.empty()) throw std::invalid_argument("empty label vectors");
  long wrong = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) wrong += y_true[i] != y_pred[i];
  return static_cast<double>(wrong) / static_cast<double>(y_true.size());
}

Metrics metrics_from_confusion(const ConfusionMatrix& cm) {
  const long n = cm.total();
  if (n == 0) throw std::invalid_argument("empty confusion matrix");
  const int h = cm.n_classes();

  Metrics m;
  m.mspe = static_cast<double>(n - cm.correct()) / static_cast<double>(n);
  m.accuracy = 1.0 - m.mspe;

  // per-class one-vs-rest counts
  auto rate_mean = [&](auto numer, auto denom) {
    if (h == 2) {  // binary: report the class-1 (positive) rates directly
      const long num = numer(1), den = denom(1);
      if (den == 0) return std::numeric_limits<double>::quiet_NaN();
      return static_cast<double>(num) / static_cast<double>(den);
    }
    double sum = 0.0;
    int defined = 0;
    for (int c = 0; c < h; ++c) {
      const long den = denom(c);
      if (den == 0) continue;  // 0/0 classes are excluded from the mean
      sum += static_cast<double>(numer(c)) / static_cast<double>(den);
      ++defined;
    }
    if (defined == 0) return std::numeric_limits<double>::quiet_NaN();
    return sum / defined;
  };

  auto tp = [&](int c) { return cm.at(c, c); };
  auto fn = [&](int c) {
    long s = 0;
    for (int p = 0; p < h; ++p)
      if (p != c) s += cm.at(c, p);
    return s;
  };
  auto fp = [&](int c) {
    long s = 0;
    for (int t = 0; t < h; ++t)
      if (t != c) s += cm.at(t, c);
    return s;
  };
  auto tn = [&](int c) { return n - tp(c) - fn(c) - fp(c); };

  m.sensitivity = rate_mean(tp, [&](int c) { return tp(c) + fn(c); });
  m.specificity = rate_mean(tn, [&](int c) { return tn(c) + fp(c); });
  m.ppv = rate_mean(tp, [&](int c) { return tp(c) + fp(c); });
  m.npv = rate_mean(tn, [&](int c) { return tn(c) + fn(c); });
  m.rates_defined = !std::isnan(m.sensitivity) && !std::isnan(m.specificity) &&
                    !std::isnan(m.ppv) && !std::isnan(m.npv);
  return m;
}

double sample_sd(const std::vector<double>& values) {
  if (values.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace funcnet
