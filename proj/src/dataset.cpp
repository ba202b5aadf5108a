#include "funcnet/dataset.hpp"

#include <stdexcept>

namespace funcnet {

int Dataset::n() const {
  if (!functional.empty()) return static_cast<int>(functional.front().coefs.rows());
  if (scalars.cols() > 0) return static_cast<int>(scalars.rows());
  return static_cast<int>(labels.size());
}

void Dataset::validate() const {
  const int count = n();
  if (count == 0) throw std::invalid_argument("dataset is empty");
  for (const auto& fc : functional) {
    if (fc.coefs.rows() != count)
      throw std::invalid_argument("functional covariates disagree on observation count");
    if (fc.coefs.cols() != fc.basis.n_basis())
      throw std::invalid_argument("coefficient width does not match basis size");
    if (!fc.coefs.allFinite())
      throw std::invalid_argument("functional coefficients must be finite");
  }
  if (scalars.cols() > 0 && scalars.rows() != count)
    throw std::invalid_argument("scalar covariates disagree on observation count");
  if (scalars.size() > 0 && !scalars.allFinite())
    throw std::invalid_argument("scalar covariates must be finite");
  if (!labels.empty()) {
    if (static_cast<int>(labels.size()) != count)
      throw std::invalid_argument("label count does not match observation count");
    if (n_classes < 1) throw std::invalid_argument("n_classes must be positive");
    for (int y : labels)
      if (y < 0 || y >= n_classes) throw std::invalid_argument("label out of range");
  }
}

Dataset Dataset::subset(const std::vector<int>& idx) const {
  const int count = n();
  for (int i : idx)
    if (i < 0 || i >= count) throw std::out_of_range("subset index out of range");
  Dataset out;
  out.n_classes = n_classes;
  out.label_names = label_names;
  const int m = static_cast<int>(idx.size());
  for (const auto& fc : functional) {
    Eigen::MatrixXd coefs(m, fc.coefs.cols());
    for (int r = 0; r < m; ++r) coefs.row(r) = fc.coefs.row(idx[r]);
    out.functional.emplace_back(fc.basis, fc.grid, std::move(coefs));
  }
  if (scalars.cols() > 0) {
    out.scalars.resize(m, scalars.cols());
    for (int r = 0; r < m; ++r) out.scalars.row(r) = scalars.row(idx[r]);
  }
  if (!labels.empty()) {
    out.labels.reserve(m);
    for (int r = 0; r < m; ++r) out.labels.push_back(labels[idx[r]]);
  }
  return out;
}

Dataset make_functional_dataset(const Eigen::MatrixXd& raw, const Grid& grid,
                                const BasisSystem& basis, std::vector<int> labels,
                                int n_classes) {
  Dataset ds;
  ds.functional.emplace_back(basis, grid, smooth_rows(raw, grid, basis));
  ds.labels = std::move(labels);
  ds.n_classes = n_classes;
  ds.validate();
  return ds;
}

Dataset make_conventional_nn_dataset(const Eigen::MatrixXd& raw, std::vector<int> labels,
                                     int n_classes) {
  Dataset ds;
  ds.scalars = raw;
  ds.labels = std::move(labels);
  ds.n_classes = n_classes;
  ds.validate();
  return ds;
}

}  // namespace funcnet
