#pragma once

#include <optional>
#include <string>
#include <vector>

#include "funcnet/dataset.hpp"

namespace funcnet {

/// RFC-4180 CSV with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int n_cols() const { return static_cast<int>(header.size()); }
  int n_rows() const { return static_cast<int>(rows.size()); }
  std::optional<int> column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

/// Inclusive column range named by its first and last header.
struct ColumnRange {
  std::string first, last;
};

struct CovariateSchema {
  ColumnRange range;
  BasisKind basis_kind = BasisKind::Fourier;
  int n_basis = 35;
  int order = 4;
  std::string grid_file;  // sidecar with one continuum value per line;
                          // numeric column headers are used when empty
};

struct DatasetSchema {
  std::string label_column;  // empty loads unlabeled data
  std::vector<CovariateSchema> functional;
  std::vector<std::string> scalar_columns;  // names or first:last ranges
  // with no functional and no scalar spec, every non-label column joins one
  // functional covariate using the defaults above
  CovariateSchema default_covariate;
};

struct LoadedDataset {
  Dataset dataset;
  std::vector<std::string> label_names;  // class id -> original label text
};

/// Parse, validate and smooth a CSV into a Dataset. Rejects missing values,
/// non-numeric cells, ragged rows, an absent label column and single-row
/// files, naming the offending row/column.
LoadedDataset load_dataset(const std::string& path, const DatasetSchema& schema);

}  // namespace funcnet
