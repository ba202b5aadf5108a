#include "funcnet/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace funcnet {

namespace {

std::vector<std::string> parse_csv_record(const std::string& line, const std::string& path,
                                          int line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r' && i + 1 == line.size()) {
      // tolerate CRLF line endings
    } else {
      field += c;
    }
  }
  if (quoted)
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(field));
  return fields;
}

bool parse_number(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
  if (begin == end) return false;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

std::optional<int> CsvTable::column(const std::string& name) const {
  for (int i = 0; i < n_cols(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.peek() == EOF) break;
    auto fields = parse_csv_record(line, path, line_no);
    if (line_no == 1) {
      table.header = std::move(fields);
    } else {
      if (fields.size() != table.header.size())
        throw std::runtime_error(path + ": ragged row at line " + std::to_string(line_no) +
                                 " (" + std::to_string(fields.size()) + " fields, expected " +
                                 std::to_string(table.header.size()) + ")");
      table.rows.push_back(std::move(fields));
    }
  }
  if (table.header.empty()) throw std::runtime_error(path + ": missing header row");
  return table;
}

namespace {
std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}
}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << csv_escape(header[i]);
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::runtime_error(path + ": row width does not match header");
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << csv_escape(row[i]);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

namespace {

std::pair<int, int> resolve_range(const CsvTable& table, const ColumnRange& range,
                                  const std::string& path) {
  const auto first = table.column(range.first);
  const auto last = table.column(range.last);
  if (!first) throw std::runtime_error(path + ": no column named '" + range.first + "'");
  if (!last) throw std::runtime_error(path + ": no column named '" + range.last + "'");
  if (*first > *last)
    throw std::runtime_error(path + ": column range " + range.first + ":" + range.last +
                             " is reversed");
  return {*first, *last};
}

double cell_number(const CsvTable& table, int row, int col, const std::string& path) {
  const std::string& cell = table.rows[row][col];
  if (cell.empty())
    throw std::runtime_error(path + ": missing value at row " + std::to_string(row + 2) +
                             ", column '" + table.header[col] + "'");
  double v;
  if (!parse_number(cell, v))
    throw std::runtime_error(path + ": non-numeric value '" + cell + "' at row " +
                             std::to_string(row + 2) + ", column '" + table.header[col] + "'");
  return v;
}

Grid load_grid_sidecar(const std::string& path, int expected) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grid file " + path);
  std::vector<double> pts;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double v;
    if (!parse_number(line, v)) {
      if (pts.empty()) continue;  // tolerate a single header line
      throw std::runtime_error(path + ": non-numeric grid value '" + line + "'");
    }
    pts.push_back(v);
  }
  if (static_cast<int>(pts.size()) != expected)
    throw std::runtime_error(path + ": grid has " + std::to_string(pts.size()) +
                             " values, expected " + std::to_string(expected));
  Grid g(std::move(pts));
  g.validate();
  return g;
}

Grid grid_from_headers(const CsvTable& table, int first, int last, const std::string& path) {
  std::vector<double> pts;
  for (int c = first; c <= last; ++c) {
    double v;
    if (!parse_number(table.header[c], v))
      throw std::runtime_error(path + ": header '" + table.header[c] +
                               "' is not a continuum value; pass a grid sidecar file");
    pts.push_back(v);
  }
  Grid g(std::move(pts));
  g.validate();
  return g;
}

}  // namespace

LoadedDataset load_dataset(const std::string& path, const DatasetSchema& schema) {
  const CsvTable table = read_csv(path);
  if (table.n_rows() < 2)
    throw std::runtime_error(path + ": needs at least two data rows; got " +
                             std::to_string(table.n_rows()));
  const int n = table.n_rows();

  int label_col = -1;
  if (!schema.label_column.empty()) {
    const auto idx = table.column(schema.label_column);
    if (!idx) throw std::runtime_error(path + ": label column '" + schema.label_column +
                                       "' not found");
    label_col = *idx;
  }

  // expand scalar names, honoring first:last ranges
  std::vector<int> scalar_cols;
  for (const std::string& name : schema.scalar_columns) {
    const auto sep = name.find(':');
    if (sep != std::string::npos) {
      const auto [first, last] =
          resolve_range(table, {name.substr(0, sep), name.substr(sep + 1)}, path);
      for (int c = first; c <= last; ++c) scalar_cols.push_back(c);
    } else {
      const auto idx = table.column(name);
      if (!idx) throw std::runtime_error(path + ": scalar column '" + name + "' not found");
      scalar_cols.push_back(*idx);
    }
  }

  std::vector<CovariateSchema> functional = schema.functional;
  if (functional.empty() && scalar_cols.empty()) {
    // default: every non-label column is one functional covariate
    CovariateSchema cov = schema.default_covariate;
    int first = -1, last = -1;
    for (int c = 0; c < table.n_cols(); ++c) {
      if (c == label_col) continue;
      if (first < 0) first = c;
      last = c;
    }
    if (first < 0) throw std::runtime_error(path + ": no covariate columns");
    cov.range = {table.header[first], table.header[last]};
    functional.push_back(cov);
  }

  LoadedDataset out;
  Dataset& ds = out.dataset;

  for (const auto& cov : functional) {
    const auto [first, last] = resolve_range(table, cov.range, path);
    const int p = last - first + 1;
    Grid grid = cov.grid_file.empty() ? grid_from_headers(table, first, last, path)
                                      : load_grid_sidecar(cov.grid_file, p);
    Eigen::MatrixXd raw(n, p);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < p; ++c) raw(r, c) = cell_number(table, r, first + c, path);
    const auto basis =
        BasisSystem::make(cov.basis_kind, grid.front(), grid.back(), cov.n_basis, cov.order);
    ds.functional.emplace_back(basis, grid, smooth_rows(raw, grid, basis));
  }

  if (!scalar_cols.empty()) {
    ds.scalars.resize(n, static_cast<int>(scalar_cols.size()));
    for (int r = 0; r < n; ++r)
      for (std::size_t c = 0; c < scalar_cols.size(); ++c)
        ds.scalars(r, c) = cell_number(table, r, scalar_cols[c], path);
  }

  if (label_col >= 0) {
    std::vector<std::string> raw_labels(n);
    for (int r = 0; r < n; ++r) {
      raw_labels[r] = table.rows[r][label_col];
      if (raw_labels[r].empty())
        throw std::runtime_error(path + ": missing label at row " + std::to_string(r + 2));
    }
    // contiguous ids; numeric label sets sort numerically, others by text
    std::vector<std::string> distinct = raw_labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    bool all_numeric = true;
    for (const auto& s : distinct) {
      double v;
      if (!parse_number(s, v)) {
        all_numeric = false;
        break;
      }
    }
    if (all_numeric) {
      std::sort(distinct.begin(), distinct.end(), [](const auto& a, const auto& b) {
        double va, vb;
        parse_number(a, va);
        parse_number(b, vb);
        return va < vb;
      });
    }
    std::map<std::string, int> id;
    for (std::size_t i = 0; i < distinct.size(); ++i) id[distinct[i]] = static_cast<int>(i);
    ds.labels.resize(n);
    for (int r = 0; r < n; ++r) ds.labels[r] = id[raw_labels[r]];
    ds.n_classes = static_cast<int>(distinct.size());
    ds.label_names = distinct;
    out.label_names = distinct;
    if (ds.n_classes < 2)
      throw std::runtime_error(path + ": need at least two distinct labels");
  }

  ds.validate();
  return out;
}

}  // namespace funcnet
