#include "ldrift/netflow/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "ldrift/errors.hpp"

namespace ldrift::netflow {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::optional<double> parse_number(const std::string& cell) {
  const std::string t = trim(cell);
  if (t.empty()) return std::nullopt;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (*begin == '+') ++begin;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

// Reads one logical record; quoted fields may span lines.
bool read_record(std::istream& in, std::string& record) {
  record.clear();
  std::string line;
  bool in_quotes = false;
  bool any = false;
  while (std::getline(in, line)) {
    any = true;
    if (!record.empty() || in_quotes) record += '\n';
    record += line;
    for (char c : line) {
      if (c == '"') in_quotes = !in_quotes;
    }
    if (!in_quotes) break;
  }
  if (!record.empty() && record.back() == '\r') record.pop_back();
  return any;
}

}  // namespace

std::size_t RawTable::column_index(const std::string& name) const {
  const std::string key = normalize_column_name(name);
  for (std::size_t i = 0; i < column_names.size(); ++i) {
    if (normalize_column_name(column_names[i]) == key) return i;
  }
  return std::string::npos;
}

FeatureMatrix FeatureMatrix::select(const std::vector<std::size_t>& rows) const {
  FeatureMatrix out;
  out.features = features.select_rows(rows);
  out.feature_names = feature_names;
  out.labels.reserve(rows.size());
  for (auto r : rows) out.labels.push_back(labels.at(r));
  return out;
}

std::size_t FeatureMatrix::count(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

std::string normalize_column_name(const std::string& name) {
  std::string out;
  for (unsigned char c : name) {
    if (c == ' ' || c == '_' || c == '\t' || c == '\r' || c == '\n') continue;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::vector<std::string> parse_csv_record(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

RawTable parse_csv(std::istream& in, const std::string& label_column,
                   const std::string& source_name) {
  RawTable table;
  table.source_path = source_name;
  std::string record;
  if (!read_record(in, record) || trim(record).empty()) {
    throw DataError(source_name + ": missing header row");
  }
  // Strip a UTF-8 byte order mark.
  if (record.rfind("\xEF\xBB\xBF", 0) == 0) record.erase(0, 3);
  for (auto& name : parse_csv_record(record)) table.column_names.push_back(trim(name));

  table.label_column = table.column_index(label_column);
  if (table.label_column == std::string::npos) {
    throw DataError(source_name + ": label column '" + label_column + "' not found");
  }

  std::size_t row_index = 0;
  while (read_record(in, record)) {
    ++row_index;
    if (trim(record).empty()) continue;
    auto cells = parse_csv_record(record);
    if (cells.size() != table.column_names.size()) {
      throw DataError(source_name + ": row " + std::to_string(row_index) + " has " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(table.column_names.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

RawTable load_csv(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_csv(in, label_column, path.string());
}

int binarize_label(const std::string& value, const LabelSpec& spec) {
  const std::string v = lower(trim(value));
  for (const auto& b : spec.benign_values) {
    if (lower(trim(b)) == v) return kNormal;
  }
  return kAttack;
}

FeatureMatrix clean(const RawTable& table, const LabelSpec& labels, const CleanOptions& options) {
  const std::size_t ncols = table.column_names.size();
  const std::size_t label_col = table.column_index(labels.column);
  if (label_col == std::string::npos) {
    throw DataError(table.source_path + ": label column '" + labels.column + "' not found");
  }

  std::set<std::string> dropped;
  for (const auto& d : options.drop_columns) dropped.insert(normalize_column_name(d));
  std::set<std::string> kept;
  for (const auto& k : options.keep_columns) kept.insert(normalize_column_name(k));

  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < ncols; ++c) {
    if (c == label_col) continue;
    const std::string key = normalize_column_name(table.column_names[c]);
    if (dropped.count(key)) continue;
    if (!kept.empty() && !kept.count(key)) continue;
    // Pure text columns carry no numeric signal.
    const bool any_numeric = std::any_of(table.rows.begin(), table.rows.end(), [&](const auto& row) {
      return parse_number(row[c]).has_value();
    });
    if (!any_numeric && !table.rows.empty()) continue;
    feature_cols.push_back(c);
  }

  if (feature_cols.empty()) throw DataError(table.source_path + ": no numeric feature columns survived cleaning");

  FeatureMatrix out;
  for (auto c : feature_cols) out.feature_names.push_back(table.column_names[c]);

  std::vector<double> data;
  std::set<std::vector<double>> seen;
  std::vector<double> values(feature_cols.size() + 1);
  for (const auto& row : table.rows) {
    if (trim(row[label_col]).empty()) continue;
    bool ok = true;
    for (std::size_t j = 0; j < feature_cols.size() && ok; ++j) {
      const auto v = parse_number(row[feature_cols[j]]);
      ok = v.has_value() && std::isfinite(*v);
      if (ok) values[j] = *v;
    }
    if (!ok) continue;
    const int label = binarize_label(row[label_col], labels);
    values.back() = label;
    if (!seen.insert(values).second) continue;
    data.insert(data.end(), values.begin(), values.end() - 1);
    out.labels.push_back(label);
  }
  if (out.labels.empty()) {
    throw DataError(table.source_path + ": no rows survived cleaning");
  }
  out.features = numkit::Tensor(out.labels.size(), feature_cols.size(), std::move(data));
  return out;
}

RawTable to_table(const FeatureMatrix& m, const std::string& label_column) {
  RawTable t;
  t.column_names = m.feature_names;
  t.column_names.push_back(label_column);
  t.label_column = t.column_names.size() - 1;
  t.rows.reserve(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::vector<std::string> cells;
    for (double v : m.features.row(r)) {
      std::ostringstream os;
      os.precision(17);
      os << v;
      cells.push_back(os.str());
    }
    cells.push_back(std::to_string(m.labels[r]));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

void write_csv(const FeatureMatrix& m, const std::filesystem::path& path,
               const std::string& label_column) {
  const RawTable t = to_table(m, label_column);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  auto write_row = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
      if (!quote) {
        out << cells[i];
        continue;
      }
      out << '"';
      for (char c : cells[i]) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    }
    out << '\n';
  };
  write_row(t.column_names);
  for (const auto& r : t.rows) write_row(r);
}

}  // namespace ldrift::netflow
