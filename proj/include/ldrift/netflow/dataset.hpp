#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ldrift/numkit/tensor.hpp"

namespace ldrift::netflow {

inline constexpr int kNormal = 0;
inline constexpr int kAttack = 1;

// Parsed CSV content. Every row has exactly column_names.size() cells.
struct RawTable {
  std::vector<std::string> column_names;
  std::vector<std::vector<std::string>> rows;
  std::string source_path;
  std::size_t label_column = 0;

  std::size_t column_index(const std::string& name) const;  // npos when absent
};

// Numeric features with a parallel binary label vector (0 = Normal, 1 = Attack).
struct FeatureMatrix {
  numkit::Tensor features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;

  std::size_t rows() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
  FeatureMatrix select(const std::vector<std::size_t>& rows) const;
  std::size_t count(int label) const;
};

struct LabelSpec {
  std::string column = "Label";
  // Matched case-insensitively after trimming; everything else is an attack.
  std::vector<std::string> benign_values = {"Benign", "Normal", "BENIGN", "0"};
};

struct CleanOptions {
  std::vector<std::string> drop_columns = {"Flow ID", "Src IP", "Dst IP", "Timestamp"};
  // When non-empty only these feature columns are retained (label is implicit).
  std::vector<std::string> keep_columns;
};

// Lowercase and strip spaces/underscores, so "Flow_ID" and "flow id" match.
std::string normalize_column_name(const std::string& name);

// RFC-4180 parsing of one record; exposed for tests.
std::vector<std::string> parse_csv_record(const std::string& line);

RawTable parse_csv(std::istream& in, const std::string& label_column,
                   const std::string& source_name = "<stream>");
RawTable load_csv(const std::filesystem::path& path, const std::string& label_column);

// Drops listed columns, rows with empty/unparseable/non-finite cells, and exact
// duplicate rows (first occurrence kept). Columns with no numeric cell at all are
// treated as text metadata and dropped. Throws DataError if nothing survives.
FeatureMatrix clean(const RawTable& table, const LabelSpec& labels, const CleanOptions& options = {});

int binarize_label(const std::string& value, const LabelSpec& spec);

// Re-export for inspection; the label goes in a trailing "Label" column as 0/1.
RawTable to_table(const FeatureMatrix& m, const std::string& label_column = "Label");
void write_csv(const FeatureMatrix& m, const std::filesystem::path& path,
               const std::string& label_column = "Label");

}  // namespace ldrift::netflow
