#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fact/errors.hpp"

namespace fact {

/// Per-sentence predictions from named sources (model x head x LEX/UNK).
/// Dense: every cell present, column names unique.
struct PredictionMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> column_names;
  std::vector<std::vector<double>> values;  // [row][col]

  std::size_t rows() const { return row_ids.size(); }
  std::size_t cols() const { return column_names.size(); }

  std::size_t column_index(const std::string& name) const {
    for (std::size_t j = 0; j < column_names.size(); ++j)
      if (column_names[j] == name) return j;
    throw validation_error("no prediction column named " + name);
  }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> out(rows());
    for (std::size_t i = 0; i < rows(); ++i) out[i] = values[i][j];
    return out;
  }

  void add_column(const std::string& name, const std::vector<double>& v) {
    if (!column_names.empty() && v.size() != rows())
      throw validation_error("add_column: length mismatch");
    for (const auto& existing : column_names)
      if (existing == name)
        throw validation_error("duplicate prediction column: " + name);
    if (column_names.empty() && values.empty())
      values.resize(v.size());
    column_names.push_back(name);
    for (std::size_t i = 0; i < v.size(); ++i) values[i].push_back(v[i]);
  }

  /// Columns of `other` appended under a name prefix; row ids must agree.
  void merge(const PredictionMatrix& other, const std::string& prefix) {
    if (row_ids.empty()) row_ids = other.row_ids;
    if (row_ids != other.row_ids)
      throw validation_error("merge: row ids differ");
    for (std::size_t j = 0; j < other.cols(); ++j)
      add_column(prefix + other.column_names[j], other.column(j));
  }
};

inline void write_predictions_tsv(const std::string& path,
                                  const PredictionMatrix& m) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << "sentence_id";
  for (const auto& c : m.column_names) out << '\t' << c;
  out << "\n";
  out.precision(17);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << m.row_ids[i];
    for (std::size_t j = 0; j < m.cols(); ++j) out << '\t' << m.values[i][j];
    out << "\n";
  }
}

inline PredictionMatrix load_predictions_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open predictions file: " + path);
  PredictionMatrix m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (line_no == 1) {
      if (fields.empty() || fields[0] != "sentence_id")
        throw io_error(path + ":1: expected sentence_id header");
      m.column_names.assign(fields.begin() + 1, fields.end());
      continue;
    }
    if (fields.size() != m.column_names.size() + 1)
      throw io_error(path + ":" + std::to_string(line_no) +
                     ": field count mismatch");
    m.row_ids.push_back(fields[0]);
    std::vector<double> row;
    try {
      for (std::size_t j = 1; j < fields.size(); ++j)
        row.push_back(std::stod(fields[j]));
    } catch (const std::exception& e) {
      throw io_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    m.values.push_back(std::move(row));
  }
  return m;
}

}  // namespace fact
