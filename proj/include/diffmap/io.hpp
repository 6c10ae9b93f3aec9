#pragma once

// Text formats: feature lines `<id> <v1> ... <vk>`, label lines
// `<id> <concept-index> ...`, one-name-per-line vocabularies, and atomic
// output files that vanish when writing fails.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "diffmap/numerics.hpp"

namespace diffmap {

/// 17 significant digits: lossless for 64-bit doubles.
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_real(const std::string& token, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size()) throw Error(where + ": '" + token + "' is not a number");
  return v;
}

inline bool is_blank_or_comment(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

struct FeatureTable {
  std::vector<std::string> ids;
  DataMatrix data;
};

inline FeatureTable read_feature_table(std::istream& in, const std::string& source) {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank_or_comment(line)) continue;
    const std::string where = source + " line " + std::to_string(lineno);
    std::istringstream fields(line);
    std::string id, token;
    fields >> id;
    std::vector<double> row;
    while (fields >> token) row.push_back(parse_real(token, where));
    if (row.empty()) throw Error(where + ": line has an id but no values");
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(where + ": expected " + std::to_string(rows.front().size()) + " values, found " +
                  std::to_string(row.size()));
    for (double v : row)
      if (!std::isfinite(v)) throw Error(where + ": non-finite value");
    ids.push_back(id);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(source + ": no feature lines");
  return {std::move(ids), DataMatrix::from_rows(rows)};
}

inline FeatureTable read_feature_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open feature file " + path);
  return read_feature_table(in, path);
}

inline void write_feature_lines(std::ostream& out, const std::vector<std::string>& ids,
                                const Matrix& values) {
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out << ids[static_cast<std::size_t>(i)];
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << ' ' << format_real(values(i, c));
    out << '\n';
  }
}

/// id -> concept indices, in file order.
inline std::map<std::string, std::vector<int>> read_label_file(std::istream& in,
                                                               const std::string& source) {
  std::map<std::string, std::vector<int>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank_or_comment(line)) continue;
    const std::string where = source + " line " + std::to_string(lineno);
    std::istringstream fields(line);
    std::string id, token;
    fields >> id;
    std::vector<int> labels;
    while (fields >> token) {
      std::size_t used = 0;
      int v = -1;
      try {
        v = std::stoi(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size() || v < 0)
        throw Error(where + ": '" + token + "' is not a concept index");
      labels.push_back(v);
    }
    if (!out.emplace(id, std::move(labels)).second)
      throw Error(where + ": duplicate image id '" + id + "'");
  }
  return out;
}

inline std::map<std::string, std::vector<int>> read_label_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open label file " + path);
  return read_label_file(in, path);
}

inline std::vector<std::string> read_vocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary file " + path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    names.push_back(line);
  }
  while (!names.empty() && names.back().empty()) names.pop_back();
  if (names.empty()) throw Error(path + ": empty vocabulary");
  return names;
}

/// Writes to `<path>.partial` and renames on commit(); an uncommitted file
/// is deleted on destruction, so failures never leave partial output.
class AtomicFile {
 public:
  explicit AtomicFile(std::filesystem::path path)
      : path_(std::move(path)), temp_(path_.string() + ".partial") {
    out_.open(temp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error("cannot write " + path_.string());
  }
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;

  ~AtomicFile() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      std::filesystem::remove(temp_, ec);
    }
  }

  std::ostream& stream() { return out_; }

  void commit() {
    out_.close();
    if (!out_) throw Error("failed writing " + path_.string());
    std::filesystem::rename(temp_, path_);
    committed_ = true;
  }

 private:
  std::filesystem::path path_;
  std::filesystem::path temp_;
  std::ofstream out_;
  bool committed_ = false;
};

}  // namespace diffmap
