#pragma once

// File formats: Matrix Market (symmetric coordinate and array) for pencil
// matrices, and plain CSV for data matrices, labels, traces, and probe
// curves. Numbers are written with "%.17g" so files round-trip exactly.

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "iftrr/matrix.hpp"
#include "iftrr/operators.hpp"

namespace iftrr {

inline std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

struct LoadedMatrix {
  int n = 0;
  bool sparse = false;
  Mat dense;     // valid when !sparse
  SparseSym sp;  // valid when sparse
};

namespace detail {

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline double parse_double(const std::string& tok, const std::string& where) {
  size_t pos = 0;
  double v;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": malformed number '" + tok + "'");
  }
  if (pos != tok.size()) throw std::runtime_error(where + ": malformed number '" + tok + "'");
  if (!std::isfinite(v)) throw std::runtime_error(where + ": non-finite value '" + tok + "'");
  return v;
}

}  // namespace detail

// Reads a real square symmetric matrix in Matrix Market form. Coordinate
// files must carry the `symmetric` qualifier (one triangle stored); array
// files may be `symmetric` (packed lower triangle) or `general` (full,
// checked for symmetry).
inline LoadedMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");

  std::string header;
  if (!std::getline(in, header))
    throw std::runtime_error(path + ": empty file");
  std::istringstream hs(header);
  std::string tag, obj, fmt, field, sym;
  hs >> tag >> obj >> fmt >> field >> sym;
  if (tag != "%%MatrixMarket" || detail::lower(obj) != "matrix")
    throw std::runtime_error(path + ": not a Matrix Market matrix file");
  fmt = detail::lower(fmt);
  field = detail::lower(field);
  sym = detail::lower(sym);
  if (field != "real" && field != "integer")
    throw std::runtime_error(path + ": unsupported field '" + field + "'");

  auto next_data_line = [&](std::string& line) {
    while (std::getline(in, line)) {
      size_t i = line.find_first_not_of(" \t\r");
      if (i == std::string::npos) continue;
      if (line[i] == '%') continue;
      return true;
    }
    return false;
  };

  std::string line;
  if (!next_data_line(line)) throw std::runtime_error(path + ": missing size line");
  std::istringstream ss(line);

  LoadedMatrix out;
  if (fmt == "coordinate") {
    if (sym != "symmetric")
      throw std::runtime_error(path + ": coordinate files must be declared symmetric");
    long rows, cols, nnz;
    if (!(ss >> rows >> cols >> nnz) || rows != cols || rows < 1 || nnz < 0)
      throw std::runtime_error(path + ": bad coordinate size line '" + line + "'");
    std::vector<std::tuple<int, int, double>> trip;
    trip.reserve(static_cast<size_t>(nnz));
    for (long k = 0; k < nnz; ++k) {
      if (!next_data_line(line))
        throw std::runtime_error(path + ": expected " + std::to_string(nnz) +
                                 " entries, found " + std::to_string(k));
      std::istringstream es(line);
      long i, j;
      std::string vtok;
      if (!(es >> i >> j >> vtok))
        throw std::runtime_error(path + ": malformed entry '" + line + "'");
      if (i < 1 || i > rows || j < 1 || j > cols)
        throw std::runtime_error(path + ": index out of range in '" + line + "'");
      trip.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1),
                        detail::parse_double(vtok, path));
    }
    out.n = static_cast<int>(rows);
    out.sparse = true;
    out.sp = SparseSym::from_triplets(out.n, std::move(trip), /*mirror_lower=*/true);
    return out;
  }

  if (fmt != "array") throw std::runtime_error(path + ": unsupported format '" + fmt + "'");
  long rows, cols;
  if (!(ss >> rows >> cols) || rows != cols || rows < 1)
    throw std::runtime_error(path + ": bad array size line '" + line + "'");
  const int n = static_cast<int>(rows);
  Mat m(n, n);
  auto read_value = [&]() {
    std::string l2;
    if (!next_data_line(l2)) throw std::runtime_error(path + ": array data truncated");
    return detail::parse_double(l2, path);
  };
  if (sym == "symmetric") {
    for (int j = 0; j < n; ++j)
      for (int i = j; i < n; ++i) {
        double v = read_value();
        m(i, j) = v;
        m(j, i) = v;
      }
  } else if (sym == "general") {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) m(i, j) = read_value();
    if (!is_symmetric(m))
      throw std::runtime_error(path + ": general array matrix is not symmetric");
  } else {
    throw std::runtime_error(path + ": unsupported symmetry '" + sym + "'");
  }
  out.n = n;
  out.sparse = false;
  out.dense = std::move(m);
  return out;
}

inline SingleOperator operator_from_loaded(LoadedMatrix lm) {
  if (lm.sparse) return sparse_operator(std::move(lm.sp));
  return dense_operator(std::move(lm.dense));
}

inline void write_mm_array_sym(const std::string& path, const Mat& m) {
  if (m.rows != m.cols) throw std::invalid_argument("write_mm_array_sym: not square");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "%%MatrixMarket matrix array real symmetric\n";
  out << m.rows << " " << m.cols << "\n";
  for (int j = 0; j < m.cols; ++j)
    for (int i = j; i < m.rows; ++i) out << fmt_g17(m(i, j)) << "\n";
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline void write_mm_coord_sym(const std::string& path, const Mat& m) {
  if (m.rows != m.cols) throw std::invalid_argument("write_mm_coord_sym: not square");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  long nnz = 0;
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j <= i; ++j)
      if (m(i, j) != 0.0) ++nnz;
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << m.rows << " " << m.cols << " " << nnz << "\n";
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j <= i; ++j)
      if (m(i, j) != 0.0)
        out << (i + 1) << " " << (j + 1) << " " << fmt_g17(m(i, j)) << "\n";
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline bool numeric_token(const std::string& tok) {
  if (tok.empty()) return false;
  size_t pos = 0;
  try {
    (void)std::stod(tok, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == tok.size();
}

}  // namespace detail

// Numeric CSV matrix; a single leading non-numeric row is treated as a
// header and skipped. Rows must be rectangular.
inline Mat read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> toks = detail::split_csv_line(line);
    if (first) {
      first = false;
      bool allnum = true;
      for (const std::string& t : toks) allnum = allnum && detail::numeric_token(t);
      if (!allnum) continue;  // header row
    }
    std::vector<double> row;
    row.reserve(toks.size());
    for (const std::string& t : toks)
      row.push_back(detail::parse_double(t, path + ":" + std::to_string(lineno)));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");
  Mat m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return m;
}

// Single-column integer labels; a leading non-numeric row is skipped.
inline std::vector<int> read_csv_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<int> out;
  std::string line;
  int lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> toks = detail::split_csv_line(line);
    if (toks.size() != 1)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": labels must be a single column");
    if (first && !detail::numeric_token(toks[0])) {
      first = false;
      continue;
    }
    first = false;
    double v = detail::parse_double(toks[0], path + ":" + std::to_string(lineno));
    int iv = static_cast<int>(v);
    if (static_cast<double>(iv) != v)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": label is not an integer");
    out.push_back(iv);
  }
  if (out.empty()) throw std::runtime_error(path + ": no labels");
  return out;
}

}  // namespace iftrr
