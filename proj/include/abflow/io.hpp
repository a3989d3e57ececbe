#pragma once

// Matrix files, result documents and convergence-trace emission.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "abflow/core.hpp"
#include "abflow/lab.hpp"
#include "abflow/trace.hpp"

namespace abflow {

using Json = nlohmann::json;

enum class MatrixFormat { kJson, kTxt };

/// ".json" selects JSON, anything else whitespace-separated text.
inline MatrixFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".json" ? MatrixFormat::kJson : MatrixFormat::kTxt;
}

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ComplexMatrix parse_txt_matrix(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    std::vector<double> row;
    std::size_t i = 0;
    while (i < line.size()) {
      const char c = line[i];
      if (c == ' ' || c == '\t' || c == '\r') {
        ++i;
        continue;
      }
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(line.data() + i, line.data() + line.size(), v);
      const std::size_t used = static_cast<std::size_t>(ptr - (line.data() + i));
      const bool delimited = ptr == line.data() + line.size() || *ptr == ' ' || *ptr == '\t' ||
                             *ptr == '\r';
      if (ec != std::errc() || used == 0 || !delimited) {
        throw ParseError("invalid number", line_no, i + 1);
      }
      if (!std::isfinite(v)) throw ParseError("non-finite entry", line_no, i + 1);
      row.push_back(v);
      i += used;
    }
    if (!row.empty()) {
      if (!rows.empty() && row.size() != rows.front().size()) {
        throw ShapeError("ragged rows: line " + std::to_string(line_no) + " has " +
                         std::to_string(row.size()) + " entries, expected " +
                         std::to_string(rows.front().size()));
      }
      rows.push_back(std::move(row));
    }
    pos = end + 1;
  }
  if (rows.empty()) throw ParseError("empty matrix file", 1, 1);
  const Index r = static_cast<Index>(rows.size());
  const Index c = static_cast<Index>(rows.front().size());
  ComplexMatrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < c; ++j) m(i, j) = Complex(rows[i][j], 0.0);
  }
  return m;
}

inline ComplexMatrix parse_json_matrix(const Json& doc) {
  if (!doc.is_object() || !doc.contains("rows") || !doc.contains("cols") ||
      !doc.contains("data")) {
    throw ParseError("matrix object needs rows, cols and data", 1, 1);
  }
  const Json& jr = doc.at("rows");
  const Json& jc = doc.at("cols");
  const Json& data = doc.at("data");
  if (!jr.is_number_integer() || !jc.is_number_integer() || !data.is_array()) {
    throw ParseError("rows/cols must be integers and data an array", 1, 1);
  }
  const long long r = jr.get<long long>();
  const long long c = jc.get<long long>();
  if (r < 0 || c < 0) throw ShapeError("negative matrix dimension");
  if (data.size() != static_cast<std::size_t>(r * c)) {
    throw ShapeError("data has " + std::to_string(data.size()) + " entries, expected " +
                     std::to_string(r * c));
  }
  ComplexMatrix m(r, c);
  for (std::size_t idx = 0; idx < data.size(); ++idx) {
    const Json& e = data[idx];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
      throw ParseError("entry " + std::to_string(idx) + " is not a [re, im] pair", 1, 1);
    }
    m(static_cast<Index>(idx) / c, static_cast<Index>(idx) % c) =
        Complex(e[0].get<double>(), e[1].get<double>());
  }
  return m;
}

/// Byte offset → (line, column), both 1-based.
inline std::pair<std::size_t, std::size_t> locate(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

inline ComplexMatrix parse_matrix_text(std::string_view text, MatrixFormat format) {
  if (format == MatrixFormat::kTxt) return detail::parse_txt_matrix(text);
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    const auto [line, col] = detail::locate(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError("malformed JSON", line, col);
  }
  return detail::parse_json_matrix(doc);
}

inline ComplexMatrix parse_matrix_file(const std::filesystem::path& path, MatrixFormat format) {
  return parse_matrix_text(detail::read_file(path), format);
}

inline ComplexMatrix parse_matrix_file(const std::filesystem::path& path) {
  return parse_matrix_file(path, format_from_path(path));
}

/// {"rows", "cols", "data": [[re, im], ...]} in row-major order. Doubles are
/// written in shortest round-trip form, so parsing gives back identical bits.
inline Json matrix_to_json(const ComplexMatrix& m) {
  Json data = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) data.push_back({m(i, j).real(), m(i, j).imag()});
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never see a partial file.
inline void write_atomic(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

inline void write_matrix_json(const std::filesystem::path& path, const ComplexMatrix& m) {
  write_atomic(path, matrix_to_json(m).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

/// CSV with columns step,error,residual,order_estimate,elapsed_seconds and 17
/// significant digits; a missing order estimate is an empty field.
inline std::string trace_to_csv(const ConvergenceTrace& trace) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "step,error,residual,order_estimate,elapsed_seconds\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << trace.steps[i] << ',' << trace.errors[i] << ',' << trace.residuals[i] << ',';
    if (trace.orders[i]) out << *trace.orders[i];
    out << ',' << trace.elapsed_seconds[i] << '\n';
  }
  return out.str();
}

inline Json trace_records(const ConvergenceTrace& trace) {
  Json records = Json::array();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    records.push_back({{"step", trace.steps[i]},
                       {"error", trace.errors[i]},
                       {"residual", trace.residuals[i]},
                       {"order_estimate", trace.orders[i] ? Json(*trace.orders[i]) : Json()},
                       {"elapsed_seconds", trace.elapsed_seconds[i]}});
  }
  return records;
}

inline Json spec_to_json(const ProblemSpec& spec) {
  Json spectrum = Json::array();
  for (const auto& e : spec.spectrum) {
    spectrum.push_back({{"value", {e.value.real(), e.value.imag()}},
                        {"multiplicity", e.multiplicity},
                        {"semisimple", e.semisimple}});
  }
  return Json{{"n", spec.dimension()},
              {"spectrum", std::move(spectrum)},
              {"cond", spec.identity_similarity ? 1.0 : spec.cond},
              {"identity_similarity", spec.identity_similarity},
              {"random_b", spec.random_b},
              {"seed", spec.seed}};
}

inline Json params_to_json(const SolverParams& p) {
  return Json{{"order", p.order}, {"plain", p.plain}, {"gamma", p.gamma},
              {"tol", p.tol},     {"kmax", p.kmax}};
}

inline std::string_view to_string(ExperimentKind kind) {
  return kind == ExperimentKind::kSqrt ? "sqrt" : "pencil";
}

inline Json experiment_to_json(ExperimentKind kind, const ProblemSpec& spec,
                               const SolverParams& params, const ExperimentResult& result) {
  Json header{{"kind", to_string(kind)},
              {"spec", spec_to_json(spec)},
              {"params", params_to_json(params)},
              {"status", to_string(result.status)}};
  if (!result.message.empty()) header["message"] = result.message;
  return Json{{"header", std::move(header)}, {"records", trace_records(result.trace)}};
}

}  // namespace abflow
