#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparselaw/cost.hpp"
#include "sparselaw/dataset.hpp"
#include "sparselaw/error.hpp"
#include "sparselaw/fitting.hpp"
#include "sparselaw/law.hpp"
#include "sparselaw/pruning.hpp"

namespace sparselaw {

inline constexpr int kFormatVersion = 1;

// 17 significant digits: enough for bit-exact double round trips.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Run tables. CSV is the primary interchange format, with the exact header
// family,pattern,sparsity,nonzero_params,data,loss. A JSON array of row
// objects with the same six fields is accepted as an alternative.
// ---------------------------------------------------------------------------

inline constexpr std::array<const char*, 6> kRunTableColumns = {
    "family", "pattern", "sparsity", "nonzero_params", "data", "loss"};

inline std::string write_run_table_csv(const SweepDataset& data) {
  std::string out = "family,pattern,sparsity,nonzero_params,data,loss\n";
  for (const RunRecord& r : data.records) {
    out += data.family;
    out += ',';
    out += r.pattern;
    out += ',';
    out += format_g17(r.sparsity);
    out += ',';
    out += format_g17(r.nonzero_params);
    out += ',';
    out += format_g17(r.data);
    out += ',';
    out += format_g17(r.loss);
    out += '\n';
  }
  return out;
}

// JSON-array form of the same table; parse_run_table_text accepts it.
inline nlohmann::json run_table_to_json(const SweepDataset& data) {
  nlohmann::json rows = nlohmann::json::array();
  for (const RunRecord& r : data.records) {
    rows.push_back({{"family", data.family},
                    {"pattern", r.pattern},
                    {"sparsity", r.sparsity},
                    {"nonzero_params", r.nonzero_params},
                    {"data", r.data},
                    {"loss", r.loss}});
  }
  return rows;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  fields.push_back(field);
  return fields;
}

inline double parse_double_field(const std::string& text, int line_number,
                                 const char* column) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  require(end != begin && *end == '\0', errc::malformed_row,
          "line " + std::to_string(line_number) + ": cannot parse " + column +
              " value '" + text + "'");
  return v;
}

inline void check_run_table_header(const std::vector<std::string>& header) {
  for (const std::string& name : header) {
    bool known = false;
    for (const char* col : kRunTableColumns) known |= name == col;
    require(known, errc::named_column, "unknown column '" + name + "'");
  }
  for (std::size_t i = 0; i < kRunTableColumns.size(); ++i) {
    require(i < header.size() && header[i] == kRunTableColumns[i],
            errc::named_column,
            std::string("missing or misplaced column '") + kRunTableColumns[i] +
                "'");
  }
  require(header.size() == kRunTableColumns.size(), errc::named_column,
          "unexpected extra columns in header");
}

inline void append_run_row(SweepDataset& data, const std::string& family,
                           RunRecord record, int line_number) {
  try {
    record.validate();
  } catch (const error& e) {
    raise(errc::malformed_row,
          "line " + std::to_string(line_number) + ": " + e.what());
  }
  if (data.records.empty())
    data.family = family;
  else
    require(family == data.family, errc::mixed_family,
            "line " + std::to_string(line_number) + ": family '" + family +
                "' differs from '" + data.family + "'");
  data.records.push_back(std::move(record));
}

}  // namespace detail

inline SweepDataset parse_run_table_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  SweepDataset data;
  int line_number = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (!saw_header) {
      detail::check_run_table_header(fields);
      saw_header = true;
      continue;
    }
    require(fields.size() == kRunTableColumns.size(), errc::malformed_row,
            "line " + std::to_string(line_number) + ": expected " +
                std::to_string(kRunTableColumns.size()) + " fields, got " +
                std::to_string(fields.size()));
    RunRecord r;
    r.pattern = fields[1];
    r.sparsity = detail::parse_double_field(fields[2], line_number, "sparsity");
    r.nonzero_params =
        detail::parse_double_field(fields[3], line_number, "nonzero_params");
    r.data = detail::parse_double_field(fields[4], line_number, "data");
    r.loss = detail::parse_double_field(fields[5], line_number, "loss");
    detail::append_run_row(data, fields[0], std::move(r), line_number);
  }
  require(saw_header, errc::empty_table, "run table has no header");
  require(!data.records.empty(), errc::empty_table, "run table has no rows");
  return data;
}

inline SweepDataset parse_run_table_json(const nlohmann::json& doc) {
  const nlohmann::json* rows = &doc;
  SweepDataset data;
  if (doc.is_object()) {
    require(doc.contains("records"), errc::named_column,
            "run table object needs a 'records' array");
    if (doc.contains("data_unit")) data.data_unit = doc.at("data_unit");
    rows = &doc.at("records");
  }
  require(rows->is_array(), errc::malformed_row,
          "run table JSON must be an array of row objects");
  require(!rows->empty(), errc::empty_table, "run table has no rows");
  int row_number = 0;
  for (const nlohmann::json& row : *rows) {
    ++row_number;
    require(row.is_object(), errc::malformed_row,
            "row " + std::to_string(row_number) + ": not an object");
    for (auto it = row.begin(); it != row.end(); ++it) {
      bool known = false;
      for (const char* col : kRunTableColumns) known |= it.key() == col;
      require(known, errc::named_column, "unknown column '" + it.key() + "'");
    }
    for (const char* col : kRunTableColumns)
      require(row.contains(col), errc::named_column,
              std::string("missing column '") + col + "'");
    RunRecord r;
    std::string family;
    try {
      family = row.at("family");
      r.pattern = row.at("pattern");
      r.sparsity = row.at("sparsity");
      r.nonzero_params = row.at("nonzero_params");
      r.data = row.at("data");
      r.loss = row.at("loss");
    } catch (const nlohmann::json::exception& e) {
      raise(errc::malformed_row,
            "row " + std::to_string(row_number) + ": " + e.what());
    }
    detail::append_run_row(data, family, std::move(r), row_number);
  }
  return data;
}

// Dispatches on content: JSON documents start with '[' or '{'.
inline SweepDataset parse_run_table_text(const std::string& text) {
  for (char ch : text) {
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') continue;
    if (ch == '[' || ch == '{') {
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(text);
      } catch (const nlohmann::json::exception& e) {
        raise(errc::malformed_row, std::string("bad JSON: ") + e.what());
      }
      return parse_run_table_json(doc);
    }
    return parse_run_table_csv(text);
  }
  raise(errc::empty_table, "run table is empty");
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), errc::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), errc::io_error, "cannot open " + path + " for writing");
  out << content;
  require(out.good(), errc::io_error, "failed writing " + path);
}

inline SweepDataset load_run_table(const std::string& path) {
  return parse_run_table_text(read_file(path));
}

// ---------------------------------------------------------------------------
// Coefficients JSON: exactly the seven parameter fields plus family and
// pattern, versioned with format_version.
// ---------------------------------------------------------------------------

inline nlohmann::json coefficients_to_json(const ScalingLawCoefficients& k) {
  return {{"format_version", kFormatVersion},
          {"a_S", k.a_S},
          {"b_S", k.b_S},
          {"c_S", k.c_S},
          {"b_N", k.b_N},
          {"a_D", k.a_D},
          {"b_D", k.b_D},
          {"c", k.c},
          {"family", k.family},
          {"pattern", k.pattern}};
}

inline ScalingLawCoefficients coefficients_from_json(const nlohmann::json& doc) {
  require(doc.is_object(), errc::invalid_argument,
          "coefficients document must be a JSON object");
  static const std::array<const char*, 10> known = {
      "format_version", "a_S", "b_S", "c_S", "b_N",
      "a_D",            "b_D", "c",   "family", "pattern"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool ok = false;
    for (const char* name : known) ok |= it.key() == name;
    require(ok, errc::invalid_argument,
            "unknown coefficients field '" + it.key() + "'");
  }
  if (doc.contains("format_version"))
    require(doc.at("format_version") == kFormatVersion, errc::invalid_argument,
            "unsupported format_version");
  for (std::size_t i = 1; i < known.size(); ++i)
    require(doc.contains(known[i]), errc::invalid_argument,
            std::string("missing coefficients field '") + known[i] + "'");
  ScalingLawCoefficients k;
  try {
    k.a_S = doc.at("a_S");
    k.b_S = doc.at("b_S");
    k.c_S = doc.at("c_S");
    k.b_N = doc.at("b_N");
    k.a_D = doc.at("a_D");
    k.b_D = doc.at("b_D");
    k.c = doc.at("c");
    k.family = doc.at("family");
    k.pattern = doc.at("pattern");
  } catch (const nlohmann::json::exception& e) {
    raise(errc::invalid_argument,
          std::string("bad coefficients field type: ") + e.what());
  }
  k.validate();
  return k;
}

inline void save_coefficients(const std::string& path,
                              const ScalingLawCoefficients& k) {
  write_file(path, coefficients_to_json(k).dump(2) + "\n");
}

inline ScalingLawCoefficients load_coefficients(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    raise(errc::invalid_argument,
          path + ": bad coefficients JSON: " + e.what());
  }
  return coefficients_from_json(doc);
}

// ---------------------------------------------------------------------------
// Fit configuration and result JSON
// ---------------------------------------------------------------------------

inline nlohmann::json fit_config_to_json(const FitConfig& c) {
  nlohmann::json ranges = nlohmann::json::object();
  for (const auto& [name, r] : c.start_ranges)
    ranges[name] = {r.lo, r.hi};
  return {{"format_version", kFormatVersion},
          {"huber_delta", c.huber_delta},
          {"log_loss", c.log_loss},
          {"num_starts", c.num_starts},
          {"max_iterations", c.max_iterations},
          {"seed", c.seed},
          {"start_ranges", ranges},
          {"frozen", c.frozen}};
}

inline FitConfig fit_config_from_json(const nlohmann::json& doc) {
  FitConfig c;
  try {
    if (doc.contains("huber_delta")) c.huber_delta = doc.at("huber_delta");
    if (doc.contains("log_loss")) c.log_loss = doc.at("log_loss");
    if (doc.contains("num_starts")) c.num_starts = doc.at("num_starts");
    if (doc.contains("max_iterations"))
      c.max_iterations = doc.at("max_iterations");
    if (doc.contains("seed")) c.seed = doc.at("seed");
    if (doc.contains("start_ranges")) {
      for (auto it = doc.at("start_ranges").begin();
           it != doc.at("start_ranges").end(); ++it) {
        require(it.value().is_array() && it.value().size() == 2,
                errc::invalid_argument, "start range must be a [lo, hi] pair");
        c.start_ranges[it.key()] = {it.value()[0], it.value()[1]};
      }
    }
    if (doc.contains("frozen")) {
      for (auto it = doc.at("frozen").begin(); it != doc.at("frozen").end();
           ++it)
        c.frozen[it.key()] = it.value();
    }
  } catch (const nlohmann::json::exception& e) {
    raise(errc::invalid_argument,
          std::string("bad fit config field type: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::json fit_result_to_json(const FitResult& r) {
  return {{"format_version", kFormatVersion},
          {"coefficients", coefficients_to_json(r.coefficients)},
          {"objective_value", r.objective_value},
          {"residuals", r.residuals},
          {"starts_tried", r.starts_tried},
          {"converged", r.converged}};
}

inline std::string write_residuals_csv(const SweepDataset& data,
                                       std::span<const double> residuals) {
  require(residuals.size() == data.records.size(), errc::invalid_argument,
          "residual count does not match record count");
  std::string out =
      "family,pattern,sparsity,nonzero_params,data,loss,residual\n";
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const RunRecord& r = data.records[i];
    out += data.family + ',' + r.pattern + ',' + format_g17(r.sparsity) + ',' +
           format_g17(r.nonzero_params) + ',' + format_g17(r.data) + ',' +
           format_g17(r.loss) + ',' + format_g17(residuals[i]) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Contours, frontiers and training traces as CSV
// ---------------------------------------------------------------------------

inline std::string write_contour_csv(
    std::span<const std::vector<ContourPoint>> series) {
  std::string out = "sparsity,N,D,C,loss\n";
  for (const auto& points : series) {
    for (const ContourPoint& p : points) {
      out += format_g17(p.sparsity) + ',' + format_g17(p.nonzero_params) + ',' +
             format_g17(p.data) + ',' + format_g17(p.compute) + ',' +
             format_g17(p.loss) + '\n';
    }
  }
  return out;
}

inline std::string write_trace_csv(const TrainingTrace& trace) {
  std::string out = "step,sparsity,loss,rms\n";
  for (const TraceRow& row : trace.rows) {
    out += std::to_string(row.step) + ',' + format_g17(row.sparsity) + ',' +
           format_g17(row.loss) + ',' + format_g17(row.rms) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Masked tensors: flat binary layout. Magic "SLT1", then little-endian
// u64 length, u32 n, u32 m (both zero when unstructured), length f64 values,
// and the mask packed LSB-first into ceil(length/8) bytes.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32le(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline std::uint64_t get_u64le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace detail

inline std::string masked_tensor_to_bytes(const MaskedTensor& t) {
  t.validate();
  std::string out = "SLT1";
  detail::put_u64le(out, t.values.size());
  detail::put_u32le(out, t.group ? static_cast<std::uint32_t>(t.group->n) : 0);
  detail::put_u32le(out, t.group ? static_cast<std::uint32_t>(t.group->m) : 0);
  for (double v : t.values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    detail::put_u64le(out, bits);
  }
  const std::size_t mask_bytes = (t.mask.size() + 7) / 8;
  std::string packed(mask_bytes, '\0');
  for (std::size_t i = 0; i < t.mask.size(); ++i)
    if (t.mask[i]) packed[i / 8] |= static_cast<char>(1 << (i % 8));
  out += packed;
  return out;
}

inline MaskedTensor masked_tensor_from_bytes(const std::string& bytes) {
  require(bytes.size() >= 20 && bytes.compare(0, 4, "SLT1") == 0,
          errc::invalid_argument, "not a masked-tensor file (bad magic)");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t len = detail::get_u64le(p + 4);
  const std::uint32_t n = detail::get_u32le(p + 12);
  const std::uint32_t m = detail::get_u32le(p + 16);
  require(len <= (bytes.size() - 20) / 8, errc::invalid_argument,
          "masked-tensor length field exceeds the file size");
  const std::size_t mask_bytes = (static_cast<std::size_t>(len) + 7) / 8;
  require(bytes.size() == 20 + len * 8 + mask_bytes, errc::invalid_argument,
          "masked-tensor file is truncated or oversized");
  MaskedTensor t;
  t.values.resize(len);
  t.mask.resize(len);
  for (std::uint64_t i = 0; i < len; ++i) {
    const std::uint64_t bits = detail::get_u64le(p + 20 + i * 8);
    std::memcpy(&t.values[i], &bits, sizeof(double));
  }
  const unsigned char* mask_base = p + 20 + len * 8;
  for (std::uint64_t i = 0; i < len; ++i)
    t.mask[i] = (mask_base[i / 8] >> (i % 8)) & 1;
  if (n != 0 || m != 0) {
    t.group = NmPattern{static_cast<int>(n), static_cast<int>(m)};
    t.validate();
  }
  return t;
}

inline void save_masked_tensor(const std::string& path, const MaskedTensor& t) {
  write_file(path, masked_tensor_to_bytes(t));
}

inline MaskedTensor load_masked_tensor(const std::string& path) {
  return masked_tensor_from_bytes(read_file(path));
}

}  // namespace sparselaw
