#include "phiap/io.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "phiap/error.hpp"

#ifndef PHIAP_VERSION
#define PHIAP_VERSION "0.0.0"
#endif

namespace phiap::io {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) return false;
  return true;
}

std::string csv_field(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) return format_number(*d);
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  const auto& s = std::get<std::string>(cell);
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + '"';
}

// Reads one record; false at end of input.
bool read_record(std::istream& in, char delim, std::vector<std::string>& fields) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false, any = false;
  char ch;
  while (in.get(ch)) {
    any = true;
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delim) {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      break;
    } else if (ch != '\r') {
      field += ch;
    }
  }
  if (quoted) throw DataError("unterminated quoted field");
  fields.push_back(std::move(field));
  return any;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "NA";
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::array<char, 17> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + 16, value, 16);
  std::string s(buf.data(), res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

std::string tool_version() { return PHIAP_VERSION; }

std::string Provenance::comment_line() const {
  return "# phiap " + version + " seed=" + std::to_string(seed) + " config=" + hex64(config_hash);
}

Json Provenance::meta() const {
  Json m;
  m["tool"] = "phiap";
  m["version"] = version;
  m["seed"] = seed;
  m["config"] = hex64(config_hash);
  return m;
}

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw DimensionError("table row width differs from header");
  rows.push_back(std::move(row));
}

void write_csv(std::ostream& out, const Table& table, const Provenance& prov) {
  out << prov.comment_line() << '\n';
  for (std::size_t j = 0; j < table.columns.size(); ++j) out << (j ? "," : "") << csv_field(table.columns[j]);
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << csv_field(row[j]);
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Table& table, const Provenance& prov) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  write_csv(out, table, prov);
}

Json to_json(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json to_json(const Table& table) {
  Json arr = Json::array();
  for (const auto& row : table.rows) {
    Json obj = Json::object();
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) obj[table.columns[j]] = to_json(v);
            else obj[table.columns[j]] = v;
          },
          row[j]);
    }
    arr.push_back(std::move(obj));
  }
  return arr;
}

void write_json(const std::filesystem::path& path, const Json& body, const Provenance& prov) {
  Json doc = Json::object();
  doc["_meta"] = prov.meta();
  for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

DelimitedText read_delimited(std::istream& in, char delimiter) {
  DelimitedText out;
  std::vector<std::string> fields;
  bool have_header = false;
  while (read_record(in, delimiter, fields)) {
    if (!have_header) {
      if (fields.size() == 1 && trim(fields[0]).empty()) continue;
      if (!fields[0].empty() && fields[0][0] == '#') continue;
      for (auto& f : fields) f = std::string(trim(f));
      out.header = fields;
      have_header = true;
      continue;
    }
    if (fields.size() == 1 && trim(fields[0]).empty()) continue;
    if (fields.size() != out.header.size())
      throw DataError("row " + std::to_string(out.rows.size() + 1) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(out.header.size()));
    out.rows.push_back(fields);
  }
  if (!have_header) throw DataError("empty input: no header row");
  return out;
}

DelimitedText read_delimited(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_delimited(in, delimiter);
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  if (iequals(text, "inf") || iequals(text, "-inf")) {
    out = text.front() == '-' ? -HUGE_VAL : HUGE_VAL;
    return true;
  }
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

bool is_missing(std::string_view text) {
  text = trim(text);
  return text.empty() || iequals(text, "NA") || iequals(text, "NaN");
}

}  // namespace phiap::io
