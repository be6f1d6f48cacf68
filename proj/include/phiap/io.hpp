#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace phiap::io {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal form; "NA" for NaN, "Inf"/"-Inf" otherwise non-finite.
std::string format_number(double x);

/// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::string_view text);
std::string hex64(std::uint64_t value);

/// What every output file records about the run that produced it.
struct Provenance {
  std::string version;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;

  /// "# phiap <version> seed=<seed> config=<hash>"
  std::string comment_line() const;
  Json meta() const;
};

std::string tool_version();

/// A CSV/JSON cell. NaN doubles render as NA in CSV and null in JSON.
using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

void write_csv(std::ostream& out, const Table& table, const Provenance& prov);
void write_csv(const std::filesystem::path& path, const Table& table, const Provenance& prov);

/// Array of row objects.
Json to_json(const Table& table);
Json to_json(double x);

/// Writes body with a leading "_meta" member.
void write_json(const std::filesystem::path& path, const Json& body, const Provenance& prov);

/// Header plus rows of raw cell strings. Double-quoted fields may contain the
/// delimiter, doubled quotes and newlines. Lines starting with '#' before the
/// header are skipped.
struct DelimitedText {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

DelimitedText read_delimited(std::istream& in, char delimiter = ',');
DelimitedText read_delimited(const std::filesystem::path& path, char delimiter = ',');

/// Parses a whole cell as a finite or non-finite double; false on trailing garbage.
bool parse_double(std::string_view text, double& out);

/// "", "NA" and "NaN", case-insensitive, after trimming blanks.
bool is_missing(std::string_view text);

}  // namespace phiap::io
