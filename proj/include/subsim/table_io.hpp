#pragma once

// Small CSV/JSON table helpers shared by the artifact writers and the ingest
// code. Tables are plain strings; formatting happens before they get here.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace subsim {

/// Shortest representation that parses back to the same double.
std::string format_exact(double x);
/// Fixed decimals, e.g. cents for currency.
std::string format_fixed(double x, int decimals);

struct Provenance {
  std::string artifact;
  std::string config_hash;
  std::uint64_t seed = 0;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::string> units;  // optional, one per column
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> notes;  // emitted as comment lines / a JSON array
};

enum class TableFormat { csv, json };

void write_table(std::ostream& out, const Table& table, const Provenance& prov, TableFormat format);

/// Header-indexed CSV rows. Lines starting with '#' and blank lines are skipped.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in);

  const std::vector<std::string>& header() const noexcept { return header_; }
  bool has_column(std::string_view name) const;
  /// Throws DataError naming every missing column.
  void require_columns(const std::vector<std::string>& names) const;
  std::size_t column(std::string_view name) const;

  std::size_t size() const noexcept { return rows_.size(); }
  const std::vector<std::string>& row(std::size_t i) const { return rows_[i]; }

 private:
  std::vector<std::string> header_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<std::vector<std::string>> rows_;
};

std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace subsim
