#include "subsim/table_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "subsim/error.hpp"

namespace subsim {

std::string format_exact(double x) {
  if (std::isnan(x)) return "NaN";
  if (x == 0.0) return "0";  // collapses -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string format_fixed(double x, int decimals) {
  if (std::isnan(x)) return "NaN";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  std::string s(buf);
  // "-0.00" and friends
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

namespace {

void write_csv_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

nlohmann::ordered_json cell_json(const std::string& s) {
  if (s.empty()) return nullptr;
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return v;
  return s;
}

}  // namespace

void write_table(std::ostream& out, const Table& table, const Provenance& prov, TableFormat format) {
  if (format == TableFormat::csv) {
    out << "# artifact=" << prov.artifact << " config_hash=" << prov.config_hash
        << " seed=" << prov.seed << '\n';
    for (const auto& n : table.notes) out << "# " << n << '\n';
    if (!table.units.empty()) {
      out << "# units: ";
      for (std::size_t i = 0; i < table.units.size(); ++i)
        out << (i ? ", " : "") << table.columns[i] << '=' << table.units[i];
      out << '\n';
    }
    write_csv_row(out, table.columns);
    for (const auto& r : table.rows) write_csv_row(out, r);
    return;
  }
  nlohmann::ordered_json j;
  j["provenance"] = {{"artifact", prov.artifact}, {"config_hash", prov.config_hash}, {"seed", prov.seed}};
  if (!table.notes.empty()) j["notes"] = table.notes;
  if (!table.units.empty()) {
    nlohmann::ordered_json u;
    for (std::size_t i = 0; i < table.units.size(); ++i) u[table.columns[i]] = table.units[i];
    j["units"] = std::move(u);
  }
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : table.rows) {
    nlohmann::ordered_json o;
    for (std::size_t i = 0; i < table.columns.size(); ++i) o[table.columns[i]] = cell_json(r[i]);
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  out << j.dump(2) << '\n';
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    auto cell = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
    cells.emplace_back(cell);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

CsvReader::CsvReader(std::istream& in) {
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto cells = split_csv_line(line);
    if (!have_header) {
      if (!cells.empty() && cells[0].size() >= 3 && cells[0].compare(0, 3, "\xEF\xBB\xBF") == 0)
        cells[0].erase(0, 3);
      header_ = std::move(cells);
      for (std::size_t i = 0; i < header_.size(); ++i) index_.emplace(header_[i], i);
      have_header = true;
    } else {
      rows_.push_back(std::move(cells));
    }
  }
  if (!have_header) throw DataError("CSV input has no header row");
}

bool CsvReader::has_column(std::string_view name) const { return index_.find(name) != index_.end(); }

void CsvReader::require_columns(const std::vector<std::string>& names) const {
  std::string missing;
  for (const auto& n : names)
    if (!has_column(n)) missing += (missing.empty() ? "" : ", ") + n;
  if (!missing.empty()) throw DataError("CSV missing required columns: " + missing);
}

std::size_t CsvReader::column(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw DataError("CSV has no column '" + std::string(name) + "'");
  return it->second;
}

}  // namespace subsim
