#include "liftrec/cli/table.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "liftrec/common.hpp"

namespace liftrec::cli {

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size())
    throw InvalidArgument(fmt::format("table: row has {} cells, schema has {} columns", row.size(), columns.size()));
  rows.push_back(std::move(row));
}

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", x);
}

std::string format_cell(const Cell& c) {
  struct Visitor {
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_real(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::string& v) const { return quote(v); }
  };
  return std::visit(Visitor{}, c);
}

std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t k = 0; k < t.columns.size(); ++k) out += (k ? "," : "") + quote(t.columns[k]);
  out += '\n';
  for (const auto& row : t.rows) {
    if (row.size() != t.columns.size()) throw InvalidArgument("to_csv: row does not match the schema");
    for (std::size_t k = 0; k < row.size(); ++k) out += (k ? "," : "") + format_cell(row[k]);
    out += '\n';
  }
  return out;
}

void emit_table(const Table& t, const std::filesystem::path& path) {
  const std::string text = to_csv(t);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("emit_table: cannot open " + path.string());
  os << text;
  if (!os) throw Error("emit_table: write failed for " + path.string());
}

ParsedCsv parse_csv(const std::string& text) {
  ParsedCsv parsed;
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
      any = true;
    } else if (ch == ',') {
      record.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (ch == '\n') {
      record.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(record));
      record.clear();
      any = false;
    } else {
      field += ch;
      any = true;
    }
  }
  if (any || !field.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  if (!records.empty()) {
    parsed.header = std::move(records.front());
    parsed.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
  }
  return parsed;
}

}  // namespace liftrec::cli
