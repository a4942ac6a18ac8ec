#pragma once

// Fixed-schema CSV tables. Reals are written with 17 significant digits so
// that parsing a written table reproduces the doubles exactly.

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace liftrec::cli {

using Cell = std::variant<std::int64_t, double, bool, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  // Throws InvalidArgument when the row length differs from the schema.
  void add(std::vector<Cell> row);
};

std::string format_real(double x);
std::string format_cell(const Cell& c);

// Throws InvalidArgument on a schema mismatch.
std::string to_csv(const Table& t);

// Throws Error when the file cannot be written.
void emit_table(const Table& t, const std::filesystem::path& path);

struct ParsedCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

ParsedCsv parse_csv(const std::string& text);

}  // namespace liftrec::cli
