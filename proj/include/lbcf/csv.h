#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace lbcf {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // Lines starting with '#' before the header (metadata comments).
  std::vector<std::string> comments;
};

// RFC 4180 reader: quoted fields, doubled quotes, CRLF tolerated. Lines that
// start with '#' are collected as comments and skipped.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest decimal text that parses back to exactly `x`; "NA" for NaN.
std::string format_double(double x);
// Parses a full field as a double; false if the text is not numeric.
bool parse_double(std::string_view text, double& out);
bool is_na(std::string_view text);

}  // namespace lbcf
