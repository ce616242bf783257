#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace exirt::csv {

/// Version stamped into every emitted report file.
inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kSchemaComment = "# schema_version: 1";

/// Splits one RFC 4180 record. Quoted fields may contain commas and
/// doubled quotes; embedded newlines are not supported.
std::vector<std::string> split_line(std::string_view line);

std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);
std::string format_fixed(double value, int decimals);

double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

/// Reads a header plus rows, skipping blank lines and lines starting with '#'.
/// Throws MalformedRow when a row's width differs from the header's.
Table read_table(std::istream& in);

}  // namespace exirt::csv
