#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

// Minimal RFC 4180 reader/writer shared by the trace, probe, appliance and
// run-record formats.
namespace wattrank::csv {

struct Row {
    std::size_t line = 0;  // 1-based line where the row starts
    std::vector<std::string> fields;
};

/// Reads every non-blank row. Quoted fields may contain commas, doubled
/// quotes and newlines. Throws ParseError on an unterminated quote.
std::vector<Row> read(std::istream& in);

/// Quotes `field` only when it contains a delimiter, quote or line break.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

/// Strict full-field parse; surrounding spaces are tolerated. Throws
/// ParseError naming `what` and `line` on failure.
double parse_double(std::string_view text, std::string_view what, std::size_t line);
std::int64_t parse_int(std::string_view text, std::string_view what, std::size_t line);

}  // namespace wattrank::csv
