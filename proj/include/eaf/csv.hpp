#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eaf::csv {

std::vector<std::string_view> split(std::string_view line, char sep = ',');

std::optional<double> parse_double(std::string_view field);
std::optional<long long> parse_int(std::string_view field);

// Shortest representation that parses back to the same double.
std::string num(double v);

// Reads the next line, stripping a trailing '\r'. Counts lines in *line_no.
bool next_line(std::istream& in, std::string& line, std::size_t& line_no);

}  // namespace eaf::csv
