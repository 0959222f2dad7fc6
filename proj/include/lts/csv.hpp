#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace lts::csv {

std::string_view trim(std::string_view s);

/// Splits on `delim`, trimming each field. No quoting support; the files this
/// project reads and writes never contain embedded delimiters.
std::vector<std::string> split(std::string_view line, char delim = ',');

/// Splits on runs of whitespace and/or commas.
std::vector<std::string> split_ws_or_comma(std::string_view line);

/// Parses a full field as double. Throws DataError naming `where` on failure.
double parse_double(std::string_view field, const std::string& where);
long long parse_int(std::string_view field, const std::string& where);

/// "%.<digits>f" formatting; nan/inf are written as nan, inf, -inf.
std::string fixed(double v, int digits);

/// Round-trippable shortest-ish representation (%.17g).
std::string exact(double v);

std::ifstream open_in(const std::filesystem::path& p);
std::ofstream open_out(const std::filesystem::path& p);

}  // namespace lts::csv
