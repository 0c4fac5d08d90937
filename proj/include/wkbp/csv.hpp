#pragma once

#include <string>
#include <vector>

#include "wkbp/errors.hpp"

namespace wkbp {

// Minimal numeric CSV support for the record / beat / report formats.
// All writers emit full double precision (%.17g) so round trips are exact.

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

// Strict parse: every row must have exactly the header's column count and
// every cell must be numeric. Throws MalformedFileError naming file+line.
CsvTable read_csv(const std::string& path);

struct CsvTextTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Same shape strictness as read_csv but keeps cells as text, for the
// report formats that mix labels with numbers.
CsvTextTable read_csv_text(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

std::string format_double(double v);

std::vector<std::string> split_fields(const std::string& line);

} // namespace wkbp
