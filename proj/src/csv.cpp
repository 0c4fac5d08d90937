#include "wkbp/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace wkbp {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedFileError(path + ": cannot open");

    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw MalformedFileError(path + ": empty file");
    table.header = split_fields(line);

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields = split_fields(line);
        if (fields.size() != table.header.size())
            throw MalformedFileError(path + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(table.header.size()) + " columns, got " +
                                     std::to_string(fields.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (const std::string& f : fields) {
            std::size_t pos = 0;
            double v = 0.0;
            try {
                v = std::stod(f, &pos);
            } catch (const std::exception&) {
                throw MalformedFileError(path + ":" + std::to_string(lineno) +
                                         ": non-numeric cell '" + f + "'");
            }
            if (pos != f.size())
                throw MalformedFileError(path + ":" + std::to_string(lineno) +
                                         ": non-numeric cell '" + f + "'");
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

CsvTextTable read_csv_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedFileError(path + ": cannot open");

    CsvTextTable table;
    std::string line;
    if (!std::getline(in, line)) throw MalformedFileError(path + ": empty file");
    table.header = split_fields(line);

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields = split_fields(line);
        if (fields.size() != table.header.size())
            throw MalformedFileError(path + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(table.header.size()) + " columns, got " +
                                     std::to_string(fields.size()));
        table.rows.push_back(std::move(fields));
    }
    return table;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << format_double(row[i]);
        }
        out << '\n';
    }
}

} // namespace wkbp
