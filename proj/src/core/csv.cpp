#include "core/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

#include "core/error.hpp"

namespace conle {

std::string format_double(double value) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace {

double parse_cell(std::string_view cell, std::size_t row, std::size_t col, const std::string& path) {
    // Tolerate surrounding spaces; the canonical format has none.
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r'))
        cell.remove_suffix(1);
    double value = 0.0;
    auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
        fail(ErrorCode::parse, path + ": row " + std::to_string(row) + ", column " +
                                   std::to_string(col) + ": not a number: '" + std::string(cell) + "'");
    return value;
}

}  // namespace

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open '" + path + "'");

    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t col = 0;
        std::string_view rest(line);
        while (true) {
            const std::size_t comma = rest.find(',');
            const std::string_view cell = rest.substr(0, comma);
            values.push_back(parse_cell(cell, rows, col, path));
            ++col;
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (rows == 0) {
            cols = col;
        } else if (col != cols) {
            fail(ErrorCode::parse, path + ": row " + std::to_string(rows) + " has " +
                                       std::to_string(col) + " cells, expected " + std::to_string(cols));
        }
        ++rows;
    }
    if (rows == 0) fail(ErrorCode::parse, path + ": no data rows");

    Matrix m(rows, cols);
    m.storage() = std::move(values);
    return m;
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
    if (!out) fail(ErrorCode::io, "cannot write '" + path + "'");
    std::string line;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        line.clear();
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) line.push_back(',');
            line += format_double(m(r, c));
        }
        line.push_back('\n');
        out << line;
    }
    if (!out) fail(ErrorCode::io, "write failed for '" + path + "'");
}

}  // namespace conle
