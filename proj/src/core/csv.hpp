#ifndef CONLE_CORE_CSV_HPP
#define CONLE_CORE_CSV_HPP

#include <string>

#include "core/matrix.hpp"

namespace conle {

/// Reads a header-free numeric CSV (comma separated, '.' decimal point) into
/// a matrix. All rows must have the same number of cells. Trailing CR from
/// CRLF files is tolerated. Throws Error{io} if the file cannot be opened and
/// Error{parse} naming the offending row/column on malformed cells.
Matrix read_matrix_csv(const std::string& path);

/// Writes a matrix as a header-free CSV with LF line endings. Values use the
/// shortest representation that round-trips exactly, so identical matrices
/// produce byte-identical files.
void write_matrix_csv(const std::string& path, const Matrix& m);

/// Shortest exact decimal form of a double ("0.25", "1e-09", ...).
std::string format_double(double value);

}  // namespace conle

#endif
