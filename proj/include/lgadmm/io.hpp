#ifndef LGADMM_IO_HPP_
#define LGADMM_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>

#include "lgadmm/core.hpp"

namespace lgadmm {

// Plain-text matrix format: "rows cols" on the first line, then one row per
// line with 17 significant digits per value.
void write_matrix(std::ostream& out, const Matrix<double>& mat);
Matrix<double> read_matrix(std::istream& in);

void save_matrix(const std::filesystem::path& path, const Matrix<double>& mat);
Matrix<double> load_matrix(const std::filesystem::path& path);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace lgadmm

#endif  // LGADMM_IO_HPP_
