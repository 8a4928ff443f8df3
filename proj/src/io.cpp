#include "lgadmm/io.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace lgadmm {

void write_matrix(std::ostream& out, const Matrix<double>& mat) {
  out << mat.rows() << ' ' << mat.cols() << '\n';
  out << std::setprecision(17);
  for (Index i = 0; i < mat.rows(); ++i) {
    for (Index j = 0; j < mat.cols(); ++j) {
      if (j) out << ' ';
      out << mat(i, j);
    }
    out << '\n';
  }
}

Matrix<double> read_matrix(std::istream& in) {
  Index rows = -1;
  Index cols = -1;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0) {
    throw Error("matrix header must be 'rows cols' with nonnegative sizes");
  }
  Matrix<double> mat(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      if (!(in >> mat(i, j))) {
        throw Error("matrix data ended at entry (" + std::to_string(i) + ", " +
                    std::to_string(j) + ")");
      }
    }
  }
  return mat;
}

void save_matrix(const std::filesystem::path& path, const Matrix<double>& mat) {
  std::ostringstream out;
  write_matrix(out, mat);
  write_file_atomic(path, out.str());
}

Matrix<double> load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_matrix(in);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw Error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace lgadmm
