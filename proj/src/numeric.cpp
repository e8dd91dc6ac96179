#include "gki/numeric.hpp"

#include <cmath>
#include <sstream>

namespace gki {

std::string shape_str(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void require_shape(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                     shape_str(b));
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_shape(a.cols() == b.rows(), "matmul", a, b);
  return a * b;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add", a, b);
  return a + b;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "hadamard", a, b);
  return a.cwiseProduct(b);
}

Matrix transpose(const Matrix& a) { return a.transpose(); }

Vector row_sum(const Matrix& a) { return a.rowwise().sum(); }

double frobenius_norm(const Matrix& a) { return std::sqrt(a.squaredNorm()); }

bool all_finite(const Matrix& a) { return a.allFinite(); }

SymmetricEigen symmetric_eigen(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw ShapeError("symmetric_eigen: matrix not square " + shape_str(a));
  }
  Eigen::MatrixXd col_major = a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(col_major);
  if (solver.info() != Eigen::Success) {
    throw NumericError("symmetric_eigen: eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

double min_eigenvalue(const Matrix& a) {
  Eigen::MatrixXd col_major = a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(col_major, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericError("min_eigenvalue: eigensolver did not converge");
  }
  return solver.eigenvalues()(0);
}

}  // namespace gki
