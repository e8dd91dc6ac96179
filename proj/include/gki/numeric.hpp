#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gki {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Error families; the CLI maps them onto distinct exit codes.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : NumericError {
  using NumericError::NumericError;
};

std::string shape_str(const Matrix& m);

/// Throws ShapeError naming both shapes when `ok` is false.
void require_shape(bool ok, const char* op, const Matrix& a, const Matrix& b);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
/// Column vector of per-row sums.
Vector row_sum(const Matrix& a);
double frobenius_norm(const Matrix& a);

bool all_finite(const Matrix& a);

/// Spectral decomposition of a symmetric matrix, eigenvalues ascending.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;  // columns are eigenvectors
};

SymmetricEigen symmetric_eigen(const Matrix& a);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& a);

}  // namespace gki
