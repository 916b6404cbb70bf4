#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace entdetect::qlinalg {

using Complex = std::complex<double>;

/// Tolerances shared by every validity check on states.
inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPsdTol = 1e-10;
inline constexpr double kNormTol = 1e-10;

/// Dense complex matrix, row-major.
class ComplexMatrix {
 public:
  /// Zero matrix. Throws DimensionMismatch for an empty shape.
  ComplexMatrix(std::size_t rows, std::size_t cols);
  ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows);

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix diagonal(std::span<const double> values);
  static ComplexMatrix column(std::span<const Complex> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool is_square() const { return rows_ == cols_; }

  Complex& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<Complex> data() { return data_; }
  std::span<const Complex> data() const { return data_; }

  Complex trace() const;

  ComplexMatrix& operator+=(const ComplexMatrix& other);
  ComplexMatrix& operator-=(const ComplexMatrix& other);
  ComplexMatrix& operator*=(Complex scale);

  bool operator==(const ComplexMatrix& other) const = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Complex> data_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(ComplexMatrix a, Complex scale);
ComplexMatrix operator*(Complex scale, ComplexMatrix a);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix adjoint(const ComplexMatrix& a);
ComplexMatrix transpose(const ComplexMatrix& a);

/// Largest |a_ij - conj(a_ji)|.
double hermitian_deviation(const ComplexMatrix& a);
/// Largest entrywise |a_ij - b_ij|.
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);
double frobenius_norm(const ComplexMatrix& a);
bool all_finite(const ComplexMatrix& a);

/// Real eigenvalues in descending order.
struct EigenSpectrum {
  std::vector<double> eigenvalues;
};

/// Cyclic Jacobi on the real symmetric embedding [[Re H, -Im H], [Im H, Re H]].
///
/// The embedding has every eigenvalue of H twice; after sorting, every second
/// value is kept. Sweeps stop once the off-diagonal Frobenius norm drops
/// below 1e-12 (scaled by the matrix norm when that exceeds one).
/// Throws NotHermitian when max |h_ij - conj(h_ji)| > 1e-8 and
/// NoConvergence after 100 sweeps.
EigenSpectrum hermitian_eigenvalues(const ComplexMatrix& h);

/// Real symmetric Jacobi eigenvalues (unsorted), exposed for reuse.
/// `a` is n x n row-major and is overwritten.
std::vector<double> jacobi_symmetric_eigenvalues(std::vector<double>& a, std::size_t n);

/// Transposes tensor factor `subsystem` (0-based) of a matrix acting on a
/// product space with the given factor dimensions.
ComplexMatrix partial_transpose(const ComplexMatrix& m, std::size_t subsystem, std::span<const std::size_t> dims);

/// Sum of singular values. Hermitian inputs use sum |lambda_i| directly.
double trace_norm(const ComplexMatrix& a);

/// Normalized pure state of `num_qubits` qubits stored as a 2^N x 1 column.
class PureState {
 public:
  /// Throws InvalidState unless the squared norm is 1 within 1e-10.
  explicit PureState(ComplexMatrix vec);
  /// Scales `amplitudes` to unit norm. Throws InvalidState on a zero vector.
  static PureState normalized(std::span<const Complex> amplitudes);
  static PureState basis(std::size_t num_qubits, std::size_t index);

  const ComplexMatrix& vec() const { return vec_; }
  std::size_t num_qubits() const { return num_qubits_; }
  std::size_t dim() const { return vec_.rows(); }
  Complex amplitude(std::size_t i) const { return vec_(i, 0); }

 private:
  ComplexMatrix vec_;
  std::size_t num_qubits_;
};

/// Density matrix on N qubits.
///
/// Construction checks Hermiticity and unit trace. Positivity costs an
/// eigendecomposition and is checked by `validated` only; the factory
/// functions below produce PSD matrices by construction.
class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix mat);
  /// Also checks min eigenvalue >= -1e-10.
  static DensityMatrix validated(ComplexMatrix mat);

  const ComplexMatrix& mat() const { return mat_; }
  std::size_t num_qubits() const { return num_qubits_; }
  std::size_t dim() const { return mat_.rows(); }

 private:
  ComplexMatrix mat_;
  std::size_t num_qubits_;
};

PureState kron(const PureState& a, const PureState& b);
/// U|psi>.
PureState apply(const ComplexMatrix& u, const PureState& psi);
Complex inner(const PureState& a, const PureState& b);

DensityMatrix projector(const PureState& psi);
/// sum_i w_i rho_i. Weights must be nonnegative and sum to one.
DensityMatrix mixture(std::span<const double> weights, std::span<const DensityMatrix> states);

/// (||rho^{T_k}|| - 1) / 2 with the transpose on qubit `qubit` (0-based)
/// against all others. Computed as (||rho^{T_k}|| - Tr rho) / 2, which is
/// the same quantity for unit-trace input and is nonnegative up to rounding.
double negativity(const DensityMatrix& rho, std::size_t qubit = 0);
/// One negativity per qubit: qubit k versus the rest.
std::vector<double> bipartition_negativities(const DensityMatrix& rho);

double purity(const DensityMatrix& rho);
std::size_t numerical_rank(const DensityMatrix& rho, double tol);
double min_eigenvalue(const ComplexMatrix& h);

}  // namespace entdetect::qlinalg
