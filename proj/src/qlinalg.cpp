#include "entdetect/qlinalg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "entdetect/error.hpp"

namespace entdetect::qlinalg {

namespace {

constexpr double kEigenHermitianTol = 1e-8;
constexpr double kJacobiOffTol = 1e-12;
constexpr int kJacobiMaxSweeps = 100;

std::size_t qubits_for_dim(std::size_t dim) {
  if (dim == 0 || !std::has_single_bit(dim)) {
    throw DimensionMismatch("dimension " + std::to_string(dim) + " is not a power of two");
  }
  return static_cast<std::size_t>(std::countr_zero(dim));
}

void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("shape mismatch");
  }
}

}  // namespace

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {
  if (rows == 0 || cols == 0) throw DimensionMismatch("matrix must have at least one row and column");
}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows)
    : ComplexMatrix(rows.size(), rows.size() == 0 ? 0 : rows.begin()->size()) {
  std::size_t r = 0;
  for (const auto& row : rows) {
    if (row.size() != cols_) throw DimensionMismatch("ragged initializer");
    std::copy(row.begin(), row.end(), data_.begin() + static_cast<std::ptrdiff_t>(r * cols_));
    ++r;
  }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const double> values) {
  ComplexMatrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

ComplexMatrix ComplexMatrix::column(std::span<const Complex> values) {
  ComplexMatrix m(values.size(), 1);
  std::copy(values.begin(), values.end(), m.data_.begin());
  return m;
}

Complex ComplexMatrix::trace() const {
  Complex t = 0.0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
  return t;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& other) {
  require_same_shape(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& other) {
  require_same_shape(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(Complex scale) {
  for (auto& x : data_) x *= scale;
  return *this;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
ComplexMatrix operator*(ComplexMatrix a, Complex scale) { return a *= scale; }
ComplexMatrix operator*(Complex scale, ComplexMatrix a) { return a *= scale; }

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matmul inner dimensions differ");
  ComplexMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Complex aik = a(i, k);
      if (aik == Complex(0.0)) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix c(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t ia = 0; ia < a.rows(); ++ia) {
    for (std::size_t ja = 0; ja < a.cols(); ++ja) {
      const Complex x = a(ia, ja);
      for (std::size_t ib = 0; ib < b.rows(); ++ib) {
        for (std::size_t jb = 0; jb < b.cols(); ++jb) {
          c(ia * b.rows() + ib, ja * b.cols() + jb) = x * b(ib, jb);
        }
      }
    }
  }
  return c;
}

ComplexMatrix adjoint(const ComplexMatrix& a) {
  ComplexMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = std::conj(a(i, j));
  return t;
}

ComplexMatrix transpose(const ComplexMatrix& a) {
  ComplexMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

double hermitian_deviation(const ComplexMatrix& a) {
  if (!a.is_square()) throw DimensionMismatch("hermiticity needs a square matrix");
  double dev = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i; j < a.cols(); ++j) dev = std::max(dev, std::abs(a(i, j) - std::conj(a(j, i))));
  return dev;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_shape(a, b);
  double d = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

double frobenius_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (const auto& x : a.data()) s += std::norm(x);
  return std::sqrt(s);
}

bool all_finite(const ComplexMatrix& a) {
  return std::all_of(a.data().begin(), a.data().end(),
                     [](const Complex& x) { return std::isfinite(x.real()) && std::isfinite(x.imag()); });
}

std::vector<double> jacobi_symmetric_eigenvalues(std::vector<double>& a, std::size_t n) {
  auto at = [&](std::size_t r, std::size_t c) -> double& { return a[r * n + c]; };

  double total = 0.0;
  for (double x : a) total += x * x;
  const double tol = kJacobiOffTol * std::max(1.0, std::sqrt(total));

  for (int sweep = 0;; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * at(p, q) * at(p, q);
    if (std::sqrt(off) <= tol) break;
    if (sweep == kJacobiMaxSweeps) throw NoConvergence("Jacobi eigensolver did not converge in 100 sweeps");

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double app = at(p, p);
        const double aqq = at(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        at(p, p) = app - t * apq;
        at(q, q) = aqq + t * apq;
        at(p, q) = 0.0;
        at(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = at(k, p);
          const double akq = at(k, q);
          at(k, p) = at(p, k) = c * akp - s * akq;
          at(k, q) = at(q, k) = s * akp + c * akq;
        }
      }
    }
  }

  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = at(i, i);
  return eig;
}

EigenSpectrum hermitian_eigenvalues(const ComplexMatrix& h) {
  if (!h.is_square()) throw DimensionMismatch("eigenvalues need a square matrix");
  if (!all_finite(h)) throw NotHermitian("matrix has non-finite entries");
  if (hermitian_deviation(h) > kEigenHermitianTol) throw NotHermitian("matrix is not Hermitian within 1e-8");

  const std::size_t n = h.rows();
  const std::size_t m = 2 * n;
  std::vector<double> a(m * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      // Symmetrize so rounding noise in the input cannot break the embedding.
      const Complex x = 0.5 * (h(i, j) + std::conj(h(j, i)));
      a[i * m + j] = x.real();
      a[i * m + (j + n)] = -x.imag();
      a[(i + n) * m + j] = x.imag();
      a[(i + n) * m + (j + n)] = x.real();
    }
  }

  std::vector<double> doubled = jacobi_symmetric_eigenvalues(a, m);
  std::sort(doubled.begin(), doubled.end(), std::greater<>());
  EigenSpectrum spec;
  spec.eigenvalues.reserve(n);
  for (std::size_t i = 0; i < m; i += 2) spec.eigenvalues.push_back(doubled[i]);
  return spec;
}

ComplexMatrix partial_transpose(const ComplexMatrix& m, std::size_t subsystem, std::span<const std::size_t> dims) {
  if (!m.is_square()) throw DimensionMismatch("partial transpose needs a square matrix");
  if (subsystem >= dims.size()) throw DimensionMismatch("subsystem index out of range");
  const std::size_t total =
      std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  if (total != m.rows()) throw DimensionMismatch("subsystem dimensions do not multiply to the matrix dimension");

  // Stride of the chosen factor in the row-major multi-index.
  std::size_t stride = 1;
  for (std::size_t k = dims.size() - 1; k > subsystem; --k) stride *= dims[k];
  const std::size_t d = dims[subsystem];

  ComplexMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const std::size_t di = (i / stride) % d;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const std::size_t dj = (j / stride) % d;
      const std::size_t i2 = i - di * stride + dj * stride;
      const std::size_t j2 = j - dj * stride + di * stride;
      out(i2, j2) = m(i, j);
    }
  }
  return out;
}

double trace_norm(const ComplexMatrix& a) {
  if (!a.is_square()) throw DimensionMismatch("trace norm needs a square matrix");
  const double scale = std::max(1.0, frobenius_norm(a));
  if (hermitian_deviation(a) <= kHermitianTol * scale) {
    double s = 0.0;
    for (double lambda : hermitian_eigenvalues(a).eigenvalues) s += std::abs(lambda);
    return s;
  }
  double s = 0.0;
  for (double lambda : hermitian_eigenvalues(adjoint(a) * a).eigenvalues) s += std::sqrt(std::max(0.0, lambda));
  return s;
}

PureState::PureState(ComplexMatrix vec) : vec_(std::move(vec)), num_qubits_(0) {
  if (vec_.cols() != 1) throw DimensionMismatch("state vector must be a column");
  num_qubits_ = qubits_for_dim(vec_.rows());
  if (!all_finite(vec_)) throw InvalidState("state vector has non-finite entries");
  double n2 = 0.0;
  for (const auto& x : vec_.data()) n2 += std::norm(x);
  if (std::abs(n2 - 1.0) > kNormTol) throw InvalidState("state vector is not normalized");
}

PureState PureState::normalized(std::span<const Complex> amplitudes) {
  double n2 = 0.0;
  for (const auto& x : amplitudes) n2 += std::norm(x);
  if (!(n2 > 0.0) || !std::isfinite(n2)) throw InvalidState("cannot normalize a zero or non-finite vector");
  ComplexMatrix v = ComplexMatrix::column(amplitudes);
  v *= 1.0 / std::sqrt(n2);
  return PureState(std::move(v));
}

PureState PureState::basis(std::size_t num_qubits, std::size_t index) {
  ComplexMatrix v(std::size_t{1} << num_qubits, 1);
  if (index >= v.rows()) throw DimensionMismatch("basis index out of range");
  v(index, 0) = 1.0;
  return PureState(std::move(v));
}

DensityMatrix::DensityMatrix(ComplexMatrix mat) : mat_(std::move(mat)), num_qubits_(0) {
  if (!mat_.is_square()) throw DimensionMismatch("density matrix must be square");
  num_qubits_ = qubits_for_dim(mat_.rows());
  if (!all_finite(mat_)) throw InvalidState("density matrix has non-finite entries");
  if (hermitian_deviation(mat_) > kHermitianTol) throw InvalidState("density matrix is not Hermitian");
  if (std::abs(mat_.trace() - Complex(1.0)) > kTraceTol) throw InvalidState("density matrix trace is not one");
}

DensityMatrix DensityMatrix::validated(ComplexMatrix mat) {
  DensityMatrix rho(std::move(mat));
  if (min_eigenvalue(rho.mat()) < -kPsdTol) throw InvalidState("density matrix is not positive semidefinite");
  return rho;
}

PureState kron(const PureState& a, const PureState& b) { return PureState(kron(a.vec(), b.vec())); }

PureState apply(const ComplexMatrix& u, const PureState& psi) {
  ComplexMatrix v = u * psi.vec();
  // Unitaries preserve the norm only up to rounding; renormalize so chains
  // of applications cannot drift out of tolerance.
  return PureState::normalized(v.data());
}

Complex inner(const PureState& a, const PureState& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("inner product of states of different size");
  Complex s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a.amplitude(i)) * b.amplitude(i);
  return s;
}

DensityMatrix projector(const PureState& psi) {
  const std::size_t n = psi.dim();
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = std::norm(psi.amplitude(i));
    for (std::size_t j = i + 1; j < n; ++j) {
      m(i, j) = psi.amplitude(i) * std::conj(psi.amplitude(j));
      m(j, i) = std::conj(m(i, j));
    }
  }
  // Diagonal sums to |psi|^2, which PureState guarantees to 1e-10.
  return DensityMatrix(std::move(m));
}

DensityMatrix mixture(std::span<const double> weights, std::span<const DensityMatrix> states) {
  if (weights.size() != states.size() || states.empty()) throw DimensionMismatch("mixture needs one weight per state");
  ComplexMatrix m(states.front().dim(), states.front().dim());
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (weights[i] < 0.0) throw InvalidState("mixture weights must be nonnegative");
    m += states[i].mat() * Complex(weights[i]);
  }
  return DensityMatrix(std::move(m));
}

double negativity(const DensityMatrix& rho, std::size_t qubit) {
  const std::vector<std::size_t> dims(rho.num_qubits(), 2);
  const ComplexMatrix pt = partial_transpose(rho.mat(), qubit, dims);
  return std::max(0.0, 0.5 * (trace_norm(pt) - pt.trace().real()));
}

std::vector<double> bipartition_negativities(const DensityMatrix& rho) {
  std::vector<double> out;
  out.reserve(rho.num_qubits());
  for (std::size_t k = 0; k < rho.num_qubits(); ++k) out.push_back(negativity(rho, k));
  return out;
}

double purity(const DensityMatrix& rho) {
  // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
  double s = 0.0;
  for (const auto& x : rho.mat().data()) s += std::norm(x);
  return s;
}

std::size_t numerical_rank(const DensityMatrix& rho, double tol) {
  const auto spec = hermitian_eigenvalues(rho.mat());
  return static_cast<std::size_t>(
      std::count_if(spec.eigenvalues.begin(), spec.eigenvalues.end(), [tol](double x) { return x > tol; }));
}

double min_eigenvalue(const ComplexMatrix& h) { return hermitian_eigenvalues(h).eigenvalues.back(); }

}  // namespace entdetect::qlinalg
