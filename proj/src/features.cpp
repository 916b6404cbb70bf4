#include "entdetect/features.hpp"

#include <bit>
#include <cmath>

#include "entdetect/error.hpp"

namespace entdetect::pipeline {

using qlinalg::Complex;
using qlinalg::ComplexMatrix;

FeatureVector featurize_density(const qlinalg::DensityMatrix& rho) {
  const auto& m = rho.mat();
  const std::size_t n = m.rows();
  FeatureVector fv;
  fv.source_kind = SourceKind::density;
  fv.values.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) fv.values.push_back(m(i, i).real());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      fv.values.push_back(m(i, j).real());
      fv.values.push_back(m(i, j).imag());
    }
  }
  return fv;
}

ComplexMatrix defeaturize_density(std::span<const double> values) {
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(values.size()))));
  if (n == 0 || n * n != values.size()) throw WidthMismatch("density feature width is not a perfect square");
  ComplexMatrix m(n, n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) m(i, i) = values[k++];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      m(i, j) = Complex(values[k], values[k + 1]);
      m(j, i) = std::conj(m(i, j));
      k += 2;
    }
  }
  return m;
}

FeatureVector featurize_purevec(const qlinalg::PureState& psi) {
  FeatureVector fv;
  fv.source_kind = SourceKind::purevec;
  fv.values.reserve(2 * psi.dim());
  for (std::size_t i = 0; i < psi.dim(); ++i) {
    fv.values.push_back(psi.amplitude(i).real());
    fv.values.push_back(psi.amplitude(i).imag());
  }
  return fv;
}

ComplexMatrix defeaturize_purevec(std::span<const double> values) {
  if (values.empty() || values.size() % 2 != 0 || !std::has_single_bit(values.size() / 2)) {
    throw WidthMismatch("state-vector feature width must be 2^(N+1)");
  }
  ComplexMatrix v(values.size() / 2, 1);
  for (std::size_t i = 0; i < v.rows(); ++i) v(i, 0) = Complex(values[2 * i], values[2 * i + 1]);
  return v;
}

}  // namespace entdetect::pipeline
