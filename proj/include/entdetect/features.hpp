#pragma once

#include <span>
#include <vector>

#include "entdetect/qlinalg.hpp"

namespace entdetect::pipeline {

enum class SourceKind { density, purevec };

struct FeatureVector {
  std::vector<double> values;
  SourceKind source_kind = SourceKind::density;
};

/// Packs a Hermitian 2^N x 2^N matrix into 4^N reals: Re(rho_ii) for each i
/// ascending, then Re(rho_ij), Im(rho_ij) for each i < j in row-major order.
FeatureVector featurize_density(const qlinalg::DensityMatrix& rho);
/// Inverse of featurize_density. The lower triangle is filled by conjugation.
qlinalg::ComplexMatrix defeaturize_density(std::span<const double> values);

/// Interleaved (Re c_k, Im c_k) over amplitudes in lexicographic basis order.
/// No global-phase gauge is applied.
FeatureVector featurize_purevec(const qlinalg::PureState& psi);
qlinalg::ComplexMatrix defeaturize_purevec(std::span<const double> values);

}  // namespace entdetect::pipeline
