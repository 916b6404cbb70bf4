#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "entdetect/nn.hpp"

namespace nn_reference {

using MatD = Eigen::MatrixXd;
using entdetect::nn::Mlp;
using entdetect::nn::OutputKind;

// Plain reference forward pass and mean loss, written independently of the
// library's backward pass.
inline double reference_loss(const Mlp<double>& m, const MatD& x, const std::vector<int>& y) {
  MatD a = x;
  const auto& p = m.params();
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    MatD z = p.weights[l] * a;
    for (Eigen::Index j = 0; j < z.cols(); ++j) z.col(j) += p.biases[l];
    a = l + 1 < p.weights.size() ? MatD(z.cwiseMax(0.0)) : z;
  }
  double total = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const int label = y[static_cast<std::size_t>(j)];
    if (m.head() == OutputKind::sigmoid) {
      const double s = 1.0 / (1.0 + std::exp(-a(0, j)));
      total += label == 1 ? -std::log(s) : -std::log(1.0 - s);
    } else {
      const double mx = a.col(j).maxCoeff();
      const double lse = mx + std::log((a.col(j).array() - mx).exp().sum());
      total += lse - a(label, j);
    }
  }
  return total / static_cast<double>(a.cols());
}

inline double gradient_relative_error(Mlp<double> m, const MatD& x, const std::vector<int>& y) {
  const auto g = entdetect::nn::backward(m, x, y);
  const double h = 1e-6;
  double diff2 = 0.0, sum2 = 0.0;
  auto probe = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = reference_loss(m, x, y);
    param = saved - h;
    const double down = reference_loss(m, x, y);
    param = saved;
    const double numeric = (up - down) / (2 * h);
    diff2 += (analytic - numeric) * (analytic - numeric);
    sum2 += (analytic + numeric) * (analytic + numeric);
  };
  for (std::size_t l = 0; l < m.num_weight_layers(); ++l) {
    auto& w = m.params().weights[l];
    for (Eigen::Index i = 0; i < w.size(); ++i) probe(w.data()[i], g.grads.weights[l].data()[i]);
    auto& b = m.params().biases[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) probe(b.data()[i], g.grads.biases[l].data()[i]);
  }
  return std::sqrt(diff2) / std::max(std::sqrt(sum2), 1e-12);
}

}  // namespace nn_reference
