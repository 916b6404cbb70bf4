#include <cmath>
#include <numbers>

#include "doctest.h"
#include "entdetect/error.hpp"
#include "entdetect/qlinalg.hpp"
#include "entdetect/rng.hpp"
#include "oracle.hpp"

using namespace entdetect;
using namespace entdetect::qlinalg;

namespace {

ComplexMatrix random_hermitian(Rng& rng, std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = rng.uniform(-1, 1);
    for (std::size_t j = i + 1; j < n; ++j) {
      m(i, j) = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
      m(j, i) = std::conj(m(i, j));
    }
  }
  return m;
}

DensityMatrix random_density(Rng& rng, std::size_t n, int terms) {
  ComplexMatrix acc(n, n);
  for (int t = 0; t < terms; ++t) {
    std::vector<Complex> amp(n);
    for (auto& a : amp) a = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const auto p = projector(PureState::normalized(amp));
    acc += p.mat() * Complex(1.0 / terms);
  }
  return DensityMatrix(acc);
}

}  // namespace

TEST_CASE("matrix arithmetic and kron") {
  const ComplexMatrix a{{1, 2}, {3, 4}};
  const ComplexMatrix b{{0, 1}, {1, 0}};
  const auto k = kron(a, b);
  CHECK(k.rows() == 4);
  CHECK(k(0, 1) == Complex(1));
  CHECK(k(3, 2) == Complex(4));
  CHECK(k(0, 3) == Complex(2));
  CHECK(k(1, 3) == Complex(0));
  CHECK((a * b)(0, 0) == Complex(2));
  CHECK(adjoint(ComplexMatrix{{Complex(0, 1), 2}, {3, 4}})(0, 0) == Complex(0, -1));
  CHECK_THROWS_AS(a * ComplexMatrix(3, 3), DimensionMismatch);
  CHECK_THROWS_AS(ComplexMatrix(0, 2), DimensionMismatch);
}

TEST_CASE("2x2 Hermitian eigenvalues match the closed form") {
  Rng rng(11);
  for (int t = 0; t < 1000; ++t) {
    const double a = rng.uniform(-2, 2), d = rng.uniform(-2, 2);
    const Complex b(rng.uniform(-2, 2), rng.uniform(-2, 2));
    const ComplexMatrix h{{a, b}, {std::conj(b), d}};
    const double mid = (a + d) / 2, rad = std::sqrt((a - d) * (a - d) / 4 + std::norm(b));
    const auto ev = hermitian_eigenvalues(h).eigenvalues;
    REQUIRE(ev.size() == 2);
    CHECK(std::abs(ev[0] - (mid + rad)) <= 1e-8 * std::max(1.0, std::abs(mid + rad)));
    CHECK(std::abs(ev[1] - (mid - rad)) <= 1e-8 * std::max(1.0, std::abs(mid - rad)));
  }
}

TEST_CASE("Hermitian eigenvalues agree with an independent solver") {
  Rng rng(12);
  for (std::size_t n : {1u, 3u, 4u, 8u}) {
    for (int t = 0; t < 50; ++t) {
      const auto h = random_hermitian(rng, n);
      const auto ev = hermitian_eigenvalues(h).eigenvalues;
      const auto ref = oracle::eigenvalues_desc(oracle::to_eigen(h));
      REQUIRE(ev.size() == n);
      for (std::size_t i = 0; i < n; ++i) CHECK(ev[i] == doctest::Approx(ref(static_cast<Eigen::Index>(i))).epsilon(1e-10));
      for (std::size_t i = 1; i < n; ++i) CHECK(ev[i - 1] >= ev[i]);
    }
  }
}

TEST_CASE("eigensolver rejects non-Hermitian input") {
  CHECK_THROWS_AS(hermitian_eigenvalues(ComplexMatrix{{1, 1}, {0, 1}}), NotHermitian);
  CHECK_THROWS_AS(hermitian_eigenvalues(ComplexMatrix(2, 3)), DimensionMismatch);
}

TEST_CASE("trace norm") {
  CHECK(trace_norm(ComplexMatrix::diagonal(std::vector<double>{0.5, -0.5, 1})) == doctest::Approx(2.0));
  // Non-Hermitian: singular values of [[0, 2], [0, 0]] are 2 and 0.
  CHECK(trace_norm(ComplexMatrix{{0, 2}, {0, 0}}) == doctest::Approx(2.0));
}

TEST_CASE("partial transpose is an involution and matches the reference") {
  Rng rng(13);
  const std::array<std::size_t, 2> dims{2, 2};
  for (int t = 0; t < 100; ++t) {
    const auto h = random_hermitian(rng, 4);
    for (std::size_t s = 0; s < 2; ++s) {
      const auto pt = partial_transpose(h, s, dims);
      CHECK(max_abs_diff(partial_transpose(pt, s, dims), h) == 0.0);
      const auto ref = oracle::pt_qubit(oracle::to_eigen(h), static_cast<int>(s), 2);
      CHECK((oracle::to_eigen(pt) - ref).norm() == 0.0);
    }
  }
}

TEST_CASE("Bell state partial transpose spectrum and negativity") {
  const double r = 1 / std::numbers::sqrt2;
  const auto bell = PureState::normalized(std::vector<Complex>{r, 0, 0, r});
  const auto rho = projector(bell);
  const std::array<std::size_t, 2> dims{2, 2};
  const auto ev = hermitian_eigenvalues(partial_transpose(rho.mat(), 0, dims)).eigenvalues;
  CHECK(ev[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ev[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ev[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ev[3] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(std::abs(negativity(rho) - 0.5) <= 1e-9);
  CHECK(std::abs(negativity(rho, 1) - 0.5) <= 1e-9);
}

TEST_CASE("product states have zero negativity") {
  Rng rng(14);
  for (int t = 0; t < 200; ++t) {
    std::vector<Complex> a{Complex(rng.uniform(-1, 1), rng.uniform(-1, 1)), Complex(rng.uniform(-1, 1), rng.uniform(-1, 1))};
    std::vector<Complex> b{Complex(rng.uniform(-1, 1), rng.uniform(-1, 1)), Complex(rng.uniform(-1, 1), rng.uniform(-1, 1))};
    const auto psi = kron(PureState::normalized(a), PureState::normalized(b));
    CHECK(negativity(projector(psi)) < 1e-9);
  }
}

TEST_CASE("negativity matches the reference on random mixed states") {
  Rng rng(15);
  for (int t = 0; t < 200; ++t) {
    const auto rho = random_density(rng, 4, 1 + t % 4);
    const double ref = oracle::negativity(oracle::to_eigen(rho.mat()), 0, 2);
    CHECK(negativity(rho) == doctest::Approx(ref).epsilon(1e-10));
    CHECK(negativity(rho) >= 0.0);
    CHECK(negativity(rho) <= 0.5 + 1e-12);
    // Transposing either qubit gives the same spectrum up to full transposition.
    CHECK(negativity(rho, 1) == doctest::Approx(negativity(rho)).epsilon(1e-10));
  }
  for (int t = 0; t < 50; ++t) {
    const auto rho = random_density(rng, 8, 1 + t % 3);
    const auto negs = bipartition_negativities(rho);
    REQUIRE(negs.size() == 3);
    for (int q = 0; q < 3; ++q) {
      CHECK(negs[static_cast<std::size_t>(q)] == doctest::Approx(oracle::negativity(oracle::to_eigen(rho.mat()), q, 3)).epsilon(1e-10));
    }
  }
}

TEST_CASE("negativity is invariant under local unitaries") {
  Rng rng(16);
  const double t = rng.uniform(0, 3);
  const ComplexMatrix u{{std::cos(t), -std::sin(t)}, {std::sin(t), std::cos(t)}};
  const ComplexMatrix v{{Complex(0, 1), 0}, {0, 1}};
  const auto local = kron(u, v);
  for (int k = 0; k < 50; ++k) {
    const auto rho = random_density(rng, 4, 2);
    const DensityMatrix rotated(local * rho.mat() * adjoint(local));
    CHECK(negativity(rotated) == doctest::Approx(negativity(rho)).epsilon(1e-10));
  }
}

TEST_CASE("state validation") {
  CHECK_THROWS_AS(PureState(ComplexMatrix::column(std::vector<Complex>{1, 1})), InvalidState);
  CHECK_THROWS_AS(PureState(ComplexMatrix::column(std::vector<Complex>{1, 0, 0})), DimensionMismatch);
  CHECK_THROWS_AS(DensityMatrix(ComplexMatrix::diagonal(std::vector<double>{0.5, 0.6})), InvalidState);
  CHECK_THROWS_AS(DensityMatrix::validated(ComplexMatrix::diagonal(std::vector<double>{1.5, -0.5})), InvalidState);
  CHECK_NOTHROW(DensityMatrix::validated(ComplexMatrix::diagonal(std::vector<double>{0.25, 0.25, 0.25, 0.25})));
}

TEST_CASE("purity and rank") {
  const DensityMatrix mixed(ComplexMatrix::diagonal(std::vector<double>{0.25, 0.25, 0.25, 0.25}));
  CHECK(purity(mixed) == doctest::Approx(0.25));
  CHECK(numerical_rank(mixed, 1e-10) == 4);
  const auto pure = projector(PureState::basis(2, 3));
  CHECK(purity(pure) == doctest::Approx(1.0));
  CHECK(numerical_rank(pure, 1e-10) == 1);
  CHECK(negativity(mixed) < 1e-12);
}
