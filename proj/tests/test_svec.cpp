#include <doctest.h>

#include <random>

#include "consync/errors.hpp"
#include "consync/svec.hpp"

using namespace consync;

namespace {

Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd X(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) X(i, j) = X(j, i) = g(rng);
  }
  return X;
}

Eigen::MatrixXd random_pd(std::mt19937_64& rng, int n) {
  const Eigen::MatrixXd F = random_symmetric(rng, n);
  return F * F + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("svec turns trace inner products into dot products") {
  std::mt19937_64 rng(1);
  for (int n = 1; n <= 6; ++n) {
    const Eigen::MatrixXd X = random_symmetric(rng, n), Y = random_symmetric(rng, n);
    CHECK(svec(X).size() == svec_dim(n));
    CHECK(svec(X).dot(svec(Y)) == doctest::Approx((X * Y).trace()).epsilon(1e-12));
    CHECK((smat(svec(X)) - X).norm() < 1e-14);
  }
}

TEST_CASE("svec and smat validate their input") {
  Eigen::MatrixXd A(2, 2);
  A << 1, 2, 3, 4;
  CHECK_THROWS_AS(svec(A), InputError);
  CHECK_THROWS_AS(smat(Eigen::VectorXd::Zero(4)), InputError);
}

TEST_CASE("symmetric Kronecker product acts as ½(R₂GR₁ᵀ + R₁GR₂ᵀ)") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int n = 1; n <= 5; ++n) {
    Eigen::MatrixXd R1(n, n), R2(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        R1(i, j) = g(rng);
        R2(i, j) = g(rng);
      }
    }
    const Eigen::MatrixXd G = random_symmetric(rng, n);
    const Eigen::VectorXd lhs = sym_kron(R1, R2) * svec(G);
    const Eigen::MatrixXd M = 0.5 * (R2 * G * R1.transpose() + R1 * G * R2.transpose());
    CHECK((lhs - svec(M)).norm() < 1e-12 * (1.0 + M.norm()));
    CHECK((sym_kron(R1, R2) - sym_kron(R2, R1)).norm() < 1e-13);
  }
}

TEST_CASE("inverse of Φ ⊗ₛ I") {
  std::mt19937_64 rng(3);
  for (int n = 1; n <= 6; ++n) {
    const Eigen::MatrixXd Phi = random_pd(rng, n);
    const Eigen::MatrixXd K = sym_kron(Phi, Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd Kinv = sym_kron_identity_inverse(Phi);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(K.rows(), K.cols());
    CHECK((K * Kinv - I).norm() < 1e-10);
  }
  Eigen::MatrixXd indefinite = Eigen::MatrixXd::Identity(3, 3);
  indefinite(2, 2) = -1.0;
  CHECK_THROWS_AS(sym_kron_identity_inverse(indefinite), NumericalError);
}
