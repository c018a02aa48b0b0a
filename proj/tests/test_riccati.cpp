#include <doctest.h>

#include <random>
#include <sstream>

#include "consync/errors.hpp"
#include "consync/riccati.hpp"
#include "oracles.hpp"

using namespace consync;

namespace {

Eigen::MatrixXd mat(int r, int c, std::initializer_list<double> v) {
  Eigen::MatrixXd M(r, c);
  auto it = v.begin();
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) M(i, j) = *it++;
  }
  return M;
}

const Eigen::MatrixXd kA = mat(2, 2, {0, 1, -1, 2});
const Eigen::MatrixXd kB = mat(2, 1, {1, 2});

}  // namespace

TEST_CASE("stabilizing solution for the two-state example") {
  const SystemModel sys = make_system(kA, kB);
  const Eigen::MatrixXd P = solve_are(sys);
  CHECK((P - mat(2, 2, {20, -8, -8, 4})).norm() < 1e-9);
  CHECK(are_residual(sys, P) < 1e-10);
  CHECK(spectral_abscissa(kA - kB * kB.transpose() * P) < 0.0);
}

TEST_CASE("scalar Riccati equations") {
  // 2aP − P² = 0: P = 2a for unstable a, P = 0 for stable a.
  CHECK(solve_are(make_system(mat(1, 1, {1}), mat(1, 1, {1})))(0, 0) == doctest::Approx(2.0));
  CHECK(solve_are(make_system(mat(1, 1, {-1}), mat(1, 1, {1})))(0, 0) ==
        doctest::Approx(0.0).epsilon(1e-12));
  // With q = 3, a = 1: P = a + √(a² + q) = 3.
  CHECK(solve_are(make_system(mat(1, 1, {1}), mat(1, 1, {1}), mat(1, 1, {3})))(0, 0) ==
        doctest::Approx(3.0));
}

TEST_CASE("Riccati solutions agree with the matrix-sign-function oracle") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 1 + trial % 4, m = 1 + trial % 2;
    const auto [A, B] = oracle::random_stabilizable(rng, n, m);
    const Eigen::MatrixXd Q = trial % 3 == 0 ? Eigen::MatrixXd::Zero(n, n) : oracle::random_psd(rng, n);
    const SystemModel sys = make_system(A, B, Q);
    const Eigen::MatrixXd P = solve_are(sys);
    const Eigen::MatrixXd Pref = oracle::are_sign_function(A, B, Q);
    CHECK((P - Pref).norm() <= 1e-7 * (1.0 + Pref.norm()));
    CHECK(oracle::min_eig(P) > -1e-9);
  }
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(make_system(mat(2, 2, {0, 1, -1, 0}), kB), ModelError);  // ±i
  CHECK_THROWS_AS(make_system(mat(2, 2, {1, 0, 0, -1}), mat(2, 1, {0, 1})), ModelError);
  CHECK_THROWS_AS(make_system(kA, kB, mat(2, 2, {1, 0, 0, -1})), ModelError);
  CHECK_THROWS_AS(make_system(kA, mat(3, 1, {1, 2, 3})), InputError);
  CHECK(is_stabilizable(mat(2, 2, {-1, 0, 0, 2}), mat(2, 1, {0, 1})));
  CHECK_FALSE(is_stabilizable(mat(2, 2, {-1, 0, 0, 2}), mat(2, 1, {1, 0})));
}

TEST_CASE("system files") {
  std::istringstream in("# model\nA\n0 1\n-1 2\nB\n1\n2\nQ\n1 0\n0 1\n");
  const SystemModel sys = read_system(in);
  CHECK((sys.A - kA).norm() == 0.0);
  CHECK((sys.B - kB).norm() == 0.0);
  CHECK(sys.Q(1, 1) == 1.0);
  std::istringstream noq("A\n0 1\n-1 2\nB\n1\n2\n");
  CHECK(read_system(noq).Q.norm() == 0.0);
  std::istringstream ragged("A\n0 1\n-1\nB\n1\n2\n");
  CHECK_THROWS_AS(read_system(ragged), InputError);
  std::istringstream missing("A\n0 1\n-1 2\n");
  CHECK_THROWS_AS(read_system(missing), InputError);
}

TEST_CASE("consensus gain") {
  const ControllerSpec c = synthesize_controller(make_system(kA, kB), 2.0);
  CHECK((c.K + 0.5 * kB.transpose() * c.P).norm() < 1e-14);
  CHECK_THROWS_AS(control_gain(c.P, kB, 0.0), InputError);
}

TEST_CASE("Lyapunov solutions agree with Smith doubling") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 15; ++trial) {
    const int n = 1 + trial % 4;
    Eigen::MatrixXd A(n, n);
    for (auto& x : A.reshaped()) x = g(rng);
    A -= (spectral_abscissa(A) + 0.3) * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd W = oracle::random_psd(rng, n);
    const Eigen::MatrixXd X = solve_lyapunov(A, W);
    const Eigen::MatrixXd Xref = oracle::lyapunov_smith(A, W);
    CHECK((X - Xref).norm() <= 1e-8 * (1.0 + Xref.norm()));
    CHECK((A.transpose() * X + X * A + W).norm() <= 1e-9 * (1.0 + W.norm()));
  }
}

TEST_CASE("energy blocks with Q = 0 have the closed form σ²/(2σ−1)·P₀") {
  const SystemModel sys = make_system(kA, kB);
  const Eigen::MatrixXd P0 = solve_are(sys);
  const std::vector<double> sigmas{1.0, 1.5, 2.0, 3.7};
  const EnergyBlocks eb = energy_blocks(sys, P0, sigmas);
  const auto ref = oracle::energy_blocks(kA, kB, P0, sigmas);
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    const double s = sigmas[k];
    CHECK((eb.blocks[k] - s * s / (2 * s - 1) * P0).norm() < 1e-8);
    CHECK((eb.blocks[k] - ref[k]).norm() < 1e-8);
  }
}

TEST_CASE("energy blocks lie in the interval [P₀, σ²/(2σ−1)·P]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(1.0, 4.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 3;
    const auto [A, B] = oracle::random_stabilizable(rng, n, 1);
    const SystemModel sys = make_system(A, B, oracle::random_psd(rng, n));
    const Eigen::MatrixXd P = solve_are(sys);
    const Eigen::MatrixXd P0 = solve_are(make_system(A, B));
    std::vector<double> sigmas{1.0, U(rng), U(rng)};
    std::sort(sigmas.begin(), sigmas.end());
    const EnergyBlocks eb = energy_blocks(sys, P, sigmas);
    for (std::size_t k = 0; k < sigmas.size(); ++k) {
      const BoundSlack sl = interval_slack(eb.blocks[k], P0, P, sigmas[k]);
      CHECK(sl.lower >= -1e-8);
      CHECK(sl.upper >= -1e-8);
    }
  }
}

TEST_CASE("energy cost of modal initial conditions") {
  const SystemModel sys = make_system(kA, kB);
  const Eigen::MatrixXd P = solve_are(sys);
  Eigen::MatrixXd L(3, 3);
  L << 2, -1, -1, -1, 2, -1, -1, -1, 2;
  EnergyBlocks eb = energy_blocks(sys, P, normalized_spectrum(L));
  Eigen::VectorXd xhat(4);
  xhat << -1.3077, -0.4336, 0.3426, 3.5784;
  // On K₃ every σ is 1 and every block equals P₀.
  const double expected = xhat.head(2).dot(P * xhat.head(2)) + xhat.tail(2).dot(P * xhat.tail(2));
  CHECK(energy_cost(eb, xhat) == doctest::Approx(expected));
  CHECK(eb.J_analytic == doctest::Approx(expected));
  CHECK_THROWS_AS(energy_cost(eb, Eigen::VectorXd::Zero(3)), InputError);
  for (double s : normalized_spectrum(L)) CHECK(s == doctest::Approx(1.0));
}
