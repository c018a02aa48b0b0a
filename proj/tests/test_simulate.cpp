#include <doctest.h>

#include <random>
#include <sstream>

#include "consync/errors.hpp"
#include "consync/graph.hpp"
#include "consync/simulate.hpp"
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

Eigen::VectorXd xhat_k3() {
  Eigen::VectorXd x(4);
  x << -1.3077, -0.4336, 0.3426, 3.5784;
  return x;
}

Eigen::MatrixXd k3_laplacian() { return mat(3, 3, {2, -1, -1, -1, 2, -1, -1, -1, 2}); }

}  // namespace

TEST_CASE("modal basis diagonalizes the Laplacian") {
  const Eigen::MatrixXd L =
      laplacian(WeightedGraph(5, {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {1, 3}}),
                Eigen::VectorXd::LinSpaced(5, 0.5, 1.5));
  const Eigen::MatrixXd T = modal_basis(L);
  CHECK((T.transpose() * T - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-12);
  CHECK((T.col(0) - Eigen::VectorXd::Constant(5, 1.0 / std::sqrt(5.0))).norm() < 1e-12);
  const Eigen::MatrixXd D = T.transpose() * L * T;
  CHECK((D - Eigen::MatrixXd(D.diagonal().asDiagonal())).norm() < 1e-12);
  CHECK(std::abs(D(0, 0)) < 1e-12);
}

TEST_CASE("modal coordinates round-trip") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  const Eigen::MatrixXd L = laplacian(WeightedGraph(4, {{1, 2}, {2, 3}, {3, 4}, {1, 4}}));
  Eigen::VectorXd X0(8);
  for (auto& x : X0) x = g(rng);
  const ModalSplit m = transform_initial(X0, L, 2);
  CHECK((initial_from_modes(m.xhat0, L, 2, m.xbar) - X0).norm() < 1e-12);
  CHECK((m.xbar - X0.reshaped(2, 4).rowwise().sum() / 2.0).norm() < 1e-12);  // √N·mean
  CHECK_THROWS_AS(transform_initial(Eigen::VectorXd::Zero(7), L, 2), InputError);
}

TEST_CASE("disagreement is the largest pairwise distance") {
  Eigen::VectorXd X(6);
  X << 0, 0, 3, 4, 1, 0;
  CHECK(disagreement(X, 2) == doctest::Approx(5.0));
}

TEST_CASE("RK4 trajectory matches the matrix exponential") {
  const Eigen::MatrixXd L = k3_laplacian();
  const Eigen::MatrixXd P = solve_are(make_system(kA, kB));
  const Eigen::MatrixXd K = control_gain(P, kB, 3.0);
  const Eigen::VectorXd X0 = initial_from_modes(xhat_k3(), L, 2);
  const Eigen::MatrixXd Acl = closed_loop_matrix(kA, kB, K, L);
  for (bool split : {false, true}) {
    IntegrateOptions opts;
    opts.split_consensus = split;
    const SimulationResult r = integrate(Acl, X0, 2.0, 1e-3, 2, opts);
    CHECK(r.times.back() == doctest::Approx(2.0));
    const Eigen::VectorXd ref = oracle::closed_loop_state(kA, kB * K, L, X0, 2.0);
    CHECK((r.states.back() - ref).norm() < 1e-9 * (1.0 + ref.norm()));
  }
}

TEST_CASE("closed-loop energy on the triangle") {
  const Eigen::MatrixXd L = k3_laplacian();
  const SystemModel sys = make_system(kA, kB);
  const Eigen::MatrixXd P = solve_are(sys);
  const SimulationResult r = simulate_closed_loop(sys, L, P, initial_from_modes(xhat_k3(), L, 2));
  const double J_ref =
      oracle::energy(oracle::energy_blocks(kA, kB, P, oracle::normalized_spectrum(L)), xhat_k3());
  CHECK(r.J_analytic == doctest::Approx(J_ref).epsilon(1e-9));
  CHECK(r.J_numeric == doctest::Approx(J_ref).epsilon(1e-4));
  CHECK(r.disagreement.back() <= 1e-6 * r.disagreement.front());
  CHECK(r.u_norm_sq.size() == r.times.size());
}

TEST_CASE("a nonzero consensus component does not disturb the energy") {
  // The consensus mode of A grows like eᵗ, yet it carries no control effort.
  const Eigen::MatrixXd L = k3_laplacian();
  const SystemModel sys = make_system(kA, kB);
  const Eigen::MatrixXd P = solve_are(sys);
  Eigen::VectorXd xbar(2);
  xbar << 1e-3, -2e-3;
  const Eigen::VectorXd X0 = initial_from_modes(xhat_k3(), L, 2, xbar);
  const SimulationResult r = simulate_closed_loop(sys, L, P, X0);
  CHECK(r.J_numeric == doctest::Approx(r.J_analytic).epsilon(1e-4));
}

TEST_CASE("energy needs a horizon long enough for the disagreement to decay") {
  const Eigen::MatrixXd L = k3_laplacian();
  const Eigen::MatrixXd P = solve_are(make_system(kA, kB));
  const Eigen::MatrixXd K = control_gain(P, kB, 3.0);
  SimulationResult r =
      integrate(closed_loop_matrix(kA, kB, K, L), initial_from_modes(xhat_k3(), L, 2), 1.0, 1e-3, 2);
  CHECK_THROWS_AS(measure_energy(r, L, K), InputError);
}

TEST_CASE("unstable closed loop is reported") {
  const Eigen::MatrixXd L = k3_laplacian();
  const Eigen::MatrixXd Acl = closed_loop_matrix(kA, kB, Eigen::MatrixXd::Zero(1, 2), L);
  Eigen::VectorXd X0 = Eigen::VectorXd::Ones(6);
  CHECK_THROWS_AS(integrate(Acl, X0, 40.0, 1e-2, 2), NumericalError);
}

TEST_CASE("energy grows with the state weight ε") {
  const std::vector<double> eps{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  const auto rows = epsilon_sweep(kA, kB, xhat_k3(), k3_laplacian(), eps);
  REQUIRE(rows.size() == eps.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Eigen::MatrixXd Q = eps[k] * Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd P = oracle::are_sign_function(kA, kB, Q);
    const double J = oracle::energy(oracle::energy_blocks(kA, kB, P, {1.0, 1.0}), xhat_k3());
    CHECK(rows[k].second == doctest::Approx(J).epsilon(1e-8));
    if (k > 0) CHECK(rows[k].second >= rows[k - 1].second);
  }
}

TEST_CASE("trajectory file") {
  const Eigen::MatrixXd L = k3_laplacian();
  const SystemModel sys = make_system(kA, kB);
  const SimulationResult r =
      simulate_closed_loop(sys, L, solve_are(sys), initial_from_modes(xhat_k3(), L, 2));
  std::ostringstream out;
  write_trajectory_csv(out, r, 2, 1000);
  const std::string s = out.str();
  CHECK(s.rfind("t,x_1_1,x_1_2,x_2_1,x_2_2,x_3_1,x_3_2,disagreement,u_norm_sq\n0,", 0) == 0);
  // Every 1000th sample plus the final one, then the energy summary.
  const std::size_t samples = (r.times.size() - 1) / 1000 + 1 + ((r.times.size() - 1) % 1000 ? 1 : 0);
  const std::size_t blank = s.find("\n\n");
  REQUIRE(blank != std::string::npos);
  CHECK(static_cast<std::size_t>(std::count(s.begin(), s.begin() + blank, '\n')) == samples);
  CHECK(s.substr(blank).rfind("\n\nJ_numeric,J_analytic\n", 0) == 0);
  CHECK_THROWS_AS(write_trajectory_csv(out, r, 2, 0), InputError);
}
