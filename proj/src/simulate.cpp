#include "consync/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "consync/errors.hpp"
#include "consync/graph.hpp"
#include "consync/text_io.hpp"

namespace consync {

Eigen::MatrixXd closed_loop_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                   const Eigen::MatrixXd& K, const Eigen::MatrixXd& L) {
  const Eigen::Index n = A.rows(), N = L.rows();
  if (A.cols() != n || B.rows() != n || K.rows() != B.cols() || K.cols() != n || L.cols() != N) {
    throw InputError("closed_loop_matrix: dimension mismatch");
  }
  const Eigen::MatrixXd BK = B * K;
  Eigen::MatrixXd Acl = Eigen::MatrixXd::Zero(N * n, N * n);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      auto blk = Acl.block(i * n, j * n, n, n);
      if (i == j) blk += A;
      if (L(i, j) != 0.0) blk += L(i, j) * BK;
    }
  }
  return Acl;
}

Eigen::MatrixXd modal_basis(const Eigen::MatrixXd& L) {
  const Eigen::Index N = L.rows();
  const SpectralSummary s = spectrum(L);
  if (N > 1 && !s.synchronizability) {
    throw InputError("Laplacian has a repeated zero eigenvalue (graph not connected)");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  Eigen::MatrixXd T(N, N);
  T.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(N)));
  for (Eigen::Index k = 1; k < N; ++k) {
    Eigen::VectorXd v = es.eigenvectors().col(k);
    v -= v.mean() * Eigen::VectorXd::Ones(N);  // remove roundoff along 𝟙
    for (Eigen::Index j = 1; j < k; ++j) v -= T.col(j).dot(v) * T.col(j);
    v.normalize();
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    T.col(k) = v;
  }
  return T;
}

ModalSplit transform_initial(const Eigen::VectorXd& X0, const Eigen::MatrixXd& L, int n) {
  const Eigen::Index N = L.rows();
  if (n < 1 || X0.size() != N * n) throw InputError("transform_initial: X0 has wrong length");
  const Eigen::MatrixXd T = modal_basis(L);
  const Eigen::Map<const Eigen::MatrixXd> X(X0.data(), n, N);  // column i = agent i
  const Eigen::MatrixXd Xt = X * T;                             // column k = mode k
  ModalSplit out;
  out.xbar = Xt.col(0);
  out.xhat0.resize((N - 1) * n);
  for (Eigen::Index k = 1; k < N; ++k) out.xhat0.segment((k - 1) * n, n) = Xt.col(k);
  return out;
}

Eigen::VectorXd initial_from_modes(const Eigen::VectorXd& xhat0, const Eigen::MatrixXd& L, int n,
                                   const Eigen::VectorXd& xbar) {
  const Eigen::Index N = L.rows();
  if (n < 1 || xhat0.size() != (N - 1) * n) throw InputError("x̂₀ has wrong length");
  if (xbar.size() != 0 && xbar.size() != n) throw InputError("x̄ has wrong length");
  const Eigen::MatrixXd T = modal_basis(L);
  Eigen::MatrixXd Xt = Eigen::MatrixXd::Zero(n, N);
  if (xbar.size()) Xt.col(0) = xbar;
  for (Eigen::Index k = 1; k < N; ++k) Xt.col(k) = xhat0.segment((k - 1) * n, n);
  const Eigen::MatrixXd X = Xt * T.transpose();
  return Eigen::Map<const Eigen::VectorXd>(X.data(), N * n);
}

double disagreement(const Eigen::VectorXd& X, int n) {
  const Eigen::Index N = X.size() / n;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = i + 1; j < N; ++j) {
      worst = std::max(worst, (X.segment(i * n, n) - X.segment(j * n, n)).norm());
    }
  }
  return worst;
}

namespace {

// X ↦ 𝟙 ⊗ mean_i(x_i)
Eigen::VectorXd consensus_part(const Eigen::VectorXd& X, int n) {
  const Eigen::Index N = X.size() / n;
  const Eigen::Map<const Eigen::MatrixXd> M(X.data(), n, N);
  const Eigen::VectorXd mean = M.rowwise().mean();
  return mean.replicate(N, 1);
}

}  // namespace

SimulationResult integrate(const Eigen::MatrixXd& Acl, const Eigen::VectorXd& X0, double horizon,
                           double dt, int n, const IntegrateOptions& opts) {
  if (!(dt > 0.0) || !(horizon >= dt)) throw InputError("integrate: need dt > 0 and T_f ≥ dt");
  if (Acl.rows() != X0.size() || Acl.cols() != X0.size() || n < 1 || X0.size() % n != 0) {
    throw InputError("integrate: dimension mismatch");
  }
  const Eigen::Index d = X0.size();
  const Eigen::MatrixXd hA = dt * Acl;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd step = I + hA * (I + hA * (I / 2.0 + hA * (I / 6.0 + hA / 24.0)));
  if (opts.split_consensus) {
    // Invariance check on the basis vectors 𝟙 ⊗ e_c.
    for (int c = 0; c < n; ++c) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
      for (Eigen::Index i = 0; i < d / n; ++i) v(i * n + c) = 1.0;
      const Eigen::VectorXd w = Acl * v;
      if ((w - consensus_part(w, n)).norm() > 1e-9 * (1.0 + Acl.norm())) {
        throw InputError("integrate: consensus subspace is not invariant under Acl");
      }
    }
  }
  const auto steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
  SimulationResult r;
  Eigen::VectorXd Xc = opts.split_consensus ? consensus_part(X0, n) : Eigen::VectorXd::Zero(d);
  // A consensus component at roundoff level (e.g. X₀ assembled from modal
  // coordinates with x̄ = 0) is dropped rather than amplified by an unstable A.
  if (Xc.norm() <= 1e-13 * X0.norm()) Xc.setZero();
  Eigen::VectorXd Xd = X0 - Xc;
  const double d0 = disagreement(X0, n);
  for (long k = 0;; ++k) {
    const Eigen::VectorXd X = Xc + Xd;
    r.times.push_back(static_cast<double>(k) * dt);
    r.states.push_back(X);
    r.disagreement.push_back(disagreement(X, n));
    if (k == steps) break;
    if (opts.stop_decay > 0.0 && r.disagreement.back() <= opts.stop_decay * d0) break;
    Xd = step * Xd;
    if (opts.split_consensus) {
      Xc = step * Xc;
      Xc = consensus_part(Xc, n);
      Xd -= consensus_part(Xd, n);
    }
    if (!Xd.allFinite() || !Xc.allFinite() || (Xc + Xd).norm() > 1e12) {
      throw NumericalError("simulation diverged at t=" + format_double((k + 1) * dt, 6));
    }
  }
  return r;
}

double measure_energy(SimulationResult& traj, const Eigen::MatrixXd& L, const Eigen::MatrixXd& K,
                      double decay_tol) {
  if (traj.states.empty()) throw InputError("measure_energy: empty trajectory");
  const Eigen::Index N = L.rows(), n = K.cols();
  if (traj.states.front().size() != N * n) throw InputError("measure_energy: dimension mismatch");
  const double d0 = traj.disagreement.front();
  if (traj.disagreement.back() > decay_tol * d0) {
    throw InputError("horizon too short: disagreement decayed only to " +
                     format_double(traj.disagreement.back() / d0, 3) +
                     " of its initial value; use a longer T_f");
  }
  traj.u_norm_sq.resize(traj.states.size());
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const Eigen::Map<const Eigen::MatrixXd> X(traj.states[k].data(), n, N);
    const Eigen::MatrixXd U = K * X * L;  // column i = Σ_j L_ij K x_j (L symmetric)
    traj.u_norm_sq[k] = U.squaredNorm();
  }
  double J = 0.0;
  for (std::size_t k = 1; k < traj.times.size(); ++k) {
    J += 0.5 * (traj.times[k] - traj.times[k - 1]) * (traj.u_norm_sq[k] + traj.u_norm_sq[k - 1]);
  }
  traj.J_numeric = J;
  return J;
}

SimulationResult simulate_closed_loop(const SystemModel& sys, const Eigen::MatrixXd& L,
                                      const Eigen::MatrixXd& P, const Eigen::VectorXd& X0,
                                      const SimulateOptions& opts) {
  const SpectralSummary s = spectrum(L);
  const Eigen::MatrixXd K = control_gain(P, sys.B, s.lambda2);
  const Eigen::MatrixXd Acl = closed_loop_matrix(sys.A, sys.B, K, L);
  const int n = sys.n();

  const double d0 = disagreement(X0, n);
  IntegrateOptions io;
  io.split_consensus = true;
  io.stop_decay = opts.decay_tol;
  SimulationResult r = d0 == 0.0 ? integrate(Acl, X0, opts.dt, opts.dt, n, io)
                                 : integrate(Acl, X0, opts.max_horizon, opts.dt, n, io);
  measure_energy(r, L, K, d0 == 0.0 ? 1.0 : opts.decay_tol);
  const ModalSplit split = transform_initial(X0, L, n);
  EnergyBlocks eb = energy_blocks(sys, P, normalized_spectrum(L));
  r.J_analytic = energy_cost(eb, split.xhat0);
  return r;
}

std::vector<std::pair<double, double>> epsilon_sweep(const Eigen::MatrixXd& A,
                                                     const Eigen::MatrixXd& B,
                                                     const Eigen::VectorXd& xhat0,
                                                     const Eigen::MatrixXd& L,
                                                     const std::vector<double>& epsilons) {
  const std::vector<double> sigmas = normalized_spectrum(L);
  std::vector<std::pair<double, double>> out;
  for (double eps : epsilons) {
    if (eps < 0.0) throw InputError("ε must be non-negative");
    const SystemModel sys =
        make_system(A, B, eps * Eigen::MatrixXd::Identity(A.rows(), A.rows()));
    EnergyBlocks eb = energy_blocks(sys, solve_are(sys), sigmas);
    out.emplace_back(eps, energy_cost(eb, xhat0));
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, const SimulationResult& r, int n, int stride) {
  if (stride < 1) throw InputError("stride must be positive");
  if (r.states.empty()) return;
  const Eigen::Index N = r.states.front().size() / n;
  out << "t";
  for (Eigen::Index i = 1; i <= N; ++i) {
    for (int c = 1; c <= n; ++c) out << ",x_" << i << "_" << c;
  }
  out << ",disagreement,u_norm_sq\n";
  for (std::size_t k = 0; k < r.states.size(); ++k) {
    if (k % static_cast<std::size_t>(stride) != 0 && k + 1 != r.states.size()) continue;
    out << format_double(r.times[k]);
    for (Eigen::Index j = 0; j < r.states[k].size(); ++j) out << "," << format_double(r.states[k](j));
    out << "," << format_double(r.disagreement[k]) << ","
        << format_double(k < r.u_norm_sq.size() ? r.u_norm_sq[k] : 0.0) << "\n";
  }
  out << "\nJ_numeric,J_analytic\n"
      << format_double(r.J_numeric) << "," << format_double(r.J_analytic) << "\n";
}

}  // namespace consync
