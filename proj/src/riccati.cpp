#include "consync/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <istream>
#include <limits>
#include <map>

#include <Eigen/Eigenvalues>

#include "consync/errors.hpp"
#include "consync/graph.hpp"
#include "consync/text_io.hpp"

namespace consync {

namespace {

using CMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

double min_eig(const Eigen::MatrixXd& X) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (X + X.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Swaps diagonal entries k and k+1 of the upper-triangular T with a unitary
// rotation, updating the Schur vectors U.
void swap_adjacent(CMatrix& T, CMatrix& U, Eigen::Index k) {
  const Complex a = T(k, k), b = T(k, k + 1), c = T(k + 1, k + 1);
  Complex v1 = b, v2 = c - a;
  const double nrm = std::hypot(std::abs(v1), std::abs(v2));
  if (nrm == 0.0) return;  // equal eigenvalues with a zero coupling: nothing to do
  v1 /= nrm;
  v2 /= nrm;
  Eigen::Matrix2cd G;
  G << v1, -std::conj(v2), v2, std::conj(v1);
  T.middleRows(k, 2) = G.adjoint() * T.middleRows(k, 2);
  T.middleCols(k, 2) = T.middleCols(k, 2) * G;
  U.middleCols(k, 2) = U.middleCols(k, 2) * G;
  T(k + 1, k) = 0.0;
}

Eigen::MatrixXd are_by_schur(const SystemModel& sys) {
  const int n = sys.n();
  const Eigen::MatrixXd BBt = sys.B * sys.B.transpose();
  Eigen::MatrixXd H(2 * n, 2 * n);
  H << sys.A, -BBt, -sys.Q, -sys.A.transpose();
  Eigen::ComplexSchur<Eigen::MatrixXd> schur(H);
  if (schur.info() != Eigen::Success) throw NumericalError("Schur decomposition failed");
  CMatrix T = schur.matrixT();
  CMatrix U = schur.matrixU();
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (std::abs(T(i, i).real()) < 1e-9 * scale) {
      throw NumericalError("Hamiltonian has eigenvalues on the imaginary axis");
    }
  }
  Eigen::Index next = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (T(i, i).real() < 0.0) {
      for (Eigen::Index k = i - 1; k >= next; --k) swap_adjacent(T, U, k);
      ++next;
    }
  }
  if (next != n) throw NumericalError("Hamiltonian stable subspace has wrong dimension");
  const CMatrix U11 = U.topLeftCorner(n, n);
  const CMatrix U21 = U.bottomLeftCorner(n, n);
  Eigen::FullPivLU<CMatrix> lu(U11.transpose());
  if (!lu.isInvertible()) throw NumericalError("stable invariant subspace is not a graph");
  const CMatrix P = lu.solve(U21.transpose()).transpose();
  const Eigen::MatrixXd Pr = P.real();
  return 0.5 * (Pr + Pr.transpose());
}

// Newton–Kleinman: (A − BBᵀP_k)ᵀP_{k+1} + P_{k+1}(A − BBᵀP_k) = −Q − P_kBBᵀP_k.
Eigen::MatrixXd refine_are(const SystemModel& sys, Eigen::MatrixXd P) {
  const Eigen::MatrixXd BBt = sys.B * sys.B.transpose();
  double res = are_residual(sys, P);
  for (int it = 0; it < 20 && res > 1e-14 * (1.0 + P.squaredNorm()); ++it) {
    const Eigen::MatrixXd Acl = sys.A - BBt * P;
    if (spectral_abscissa(Acl) >= 0.0) break;
    Eigen::MatrixXd next = solve_lyapunov(Acl, sys.Q + P * BBt * P);
    const double next_res = are_residual(sys, next);
    if (!(next_res < res)) break;
    P = std::move(next);
    res = next_res;
  }
  return P;
}

}  // namespace

SystemModel make_system(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd Q) {
  SystemModel s;
  if (Q.size() == 0) Q = Eigen::MatrixXd::Zero(A.rows(), A.rows());
  s.A = std::move(A);
  s.B = std::move(B);
  s.Q = std::move(Q);
  s.validate();
  return s;
}

double spectral_abscissa(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  return es.eigenvalues().real().maxCoeff();
}

bool is_stabilizable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::Index n = A.rows();
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  const double scale = std::max(1.0, std::max(A.cwiseAbs().maxCoeff(),
                                              B.size() ? B.cwiseAbs().maxCoeff() : 0.0));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Complex lam = es.eigenvalues()(i);
    if (lam.real() < 0.0) continue;
    CMatrix M(n, n + B.cols());
    M.leftCols(n) = A.cast<Complex>() - lam * CMatrix::Identity(n, n);
    M.rightCols(B.cols()) = B.cast<Complex>();
    Eigen::JacobiSVD<CMatrix> svd(M);
    if (svd.singularValues()(n - 1) < 1e-9 * scale) return false;
  }
  return true;
}

void SystemModel::validate() const {
  if (A.rows() == 0 || A.rows() != A.cols()) throw InputError("A must be square and non-empty");
  if (B.rows() != A.rows() || B.cols() == 0) throw InputError("B must have as many rows as A");
  if (Q.rows() != A.rows() || Q.cols() != A.cols()) throw InputError("Q must match A");
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff())) {
    throw InputError("Q must be symmetric");
  }
  if (min_eig(Q) < -1e-9) throw ModelError("Q is not positive semidefinite");
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    if (std::abs(es.eigenvalues()(i).real()) < 1e-9) {
      throw ModelError("A has an eigenvalue on the imaginary axis");
    }
  }
  if (!is_stabilizable(A, B)) throw ModelError("(A, B) is not stabilizable");
}

SystemModel read_system(std::istream& in) {
  std::map<std::string, std::vector<std::vector<double>>> sections;
  std::string current;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = tokenize(strip_comment(line));
    if (toks.empty()) {
      current.clear();
      continue;
    }
    if (toks.size() == 1 && (toks[0] == "A" || toks[0] == "B" || toks[0] == "Q")) {
      current = toks[0];
      if (sections.count(current)) throw InputError("system file: duplicate section " + current);
      sections[current];
      continue;
    }
    if (current.empty()) {
      throw InputError("system file line " + std::to_string(line_no) +
                       ": numbers outside an A/B/Q section");
    }
    std::vector<double> row;
    for (const auto& t : toks) row.push_back(parse_double(t, "system file line " + std::to_string(line_no)));
    sections[current].push_back(std::move(row));
  }
  if (!sections.count("A") || !sections.count("B")) {
    throw InputError("system file needs A and B sections");
  }
  Eigen::MatrixXd Q;
  if (sections.count("Q")) Q = read_matrix_rows(sections["Q"], "Q");
  return make_system(read_matrix_rows(sections["A"], "A"), read_matrix_rows(sections["B"], "B"), Q);
}

SystemModel read_system_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open system file '" + path + "'");
  return read_system(in);
}

double are_residual(const SystemModel& sys, const Eigen::MatrixXd& P) {
  return (sys.A.transpose() * P + P * sys.A - P * sys.B * sys.B.transpose() * P + sys.Q).norm();
}

Eigen::MatrixXd solve_are(const SystemModel& sys) {
  sys.validate();
  Eigen::MatrixXd P = refine_are(sys, are_by_schur(sys));
  const Eigen::MatrixXd Acl = sys.A - sys.B * sys.B.transpose() * P;
  if (spectral_abscissa(Acl) >= -1e-9) throw NumericalError("ARE solution is not stabilizing");
  if (are_residual(sys, P) > 1e-8 * (1.0 + P.squaredNorm())) {
    throw NumericalError("ARE residual too large");
  }
  return P;
}

Eigen::MatrixXd control_gain(const Eigen::MatrixXd& P, const Eigen::MatrixXd& B, double lambda2) {
  if (!(lambda2 > 0.0)) throw InputError("λ₂ must be positive (graph not connected)");
  return -(1.0 / lambda2) * B.transpose() * P;
}

ControllerSpec synthesize_controller(const SystemModel& sys, double lambda2) {
  ControllerSpec c;
  c.P = solve_are(sys);
  c.K = control_gain(c.P, sys.B, lambda2);
  c.lambda2 = lambda2;
  return c;
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& Acl, const Eigen::MatrixXd& W) {
  const Eigen::Index n = Acl.rows();
  if (Acl.cols() != n || W.rows() != n || W.cols() != n) {
    throw InputError("solve_lyapunov: dimension mismatch");
  }
  if (spectral_abscissa(Acl) >= 0.0) throw NumericalError("solve_lyapunov: matrix is not Hurwitz");
  // vec(AᵀH + HA) = (I ⊗ Aᵀ + Aᵀ ⊗ I) vec(H) for column-major vec.
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index c = 0; c < n; ++c) {
    L.block(c * n, c * n, n, n) += Acl.transpose();
    for (Eigen::Index r = 0; r < n; ++r) {
      L.block(r * n, c * n, n, n).diagonal().array() += Acl(c, r);
    }
  }
  const Eigen::Map<const Eigen::VectorXd> w(W.data(), n * n);
  const Eigen::VectorXd h = L.partialPivLu().solve(-w);
  Eigen::MatrixXd H = Eigen::Map<const Eigen::MatrixXd>(h.data(), n, n);
  return 0.5 * (H + H.transpose());
}

std::vector<double> normalized_spectrum(const Eigen::MatrixXd& L) {
  const SpectralSummary s = spectrum(L);
  if (!s.synchronizability) throw InputError("Laplacian has λ₂ = 0 (graph not connected)");
  std::vector<double> out;
  for (Eigen::Index i = 1; i < s.eigenvalues.size(); ++i) out.push_back(s.eigenvalues(i) / s.lambda2);
  return out;
}

EnergyBlocks energy_blocks(const SystemModel& sys, const Eigen::MatrixXd& P,
                           const std::vector<double>& sigmas) {
  EnergyBlocks eb;
  eb.sigmas = sigmas;
  const Eigen::MatrixXd BBt = sys.B * sys.B.transpose();
  const Eigen::MatrixXd PBBtP = P * BBt * P;
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    const double s = sigmas[k];
    if (s < 1.0 - 1e-9) throw InputError("σ must be at least 1");
    const Eigen::MatrixXd Acl = sys.A - s * BBt * P;
    if (spectral_abscissa(Acl) >= 0.0) {
      throw NumericalError("closed loop unstable for mode i=" + std::to_string(k + 2));
    }
    eb.blocks.push_back(solve_lyapunov(Acl, s * s * PBBtP));
  }
  return eb;
}

double energy_cost(const EnergyBlocks& blocks, const Eigen::VectorXd& xhat0) {
  if (blocks.blocks.empty()) {
    if (xhat0.size() != 0) throw InputError("energy_cost: dimension mismatch");
    return 0.0;
  }
  const Eigen::Index n = blocks.blocks.front().rows();
  if (xhat0.size() != n * static_cast<Eigen::Index>(blocks.blocks.size())) {
    throw InputError("energy_cost: x̂₀ has length " + std::to_string(xhat0.size()) + ", expected " +
                     std::to_string(n * blocks.blocks.size()));
  }
  double J = 0.0;
  for (std::size_t k = 0; k < blocks.blocks.size(); ++k) {
    const Eigen::VectorXd x = xhat0.segment(static_cast<Eigen::Index>(k) * n, n);
    J += x.dot(blocks.blocks[k] * x);
  }
  return J;
}

double energy_cost(EnergyBlocks& blocks, const Eigen::VectorXd& xhat0) {
  blocks.J_analytic = energy_cost(static_cast<const EnergyBlocks&>(blocks), xhat0);
  return blocks.J_analytic;
}

BoundSlack interval_slack(const Eigen::MatrixXd& H, const Eigen::MatrixXd& P0,
                          const Eigen::MatrixXd& P, double sigma) {
  BoundSlack s;
  s.lower = min_eig(H - P0);
  s.upper = min_eig(sigma * sigma / (2.0 * sigma - 1.0) * P - H);
  return s;
}

}  // namespace consync
