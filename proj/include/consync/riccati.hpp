#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace consync {

// Identical agent dynamics ẋ = Ax + Bu and the state weight Q of the
// Riccati equation.
struct SystemModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd Q;  // zero if not given

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }

  // Throws InputError on shape problems, ModelError if (A, B) is not
  // stabilizable, A has imaginary-axis eigenvalues, or Q is indefinite.
  void validate() const;
};

SystemModel make_system(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd Q = {});

// Sections introduced by a line holding just `A`, `B` or `Q`, followed by rows
// of whitespace-separated numbers.
SystemModel read_system(std::istream& in);
SystemModel read_system_file(const std::string& path);

struct ControllerSpec {
  Eigen::MatrixXd P;
  Eigen::MatrixXd K;
  double lambda2 = 1.0;
};

double spectral_abscissa(const Eigen::MatrixXd& M);
bool is_stabilizable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

// Stabilizing solution of AᵀP + PA − PBBᵀP + Q = 0.
Eigen::MatrixXd solve_are(const SystemModel& sys);
double are_residual(const SystemModel& sys, const Eigen::MatrixXd& P);

// K = −(1/λ₂) BᵀP.
Eigen::MatrixXd control_gain(const Eigen::MatrixXd& P, const Eigen::MatrixXd& B, double lambda2);
ControllerSpec synthesize_controller(const SystemModel& sys, double lambda2);

// Solves AclᵀH + H·Acl = −W for Hurwitz Acl.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& Acl, const Eigen::MatrixXd& W);

struct EnergyBlocks {
  std::vector<double> sigmas;          // σ_i = λ_i/λ₂, i = 2…N
  std::vector<Eigen::MatrixXd> blocks;  // H_i
  double J_analytic = 0.0;
};

// σ_i = λ_i/λ₂ for i = 2…N of a connected Laplacian.
std::vector<double> normalized_spectrum(const Eigen::MatrixXd& L);

// H_i solves (A − σ_iBBᵀP)ᵀH + H(A − σ_iBBᵀP) = −σ_i² PBBᵀP.
EnergyBlocks energy_blocks(const SystemModel& sys, const Eigen::MatrixXd& P,
                           const std::vector<double>& sigmas);

// J = Σ_i x̂_iᵀ H_i x̂_i with x̂₀ stacked mode by mode.  Also stores J in blocks.
double energy_cost(EnergyBlocks& blocks, const Eigen::VectorXd& xhat0);
double energy_cost(const EnergyBlocks& blocks, const Eigen::VectorXd& xhat0);

// Smallest eigenvalues of H − P₀ and σ²/(2σ−1)·P − H; both are ≥ 0 when the
// interval bound holds.
struct BoundSlack {
  double lower = 0.0;
  double upper = 0.0;
};
BoundSlack interval_slack(const Eigen::MatrixXd& H, const Eigen::MatrixXd& P0,
                          const Eigen::MatrixXd& P, double sigma);

}  // namespace consync
