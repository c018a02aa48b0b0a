#pragma once

#include <Eigen/Dense>

namespace consync {

// Length of svec for a d×d symmetric matrix.
inline Eigen::Index svec_dim(Eigen::Index d) { return d * (d + 1) / 2; }

// Column-major lower triangle with off-diagonals scaled by √2, so that
// tr(DG) = svec(D)ᵀ svec(G).
Eigen::VectorXd svec(const Eigen::MatrixXd& M);
Eigen::MatrixXd smat(const Eigen::VectorXd& v);

// Matrix of the operator svec(G) ↦ ½ svec(R2 G R1ᵀ + R1 G R2ᵀ).
Eigen::MatrixXd sym_kron(const Eigen::MatrixXd& R1, const Eigen::MatrixXd& R2);

// Matrix of (Φ ⊗ₛ I)⁻¹ for symmetric positive definite Φ.  Built from the
// eigenbasis of Φ (each column solves a Lyapunov equation ΦX + XΦ = 2Y) rather
// than by inverting sym_kron(Φ, I), which loses accuracy as Φ approaches
// the boundary of the cone.
Eigen::MatrixXd sym_kron_identity_inverse(const Eigen::MatrixXd& Phi);

}  // namespace consync
