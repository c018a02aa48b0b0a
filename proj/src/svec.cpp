#include "consync/svec.hpp"

#include <cmath>

#include "consync/errors.hpp"

namespace consync {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

Eigen::Index dim_from_svec_length(Eigen::Index len) {
  const auto d = static_cast<Eigen::Index>(std::llround((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0));
  if (svec_dim(d) != len) {
    throw InputError("smat: length " + std::to_string(len) + " is not a triangular number");
  }
  return d;
}

// Writes svec(u vᵀ + v uᵀ) * scale into `out` without forming the matrix.
void add_svec_sym_outer(const Eigen::VectorXd& u, const Eigen::VectorXd& v, double scale,
                        Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::Index d = u.size();
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    out(k++) += scale * 2.0 * u(j) * v(j);
    for (Eigen::Index i = j + 1; i < d; ++i) {
      out(k++) += scale * kSqrt2 * (u(i) * v(j) + v(i) * u(j));
    }
  }
}

}  // namespace

Eigen::VectorXd svec(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw InputError("svec: matrix must be square");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InputError("svec: matrix is not symmetric");
  }
  const Eigen::Index d = M.rows();
  Eigen::VectorXd v(svec_dim(d));
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    v(k++) = M(j, j);
    for (Eigen::Index i = j + 1; i < d; ++i) v(k++) = kSqrt2 * M(i, j);
  }
  return v;
}

Eigen::MatrixXd smat(const Eigen::VectorXd& v) {
  const Eigen::Index d = dim_from_svec_length(v.size());
  Eigen::MatrixXd M(d, d);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    M(j, j) = v(k++);
    for (Eigen::Index i = j + 1; i < d; ++i) {
      M(i, j) = M(j, i) = v(k++) / kSqrt2;
    }
  }
  return M;
}

Eigen::MatrixXd sym_kron(const Eigen::MatrixXd& R1, const Eigen::MatrixXd& R2) {
  if (R1.rows() != R1.cols() || R2.rows() != R2.cols() || R1.rows() != R2.rows()) {
    throw InputError("sym_kron: operands must be square and of equal size");
  }
  const Eigen::Index d = R1.rows();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(svec_dim(d), svec_dim(d));
  // Column for basis element G: e_p e_pᵀ (diagonal) or (e_p e_qᵀ + e_q e_pᵀ)/√2.
  // R2 G R1ᵀ + R1 G R2ᵀ expands into symmetric outer products of columns.
  Eigen::Index c = 0;
  for (Eigen::Index q = 0; q < d; ++q) {
    for (Eigen::Index p = q; p < d; ++p, ++c) {
      auto col = K.col(c);
      if (p == q) {
        // R2 e_p e_pᵀ R1ᵀ + R1 e_p e_pᵀ R2ᵀ = sym(R2_p, R1_p)
        add_svec_sym_outer(R2.col(p), R1.col(p), 0.5, col);
      } else {
        const double s = 0.5 / kSqrt2;
        add_svec_sym_outer(R2.col(p), R1.col(q), s, col);
        add_svec_sym_outer(R2.col(q), R1.col(p), s, col);
      }
    }
  }
  return K;
}

Eigen::MatrixXd sym_kron_identity_inverse(const Eigen::MatrixXd& Phi) {
  if (Phi.rows() != Phi.cols()) throw InputError("sym_kron_identity_inverse: not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Phi);
  const Eigen::VectorXd& lam = es.eigenvalues();
  if (lam.minCoeff() <= 0.0) {
    throw NumericalError("sym_kron_identity_inverse: matrix is not positive definite");
  }
  const Eigen::MatrixXd& Q = es.eigenvectors();
  const Eigen::Index d = Phi.rows();
  Eigen::MatrixXd denom(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) denom(a, b) = 2.0 / (lam(a) + lam(b));
  }
  Eigen::MatrixXd out(svec_dim(d), svec_dim(d));
  Eigen::Index c = 0;
  for (Eigen::Index q = 0; q < d; ++q) {
    for (Eigen::Index p = q; p < d; ++p, ++c) {
      // Qᵀ Y Q for the basis element Y, as an outer product of rows of Q.
      Eigen::MatrixXd Z;
      if (p == q) {
        Z = Q.row(p).transpose() * Q.row(p);
      } else {
        Z = (Q.row(p).transpose() * Q.row(q) + Q.row(q).transpose() * Q.row(p)) / kSqrt2;
      }
      Z = Z.cwiseProduct(denom);
      const Eigen::MatrixXd X = Q * Z * Q.transpose();
      out.col(c) = svec(0.5 * (X + X.transpose()));
    }
  }
  return out;
}

}  // namespace consync
