#pragma once

#include <Eigen/Dense>

#include "ridgefuse/error.hpp"

namespace ridgefuse {

/// Dense real symmetric matrix. Every constructor symmetrizes its input, so
/// entry(i, j) and entry(j, i) are always the same double, and rejects
/// non-finite entries.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;

  /// Averages `m` with its transpose. Throws InvalidInput on non-square or
  /// non-finite input.
  explicit SymmetricMatrix(const Eigen::MatrixXd& m);

  static SymmetricMatrix zero(Eigen::Index p);
  static SymmetricMatrix identity(Eigen::Index p);
  static SymmetricMatrix diagonal(const Eigen::VectorXd& d);

  Eigen::Index dim() const noexcept { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }

 private:
  struct Trusted {};
  SymmetricMatrix(Eigen::MatrixXd m, Trusted) : m_(std::move(m)) {}
  friend SymmetricMatrix make_symmetric_unchecked(Eigen::MatrixXd m);

  Eigen::MatrixXd m_;
};

/// Wraps an already symmetric, finite matrix without copying or checking.
/// Only for results built as V diag(x) V^T or similar inside the library.
SymmetricMatrix make_symmetric_unchecked(Eigen::MatrixXd m);

struct EigenDecomposition {
  Eigen::MatrixXd vectors;  // columns are eigenvectors
  Eigen::VectorXd values;   // descending
};

EigenDecomposition sym_eig(const SymmetricMatrix& s);

/// Ridge proximal operator: the minimizer over positive definite Theta of
/// tr(Theta S) - log det Theta + lambda |Theta|_2^2 / 2.
///
/// For lambda > 0 this is computed in the eigenbasis of S, eigenvalue d
/// mapping to (-d + sqrt(d^2 + 4 lambda)) / (2 lambda). For d > 0 the
/// equivalent form 2 / (d + sqrt(d^2 + 4 lambda)) is used. lambda == 0
/// returns S^{-1} and requires S positive definite.
SymmetricMatrix q_operator(const SymmetricMatrix& s, double lambda);

/// Scalar eigenvalue map of q_operator.
double q_eigenvalue(double d, double lambda) noexcept;

double logdet(const SymmetricMatrix& s);

/// Sum of squared entries.
double frob_sq(const SymmetricMatrix& a) noexcept;
double frob_sq(const Eigen::MatrixXd& a) noexcept;

/// Inverse of a positive definite matrix (PositiveDefiniteRequired otherwise).
SymmetricMatrix inverse_pd(const SymmetricMatrix& s);

bool is_positive_definite(const SymmetricMatrix& s) noexcept;

/// Entrywise max-norm.
double max_abs(const Eigen::MatrixXd& a) noexcept;

}  // namespace ridgefuse
