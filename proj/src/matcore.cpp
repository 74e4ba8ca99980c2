#include "ridgefuse/matcore.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace ridgefuse {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::PositiveDefiniteRequired: return "PositiveDefiniteRequired";
    case ErrorCode::EigenNotConverged: return "EigenNotConverged";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::DegenerateVariable: return "DegenerateVariable";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::InsufficientClassSize: return "InsufficientClassSize";
    case ErrorCode::TuningFailed: return "TuningFailed";
    case ErrorCode::SingularEstimate: return "SingularEstimate";
    case ErrorCode::EmptyComponent: return "EmptyComponent";
    case ErrorCode::NumericalUnderflow: return "NumericalUnderflow";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

SymmetricMatrix::SymmetricMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    fail(ErrorCode::InvalidInput,
         "symmetric matrix must be square, got " + std::to_string(m.rows()) +
             "x" + std::to_string(m.cols()));
  }
  if (!m.allFinite()) {
    fail(ErrorCode::InvalidInput, "symmetric matrix has non-finite entries");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymmetricMatrix SymmetricMatrix::zero(Eigen::Index p) {
  return SymmetricMatrix(Eigen::MatrixXd::Zero(p, p), Trusted{});
}

SymmetricMatrix SymmetricMatrix::identity(Eigen::Index p) {
  return SymmetricMatrix(Eigen::MatrixXd::Identity(p, p), Trusted{});
}

SymmetricMatrix SymmetricMatrix::diagonal(const Eigen::VectorXd& d) {
  if (!d.allFinite()) {
    fail(ErrorCode::InvalidInput, "diagonal has non-finite entries");
  }
  return SymmetricMatrix(Eigen::MatrixXd(d.asDiagonal()), Trusted{});
}

SymmetricMatrix make_symmetric_unchecked(Eigen::MatrixXd m) {
  // Exact symmetry even when m came from V diag(x) V^T with rounding.
  m.triangularView<Eigen::StrictlyLower>() = m.transpose();
  return SymmetricMatrix(std::move(m), SymmetricMatrix::Trusted{});
}

EigenDecomposition sym_eig(const SymmetricMatrix& s) {
  const Eigen::Index p = s.dim();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.matrix());
  if (solver.info() != Eigen::Success) {
    fail(ErrorCode::EigenNotConverged,
         "symmetric eigensolver did not converge for a " + std::to_string(p) +
             "x" + std::to_string(p) + " matrix");
  }
  // Eigen returns ascending order; reverse, which keeps tied eigenvalues in
  // a fixed (reversed) solver order.
  EigenDecomposition out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

double q_eigenvalue(double d, double lambda) noexcept {
  const double root = std::sqrt(d * d + 4.0 * lambda);
  if (d > 0.0) return 2.0 / (d + root);
  return (root - d) / (2.0 * lambda);
}

SymmetricMatrix q_operator(const SymmetricMatrix& s, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    fail(ErrorCode::InvalidInput,
         "q_operator requires a finite lambda >= 0, got " + std::to_string(lambda));
  }
  if (lambda == 0.0) return inverse_pd(s);

  const EigenDecomposition eig = sym_eig(s);
  Eigen::VectorXd mapped(eig.values.size());
  for (Eigen::Index i = 0; i < mapped.size(); ++i) {
    mapped(i) = q_eigenvalue(eig.values(i), lambda);
  }
  Eigen::MatrixXd theta =
      eig.vectors * mapped.asDiagonal() * eig.vectors.transpose();
  return make_symmetric_unchecked(std::move(theta));
}

double logdet(const SymmetricMatrix& s) {
  Eigen::LLT<Eigen::MatrixXd> llt(s.matrix());
  if (llt.info() != Eigen::Success) {
    fail(ErrorCode::PositiveDefiniteRequired,
         "log-determinant requires a positive definite matrix");
  }
  const auto diag = llt.matrixLLT().diagonal();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag(i) > 0.0)) {
      fail(ErrorCode::PositiveDefiniteRequired,
           "log-determinant requires a positive definite matrix");
    }
    acc += std::log(diag(i));
  }
  return 2.0 * acc;
}

double frob_sq(const Eigen::MatrixXd& a) noexcept { return a.squaredNorm(); }

double frob_sq(const SymmetricMatrix& a) noexcept {
  return frob_sq(a.matrix());
}

SymmetricMatrix inverse_pd(const SymmetricMatrix& s) {
  const Eigen::Index p = s.dim();
  Eigen::LLT<Eigen::MatrixXd> llt(s.matrix());
  if (llt.info() != Eigen::Success) {
    fail(ErrorCode::PositiveDefiniteRequired,
         "matrix is not positive definite and cannot be inverted");
  }
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
  if (!inv.allFinite()) {
    fail(ErrorCode::PositiveDefiniteRequired,
         "matrix is numerically singular");
  }
  return make_symmetric_unchecked(std::move(inv));
}

bool is_positive_definite(const SymmetricMatrix& s) noexcept {
  if (s.dim() == 0) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(s.matrix());
  if (llt.info() != Eigen::Success) return false;
  return (llt.matrixLLT().diagonal().array() > 0.0).all();
}

double max_abs(const Eigen::MatrixXd& a) noexcept {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

}  // namespace ridgefuse
