#pragma once

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "midc/tolerances.hpp"

namespace midc {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using MatrixSeq = std::vector<MatrixXd>;
using VectorSeq = std::vector<VectorXd>;

/// Sentinel returned by divergences whose support condition fails.
inline constexpr double kInfiniteDivergence =
    std::numeric_limits<double>::infinity();

/// Multivariate normal N(mean, cov) with symmetric PSD covariance.
struct Gaussian {
  VectorXd mean;
  MatrixXd cov;

  Gaussian() = default;
  Gaussian(VectorXd m, MatrixXd c);

  static Gaussian standard(int dim);
  static Gaussian centered(MatrixXd c);

  int dim() const { return static_cast<int>(mean.size()); }

  // Throws NotSymmetric / NotPSD / DimensionMismatch.
  void validate() const;
};

MatrixXd symmetrize(const MatrixXd& m);

/// l m l^T + add, and outer (l m l^T + add) outer^T, accumulated in long
/// double.  Used where the product is much smaller than its factors.
MatrixXd congruence(const MatrixXd& l, const MatrixXd& m, const MatrixXd& add);
MatrixXd congruence(const MatrixXd& outer, const MatrixXd& l, const MatrixXd& m,
                    const MatrixXd& add);

bool is_symmetric(const MatrixXd& m, const Tolerances& tol = kTol);
void require_symmetric(const MatrixXd& m, const char* what);
// Symmetric with every eigenvalue >= -tol.psd * max(1, ||m||).
void require_psd(const MatrixXd& m, const char* what);
// Symmetric with smallest eigenvalue > tol.pd.
void require_pd(const MatrixXd& m, const char* what);

double min_eigenvalue(const MatrixXd& sym);
bool is_positive_definite(const MatrixXd& sym, const Tolerances& tol = kTol);
// Symmetric matrix whose eigenvalue magnitudes satisfy
// min |lambda| > tol.invertibility * max |lambda|.
bool is_invertible_symmetric(const MatrixXd& sym, const Tolerances& tol = kTol);
// General square matrix: sigma_min > tol.invertibility * sigma_max.
bool is_invertible(const MatrixXd& m, const Tolerances& tol = kTol);
bool has_full_column_rank(const MatrixXd& m, const Tolerances& tol = kTol);

/// Symmetric PSD square root via eigendecomposition.  Negative eigenvalues
/// within tolerance are clamped to zero.
MatrixXd spd_sqrt(const MatrixXd& m);

/// Inverse square root of a symmetric positive definite matrix.
MatrixXd spd_inv_sqrt(const MatrixXd& m);

/// Inverse of a symmetric (possibly indefinite) invertible matrix through its
/// eigendecomposition; the result is exactly symmetric.  Throws
/// DegenerateCovariance when the matrix is numerically singular.
MatrixXd sym_inverse(const MatrixXd& m);

/// Moore-Penrose inverse via SVD.
MatrixXd pseudo_inverse(const MatrixXd& m);

/// log |m| for symmetric positive definite m.
double logdet_spd(const MatrixXd& m);

/// KL(p || q) for Gaussians with cov(q) strictly positive definite.  Returns
/// kInfiniteDivergence when cov(p) is singular (p has no density).
double kl_gaussian(const Gaussian& p, const Gaussian& q);

/// KL(p || q) when both covariances may be singular.  Finite only when
/// Im(cov p) = Im(cov q) and the mean difference lies in Im(cov q); the value
/// is then the divergence of the two laws restricted to that subspace.
double kl_gaussian_on_support(const Gaussian& p, const Gaussian& q);

/// Differential entropy 1/2 ln((2 pi e)^d |cov|).
double gaussian_entropy(const Gaussian& p);

/// Orthonormal basis of Im(sym) for a symmetric PSD matrix.
MatrixXd range_basis(const MatrixXd& sym);

}  // namespace midc
