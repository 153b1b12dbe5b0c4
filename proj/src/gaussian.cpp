#include "midc/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "midc/error.hpp"

namespace midc {

namespace {

using EigenSolver = Eigen::SelfAdjointEigenSolver<MatrixXd>;

double scale_of(const MatrixXd& m) { return std::max(1.0, m.norm()); }

EigenSolver decompose(const MatrixXd& sym) {
  EigenSolver es(symmetrize(sym));
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kDegenerateCovariance,
                "symmetric eigendecomposition failed");
  }
  return es;
}

// Eigenvalue threshold below which a PSD eigenvalue counts as zero.
double clamp_threshold(const VectorXd& eigenvalues) {
  const double largest = eigenvalues.cwiseAbs().maxCoeff();
  return kTol.clamp * std::max(largest, std::numeric_limits<double>::min()) *
         static_cast<double>(eigenvalues.size());
}

MatrixXd apply_spectral(const EigenSolver& es, const VectorXd& values) {
  const MatrixXd& v = es.eigenvectors();
  return symmetrize(v * values.asDiagonal() * v.transpose());
}

}  // namespace

Gaussian::Gaussian(VectorXd m, MatrixXd c) : mean(std::move(m)), cov(std::move(c)) {}

Gaussian Gaussian::standard(int dim) {
  return {VectorXd::Zero(dim), MatrixXd::Identity(dim, dim)};
}

Gaussian Gaussian::centered(MatrixXd c) {
  const auto d = c.rows();
  return {VectorXd::Zero(d), std::move(c)};
}

void Gaussian::validate() const {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "Gaussian mean has length " + std::to_string(mean.size()) +
                    " but covariance is " + std::to_string(cov.rows()) + "x" +
                    std::to_string(cov.cols()));
  }
  require_psd(cov, "Gaussian covariance");
}

MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

namespace {

using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

MatrixXld inner_congruence(const MatrixXd& l, const MatrixXd& m, const MatrixXd& add) {
  const MatrixXld ll = l.cast<long double>();
  return ll * m.cast<long double>() * ll.transpose() + add.cast<long double>();
}

MatrixXd round_symmetric(const MatrixXld& m) {
  return MatrixXd(((m + m.transpose()) / 2.0L).cast<double>());
}

}  // namespace

MatrixXd congruence(const MatrixXd& l, const MatrixXd& m, const MatrixXd& add) {
  return round_symmetric(inner_congruence(l, m, add));
}

MatrixXd congruence(const MatrixXd& outer, const MatrixXd& l, const MatrixXd& m,
                    const MatrixXd& add) {
  const MatrixXld o = outer.cast<long double>();
  return round_symmetric(o * inner_congruence(l, m, add) * o.transpose());
}

bool is_symmetric(const MatrixXd& m, const Tolerances& tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.transpose()).norm() <= tol.symmetry * scale_of(m);
}

void require_symmetric(const MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + " is not square");
  }
  if (!is_symmetric(m)) {
    throw Error(ErrorCode::kNotSymmetric, std::string(what) + " is not symmetric");
  }
}

void require_psd(const MatrixXd& m, const char* what) {
  require_symmetric(m, what);
  if (m.size() == 0) return;
  const double lo = min_eigenvalue(m);
  if (lo < -kTol.psd * scale_of(m)) {
    throw Error(ErrorCode::kNotPSD, std::string(what) +
                                        " has negative eigenvalue " +
                                        std::to_string(lo));
  }
}

void require_pd(const MatrixXd& m, const char* what) {
  require_symmetric(m, what);
  if (!is_positive_definite(m)) {
    throw Error(ErrorCode::kNotPD,
                std::string(what) + " is not strictly positive definite");
  }
}

double min_eigenvalue(const MatrixXd& sym) {
  return decompose(sym).eigenvalues().minCoeff();
}

bool is_positive_definite(const MatrixXd& sym, const Tolerances& tol) {
  if (sym.size() == 0) return true;
  return min_eigenvalue(sym) > tol.pd;
}

bool is_invertible_symmetric(const MatrixXd& sym, const Tolerances& tol) {
  if (sym.size() == 0) return true;
  const VectorXd mags = decompose(sym).eigenvalues().cwiseAbs();
  return mags.minCoeff() > tol.invertibility * mags.maxCoeff();
}

bool is_invertible(const MatrixXd& m, const Tolerances& tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const VectorXd& s = svd.singularValues();
  return s(s.size() - 1) > tol.invertibility * s(0);
}

bool has_full_column_rank(const MatrixXd& m, const Tolerances& tol) {
  if (m.cols() > m.rows()) return false;
  if (m.cols() == 0) return true;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const VectorXd& s = svd.singularValues();
  return s(s.size() - 1) > tol.invertibility * s(0);
}

MatrixXd spd_sqrt(const MatrixXd& m) {
  require_psd(m, "square-root argument");
  if (m.size() == 0) return m;
  const EigenSolver es = decompose(m);
  const double cut = clamp_threshold(es.eigenvalues());
  const VectorXd roots = es.eigenvalues().unaryExpr(
      [cut](double x) { return x > cut ? std::sqrt(x) : 0.0; });
  return apply_spectral(es, roots);
}

MatrixXd spd_inv_sqrt(const MatrixXd& m) {
  require_pd(m, "inverse square-root argument");
  const EigenSolver es = decompose(m);
  const VectorXd roots =
      es.eigenvalues().unaryExpr([](double x) { return 1.0 / std::sqrt(x); });
  return apply_spectral(es, roots);
}

MatrixXd sym_inverse(const MatrixXd& m) {
  require_symmetric(m, "inverse argument");
  if (m.size() == 0) return m;
  const EigenSolver es = decompose(m);
  const VectorXd& ev = es.eigenvalues();
  const double largest = ev.cwiseAbs().maxCoeff();
  if (ev.cwiseAbs().minCoeff() <= kTol.invertibility * largest) {
    throw Error(ErrorCode::kDegenerateCovariance,
                "symmetric matrix is numerically singular");
  }
  return apply_spectral(es, ev.cwiseInverse());
}

MatrixXd pseudo_inverse(const MatrixXd& m) {
  if (m.size() == 0) return MatrixXd::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<MatrixXld> svd(m.cast<long double>(),
                                  Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const long double cut = kTol.rank * s(0) *
                          static_cast<long double>(std::max(m.rows(), m.cols()));
  Eigen::Matrix<long double, Eigen::Dynamic, 1> inv =
      Eigen::Matrix<long double, Eigen::Dynamic, 1>::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cut) inv(i) = 1.0L / s(i);
  }
  return (svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose()).cast<double>();
}

double logdet_spd(const MatrixXd& m) {
  require_pd(m, "log-determinant argument");
  return decompose(m).eigenvalues().array().log().sum();
}

MatrixXd range_basis(const MatrixXd& sym) {
  if (sym.size() == 0) return MatrixXd(0, 0);
  const EigenSolver es = decompose(sym);
  const VectorXd& ev = es.eigenvalues();
  const double cut = clamp_threshold(ev);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cut) keep.push_back(i);
  }
  MatrixXd basis(sym.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    basis.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]);
  }
  return basis;
}

namespace {

// KL between full-rank Gaussians of equal dimension; callers guarantee PD.
double kl_full_rank(const VectorXd& dmean, const MatrixXd& cov_p,
                    const MatrixXd& cov_q) {
  const Eigen::LLT<MatrixXd> q_llt(cov_q);
  const double d = static_cast<double>(dmean.size());
  const double trace_term = q_llt.solve(cov_p).trace();
  const double quad = dmean.dot(q_llt.solve(dmean));
  const double logdet_q =
      2.0 * q_llt.matrixLLT().diagonal().array().log().sum();
  const double logdet_p = decompose(cov_p).eigenvalues().array().log().sum();
  const double kl = 0.5 * (trace_term + quad - d + logdet_q - logdet_p);
  return std::max(kl, 0.0);
}

}  // namespace

double kl_gaussian(const Gaussian& p, const Gaussian& q) {
  if (p.dim() != q.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "KL arguments differ in dimension");
  }
  p.validate();
  q.validate();
  if (!is_positive_definite(q.cov)) {
    throw Error(ErrorCode::kDegenerateReference,
                "reference covariance is not strictly positive definite");
  }
  if (p.dim() == 0) return 0.0;
  const VectorXd ev = decompose(p.cov).eigenvalues();
  if (ev.minCoeff() <= clamp_threshold(ev)) return kInfiniteDivergence;
  return kl_full_rank(q.mean - p.mean, p.cov, q.cov);
}

double kl_gaussian_on_support(const Gaussian& p, const Gaussian& q) {
  if (p.dim() != q.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "KL arguments differ in dimension");
  }
  p.validate();
  q.validate();
  const MatrixXd basis = range_basis(q.cov);
  const Eigen::Index r = basis.cols();
  const VectorXd dmean = q.mean - p.mean;
  const double support_tol = 1e-9;
  if (r == 0) {
    const bool p_point = p.cov.norm() <= support_tol * scale_of(q.cov);
    const bool same_mean = dmean.norm() <= support_tol * std::max(1.0, q.mean.norm());
    return (p_point && same_mean) ? 0.0 : kInfiniteDivergence;
  }
  const MatrixXd proj = basis * basis.transpose();
  const MatrixXd outside = p.cov - proj * p.cov * proj;
  if (outside.norm() > support_tol * std::max(scale_of(p.cov), scale_of(q.cov))) {
    return kInfiniteDivergence;
  }
  if ((dmean - proj * dmean).norm() > support_tol * std::max(1.0, dmean.norm())) {
    return kInfiniteDivergence;
  }
  const MatrixXd cov_p = symmetrize(basis.transpose() * p.cov * basis);
  const MatrixXd cov_q = symmetrize(basis.transpose() * q.cov * basis);
  const VectorXd ev = decompose(cov_p).eigenvalues();
  if (ev.minCoeff() <= clamp_threshold(decompose(cov_q).eigenvalues())) {
    return kInfiniteDivergence;
  }
  return kl_full_rank(basis.transpose() * dmean, cov_p, cov_q);
}

double gaussian_entropy(const Gaussian& p) {
  p.validate();
  if (!is_positive_definite(p.cov)) {
    throw Error(ErrorCode::kDegenerateCovariance,
                "entropy requires a strictly positive definite covariance");
  }
  const double d = static_cast<double>(p.dim());
  return 0.5 * (d * std::log(2.0 * std::numbers::pi * std::numbers::e) +
                logdet_spd(p.cov));
}

}  // namespace midc
