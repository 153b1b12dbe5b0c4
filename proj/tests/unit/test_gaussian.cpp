#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "midc/gaussian.hpp"
#include "midc/verification.hpp"

using namespace midc;

TEST(SpdSqrt, IdentityAndDiagonal) {
  EXPECT_TRUE(spd_sqrt(MatrixXd::Identity(3, 3)).isApprox(MatrixXd::Identity(3, 3), 1e-14));
  const MatrixXd d = Eigen::Vector2d(4, 9).asDiagonal();
  const MatrixXd r = spd_sqrt(d);
  EXPECT_NEAR(r(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(r(1, 1), 3.0, 1e-12);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-12);
}

TEST(SpdSqrt, MultiplyBack) {
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const MatrixXd m = random_spd(4, 0.01, 50.0, s, 0);
    const MatrixXd r = spd_sqrt(m);
    EXPECT_LE((r * r - m).norm() / m.norm(), 1e-9);
    EXPECT_GE(min_eigenvalue(r), 0.0);
  }
}

TEST(SpdSqrt, RejectsInvalidInput) {
  MatrixXd asym(2, 2);
  asym << 1, 0.5, 0, 1;
  try {
    spd_sqrt(asym);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotSymmetric);
  }
  const MatrixXd neg = Eigen::Vector2d(1, -1).asDiagonal();
  try {
    spd_sqrt(neg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotPSD);
  }
}

TEST(SpdSqrt, ClampsTinyNegativeEigenvalues) {
  const MatrixXd m = Eigen::Vector2d(1, -1e-12).asDiagonal();
  const MatrixXd r = spd_sqrt(m);
  EXPECT_NEAR(r(1, 1), 0.0, 1e-15);
}

TEST(PseudoInverse, Examples) {
  EXPECT_TRUE(pseudo_inverse(MatrixXd::Identity(2, 2)).isApprox(MatrixXd::Identity(2, 2)));
  const MatrixXd col = Eigen::Vector2d(1, 0);
  const MatrixXd p = pseudo_inverse(col);
  ASSERT_EQ(p.rows(), 1);
  ASSERT_EQ(p.cols(), 2);
  EXPECT_NEAR(p(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(p(0, 1), 0.0, 1e-15);
}

TEST(PseudoInverse, PenroseIdentities) {
  MatrixXd m(3, 2);
  m << 1.0, 2.0, -0.5, 0.3, 2.2, -1.1;
  const MatrixXd p = pseudo_inverse(m);
  EXPECT_LE((p * m - MatrixXd::Identity(2, 2)).norm(), 1e-9);
  EXPECT_LE((m * p * m - m).norm() / m.norm(), 1e-9);
  EXPECT_LE((p * m * p - p).norm() / p.norm(), 1e-9);
  EXPECT_LE(((m * p).transpose() - m * p).norm(), 1e-9);
  EXPECT_LE(((p * m).transpose() - p * m).norm(), 1e-9);
}

TEST(PseudoInverse, RankDeficient) {
  MatrixXd m(2, 2);
  m << 1, 1, 1, 1;
  const MatrixXd p = pseudo_inverse(m);
  EXPECT_TRUE(p.isApprox(MatrixXd::Constant(2, 2, 0.25), 1e-12));
}

TEST(KlGaussian, Examples) {
  const Gaussian std2 = Gaussian::standard(2);
  EXPECT_NEAR(kl_gaussian(std2, std2), 0.0, 1e-15);
  const Gaussian a(VectorXd::Zero(1), MatrixXd::Ones(1, 1));
  const Gaussian b(VectorXd::Ones(1), MatrixXd::Ones(1, 1));
  EXPECT_NEAR(kl_gaussian(a, b), 0.5, 1e-14);
  const Gaussian c(VectorXd::Zero(1), MatrixXd::Constant(1, 1, 2.0));
  EXPECT_NEAR(kl_gaussian(c, a), 0.5 * (2.0 - 1.0 - std::log(2.0)), 1e-14);
  EXPECT_NEAR(kl_gaussian(c, a), 0.1534264, 1e-7);
}

TEST(KlGaussian, DegenerateReferenceThrows) {
  const Gaussian p = Gaussian::standard(2);
  const Gaussian q(VectorXd::Zero(2), Eigen::Vector2d(1, 0).asDiagonal());
  try {
    kl_gaussian(p, q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateReference);
  }
}

TEST(KlGaussian, SingularPOnSupport) {
  const Gaussian p(VectorXd::Zero(2), Eigen::Vector2d(1, 0).asDiagonal());
  const Gaussian q = Gaussian::standard(2);
  EXPECT_EQ(kl_gaussian(p, q), std::numeric_limits<double>::infinity());
  EXPECT_EQ(kl_gaussian_on_support(p, q), std::numeric_limits<double>::infinity());
  const Gaussian q2(VectorXd::Zero(2), Eigen::Vector2d(2, 0).asDiagonal());
  const Gaussian p1(VectorXd::Zero(1), MatrixXd::Ones(1, 1));
  const Gaussian q1(VectorXd::Zero(1), MatrixXd::Constant(1, 1, 2.0));
  EXPECT_NEAR(kl_gaussian_on_support(p, q2), kl_gaussian(p1, q1), 1e-14);
  const Gaussian off(Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 0).asDiagonal());
  EXPECT_EQ(kl_gaussian_on_support(off, p), std::numeric_limits<double>::infinity());
}

TEST(GaussianEntropy, Examples) {
  EXPECT_NEAR(gaussian_entropy(Gaussian::standard(1)), 0.5 * std::log(2 * std::numbers::pi * std::numbers::e), 1e-14);
  EXPECT_NEAR(gaussian_entropy(Gaussian::standard(1)), 1.4189385, 1e-7);
  const MatrixXd s = random_spd(3, 0.5, 2.0, 3, 0);
  EXPECT_NEAR(gaussian_entropy(Gaussian(Eigen::Vector3d(1, -2, 3), s)),
              gaussian_entropy(Gaussian::centered(s)), 1e-14);
  EXPECT_NEAR(gaussian_entropy(Gaussian(VectorXd::Zero(1), MatrixXd::Constant(1, 1, 4.0))), 2.1120857, 1e-7);
}

TEST(GaussianEntropy, SingularCovarianceThrows) {
  const Gaussian p(VectorXd::Zero(2), Eigen::Vector2d(1, 0).asDiagonal());
  try {
    gaussian_entropy(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateCovariance);
  }
}
