#include <gtest/gtest.h>

#include "midc/experiment.hpp"
#include "midc/linear_system.hpp"
#include "midc/verification.hpp"

using namespace midc;

namespace {

LinearSystem scalar(double a, double b, int t) {
  return LinearSystem::time_invariant(MatrixXd::Constant(1, 1, a), MatrixXd::Constant(1, 1, b), t);
}

AffinePolicy scalar_policy(double p, double q, double s, int t) {
  AffinePolicy pi;
  for (int k = 0; k < t; ++k) {
    pi.gain.push_back(MatrixXd::Constant(1, 1, p));
    pi.offset.push_back(VectorXd::Constant(1, q));
    pi.cov.push_back(MatrixXd::Constant(1, 1, s));
  }
  return pi;
}

LinearSystem random_system(std::uint64_t seed) {
  const auto inst = random_instance(seed);
  return inst ? inst->sys : random_system(seed + 1000);
}

}  // namespace

TEST(StateTransition, Examples) {
  const LinearSystem sys = scalar(2.0, 1.0, 4);
  EXPECT_TRUE(state_transition(sys, 3, 3).isApprox(MatrixXd::Identity(1, 1)));
  EXPECT_NEAR(state_transition(sys, 2, 0)(0, 0), 4.0, 1e-15);
  EXPECT_NEAR(state_transition(sys, 0, 2)(0, 0), 0.25, 1e-15);
}

TEST(StateTransition, SingularAThrowsBackward) {
  const LinearSystem sys = scalar(0.0, 1.0, 3);
  EXPECT_NEAR(state_transition(sys, 2, 0)(0, 0), 0.0, 0.0);
  try {
    state_transition(sys, 0, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingularA);
  }
}

TEST(StateTransition, SemigroupAndInverse) {
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const LinearSystem sys = random_system(s);
    const int t = sys.horizon();
    for (int k = 0; k <= t; ++k) {
      for (int l = 0; l <= t; ++l) {
        const MatrixXd kl = state_transition(sys, k, l);
        EXPECT_LE((kl * state_transition(sys, l, k) - MatrixXd::Identity(sys.state_dim(), sys.state_dim())).norm(), 1e-9);
        for (int j = 0; j <= t; ++j) {
          const MatrixXd kj = state_transition(sys, k, j);
          EXPECT_LE((kl * state_transition(sys, l, j) - kj).norm() / std::max(1.0, kj.norm()), 1e-9);
        }
      }
    }
  }
}

TEST(Gramians, Examples) {
  const LinearSystem zero_b = scalar(1.3, 0.0, 3);
  EXPECT_NEAR(reachability_gramian(zero_b, 3, 0)(0, 0), 0.0, 0.0);
  EXPECT_NEAR(reachability_gramian(scalar(1.0, 1.0, 2), 2, 0)(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(reachability_gramian(scalar(2.0, 1.0, 2), 2, 0)(0, 0), 5.0, 1e-15);
  EXPECT_NEAR(controllability_gramian(scalar(1.0, 1.0, 2), 2, 0)(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(controllability_gramian(scalar(2.0, 1.0, 2), 2, 0)(0, 0), 0.3125, 1e-15);
}

TEST(Gramians, BadRange) {
  const LinearSystem sys = scalar(1.0, 1.0, 2);
  try {
    reachability_gramian(sys, 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadRange);
  }
  EXPECT_THROW(controllability_gramian(sys, 0, 2), Error);
}

TEST(Gramians, IdentityDynamicsSymmetry) {
  const LinearSystem sys = LinearSystem::time_invariant(MatrixXd::Identity(2, 2),
                                                        (MatrixXd(2, 1) << 1.0, 0.5).finished(), 3);
  EXPECT_TRUE(controllability_gramian(sys, 3, 0).isApprox(reachability_gramian(sys, 3, 0), 1e-14));
}

TEST(Gramians, ReachabilityControllabilityRelation) {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const LinearSystem sys = random_system(s);
    const int t = sys.horizon();
    const MatrixXd phi = state_transition(sys, t, 0);
    const MatrixXd gr = reachability_gramian(sys, t, 0);
    const MatrixXd rel = phi * controllability_gramian(sys, t, 0) * phi.transpose();
    EXPECT_LE((gr - rel).norm() / gr.norm(), 1e-9);
  }
}

TEST(PropagateMoments, Uncontrolled) {
  const LinearSystem sys = random_system(7);
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  AffinePolicy pi;
  for (int k = 0; k < sys.horizon(); ++k) {
    pi.gain.push_back(MatrixXd::Zero(m, n));
    pi.offset.push_back(VectorXd::Zero(m));
    pi.cov.push_back(MatrixXd::Zero(m, m));
  }
  const MatrixXd s0 = random_spd(n, 0.5, 2.0, 7, 3);
  const MomentTrajectory tr = propagate_moments(sys, pi, Gaussian::centered(s0));
  MatrixXd s = s0;
  for (int k = 0; k < sys.horizon(); ++k) {
    s = sys.A(k) * s * sys.A(k).transpose();
    EXPECT_LE((tr.cov[static_cast<std::size_t>(k + 1)] - s).norm(), 1e-12 * std::max(1.0, s.norm()));
  }
}

TEST(PropagateMoments, GoldenInstance) {
  const MomentTrajectory tr = propagate_moments(scalar(1.0, 1.0, 1), scalar_policy(-0.381966, 0.0, 0.618034, 1),
                                                Gaussian::centered(MatrixXd::Ones(1, 1)));
  EXPECT_NEAR(tr.cov[1](0, 0), 1.0, 1e-6);
}

TEST(PropagateMoments, MonteCarloMeans) {
  const LinearSystem sys = scalar(0.9, 1.0, 3);
  const AffinePolicy pi = scalar_policy(-0.2, 0.5, 0.3, 3);
  const Gaussian init(VectorXd::Constant(1, 1.5), MatrixXd::Constant(1, 1, 0.7));
  const MomentTrajectory tr = propagate_moments(sys, pi, init);
  // The closed loop is x' = (A + BP)x + Bq + B w with w ~ N(0, cov).
  const LinearSystem closed = scalar(0.9 - 0.2, 1.0, 3);
  const int count = 200000;
  const auto paths = simulate_particles(closed, MatrixSeq(3, MatrixXd::Constant(1, 1, 0.3)), init, count, 99);
  for (int k = 0; k <= 3; ++k) {
    double shift = 0.0;
    for (int j = 0; j < k; ++j) shift = 0.7 * shift + 0.5;
    double sum = 0.0;
    for (const auto& p : paths) sum += p.states[static_cast<std::size_t>(k)](0);
    const double mc = sum / count + shift;
    const double se = std::sqrt(tr.cov[static_cast<std::size_t>(k)](0, 0) / count);
    EXPECT_LE(std::abs(mc - tr.mean[static_cast<std::size_t>(k)](0)), 4.0 * se);
  }
}

TEST(PropagateMoments, DimensionMismatch) {
  const LinearSystem sys = scalar(1.0, 1.0, 2);
  try {
    propagate_moments(sys, scalar_policy(0.0, 0.0, 1.0, 1), Gaussian::standard(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}
