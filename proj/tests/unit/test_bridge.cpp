#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "midc/bridge.hpp"
#include "midc/experiment.hpp"
#include "midc/rng.hpp"
#include "midc/verification.hpp"

using namespace midc;

namespace {

MatrixXd s1(double v) { return MatrixXd::Constant(1, 1, v); }

LinearSystem scalar(double a, double b, int t) { return LinearSystem::time_invariant(s1(a), s1(b), t); }

DensitySteeringProblem golden() {
  return DensitySteeringProblem::centered(scalar(1.0, 1.0, 1), s1(1.0), s1(1.0));
}

GaussianPrior scalar_prior(double mean, double var, int t) {
  GaussianPrior p = GaussianPrior::zero_mean(MatrixSeq(static_cast<std::size_t>(t), s1(var)));
  for (auto& m : p.mean) m = VectorXd::Constant(1, mean);
  return p;
}

ProcessDistribution scalar_process(double drift, double offset, double noise, int t) {
  ProcessDistribution p;
  p.initial = Gaussian::standard(1);
  for (int k = 0; k < t; ++k) {
    p.drift.push_back(s1(drift));
    p.offset.push_back(VectorXd::Constant(1, offset));
    p.noise.push_back(s1(noise));
  }
  return p;
}

double rel(const MatrixXd& a, const MatrixXd& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

// Snapshots produced by the reference noise N(0, theta) exactly.
std::pair<Gaussian, Gaussian> exact_snapshots(const LinearSystem& sys, const Gaussian& init, const MatrixSeq& theta) {
  VectorXd mu = init.mean;
  MatrixXd cov = init.cov;
  for (int k = 0; k < sys.horizon(); ++k) {
    mu = sys.A(k) * mu;
    cov = symmetrize(sys.A(k) * cov * sys.A(k).transpose() + sys.B(k) * theta[static_cast<std::size_t>(k)] * sys.B(k).transpose());
  }
  return {init, Gaussian(mu, cov)};
}

}  // namespace

TEST(ReferenceProcess, ZeroMeanPriorHasNoOffsets) {
  const auto prob = feasible_instances(1, 31).front();
  const auto q = reference_process(prob.sys, GaussianPrior::identity(prob.sys.input_dim(), prob.sys.horizon()), Gaussian::centered(prob.sigma_ini));
  for (const auto& c : q.offset) EXPECT_EQ(c.norm(), 0.0);
  for (int k = 0; k < prob.sys.horizon(); ++k) EXPECT_EQ(q.drift[static_cast<std::size_t>(k)], prob.sys.A(k));
}

TEST(ReferenceProcess, ScalarNoise) {
  const auto q = reference_process(scalar(1.0, 2.0, 2), scalar_prior(0.5, 1.0, 2), Gaussian::standard(1));
  EXPECT_DOUBLE_EQ(q.noise[0](0, 0), 4.0);
  EXPECT_DOUBLE_EQ(q.offset[1](0), 1.0);
}

TEST(ReferenceProcess, InitialStoredVerbatim) {
  const Gaussian init(VectorXd::Constant(1, 0.3), s1(2.5));
  const auto q = reference_process(scalar(1.0, 1.0, 1), scalar_prior(0.0, 1.0, 1), init);
  EXPECT_EQ(q.initial.mean, init.mean);
  EXPECT_EQ(q.initial.cov, init.cov);
}

TEST(ReferenceProcess, DimensionMismatch) {
  EXPECT_THROW(reference_process(scalar(1.0, 1.0, 2), scalar_prior(0.0, 1.0, 1), Gaussian::standard(1)), Error);
}

TEST(ControlledProcess, FeedforwardCollapse) {
  const LinearSystem sys = scalar(0.9, 1.5, 3);
  AffinePolicy pi;
  for (int k = 0; k < 3; ++k) {
    pi.gain.push_back(s1(0.0));
    pi.offset.push_back(VectorXd::Zero(1));
    pi.cov.push_back(s1(0.7 + k));
  }
  const auto p = controlled_process(sys, pi, Gaussian::standard(1));
  const auto q = reference_process(sys, GaussianPrior::zero_mean(pi.cov), Gaussian::standard(1));
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(p.drift[k], q.drift[k]);
    EXPECT_EQ(p.offset[k], q.offset[k]);
    EXPECT_EQ(p.noise[k], q.noise[k]);
  }
}

TEST(ControlledProcess, GoldenPolicy) {
  const DensitySteeringProblem prob = golden();
  const AffinePolicy pi = me_density_policy(prob.sys, prob.sys.B(), prob.sigma_ini, prob.sigma_fin);
  const auto p = controlled_process(prob.sys, pi, Gaussian::standard(1));
  const double f = (std::sqrt(5.0) - 1.0) / 2.0;
  EXPECT_NEAR(p.drift[0](0, 0), f, 1e-12);
  EXPECT_NEAR(p.noise[0](0, 0), f, 1e-12);
}

TEST(ControlledProcess, MarginalsMatchMomentPropagation) {
  for (const auto& prob : feasible_instances(10, 40, {.nonzero_means = true})) {
    const auto pi = alternate_midc_general(prob, GaussianPrior::identity(prob.sys.input_dim(), prob.sys.horizon()), {.iterations = 1}).policies.front();
    const Gaussian init(prob.mu_ini, prob.sigma_ini);
    const ProcessDistribution p = controlled_process(prob.sys, pi, init);
    const MomentTrajectory a = p.marginals();
    const MomentTrajectory b = propagate_moments(prob.sys, pi, init);
    for (std::size_t k = 0; k < a.cov.size(); ++k) {
      EXPECT_LE(rel(a.cov[k], b.cov[k]), 1e-12);
      // drift * mean + offset cancels terms far larger than the mean itself
      const double scale = k == 0 ? 1.0 : p.drift[k - 1].norm() * b.mean[k - 1].norm() + p.offset[k - 1].norm();
      EXPECT_LE((a.mean[k] - b.mean[k]).norm(), 1e-12 * std::max(1.0, scale));
    }
  }
}

TEST(PotentialV, Examples) {
  const LinearSystem sys = scalar(1.0, 2.0, 1);
  EXPECT_EQ(potential_v(sys, Trajectory{{VectorXd::Constant(1, 3.0), VectorXd::Constant(1, 3.0)}}), 0.0);
  EXPECT_NEAR(potential_v(sys, Trajectory{{VectorXd::Zero(1), VectorXd::Ones(1)}}), 0.125, 1e-15);
  const LinearSystem id = LinearSystem::time_invariant(0.5 * MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), 2);
  const Trajectory tr{{Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 1), Eigen::Vector2d(0, 2)}};
  EXPECT_NEAR(potential_v(id, tr), 0.5 * (0.25 + 1.0) + 0.5 * (0.25 + 2.25), 1e-15);
}

TEST(ExpectedPotential, NoiseFreeDriftIsZero) {
  const LinearSystem sys = scalar(0.8, 1.0, 3);
  EXPECT_EQ(expected_potential(sys, scalar_process(0.8, 0.0, 0.0, 3)), 0.0);
}

TEST(ExpectedPotential, EqualsControlCostAtIdentityInput) {
  for (const auto& prob : feasible_instances(5, 50, {.identity_input = true})) {
    const GaussianPrior rho = GaussianPrior::identity(prob.sys.input_dim(), prob.sys.horizon());
    const AffinePolicy pi = mi_policy_for_prior(prob, rho);
    const auto p = controlled_process(prob.sys, pi, Gaussian::centered(prob.sigma_ini));
    const double control = objective_terms(prob, pi, rho).control;
    EXPECT_NEAR(expected_potential(prob.sys, p), control, 1e-9 * std::max(1.0, control));
  }
}

TEST(ExpectedPotential, MonteCarlo) {
  const LinearSystem sys = LinearSystem::time_invariant((MatrixXd(2, 2) << 0.9, 0.2, -0.1, 0.8).finished(),
                                                        (MatrixXd(2, 1) << 1.0, 0.5).finished(), 3);
  ProcessDistribution p;
  p.initial = Gaussian(Eigen::Vector2d(0.5, -0.2), (MatrixXd(2, 2) << 1.0, 0.3, 0.3, 0.8).finished());
  for (int k = 0; k < 3; ++k) {
    p.drift.push_back((MatrixXd(2, 2) << 0.7, 0.1, 0.0, 0.6).finished());
    p.offset.push_back(Eigen::Vector2d(0.1 * k, -0.2));
    p.noise.push_back((MatrixXd(2, 2) << 0.5, 0.1, 0.1, 0.3).finished());
  }
  const double exact = expected_potential(sys, p);
  const MatrixXd l0 = spd_sqrt(p.initial.cov);
  const MatrixXd ln = spd_sqrt(p.noise.front());
  const int n = 200000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const CounterRng rng(77, 0, RngPurpose::kProcessNoise, static_cast<std::uint64_t>(i));
    std::uint64_t c = 0;
    auto draw = [&] { return Eigen::Vector2d(rng.normal(c), rng.normal(c + 1)); };
    Trajectory tr;
    tr.states.push_back(p.initial.mean + l0 * draw());
    c += 2;
    for (int k = 0; k < 3; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      tr.states.push_back(p.drift[ks] * tr.states.back() + p.offset[ks] + ln * draw());
      c += 2;
    }
    const double v = potential_v(sys, tr);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  const double sd = std::sqrt((sum_sq - n * mean * mean) / (n - 1));
  EXPECT_LE(std::abs(mean - exact), 4.0 * sd / std::sqrt(static_cast<double>(n)));
}

TEST(KlProcess, IdenticalIsZero) {
  const auto p = scalar_process(0.9, 0.1, 0.5, 4);
  EXPECT_EQ(kl_process(p, p), 0.0);
}

TEST(KlProcess, OffsetExample) {
  EXPECT_NEAR(kl_process(scalar_process(0.0, 0.0, 1.0, 1), scalar_process(0.0, 1.0, 1.0, 1)), 0.5, 1e-15);
}

TEST(KlProcess, SupportViolationIsInfinite) {
  const auto p = scalar_process(0.0, 0.0, 1.0, 1);
  const auto q = scalar_process(0.0, 0.0, 0.0, 1);
  EXPECT_EQ(kl_process(p, q), kInfiniteDivergence);
  EXPECT_EQ(sb_objective(p, q, scalar(0.0, 1.0, 1)), kInfiniteDivergence);
}

TEST(KlProcess, DecompositionAtIdentityInput) {
  for (const auto& prob : feasible_instances(5, 60, {.identity_input = true})) {
    const GaussianPrior rho = GaussianPrior::identity(prob.sys.input_dim(), prob.sys.horizon());
    const AffinePolicy pi = mi_policy_for_prior(prob, rho);
    const Gaussian init = Gaussian::centered(prob.sigma_ini);
    const Gaussian ref(VectorXd::Zero(prob.sys.state_dim()), 2.0 * prob.sigma_ini);
    const double lhs = kl_process(controlled_process(prob.sys, pi, init), reference_process(prob.sys, rho, ref)) - kl_gaussian(init, ref);
    const double rhs = expected_policy_kl(prob, pi, rho);
    EXPECT_NEAR(lhs, rhs, 1e-9 * std::max(1.0, std::abs(rhs)));
  }
}

TEST(SbObjective, NoiseFreeIdenticalIsZero) {
  const auto p = scalar_process(0.8, 0.0, 0.0, 2);
  EXPECT_EQ(sb_objective(p, p, scalar(0.8, 1.0, 2)), 0.0);
}

TEST(SbObjective, GoldenMatchesObjective) {
  const DensitySteeringProblem prob = golden();
  const GaussianPrior rho = GaussianPrior::identity(1, 1);
  const AffinePolicy pi = mi_policy_for_prior(prob, rho);
  const Gaussian init = Gaussian::centered(prob.sigma_ini);
  const double sb = sb_objective(controlled_process(prob.sys, pi, init), reference_process(prob.sys, rho, init), prob.sys);
  EXPECT_NEAR(sb, objective_j(prob, pi, rho), 1e-12);
}

TEST(AlternateSb, GoldenIteratesMatchPolicyPriorAlternation) {
  const DensitySteeringProblem prob = golden();
  const AlternationOptions opts{.iterations = 10};
  const BridgeTrace sb = alternate_sb(prob, GaussianPrior::identity(1, 1), Gaussian::centered(prob.sigma_ini), opts);
  const AlternationTrace mi = alternate_midc(prob, GaussianPrior::identity(1, 1), opts);
  ASSERT_EQ(sb.priors.size(), mi.priors.size());
  for (std::size_t i = 0; i < sb.priors.size(); ++i) {
    EXPECT_NEAR(sb.priors[i].cov[0](0, 0), mi.priors[i].cov[0](0, 0), 1e-12);
  }
}

TEST(AlternateSb, MonotoneAndMarginals) {
  for (const auto& prob : feasible_instances(5, 70)) {
    const BridgeTrace tr = alternate_sb(prob, GaussianPrior::identity(prob.sys.input_dim(), prob.sys.horizon()), Gaussian::centered(prob.sigma_ini), {.iterations = 10});
    ASSERT_FALSE(tr.stop.has_value());
    for (std::size_t i = 1; i < tr.objective.size(); ++i) EXPECT_LE(tr.objective[i], tr.objective[i - 1] + 1e-10);
    for (const auto& p : tr.controlled) {
      const MomentTrajectory m = p.marginals();
      EXPECT_LE(rel(m.cov.front(), prob.sigma_ini), 1e-8);
      EXPECT_LE(rel(m.cov.back(), prob.sigma_fin), 1e-8);
    }
  }
}

TEST(AlternateSb, InitRefOnlyShiftsObjective) {
  const auto prob = feasible_instances(1, 80).front();
  const GaussianPrior rho0 = GaussianPrior::identity(prob.sys.input_dim(), prob.sys.horizon());
  const int n = prob.sys.state_dim();
  const BridgeTrace a = alternate_sb(prob, rho0, Gaussian::centered(prob.sigma_ini), {.iterations = 5});
  const BridgeTrace b = alternate_sb(prob, rho0, Gaussian(VectorXd::Ones(n), 3.0 * MatrixXd::Identity(n, n)), {.iterations = 5});
  ASSERT_EQ(a.priors.size(), b.priors.size());
  for (std::size_t i = 0; i < a.priors.size(); ++i) {
    for (std::size_t k = 0; k < a.priors[i].cov.size(); ++k) {
      EXPECT_LE(rel(b.priors[i].cov[k], a.priors[i].cov[k]), 1e-12);
    }
  }
  const double shift = b.objective.front() - a.objective.front();
  for (std::size_t i = 0; i < a.objective.size(); ++i) {
    EXPECT_NEAR(b.objective[i] - a.objective[i], shift, 1e-9 * std::max(1.0, std::abs(a.objective[i])));
  }
}

TEST(AlternateSbGeneral, ZeroMeansReduceToCentered) {
  const auto prob = feasible_instances(1, 90).front();
  const GaussianPrior rho0 = GaussianPrior::identity(prob.sys.input_dim(), prob.sys.horizon());
  const Gaussian init = Gaussian::centered(prob.sigma_ini);
  const GeneralBridge g = alternate_sb_general(prob, rho0, init, {.iterations = 3});
  const BridgeTrace c = alternate_sb(prob, rho0, init, {.iterations = 3});
  ASSERT_EQ(g.priors.size(), c.priors.size());
  for (std::size_t i = 0; i < c.priors.size(); ++i) {
    for (std::size_t k = 0; k < c.priors[i].cov.size(); ++k) EXPECT_EQ(g.priors[i].cov[k], c.priors[i].cov[k]);
  }
  for (std::size_t i = 0; i < c.objective.size(); ++i) EXPECT_NEAR(g.objective[i], c.objective[i], 1e-12 * std::max(1.0, std::abs(c.objective[i])));
}

TEST(AlternateSbGeneral, ScalarMeanTrajectory) {
  DensitySteeringProblem prob{scalar(1.0, 1.0, 2), VectorXd::Zero(1), s1(1.0), VectorXd::Constant(1, 2.0), s1(1.0)};
  const GeneralBridge g = alternate_sb_general(prob, GaussianPrior::identity(1, 2), Gaussian(prob.mu_ini, prob.sigma_ini), {.iterations = 4});
  for (const auto& p : g.controlled) {
    const MomentTrajectory m = p.marginals();
    for (int k = 0; k <= 2; ++k) EXPECT_NEAR(m.mean[static_cast<std::size_t>(k)](0), k, 1e-8);
  }
  for (std::size_t i = 1; i < g.priors.size(); ++i) {
    for (const auto& mu : g.priors[i].mean) EXPECT_NEAR(mu(0), 1.0, 1e-12);
  }
}

TEST(AlternateSbGeneral, MeansFollowSteeringTrajectory) {
  for (const auto& prob : feasible_instances(5, 100, {.nonzero_means = true})) {
    const GeneralBridge g = alternate_sb_general(prob, GaussianPrior::identity(prob.sys.input_dim(), prob.sys.horizon()), Gaussian(prob.mu_ini, prob.sigma_ini), {.iterations = 3});
    for (const auto& p : g.controlled) {
      const MomentTrajectory m = p.marginals();
      for (std::size_t k = 0; k < m.mean.size(); ++k) {
        EXPECT_LE((m.mean[k] - g.steering.mu_star[k]).norm(), 1e-8 * std::max(1.0, g.steering.mu_star[k].norm()));
      }
    }
  }
}

TEST(AlternateSb, RankDeficientInputRejected) {
  const LinearSystem sys = LinearSystem::time_invariant(MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 1), 2);
  const auto prob = DensitySteeringProblem::centered(sys, MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2));
  try {
    alternate_sb(prob, GaussianPrior::identity(1, 2), Gaussian::standard(2));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRankDeficientB);
  }
}

TEST(Sbid, ScalarClosedForm) {
  for (double theta : {0.5, 2.0}) {
    const IdentificationResult r = sbid_estimate(scalar(1.0, 1.0, 1), Gaussian::standard(1), Gaussian(VectorXd::Zero(1), s1(1.0 + theta)), s1(1.0), 300);
    EXPECT_TRUE(r.estimate.time_invariant);
    EXPECT_NEAR(r.estimate.at(0)(0, 0), theta, 1e-6);
  }
}

TEST(Sbid, FixedPointAtTruth) {
  const LinearSystem sys = LinearSystem::time_invariant(draw_system_matrix(2, 1, 0), MatrixXd::Identity(2, 2), 10);
  const MatrixXd theta = (MatrixXd(2, 2) << 0.6, 0.2, 0.2, 0.4).finished();
  const auto [g0, g1] = exact_snapshots(sys, Gaussian(VectorXd::Ones(2), MatrixXd::Identity(2, 2)), MatrixSeq(10, theta));
  const IdentificationResult r = sbid_estimate(sys, g0, g1, theta, 1);
  EXPECT_LE((r.estimate.at(0) - theta).norm(), 1e-6);
}

TEST(Sbid, RecoversSelfGeneratedNoise) {
  const LinearSystem sys = LinearSystem::time_invariant(draw_system_matrix(2, 1, 0), MatrixXd::Identity(2, 2), 3);
  const MatrixXd theta = (MatrixXd(2, 2) << 0.6, 0.2, 0.2, 0.4).finished();
  const auto [g0, g1] = exact_snapshots(sys, Gaussian(VectorXd::Ones(2), MatrixXd::Identity(2, 2)), MatrixSeq(3, theta));
  const IdentificationResult r = sbid_estimate(sys, g0, g1, MatrixXd::Identity(2, 2), 10);
  EXPECT_LE((r.estimate.at(0) - theta).norm() / theta.norm(), 0.1);
  ASSERT_EQ(r.history.size(), 10u);
  const IdentificationResult long_run = sbid_estimate(sys, g0, g1, MatrixXd::Identity(2, 2), 1000);
  EXPECT_LE((long_run.estimate.at(0) - theta).norm() / theta.norm(), 1e-9);
}

TEST(Sbid, WrongSizeRejected) {
  EXPECT_THROW(sbid_estimate(scalar(1.0, 1.0, 1), Gaussian::standard(1), Gaussian::standard(1), MatrixXd::Identity(2, 2), 1), Error);
}

TEST(Sbtvid, ScalarPerStepRecovery) {
  const LinearSystem sys = scalar(1.0, 1.0, 2);
  const IdentificationResult r = sbtvid_estimate(sys, Gaussian::standard(1), Gaussian(VectorXd::Zero(1), s1(2.0)), MatrixSeq(2, s1(1.0)), 50);
  EXPECT_FALSE(r.estimate.time_invariant);
  for (int k = 0; k < 2; ++k) EXPECT_NEAR(r.estimate.at(k)(0, 0), 0.5, 1e-3);
}

TEST(Sbtvid, TimeAverageMatchesSbidWithIdentityDynamics) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const int t = 4;
    const LinearSystem sys = LinearSystem::time_invariant(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), t);
    const MatrixXd theta = random_spd(2, 0.2, 1.0, seed, 3);
    const auto [g0, g1] = exact_snapshots(sys, Gaussian(VectorXd::Zero(2), random_spd(2, 0.5, 2.0, seed, 4)), MatrixSeq(t, theta));
    const IdentificationResult a = sbid_estimate(sys, g0, g1, MatrixXd::Identity(2, 2), 10);
    const IdentificationResult b = sbtvid_estimate(sys, g0, g1, MatrixSeq(t, MatrixXd::Identity(2, 2)), 10);
    MatrixXd avg = MatrixXd::Zero(2, 2);
    for (int k = 0; k < t; ++k) avg += b.estimate.at(k) / t;
    EXPECT_LE((avg - a.estimate.at(0)).norm() / a.estimate.at(0).norm(), 0.05);
  }
}

TEST(Sbtvid, ConvergedSequenceReproducesTerminalSnapshot) {
  const int t = 5;
  const LinearSystem sys = LinearSystem::time_invariant(draw_system_matrix(2, 2, 0), MatrixXd::Identity(2, 2), t);
  const MatrixXd theta = (MatrixXd(2, 2) << 0.6, 0.2, 0.2, 0.4).finished();
  const auto [g0, g1] = exact_snapshots(sys, Gaussian(VectorXd::Ones(2), MatrixXd::Identity(2, 2)), MatrixSeq(t, theta));
  const IdentificationResult r = sbtvid_estimate(sys, g0, g1, MatrixSeq(t, MatrixXd::Identity(2, 2)), 500);
  const auto [h0, h1] = exact_snapshots(sys, g0, r.estimate.sigma);
  EXPECT_LE(rel(h1.cov, g1.cov), 1e-6);
}

TEST(Sbtvid, FirstBridgeIsPlainBridgeOfInitialGuess) {
  const int t = 3;
  const LinearSystem sys = LinearSystem::time_invariant(draw_system_matrix(2, 3, 0), MatrixXd::Identity(2, 2), t);
  const MatrixSeq theta0(t, MatrixXd::Identity(2, 2));
  const auto [g0, g1] = exact_snapshots(sys, Gaussian(VectorXd::Ones(2), MatrixXd::Identity(2, 2)), MatrixSeq(t, 0.5 * MatrixXd::Identity(2, 2)));
  const IdentificationResult r = sbtvid_estimate(sys, g0, g1, theta0, 2);
  const ProcessDistribution direct = plain_bridge(sys, g0, g1, NoiseEstimate{theta0, false}).first;
  ASSERT_FALSE(r.bridges.empty());
  for (std::size_t k = 0; k < static_cast<std::size_t>(t); ++k) {
    EXPECT_EQ(r.bridges.front().drift[k], direct.drift[k]);
    EXPECT_EQ(r.bridges.front().noise[k], direct.noise[k]);
  }
}
