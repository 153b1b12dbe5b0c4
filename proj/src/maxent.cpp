#include "midc/maxent.hpp"

#include <string>

#include "midc/error.hpp"

namespace midc {

namespace {

bool pd_with_scale(const MatrixXd& m) {
  return min_eigenvalue(m) > kTol.pd * std::max(1.0, m.norm());
}

void check_input_len(const LinearSystem& sys, std::span<const MatrixXd> input) {
  if (static_cast<int>(input.size()) != sys.horizon()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "effective input sequence length differs from horizon");
  }
}

// Shared backward sweep.  `inner(k, P)` returns the m x m matrix that must be
// positive definite and is inverted in the update.
template <typename Inner>
RiccatiSolution riccati_sweep(const LinearSystem& sys,
                              std::span<const MatrixXd> input,
                              const MatrixXd& F, Inner inner) {
  require_symmetric(F, "terminal weight F");
  const int t = sys.horizon();
  RiccatiSolution sol;
  sol.value.assign(static_cast<std::size_t>(t + 1), MatrixXd());
  sol.feasible.assign(static_cast<std::size_t>(t), false);
  sol.terminal = symmetrize(F);
  sol.value[static_cast<std::size_t>(t)] = sol.terminal;
  for (int k = t - 1; k >= 0; --k) {
    const auto ks = static_cast<std::size_t>(k);
    const MatrixXd& next = sol.value[ks + 1];
    const MatrixXd& a = sys.A(k);
    const MatrixXd& b = input[ks];
    const MatrixXd m = symmetrize(inner(k, next));
    if (!pd_with_scale(m)) {
      sol.first_infeasible = k;
      return sol;
    }
    sol.feasible[ks] = true;
    const MatrixXd pb = next * b;
    const MatrixXd pa = next * a;
    const MatrixXd gain = m.llt().solve(pb.transpose() * a);
    sol.value[ks] = symmetrize(a.transpose() * pa - pa.transpose() * b * gain);
  }
  return sol;
}

}  // namespace

RiccatiSolution riccati_me(const LinearSystem& sys,
                           std::span<const MatrixXd> input, const MatrixXd& F) {
  check_input_len(sys, input);
  return riccati_sweep(sys, input, F, [&](int k, const MatrixXd& next) {
    const MatrixXd& b = input[static_cast<std::size_t>(k)];
    return MatrixXd(MatrixXd::Identity(b.cols(), b.cols()) +
                    b.transpose() * next * b);
  });
}

RiccatiSolution riccati_mi(const LinearSystem& sys, const GaussianPrior& prior,
                           const MatrixXd& F) {
  check_prior_dims(sys, prior);
  prior.validate();
  MatrixSeq prior_precision;
  prior_precision.reserve(prior.cov.size());
  for (const auto& c : prior.cov) prior_precision.push_back(sym_inverse(c));
  return riccati_sweep(sys, sys.B(), F, [&](int k, const MatrixXd& next) {
    const MatrixXd& b = sys.B(k);
    return MatrixXd(prior_precision[static_cast<std::size_t>(k)] +
                    MatrixXd::Identity(b.cols(), b.cols()) +
                    b.transpose() * next * b);
  });
}

AffinePolicy me_policy(const LinearSystem& sys, std::span<const MatrixXd> input,
                       const RiccatiSolution& ricc) {
  check_input_len(sys, input);
  if (!ricc.ok()) {
    throw Error(ErrorCode::kInfeasibleRiccati,
                "I + B^T Pi B not positive definite", *ricc.first_infeasible);
  }
  AffinePolicy policy;
  const int t = sys.horizon();
  for (int k = 0; k < t; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const MatrixXd& b = input[ks];
    const MatrixXd& next = ricc.value[ks + 1];
    const MatrixXd m = symmetrize(
        MatrixXd::Identity(b.cols(), b.cols()) + b.transpose() * next * b);
    const MatrixXd cov = sym_inverse(m);
    policy.gain.push_back(-cov * b.transpose() * next * sys.A(k));
    policy.offset.push_back(VectorXd::Zero(b.cols()));
    policy.cov.push_back(cov);
  }
  return policy;
}

std::optional<int> admissible_split_index(const LinearSystem& sys,
                                          std::span<const MatrixXd> input) {
  const int t = sys.horizon();
  std::vector<bool> forward_ok(static_cast<std::size_t>(t + 1), false);
  std::vector<bool> backward_ok(static_cast<std::size_t>(t + 1), false);
  for (int k = 1; k <= t; ++k) {
    forward_ok[static_cast<std::size_t>(k)] =
        is_invertible_symmetric(reachability_gramian(sys, k, 0, input));
  }
  for (int k = 0; k < t; ++k) {
    backward_ok[static_cast<std::size_t>(k)] =
        is_invertible_symmetric(reachability_gramian(sys, t, k, input));
  }
  for (int kr = 1; kr <= t; ++kr) {
    bool ok = true;
    for (int k = kr; k <= t && ok; ++k) ok = forward_ok[static_cast<std::size_t>(k)];
    for (int k = 0; k < kr && ok; ++k) ok = backward_ok[static_cast<std::size_t>(k)];
    if (ok) return kr;
  }
  return std::nullopt;
}

namespace {

using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

MatrixXld sym_ld(const MatrixXld& m) { return (m + m.transpose()) / 2.0L; }

MatrixXld inverse_ld(const MatrixXld& m) { return m.fullPivLu().inverse(); }

// PSD square root; a clearly indefinite argument means a hypothesis failed.
MatrixXld sqrt_ld(const MatrixXld& m, const char* what) {
  const Eigen::SelfAdjointEigenSolver<MatrixXld> es(m);
  const auto& ev = es.eigenvalues();
  const long double scale = std::max(1.0L, m.norm());
  if (ev.minCoeff() < -static_cast<long double>(kTol.psd) * scale) {
    throw assumption_violated(Assumption::kIndefiniteSqrtArgument, what);
  }
  return sym_ld(es.eigenvectors() * ev.cwiseMax(0.0L).cwiseSqrt().asDiagonal() *
                es.eigenvectors().transpose());
}

}  // namespace

TerminalWeightSolution me_terminal_weight(const LinearSystem& sys,
                                          std::span<const MatrixXd> input,
                                          const MatrixXd& sigma_ini,
                                          const MatrixXd& sigma_fin) {
  check_input_len(sys, input);
  require_pd(sigma_ini, "initial covariance");
  require_pd(sigma_fin, "terminal covariance");
  const int n = sys.state_dim();
  const int t = sys.horizon();
  if (sigma_ini.rows() != n || sigma_fin.rows() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "marginal covariance size differs from state dimension");
  }
  if (!sys.dynamics_invertible()) {
    throw assumption_violated(Assumption::kSingularA,
                              "terminal weight needs invertible A_k");
  }
  TerminalWeightSolution sol;
  const auto split = admissible_split_index(sys, input);
  if (!split) {
    throw assumption_violated(Assumption::kNoAdmissibleSplit,
                              "reachability Gramians not invertible on any split");
  }
  sol.split_index = *split;

  // The construction runs in extended precision: the square roots and inverses
  // of a poorly conditioned Gramian otherwise lose several digits of Q_k.
  std::vector<MatrixXld> a_ld;
  std::vector<MatrixXld> b_ld;
  MatrixXld gc = MatrixXld::Zero(n, n);
  MatrixXld phi_0k = MatrixXld::Identity(n, n);  // Phi(0, k + 1) inside the loop
  for (int k = 0; k < t; ++k) {
    a_ld.push_back(sys.A(k).cast<long double>());
    b_ld.push_back(input[static_cast<std::size_t>(k)].cast<long double>());
    phi_0k = phi_0k * a_ld.back().partialPivLu().inverse();
    gc += phi_0k * b_ld.back() * b_ld.back().transpose() * phi_0k.transpose();
  }
  gc = sym_ld(gc);
  const MatrixXd gc_d = gc.cast<double>();
  if (!is_invertible_symmetric(gc_d) || !is_positive_definite(gc_d)) {
    throw assumption_violated(Assumption::kSingularGramian, "G_c(T,0)");
  }
  const MatrixXld eye = MatrixXld::Identity(n, n);
  const MatrixXld gc_sqrt = sqrt_ld(gc, "G_c(T,0)");
  const MatrixXld gc_isqrt = sym_ld(inverse_ld(gc_sqrt));
  const MatrixXld s0 = sym_ld(gc_isqrt * sigma_ini.cast<long double>() * gc_isqrt);
  const MatrixXld st = sym_ld(gc_isqrt * phi_0k * sigma_fin.cast<long double>() *
                              phi_0k.transpose() * gc_isqrt);
  const MatrixXld s0_sqrt = sqrt_ld(s0, "S0");
  const MatrixXld root = sqrt_ld(sym_ld(s0_sqrt * st * s0_sqrt + 0.25L * eye),
                                 "S0^1/2 ST S0^1/2 + I/4");
  const MatrixXld calf = sym_ld(s0 + 0.5L * eye - root);
  sol.S0 = s0.cast<double>();
  sol.ST = st.cast<double>();
  sol.calF = calf.cast<double>();
  if (!is_invertible_symmetric(sol.calF)) {
    throw assumption_violated(Assumption::kSingularCalF, "calF");
  }
  const MatrixXd complement = symmetrize(MatrixXd::Identity(n, n) - sol.calF);
  if (!is_invertible_symmetric(complement)) {
    throw assumption_violated(Assumption::kSingularCalFComplement, "calF complement");
  }

  std::vector<MatrixXld> q;
  q.push_back(sym_ld(gc_sqrt * s0_sqrt * inverse_ld(calf) * s0_sqrt * gc_sqrt));
  for (int k = 0; k < t; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    q.push_back(sym_ld(a_ld[ks] * q.back() * a_ld[ks].transpose() -
                       b_ld[ks] * b_ld[ks].transpose()));
  }
  for (const auto& qk : q) {
    sol.Q.push_back(qk.cast<double>());
    sol.Q_inv.push_back(sym_ld(inverse_ld(qk)).cast<double>());
  }
  for (int k = 0; k <= t; ++k) {
    if (!is_invertible_symmetric(sol.Q[static_cast<std::size_t>(k)])) {
      throw assumption_violated(Assumption::kSingularQ, "Q_k", k);
    }
  }
  sol.F = sol.Q_inv.back();
  return sol;
}

AffinePolicy me_density_policy(const LinearSystem& sys,
                               std::span<const MatrixXd> input,
                               const MatrixXd& sigma_ini,
                               const MatrixXd& sigma_fin) {
  const TerminalWeightSolution tw =
      me_terminal_weight(sys, input, sigma_ini, sigma_fin);
  return me_policy(sys, input, riccati_me(sys, input, tw.F));
}

}  // namespace midc
