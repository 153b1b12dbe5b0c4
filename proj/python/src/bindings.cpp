#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "midc/commands.hpp"
#include "midc/verification.hpp"

namespace py = pybind11;
using namespace midc;

namespace {

py::dict alternation_dict(const GeneralAlternation& g) {
  py::dict d;
  d["policies"] = g.policies;
  d["priors"] = g.priors;
  d["objective"] = g.objective;
  d["terminal_cov_error"] = g.deviation.terminal_cov_error;
  d["terminal_mean_error"] = g.terminal_mean_error;
  d["u_bar"] = g.steering.u_bar;
  d["mu_star"] = g.steering.mu_star;
  if (g.deviation.stop) {
    d["stop"] = py::make_tuple(std::string(to_string(g.deviation.stop->code)),
                               std::string(to_string(g.deviation.stop->assumption)),
                               g.deviation.stop->iteration, g.deviation.stop->detail);
  } else {
    d["stop"] = py::none();
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_midc, m) {
  m.doc() = "Linear-Gaussian density control and Schrodinger bridges";

  static py::exception<Error> midc_error(m, "MidcError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(midc_error.ptr())(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      exc.attr("index") = e.index();
      exc.attr("assumption") = std::string(to_string(e.assumption()));
      PyErr_SetObject(midc_error.ptr(), exc.ptr());
    }
  });

  py::class_<Gaussian>(m, "Gaussian")
      .def(py::init<VectorXd, MatrixXd>(), py::arg("mean"), py::arg("cov"))
      .def_readwrite("mean", &Gaussian::mean)
      .def_readwrite("cov", &Gaussian::cov)
      .def_static("standard", &Gaussian::standard)
      .def_static("centered", &Gaussian::centered);

  py::class_<LinearSystem>(m, "LinearSystem")
      .def(py::init<MatrixSeq, MatrixSeq>(), py::arg("A"), py::arg("B"))
      .def_static("time_invariant", &LinearSystem::time_invariant, py::arg("A"), py::arg("B"),
                  py::arg("T"))
      .def_property_readonly("T", &LinearSystem::horizon)
      .def_property_readonly("n", &LinearSystem::state_dim)
      .def_property_readonly("m", &LinearSystem::input_dim)
      .def_property_readonly("A", [](const LinearSystem& s) {
        return MatrixSeq(s.A().begin(), s.A().end());
      })
      .def_property_readonly("B", [](const LinearSystem& s) {
        return MatrixSeq(s.B().begin(), s.B().end());
      });

  py::class_<AffinePolicy>(m, "AffinePolicy")
      .def(py::init<>())
      .def_readwrite("gain", &AffinePolicy::gain)
      .def_readwrite("offset", &AffinePolicy::offset)
      .def_readwrite("cov", &AffinePolicy::cov);

  py::class_<GaussianPrior>(m, "GaussianPrior")
      .def(py::init<>())
      .def_readwrite("mean", &GaussianPrior::mean)
      .def_readwrite("cov", &GaussianPrior::cov)
      .def_static("zero_mean", &GaussianPrior::zero_mean)
      .def_static("identity", &GaussianPrior::identity, py::arg("m"), py::arg("T"));

  py::class_<DensitySteeringProblem>(m, "DensitySteeringProblem")
      .def(py::init([](LinearSystem sys, MatrixXd sigma_ini, MatrixXd sigma_fin,
                       std::optional<VectorXd> mu_ini, std::optional<VectorXd> mu_fin) {
             const int n = sys.state_dim();
             DensitySteeringProblem p{std::move(sys), mu_ini.value_or(VectorXd::Zero(n)),
                                      std::move(sigma_ini), mu_fin.value_or(VectorXd::Zero(n)),
                                      std::move(sigma_fin)};
             p.validate();
             return p;
           }),
           py::arg("sys"), py::arg("sigma_ini"), py::arg("sigma_fin"),
           py::arg("mu_ini") = py::none(), py::arg("mu_fin") = py::none())
      .def_readonly("sys", &DensitySteeringProblem::sys)
      .def_readonly("mu_ini", &DensitySteeringProblem::mu_ini)
      .def_readonly("sigma_ini", &DensitySteeringProblem::sigma_ini)
      .def_readonly("mu_fin", &DensitySteeringProblem::mu_fin)
      .def_readonly("sigma_fin", &DensitySteeringProblem::sigma_fin);

  py::class_<ProcessDistribution>(m, "ProcessDistribution")
      .def_readonly("initial", &ProcessDistribution::initial)
      .def_readonly("drift", &ProcessDistribution::drift)
      .def_readonly("offset", &ProcessDistribution::offset)
      .def_readonly("noise", &ProcessDistribution::noise)
      .def("marginals", [](const ProcessDistribution& p) {
        const MomentTrajectory t = p.marginals();
        return py::make_tuple(t.mean, t.cov);
      });

  m.def("propagate_moments",
        [](const LinearSystem& sys, const AffinePolicy& pi, const Gaussian& init) {
          const MomentTrajectory t = propagate_moments(sys, pi, init);
          return py::make_tuple(t.mean, t.cov);
        });

  m.def("kl_gaussian", &kl_gaussian);

  m.def("me_terminal_weight",
        [](const LinearSystem& sys, const MatrixXd& sigma_ini, const MatrixXd& sigma_fin) {
          const TerminalWeightSolution tw = me_terminal_weight(sys, sys.B(), sigma_ini, sigma_fin);
          py::dict d;
          d["F"] = tw.F;
          d["Q"] = tw.Q;
          d["split_index"] = tw.split_index;
          return d;
        });
  m.def("me_density_policy",
        [](const LinearSystem& sys, const MatrixXd& sigma_ini, const MatrixXd& sigma_fin) {
          return me_density_policy(sys, sys.B(), sigma_ini, sigma_fin);
        });

  m.def("mi_policy_for_prior", &mi_policy_for_prior);
  m.def("mi_prior_for_policy", &mi_prior_for_policy);
  m.def("objective_j", &objective_j);
  m.def("mean_steering", [](const DensitySteeringProblem& prob) {
    const MeanSteering ms = mean_steering(prob);
    return py::make_tuple(ms.u_bar, ms.mu_star);
  });

  m.def(
      "alternate_midc",
      [](const DensitySteeringProblem& prob, std::optional<GaussianPrior> prior0, int iterations) {
        const GaussianPrior p0 =
            prior0.value_or(GaussianPrior::identity(prob.sys.input_dim(), prob.sys.horizon()));
        return alternation_dict(alternate_midc_general(prob, p0, {.iterations = iterations}));
      },
      py::arg("prob"), py::arg("prior0") = py::none(), py::arg("iterations") = 10);

  m.def(
      "alternate_sb",
      [](const DensitySteeringProblem& prob, std::optional<GaussianPrior> prior0, int iterations) {
        const GaussianPrior p0 =
            prior0.value_or(GaussianPrior::identity(prob.sys.input_dim(), prob.sys.horizon()));
        const GeneralBridge g = alternate_sb_general(prob, p0, Gaussian(prob.mu_ini, prob.sigma_ini),
                                                     {.iterations = iterations});
        py::dict d;
        d["priors"] = g.priors;
        d["controlled"] = g.controlled;
        d["references"] = g.references;
        d["objective"] = g.objective;
        return d;
      },
      py::arg("prob"), py::arg("prior0") = py::none(), py::arg("iterations") = 10);

  m.def("reference_process", &reference_process);
  m.def("controlled_process", &controlled_process);
  m.def("kl_process", &kl_process);

  m.def(
      "estimate_noise",
      [](const LinearSystem& sys, const Gaussian& initial, const Gaussian& final,
         const std::string& method, int iterations) {
        const NoiseEstimate est =
            estimate_noise(sys, Snapshots{initial, final}, method_from_string(method), iterations);
        MatrixSeq out;
        for (int k = 0; k < sys.horizon(); ++k) out.push_back(est.at(k));
        return out;
      },
      py::arg("sys"), py::arg("initial"), py::arg("final"), py::arg("method") = "alg4",
      py::arg("iterations") = 10);

  m.def("true_noise_cov", &true_noise_cov, py::arg("k"), py::arg("T"), py::arg("n"),
        py::arg("alpha"));
  m.def("fit_gaussian_ml", &fit_gaussian_ml);
  m.def("relative_error", &relative_error);

  m.def(
      "experiment",
      [](double alpha, int trials, int particles, std::uint64_t seed) {
        ExperimentConfig cfg;
        cfg.alpha = alpha;
        cfg.trials = trials;
        cfg.particles = particles;
        cfg.base_seed = seed;
        const ExperimentOutput out = experiment_command(cfg);
        py::list rows;
        for (const auto& r : out.result.rows) {
          rows.append(py::make_tuple(r.k, std::string(to_string(r.method)), r.mean_rel_err,
                                     r.std_rel_err, r.n_success));
        }
        py::dict d;
        d["rows"] = rows;
        d["csv"] = out.csv;
        d["json"] = out.json;
        return d;
      },
      py::arg("alpha"), py::arg("trials") = 10, py::arg("particles") = 100,
      py::arg("seed") = ExperimentConfig{}.base_seed);

  m.def(
      "solve_midc",
      [](const std::string& problem_json, int iterations) {
        return solve_midc_command(problem_from_json(Json::parse(problem_json)), iterations).json;
      },
      py::arg("problem_json"), py::arg("iterations") = 10);

  m.def("verify", [](std::optional<int> only) {
    py::list out;
    for (const auto& c : acceptance_checks()) {
      if (only && c.id != *only) continue;
      const CheckResult r = c.run();
      out.append(py::make_tuple(r.id, r.name, r.passed, r.detail));
    }
    return out;
  }, py::arg("only") = py::none());
}
