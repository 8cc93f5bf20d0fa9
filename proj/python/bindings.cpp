#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "meg/entropy.hpp"
#include "meg/harness.hpp"
#include "meg/linalg.hpp"
#include "meg/quadmeas.hpp"
#include "meg/solver.hpp"

namespace py = pybind11;
using namespace meg;

namespace {

// Either a dense symmetric matrix or a callable mapping an (n, k) block to
// G times that block.
GradApply to_grad_apply(const py::object& g) {
  if (py::isinstance<py::function>(g)) {
    auto fn = g.cast<py::function>();
    return [fn](const Matrix& u) -> Matrix {
      py::gil_scoped_acquire gil;
      return fn(u).cast<Matrix>();
    };
  }
  const Matrix dense = g.cast<Matrix>();
  return [dense](const Matrix& u) -> Matrix { return dense * u; };
}

py::dict rows_to_dict(const std::vector<RunRow>& rows) {
  const auto n = static_cast<Index>(rows.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Vector t(n), f(n), eps(n), eta(n), cheap(n), full(n), breg(n), lam(n), ns(n);
  std::vector<std::optional<bool>> cheap_holds, full_holds;
  for (Index i = 0; i < n; ++i) {
    const RunRow& r = rows[static_cast<std::size_t>(i)];
    t(i) = r.t;
    f(i) = r.f_value;
    eps(i) = r.eps;
    eta(i) = r.eta.value_or(nan);
    cheap(i) = r.cert_cheap_lhs.value_or(nan);
    full(i) = r.cert_full_lhs.value_or(nan);
    breg(i) = r.bregman_to_exact.value_or(nan);
    lam(i) = r.lambda_rsp1;
    ns(i) = static_cast<double>(r.elapsed_ns);
    cheap_holds.push_back(r.cert_cheap_holds);
    full_holds.push_back(r.cert_full_holds);
  }
  py::dict d;
  d["t"] = t;
  d["f_value"] = f;
  d["eps_t"] = eps;
  d["eta_t"] = eta;
  d["cert_cheap_lhs"] = cheap;
  d["cert_cheap_holds"] = cheap_holds;
  d["cert_full_lhs"] = full;
  d["cert_full_holds"] = full_holds;
  d["bregman_to_exact"] = breg;
  d["lambda_rsp1"] = lam;
  d["elapsed_ns"] = ns;
  return d;
}

py::dict summary_to_dict(const RunSummary& s) {
  py::dict d;
  for (const auto& [key, value] : s.items()) d[py::str(key)] = value;
  return d;
}

}  // namespace

PYBIND11_MODULE(_lowrank_meg, m) {
  m.doc() = "Low-rank matrix exponentiated gradient on the spectrahedron";

  auto base = py::register_exception<Error>(m, "MegError", PyExc_RuntimeError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<ModeError>(m, "ModeError", base.ptr());
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("project_simplex", &project_simplex, py::arg("z"), py::arg("tau") = 1.0);
  m.def(
      "eigh_top",
      [](const py::object& a, Index r, Index n, double tol, int max_restarts,
         std::uint64_t seed) {
        LanczosConfig cfg;
        cfg.tol = tol;
        cfg.max_restarts = max_restarts;
        cfg.seed = seed;
        if (n == 0) {
          if (py::isinstance<py::function>(a)) {
            throw ParameterError("eigh_top: n is required for a callable");
          }
          n = a.cast<Matrix>().rows();
        }
        GradApply apply = to_grad_apply(a);
        py::gil_scoped_release release;
        const TopREigen top = lanczos_top_r(SymmetricOperator(n, apply), r, cfg);
        return std::make_pair(top.eigenvalues, top.eigenvectors);
      },
      py::arg("a"), py::arg("r"), py::arg("n") = 0, py::arg("tol") = 1e-10,
      py::arg("max_restarts") = 5, py::arg("seed") = 0,
      "Top-r eigenpairs of a symmetric matrix or of a block-apply callable "
      "(then n is required).");

  m.def("von_neumann_entropy", [](const Matrix& x) {
    return von_neumann_entropy(DenseSymmetric(x));
  });
  m.def("bregman", [](const Matrix& x, const Matrix& y) {
    return bregman(DenseSymmetric(x), DenseSymmetric(y)).value;
  });

  py::class_<LowRankIterate>(m, "LowRankIterate")
      .def(py::init<Matrix, Vector, double>(), py::arg("v"), py::arg("lam"),
           py::arg("eps"))
      .def_property_readonly("n", &LowRankIterate::n)
      .def_property_readonly("r", &LowRankIterate::r)
      .def_property_readonly("basis", &LowRankIterate::basis)
      .def_property_readonly("weights", &LowRankIterate::weights)
      .def_property_readonly("eps", &LowRankIterate::eps)
      .def("spectrum", &LowRankIterate::spectrum)
      .def("densify", &LowRankIterate::densify)
      .def("__repr__", [](const LowRankIterate& x) {
        std::ostringstream s;
        s << "LowRankIterate(n=" << x.n() << ", r=" << x.r()
          << ", eps=" << x.eps() << ")";
        return s.str();
      });

  m.def("warm_start_wrap", &warm_start_wrap, py::arg("v"), py::arg("lam"),
        py::arg("eps0"));

  m.def(
      "lowrank_step",
      [](const LowRankIterate& x, const py::object& grad, double eta,
         double eps_next) {
        GradApply apply = to_grad_apply(grad);
        LowRankStep s = [&] {
          py::gil_scoped_release release;
          return lowrank_meg_step(x, apply, eta, eps_next);
        }();
        const CertificateValue cheap = certificate_cheap(
            s.lambda_r_plus_1, s.b_r_plus_1, eps_next, x.n(), x.r());
        py::dict info;
        info["top_exponents"] = s.top_exponents;
        info["lambda_r_plus_1"] = s.lambda_r_plus_1;
        info["b_r_plus_1"] = s.b_r_plus_1;
        info["cert_cheap_lhs"] = cheap.lhs;
        info["cert_cheap_holds"] = cheap.holds;
        info["lanczos_restarts"] = s.lanczos_restarts;
        return py::make_tuple(std::move(s.next), info);
      },
      py::arg("x"), py::arg("grad"), py::arg("eta"), py::arg("eps_next"),
      "One low-rank step. grad is a dense matrix or a block-apply callable.");

  m.def(
      "exact_step",
      [](const Matrix& z, const Matrix& grad, double eta) {
        return exact_meg_step(DenseIterate(DenseSymmetric(z)),
                              DenseSymmetric(grad), eta)
            .next.matrix()
            .matrix();
      },
      py::arg("z"), py::arg("grad"), py::arg("eta"));

  m.def(
      "certificate_cheap",
      [](double lam, double b, double eps, Index n, Index r) {
        const CertificateValue c = certificate_cheap(lam, b, eps, n, r);
        return py::make_tuple(c.lhs, c.holds);
      },
      py::arg("lambda_r_plus_1"), py::arg("b_r_plus_1"), py::arg("eps"),
      py::arg("n"), py::arg("r"));
  m.def(
      "certificate_full",
      [](const Vector& spectrum, double eps, Index r) {
        const CertificateValue c =
            certificate_full(spectrum, eps, spectrum.size(), r);
        return py::make_tuple(c.lhs, c.holds);
      },
      py::arg("spectrum"), py::arg("eps"), py::arg("r"));

  py::class_<QuadMeasInstance, std::shared_ptr<QuadMeasInstance>>(
      m, "QuadMeasInstance")
      .def_readonly("n", &QuadMeasInstance::n)
      .def_readonly("r_true", &QuadMeasInstance::r_true)
      .def_readonly("m", &QuadMeasInstance::m)
      .def_readonly("kappa", &QuadMeasInstance::kappa)
      .def_readonly("tau", &QuadMeasInstance::tau)
      .def_readonly("seed", &QuadMeasInstance::seed)
      .def_readonly("v", &QuadMeasInstance::v)
      .def_readonly("a", &QuadMeasInstance::a)
      .def_readonly("b", &QuadMeasInstance::b)
      .def_readonly("y0", &QuadMeasInstance::y0)
      .def_readonly("y", &QuadMeasInstance::y)
      .def("ground_truth", &QuadMeasInstance::ground_truth)
      .def("value", [](const QuadMeasInstance& inst, const Matrix& x) {
        return qm_value_dense(inst, x);
      }, "f at an explicit (trace-tau) matrix")
      .def("gradient", [](const QuadMeasInstance& inst, const Matrix& x) {
        return qm_grad_dense(inst, qm_predictions_dense(inst, x) - inst.y)
            .matrix();
      })
      .def("save", [](const QuadMeasInstance& inst, const std::string& path) {
        save_instance(inst, path);
      });

  m.def(
      "generate_instance",
      [](Index n, Index r_true, double kappa, double tau_fraction,
         std::uint64_t seed) {
        return std::make_shared<QuadMeasInstance>(
            generate_instance(n, r_true, kappa, tau_fraction, seed));
      },
      py::arg("n"), py::arg("r_true"), py::arg("kappa") = 0.5,
      py::arg("tau_fraction") = 0.5, py::arg("seed") = 1);
  m.def("load_instance", [](const std::string& path) {
    return std::make_shared<QuadMeasInstance>(load_instance(path));
  });

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_property(
          "mode", [](const RunConfig& c) { return to_string(c.mode); },
          [](RunConfig& c, const std::string& s) { c.mode = parse_mode(s); })
      .def_property(
          "grad", [](const RunConfig& c) { return to_string(c.grad); },
          [](RunConfig& c, const std::string& s) { c.grad = parse_grad_mode(s); })
      .def_readwrite("batch", &RunConfig::batch)
      .def_readwrite("full_batch", &RunConfig::full_batch)
      .def_readwrite("n", &RunConfig::n)
      .def_readwrite("r", &RunConfig::r)
      .def_readwrite("r_true", &RunConfig::r_true)
      .def_readwrite("T", &RunConfig::T)
      .def_readwrite("kappa", &RunConfig::kappa)
      .def_readwrite("tau_fraction", &RunConfig::tau_fraction)
      .def_readwrite("beta", &RunConfig::beta)
      .def_readwrite("eta", &RunConfig::eta)
      .def_readwrite("r0", &RunConfig::r0)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("dense_shadow", &RunConfig::dense_shadow)
      .def_readwrite("dense_cap", &RunConfig::dense_cap)
      .def_property(
          "schedule_offset",
          [](const RunConfig& c) -> py::object {
            if (auto* e = std::get_if<ExperimentSchedule>(&c.eps)) {
              return py::float_(e->c);
            }
            return py::none();
          },
          [](RunConfig& c, double off) { c.eps = ExperimentSchedule{off}; },
          "c in eps_t = (3/5) / (t + c + 1)^2")
      .def(
          "set_instance",
          [](RunConfig& c, std::shared_ptr<QuadMeasInstance> inst) {
            c.instance = std::move(inst);
          })
      .def("validate", &RunConfig::validate);

  m.def(
      "run",
      [](const RunConfig& cfg) {
        RunRecord rec = [&] {
          py::gil_scoped_release release;
          return run(cfg);
        }();
        return py::make_tuple(rows_to_dict(rec.rows),
                              summary_to_dict(rec.summary));
      },
      py::arg("config"), "Returns (rows, summary) as dictionaries.");

  m.def(
      "reproduce_table",
      [](const std::string& id, std::vector<Index> n_list, int trials,
         std::uint64_t seed, int T, unsigned threads) {
        TableOptions opt;
        opt.n_list = std::move(n_list);
        opt.trials = trials;
        opt.seed = seed;
        opt.T = T;
        opt.threads = threads;
        const TableId tid = parse_table_id(id);
        TableReport rep = [&] {
          py::gil_scoped_release release;
          return reproduce_table(tid, opt);
        }();
        py::list cells;
        for (const TableCell& c : rep.cells) {
          py::dict d;
          d["n"] = c.n;
          d["r_true"] = c.r_true;
          d["r"] = c.r;
          d["trials"] = c.trials;
          auto stat = [](const Stat& s) { return py::make_tuple(s.mean, s.stddev); };
          d["init_error"] = stat(c.init_error);
          d["recovery_error"] = stat(c.recovery_error);
          d["grad_gap"] = stat(c.grad_gap);
          d["dual_gap"] = stat(c.dual_gap);
          d["first_full"] = stat(c.first_full);
          d["first_cheap"] = stat(c.first_cheap);
          d["cheap_equals_full"] = c.cheap_equals_full;
          cells.append(d);
        }
        return py::make_tuple(rep.format(), cells);
      },
      py::arg("table"), py::arg("n_list") = std::vector<Index>{100},
      py::arg("trials") = 20, py::arg("seed") = 1, py::arg("T") = 200,
      py::arg("threads") = 0);
}
