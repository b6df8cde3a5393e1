#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "simgap/io.hpp"

namespace py = pybind11;
using namespace simgap;

namespace {

LossSpec loss_spec(const std::string& name, double beta) {
  const auto kind = loss_from_name(name);
  if (!kind) raise(Errc::ValidationFailed, "unknown loss '" + name + "'");
  return LossSpec{*kind, beta};
}

GapMode mode_from(const std::string& name) {
  if (name == "sim-estimate") return GapMode::SimEstimateTarget;
  if (name == "true-sim") return GapMode::TrueSimTarget;
  raise(Errc::ValidationFailed, "unknown mode '" + name + "'");
}

// the variant itself cannot be a pybind class; a thin handle carries it
struct PointHandle {
  ParamPoint point;
};

py::dict gap_to_dict(const PseudoGap& g) {
  py::dict d;
  d["scenario_id"] = g.scenario_id;
  d["upper"] = g.upper;
  d["lower"] = g.lower;
  d["plug_in"] = g.plug_in;
  d["method"] = gap_method_name(g.method);
  d["slack"] = g.slack;
  return d;
}

}  // namespace

PYBIND11_MODULE(_simgap, m) {
  m.doc() = "calibrated quantile curves of the sim-to-real gap";
  m.attr("__version__") = kToolVersion;

  py::register_exception<Error>(m, "SimgapError");

  py::class_<PointHandle>(m, "ParamPoint")
      .def("__repr__", [](const PointHandle& p) {
        std::ostringstream os;
        os << "<ParamPoint " << point_kind_name(point_kind(p.point)) << ">";
        return os.str();
      });
  m.def("simplex",
        [](std::vector<double> probs) { return PointHandle{make_simplex(std::move(probs))}; },
        py::arg("probs"));
  m.def("bounded",
        [](double value, double lo, double hi) { return PointHandle{make_bounded(value, lo, hi)}; },
        py::arg("value"), py::arg("lo") = -1.0, py::arg("hi") = 1.0);
  m.def("empirical",
        [](std::vector<double> samples, std::optional<double> sigma) {
          std::sort(samples.begin(), samples.end());
          return PointHandle{make_empirical(std::move(samples), sigma)};
        },
        py::arg("samples"), py::arg("sigma") = std::nullopt);

  m.def("evaluate_loss",
        [](const std::string& loss, const PointHandle& u, const PointHandle& v, double beta) {
          return evaluate_loss(loss_spec(loss, beta), u.point, v.point);
        },
        py::arg("loss"), py::arg("u"), py::arg("v"), py::arg("beta_smooth") = 0.0);

  m.def("radius_bounded", &radius_bounded, py::arg("n"), py::arg("gamma"), py::arg("a"),
        py::arg("b"));
  m.def("radius_bernoulli", &radius_bernoulli, py::arg("n"), py::arg("gamma"));
  m.def("radius_multinomial", &radius_multinomial, py::arg("n"), py::arg("d"), py::arg("gamma"));
  m.def("radius_w1", &radius_w1, py::arg("n"), py::arg("gamma"), py::arg("sigma"));
  m.def("split_gamma_joint", &split_gamma_joint, py::arg("gamma_joint"));
  m.def("kl_ball_boundary_1d", &kl_ball_boundary_1d, py::arg("p_hat"), py::arg("r"));

  m.def("epsilon_correction", &epsilon_correction, py::arg("alpha"), py::arg("m"),
        py::arg("eta"));
  m.def("empirical_quantile",
        [](std::vector<double> values, double alpha) {
          return empirical_quantile(QuantileCurve::from_values(std::move(values)), alpha);
        },
        py::arg("values"), py::arg("alpha"));
  m.def("calibrated_curve",
        [](std::vector<double> values, double tau) {
          return calibrated_curve(QuantileCurve::from_values(std::move(values)), tau);
        },
        py::arg("values"), py::arg("tau"));
  m.def("auc_cal",
        [](std::vector<double> values) {
          return auc_cal(QuantileCurve::from_values(std::move(values)));
        },
        py::arg("values"));
  m.def("cvar_cal",
        [](std::vector<double> values, double alpha) {
          return cvar_cal(QuantileCurve::from_values(std::move(values)), alpha);
        },
        py::arg("values"), py::arg("alpha"));
  m.def("guaranteed_coverage",
        [](std::vector<double> values, double alpha, double eta) {
          const CoverageBound cb =
              guaranteed_coverage(QuantileCurve::from_values(std::move(values)), alpha, eta);
          py::dict d;
          d["threshold"] = cb.threshold;
          d["raw"] = cb.raw;
          d["clamped"] = cb.clamped;
          d["vacuous"] = cb.vacuous;
          return d;
        },
        py::arg("values"), py::arg("alpha"), py::arg("eta"));
  m.def("band",
        [](std::vector<double> upper, std::vector<double> lower, double gamma, double tau) {
          const BandPoint bp = band(QuantileCurve::from_values(std::move(upper)),
                                    QuantileCurve::from_values(std::move(lower)), gamma, tau);
          return py::make_tuple(bp.lo, bp.hi);
        },
        py::arg("upper"), py::arg("lower"), py::arg("gamma"), py::arg("tau"));

  py::class_<Dataset>(m, "Dataset")
      .def("__len__", [](const Dataset& d) { return d.records.size(); })
      .def("scenario_ids", [](const Dataset& d) {
        std::vector<std::string> out;
        for (const auto& r : d.records) out.push_back(r.scenario_id);
        return out;
      });
  m.def("ingest", [](const std::string& path) { return ingest(path); }, py::arg("path"));
  m.def("ingest_text",
        [](const std::string& text) {
          std::istringstream in(text);
          return ingest_stream(in, "<string>");
        },
        py::arg("text"));
  m.def("validate_dataset",
        [](const Dataset& d) {
          std::vector<std::string> out;
          for (const auto& f : validate_dataset(d)) {
            out.push_back(f.scenario_id + ": " + f.message);
          }
          return out;
        },
        py::arg("dataset"));

  m.def("compute_pseudo_gaps",
        [](const Dataset& d, double gamma, const std::string& loss, double beta,
           const std::string& mode, double mesh, double slack_cap, int threads) {
          GridOptions opts;
          opts.mesh = mesh;
          opts.slack_cap = slack_cap;
          const GapRunResult run =
              compute_pseudo_gaps(d, gamma, loss_spec(loss, beta), mode_from(mode), opts, threads);
          py::list gaps;
          for (const auto& g : run.gaps) gaps.append(gap_to_dict(g));
          py::dict out;
          out["gaps"] = gaps;
          out["warnings"] = run.warnings;
          return out;
        },
        py::arg("dataset"), py::arg("gamma") = 0.5, py::arg("loss") = "squared",
        py::arg("beta_smooth") = 0.0, py::arg("mode") = "sim-estimate", py::arg("mesh") = 1e-4,
        py::arg("slack_cap") = 1e-3, py::arg("threads") = 0);

  m.def("calibrate_report",
        [](const Dataset& d, double gamma, double eta, const std::string& loss, double beta,
           const std::string& mode, int threads) {
          CalibrateParams params;
          params.gamma = gamma;
          params.eta = eta;
          params.loss = loss_spec(loss, beta);
          params.mode = mode_from(mode);
          params.threads = threads;
          const CalibrationReport rep = calibrate(d, params);
          py::dict out;
          out["m"] = rep.m;
          out["curve"] = rep.curve.values;
          out["lower_curve"] = rep.lower_curve.values;
          out["auc_cal"] = rep.auc;
          py::list cvar;
          for (const auto& [a, v] : rep.cvar) cvar.append(py::make_tuple(a, v));
          out["cvar_cal"] = cvar;
          out["warnings"] = rep.warnings;
          return out;
        },
        py::arg("dataset"), py::arg("gamma") = 0.5, py::arg("eta") = 0.05,
        py::arg("loss") = "squared", py::arg("beta_smooth") = 0.0,
        py::arg("mode") = "sim-estimate", py::arg("threads") = 0);
}
