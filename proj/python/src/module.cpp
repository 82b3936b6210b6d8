#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "fpca/dataset.hpp"
#include "fpca/errors.hpp"
#include "fpca/model_selection.hpp"
#include "fpca/pipeline.hpp"
#include "fpca/report.hpp"
#include "fpca/simulation.hpp"
#include "fpca/spline_basis.hpp"
#include "fpca/stiefel.hpp"

namespace py = pybind11;
using namespace fpca;

namespace {

SparseDataset from_rows(const std::vector<std::tuple<std::string, double, double>>& rows) {
  std::string text = "subject_id,t,y\n";
  for (const auto& [id, t, y] : rows) {
    char buf[96];
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", t, y);
    text += id + buf;
  }
  return parse_csv(text);
}

std::vector<std::tuple<std::string, double, double>> to_rows(const SparseDataset& d) {
  std::vector<std::tuple<std::string, double, double>> rows;
  rows.reserve(d.num_points());
  for (const auto& s : d.subjects)
    for (std::size_t j = 0; j < s.size(); ++j)
      rows.emplace_back(s.id, d.to_original(s.times[j]), s.values[j]);
  return rows;
}

FitOptions fit_options(double tol, int max_iter) {
  FitOptions o;
  o.tol = tol;
  o.max_iter = max_iter;
  o.validate();
  return o;
}

std::string fit_dataset(const SparseDataset& data, int m, int r, double tol, int max_iter,
                        std::optional<double> mean_bandwidth, bool with_cv, int grid_size) {
  const PreparedData prep = prepare(data, mean_bandwidth);
  const CellFit cell = fit_cell(prep.centered, m, r, fit_options(tol, max_iter));
  std::optional<CvBreakdown> cv;
  std::string note;
  if (with_cv) {
    if (!cell.report.converged) {
      note = "fit did not converge";
    } else {
      try {
        cv = approx_cv(cell.report, cell.caches);
      } catch (const Error& e) {
        note = e.what();
      }
    }
  }
  return dump(fit_json(cell.report, cell.basis, data, prep.mean, cv, note, grid_size));
}

}  // namespace

PYBIND11_MODULE(_fpca, m) {
  m.doc() = "Sparse functional principal components by restricted maximum likelihood";

  auto base = py::register_exception<Error>(m, "FpcaError", PyExc_RuntimeError);
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NoModelError>(m, "NoModelError", base.ptr());

  py::class_<SparseDataset>(m, "Dataset")
      .def(py::init(&from_rows), py::arg("rows"),
           "Build from (subject_id, t, y) rows in any time scale.")
      .def_property_readonly("num_subjects", &SparseDataset::num_subjects)
      .def_property_readonly("num_points", &SparseDataset::num_points)
      .def_readonly("time_min", &SparseDataset::time_min)
      .def_readonly("time_max", &SparseDataset::time_max)
      .def("rows", &to_rows, "(subject_id, t, y) rows in the original time scale.")
      .def("to_csv", &format_csv)
      .def("__len__", &SparseDataset::num_subjects);

  m.def("load_csv", &load_csv, py::arg("path"));
  m.def("parse_csv", &parse_csv, py::arg("text"));

  py::class_<BasisSystem>(m, "Basis")
      .def(py::init<int, int>(), py::arg("num_functions"), py::arg("order") = 4)
      .def_property_readonly("size", &BasisSystem::size)
      .def_property_readonly("order", &BasisSystem::order)
      .def_property_readonly("knots", &BasisSystem::knots)
      .def("values", &BasisSystem::values, py::arg("t"))
      .def(
          "design",
          [](const BasisSystem& b, const std::vector<double>& times) {
            return evaluate_design(b, times);
          },
          py::arg("times"), "M x m matrix of basis values, one column per time.");

  m.def("exp_skew", &exp_skew, py::arg("x"), py::arg("t") = 1.0);
  m.def(
      "project_to_tangent",
      [](const MatrixXd& b, const MatrixXd& f) {
        return MatrixXd(project_to_tangent(StiefelPoint(b), f).values());
      },
      py::arg("b"), py::arg("f"));
  m.def(
      "geodesic_step",
      [](const MatrixXd& b, const MatrixXd& d, double t) {
        const StiefelPoint p(b);
        return MatrixXd(geodesic_step(p, TangentVector(p, d), t).values());
      },
      py::arg("b"), py::arg("d"), py::arg("t"));

  m.def(
      "generate",
      [](const std::string& setting, int n, std::uint64_t seed, double noise_variance,
         const std::string& noise) {
        const TruthSpec spec = make_truth(parse_setting(setting), noise_variance, parse_noise(noise));
        auto [data, truth] = generate(spec, n, seed);
        return py::make_tuple(data, dump(truth_json(truth)));
      },
      py::arg("setting"), py::arg("n"), py::arg("seed"), py::arg("noise_variance") = 1.0 / 16.0,
      py::arg("noise") = "gaussian");

  m.def("fit", &fit_dataset, py::arg("data"), py::arg("num_basis"), py::arg("rank"),
        py::arg("tol") = 1e-4, py::arg("max_iter") = 100, py::arg("mean_bandwidth") = py::none(),
        py::arg("cv") = true, py::arg("grid_size") = 201, py::call_guard<py::gil_scoped_release>());

  m.def(
      "select",
      [](const SparseDataset& data, const std::vector<int>& m_grid, const std::vector<int>& r_grid,
         const std::vector<double>& kappas, double tol, int max_iter,
         std::optional<double> mean_bandwidth) {
        const PreparedData prep = prepare(data, mean_bandwidth);
        SelectionOptions so;
        so.fit = fit_options(tol, max_iter);
        so.fev_kappas = kappas;
        return dump(selection_json(select_model(prep.centered, m_grid, r_grid, so), data, prep.mean));
      },
      py::arg("data"), py::arg("m_grid"), py::arg("r_grid"), py::arg("kappas") = std::vector<double>{},
      py::arg("tol") = 1e-4, py::arg("max_iter") = 100, py::arg("mean_bandwidth") = py::none(),
      py::call_guard<py::gil_scoped_release>());

  m.def("fev_prune", &fev_prune, py::arg("eigenvalues"), py::arg("kappa"));

  m.def(
      "benchmark",
      [](const std::string& setting, int n, int replicates, const std::vector<int>& m_grid,
         const std::vector<int>& r_grid, std::uint64_t seed, double noise_variance,
         const std::string& noise) {
        const TruthSpec spec = make_truth(parse_setting(setting), noise_variance, parse_noise(noise));
        return dump(benchmark_json(run_benchmark(spec, n, replicates, m_grid, r_grid, seed), spec));
      },
      py::arg("setting"), py::arg("n"), py::arg("replicates"), py::arg("m_grid"), py::arg("r_grid"),
      py::arg("seed"), py::arg("noise_variance") = 1.0 / 16.0, py::arg("noise") = "gaussian",
      py::call_guard<py::gil_scoped_release>());
}
