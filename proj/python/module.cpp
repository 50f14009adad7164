// Python bindings for the core operations: spectral arithmetic on the torus,
// dual kernels, composed covariances, the finite-width simulator, and GP
// regression over function datasets.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"
#include "nogp/data_io.hpp"
#include "nogp/experiments.hpp"
#include "nogp/fno_sim.hpp"
#include "nogp/gp_regress.hpp"
#include "nogp/serde.hpp"

namespace py = pybind11;
using namespace nogp;

namespace {

NoGpConfig config_from_json_str(const std::string& text) {
  return config_from_json(nlohmann::json::parse(text));
}

GpHyperparams hyperparams_from_json_str(const std::string& text) {
  return hyperparams_from_json(nlohmann::json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_nogp, m) {
  m.doc() = "Infinite-width neural-operator Gaussian processes on the flat torus";
  m.attr("__version__") = NOGP_VERSION;

  py::class_<TorusGrid>(m, "TorusGrid")
      .def(py::init<std::vector<int>>(), py::arg("sizes"))
      .def_readonly("sizes", &TorusGrid::sizes)
      .def_property_readonly("dim", &TorusGrid::dim)
      .def_property_readonly("total", &TorusGrid::total)
      .def("points", &TorusGrid::points);

  py::class_<GridFunction>(m, "GridFunction")
      .def(py::init([](const TorusGrid& grid, const Eigen::MatrixXd& values) {
             GridFunction f(grid, static_cast<int>(values.cols()));
             f.values = values;
             f.validate();
             return f;
           }),
           py::arg("grid"), py::arg("values"))
      .def_readonly("grid", &GridFunction::grid)
      .def_readonly("channels", &GridFunction::channels)
      .def_readonly("values", &GridFunction::values);

  py::class_<SpectralFunction>(m, "SpectralFunction")
      .def(py::init([](const std::vector<int>& band, const Eigen::MatrixXcd& coeffs) {
             SpectralFunction f(band, static_cast<int>(coeffs.cols()));
             if (coeffs.rows() != f.n_modes())
               throw std::invalid_argument("coefficient rows must match the band cube");
             f.coeffs = coeffs;
             return f;
           }),
           py::arg("band"), py::arg("coeffs"))
      .def_readonly("band", &SpectralFunction::band)
      .def_readonly("channels", &SpectralFunction::channels)
      .def_readonly("coeffs", &SpectralFunction::coeffs)
      .def("conjugate_symmetry_defect", &SpectralFunction::conjugate_symmetry_defect);

  m.def("fourier_coeffs", &fourier_coeffs, py::arg("f"), py::arg("band"));
  m.def("evaluate_spectral", &evaluate_spectral, py::arg("f"), py::arg("points"));
  m.def("evaluate_on_grid", &evaluate_on_grid, py::arg("f"), py::arg("grid"));
  m.def(
      "sample_bandlimited_gp",
      [](const std::vector<int>& band, double variance, int channels, std::uint64_t seed) {
        Rng rng(seed);
        return sample_bandlimited_gp(band, variance, channels, rng);
      },
      py::arg("band"), py::arg("variance"), py::arg("channels") = 1, py::arg("seed") = 0);
  m.def(
      "sample_uniform_bandlimited",
      [](const std::vector<int>& band, std::uint64_t seed) {
        Rng rng(seed);
        return sample_uniform_bandlimited(band, rng);
      },
      py::arg("band"), py::arg("seed") = 0);

  m.def("relu_dual", &relu_dual, py::arg("k11"), py::arg("k12"), py::arg("k22"));
  m.def(
      "apply_dual",
      [](const std::string& kind, const Eigen::MatrixXd& K) {
        return apply_dual(kind == "relu" ? ActivationKind::Relu : ActivationKind::Identity, K);
      },
      py::arg("kind"), py::arg("K"));

  m.def("matern_spectral_density", &matern_spectral_density, py::arg("lam"), py::arg("nu"),
        py::arg("ell"));
  m.def("matern_kernel_eval", &matern_kernel_eval, py::arg("x"), py::arg("y"), py::arg("nu"),
        py::arg("ell"), py::arg("truncation"));

  m.def(
      "compose_covariance",
      [](const std::string& config_json, const std::vector<SpectralFunction>& fs,
         const TorusGrid& grid) {
        return compose_covariance(config_from_json_str(config_json), fs, grid).values;
      },
      py::arg("config_json"), py::arg("fs"), py::arg("grid"),
      "Composed infinite-width covariance over all input pairs, flattened to "
      "an (n m) x (n m) matrix.");

  m.def(
      "mc_output_samples",
      [](const std::string& config_json, const std::vector<int>& widths,
         const SpectralFunction& f, const std::vector<double>& x, long n_samples,
         std::uint64_t seed) {
        return mc_output_samples(config_from_json_str(config_json), widths, f, x, n_samples,
                                 seed);
      },
      py::arg("config_json"), py::arg("widths"), py::arg("f"), py::arg("x"),
      py::arg("n_samples"), py::arg("seed") = 0);
  m.def("tvd_to_gaussian", &tvd_to_gaussian, py::arg("samples"), py::arg("mu"), py::arg("var"),
        py::arg("n_bins") = 100);

  py::class_<FunctionDataset>(m, "FunctionDataset")
      .def_readonly("grid", &FunctionDataset::grid)
      .def_readonly("inputs", &FunctionDataset::inputs)
      .def_readonly("targets", &FunctionDataset::targets)
      .def_property_readonly("n", &FunctionDataset::n)
      .def_readonly("domain_map", &FunctionDataset::domain_map)
      .def_readonly("data_seed", &FunctionDataset::data_seed)
      .def_readonly("truth_seed", &FunctionDataset::truth_seed);

  m.def("generate_synthetic", &generate_synthetic, py::arg("seed"));
  m.def("save_dataset", &save_dataset, py::arg("ds"), py::arg("path"),
        py::arg("binary") = false);
  m.def("load_dataset", &load_dataset, py::arg("path"));
  m.def("subsample", &subsample, py::arg("ds"), py::arg("n_keep"), py::arg("stride"),
        py::arg("seed") = 0);
  m.def("dataset_hash", &dataset_hash, py::arg("ds"));

  m.def(
      "build_gram",
      [](const std::string& hp_json, const FunctionDataset& ds) {
        return build_gram(hyperparams_from_json_str(hp_json), ds);
      },
      py::arg("hyperparams_json"), py::arg("ds"));
  m.def(
      "log_marginal_likelihood",
      [](const std::string& hp_json, const FunctionDataset& ds) {
        return log_marginal_likelihood(hyperparams_from_json_str(hp_json), ds);
      },
      py::arg("hyperparams_json"), py::arg("ds"));
  m.def(
      "fit_hyperparams",
      [](const FunctionDataset& ds, const std::string& init_json, int budget) {
        const FitResult fit = fit_hyperparams(ds, hyperparams_from_json_str(init_json), budget);
        return py::make_tuple(to_json(fit.hp).dump(), fit.objective, fit.converged,
                              fit.n_evals);
      },
      py::arg("ds"), py::arg("init_json"), py::arg("budget"),
      "Returns (hyperparams_json, objective, converged, n_evals).");
  m.def(
      "posterior_predict",
      [](const std::string& hp_json, const FunctionDataset& ds, const GridFunction& star) {
        const Posterior post = posterior_predict(hyperparams_from_json_str(hp_json), ds, star);
        return py::make_tuple(post.mean.values, post.cov);
      },
      py::arg("hyperparams_json"), py::arg("ds"), py::arg("f_star"),
      "Returns (mean values, covariance matrix).");
  m.def(
      "cross_validate",
      [](const FunctionDataset& ds, const std::string& init_json, int k_folds, int budget,
         std::uint64_t seed) {
        const CvResult cv =
            cross_validate(ds, hyperparams_from_json_str(init_json), k_folds, budget, seed);
        py::list folds;
        for (const auto& fold : cv.folds) {
          py::dict d;
          d["test_indices"] = fold.test_indices;
          d["l2_abs"] = fold.mean_abs;
          d["l2_rel"] = fold.mean_rel;
          d["hyperparams_json"] = to_json(fold.fitted).dump();
          folds.append(d);
        }
        py::dict out;
        out["folds"] = folds;
        out["l2_abs_mean"] = cv.mean_abs;
        out["l2_abs_std"] = cv.std_abs;
        out["l2_rel_mean"] = cv.mean_rel;
        out["l2_rel_std"] = cv.std_rel;
        return out;
      },
      py::arg("ds"), py::arg("init_json"), py::arg("k_folds") = 5, py::arg("budget") = 120,
      py::arg("seed") = 0);

  m.def("l2_error", &l2_error, py::arg("pred"), py::arg("truth"),
        "Returns (absolute, relative) empirical L2 error.");

  m.def(
      "single_hidden_fno_config",
      [](int band, double sigma_k2, double sigma_w2, double head_var) {
        return to_json(single_hidden_fno_config(band, sigma_k2, sigma_w2, head_var)).dump();
      },
      py::arg("band"), py::arg("sigma_k2"), py::arg("sigma_w2") = 1.0,
      py::arg("head_var") = 1.0);
}
