// Batch experiment driver: limit-convergence study, layer-variance check,
// GP regression benchmarks, and synthetic dataset generation. Every command
// is deterministic given its flags (including --seed) and writes a
// machine-readable table plus a <out>.manifest.json run manifest.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nogp/data_io.hpp"
#include "nogp/experiments.hpp"
#include "nogp/gp_regress.hpp"
#include "nogp/serde.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

using nlohmann::json;

void write_manifest(const std::string& out_path, const std::string& command, const json& flags,
                    std::uint64_t seed, double wall_seconds) {
  json manifest;
  manifest["command"] = command;
  manifest["flags"] = flags;
  manifest["seed"] = seed;
  manifest["version"] = NOGP_VERSION;
  manifest["wall_time_s"] = wall_seconds;
  manifest["output"] = out_path;
  std::ofstream out(out_path + ".manifest.json");
  if (!out) throw std::runtime_error("cannot open manifest for " + out_path);
  out << manifest.dump(2) << '\n';
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) out.push_back(std::stoi(token));
  if (out.empty()) throw CLI::ValidationError("expected a comma-separated integer list");
  return out;
}

std::vector<long> parse_long_list(const std::string& text) {
  std::vector<long> out;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) out.push_back(std::stol(token));
  if (out.empty()) throw CLI::ValidationError("expected a comma-separated integer list");
  return out;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

int cmd_limit_check(const std::string& widths_text, long n_samples, int band, std::uint64_t seed,
                    const std::string& out_path) {
  Timer timer;
  const std::vector<int> widths = parse_int_list(widths_text);
  const nogp::LimitCheckResult result = nogp::run_limit_check(band, widths, n_samples, seed);

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open " + out_path);
  for (const auto& r : result.records) {
    json line = {{"J", r.width},
                 {"n_samples", r.n_samples},
                 {"tvd", r.tvd},
                 {"mc_variance", r.mc_variance},
                 {"analytic_variance", r.analytic_variance},
                 {"seed", r.seed}};
    out << line.dump() << '\n';
  }
  write_manifest(out_path, "limit-check",
                 {{"widths", widths_text}, {"samples", n_samples}, {"band", band}}, seed,
                 timer.seconds());
  return 0;
}

int cmd_variance_check(const std::string& schedule_text, int band, std::uint64_t seed,
                       const std::string& out_path) {
  Timer timer;
  const std::vector<long> schedule = parse_long_list(schedule_text);
  const auto rows = nogp::run_variance_check(band, schedule, seed);

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open " + out_path);
  out << "n_samples,mc_variance,analytic_variance,relative_error\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g\n", r.n_samples, r.mc_variance,
                  r.analytic_variance, r.relative_error);
    out << buf;
  }
  write_manifest(out_path, "variance-check",
                 {{"samples-schedule", schedule_text}, {"band", band}}, seed, timer.seconds());
  return 0;
}

int cmd_generate(std::uint64_t seed, const std::string& out_path, bool binary) {
  Timer timer;
  const nogp::FunctionDataset ds = nogp::generate_synthetic(seed);
  nogp::save_dataset(ds, out_path, binary);
  write_manifest(out_path, "generate", {{"binary", binary}}, seed, timer.seconds());
  return 0;
}

int cmd_regress(const std::string& dataset_path, const std::string& model, int band, double nu,
                const std::string& lengthscale_text, int truncation, int folds, int budget,
                double noise, std::uint64_t seed, const std::string& out_path) {
  Timer timer;
  nogp::FunctionDataset ds;
  try {
    ds = nogp::load_dataset(dataset_path);
  } catch (const std::exception& e) {
    std::cerr << "nogp regress: " << dataset_path << ": " << e.what() << '\n';
    return kExitData;
  }

  nogp::GpHyperparams init;
  init.noise_variance = noise;
  if (model == "fno") {
    const double sigma_k2 = 1.0 / (2.0 * band + 1.0);
    init.config = nogp::single_hidden_fno_config(band, sigma_k2, 1.0, 1.0);
  } else if (model == "matern") {
    std::vector<double> ell(ds.grid.dim(), 1.0);
    if (!lengthscale_text.empty()) {
      std::stringstream ss(lengthscale_text);
      std::string token;
      ell.clear();
      while (std::getline(ss, token, ',')) ell.push_back(std::stod(token));
      if (static_cast<int>(ell.size()) != ds.grid.dim())
        throw CLI::ValidationError("--lengthscale: need one value per dimension");
    }
    nogp::NoGpConfig config;
    config.input_channels = ds.input_channels();
    nogp::LayerSpec hidden;
    nogp::ToroidalMaternSpec mat;
    mat.nu_x = nu;
    mat.nu_z = nu;
    mat.ell_x = ell;
    mat.ell_z = ell;
    mat.truncation = truncation;
    mat.sigma_k2 = 1.0;
    hidden.integral = mat;
    hidden.sigma_w2 = 1.0;
    hidden.activation = nogp::ActivationKind::Relu;
    nogp::LayerSpec head;
    head.sigma_w2 = 1.0;
    config.layers = {hidden, head};
    init.config = config;
  } else {
    throw CLI::ValidationError("--model must be fno or matern");
  }

  const nogp::CvResult cv = nogp::cross_validate(ds, init, folds, budget, seed);

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open " + out_path);
  for (size_t i = 0; i < cv.folds.size(); ++i) {
    const auto& fold = cv.folds[i];
    json line = {{"fold", i},
                 {"l2_abs", fold.mean_abs},
                 {"l2_rel", fold.mean_rel},
                 {"hyperparams", nogp::to_json(fold.fitted)},
                 {"objective", fold.fit_objective},
                 {"wall_time_s", fold.wall_seconds},
                 {"test_indices", fold.test_indices}};
    out << line.dump() << '\n';
  }
  json aggregate = {{"aggregate", true},
                    {"l2_abs_mean", cv.mean_abs},
                    {"l2_abs_std", cv.std_abs},
                    {"l2_rel_mean", cv.mean_rel},
                    {"l2_rel_std", cv.std_rel},
                    {"dataset_hash", nogp::dataset_hash(ds)},
                    {"wall_time_s", timer.seconds()}};
  out << aggregate.dump() << '\n';
  write_manifest(out_path, "regress",
                 {{"dataset", dataset_path},
                  {"model", model},
                  {"band", band},
                  {"nu", nu},
                  {"folds", folds},
                  {"budget", budget}},
                 seed, timer.seconds());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Infinite-width neural-operator Gaussian processes on the torus"};
  app.require_subcommand(1);

  // limit-check
  auto* limit = app.add_subcommand("limit-check", "Width-limit TVD study at x = 0");
  std::string widths = "1,10,100,1000";
  long samples = 10000;
  int band = 3;
  std::uint64_t seed = 0;
  std::string out_path;
  limit->add_option("--widths", widths, "Comma-separated hidden widths");
  limit->add_option("--samples", samples, "Monte Carlo samples per width")
      ->check(CLI::PositiveNumber);
  limit->add_option("--band", band, "Band limit of input and kernel")->check(CLI::PositiveNumber);
  limit->add_option("--seed", seed, "Master seed");
  limit->add_option("--out", out_path, "Output JSON-lines path")->required();

  // variance-check
  auto* variance = app.add_subcommand("variance-check", "Layer variance MC convergence");
  std::string schedule = "100,1000,10000,100000";
  int v_band = 3;
  std::uint64_t v_seed = 0;
  std::string v_out;
  variance->add_option("--samples-schedule", schedule, "Comma-separated sample counts");
  variance->add_option("--band", v_band, "Band limit")->check(CLI::PositiveNumber);
  variance->add_option("--seed", v_seed, "Master seed");
  variance->add_option("--out", v_out, "Output CSV path")->required();

  // regress
  auto* regress = app.add_subcommand("regress", "Cross-validated GP regression");
  std::string dataset, model = "fno", lengthscale, r_out;
  int r_band = 5, truncation = 128, folds = 5, budget = 120;
  double nu = 2.5, noise = 1e-4;
  std::uint64_t r_seed = 0;
  regress->add_option("--dataset", dataset, "Dataset file")->required();
  regress->add_option("--model", model, "fno | matern")
      ->check(CLI::IsMember({"fno", "matern"}));
  regress->add_option("--band", r_band, "FNO kernel band")->check(CLI::PositiveNumber);
  regress->add_option("--nu", nu, "Matern smoothness (inf for squared exponential)");
  regress->add_option("--lengthscale", lengthscale, "Matern lengthscales, comma-separated");
  regress->add_option("--truncation", truncation, "Matern series truncation")
      ->check(CLI::PositiveNumber);
  regress->add_option("--folds", folds, "Cross-validation folds")->check(CLI::PositiveNumber);
  regress->add_option("--budget", budget, "Objective evaluations per fold fit")
      ->check(CLI::PositiveNumber);
  regress->add_option("--noise", noise, "Initial noise variance")->check(CLI::PositiveNumber);
  regress->add_option("--seed", r_seed, "Fold-shuffle seed");
  regress->add_option("--out", r_out, "Output JSON-lines path")->required();

  // generate
  auto* generate = app.add_subcommand("generate", "Write the synthetic dataset");
  std::uint64_t g_seed = 0;
  std::string g_out;
  bool g_binary = false;
  generate->add_option("--seed", g_seed, "Data seed");
  generate->add_option("--out", g_out, "Output dataset path")->required();
  generate->add_flag("--binary", g_binary, "Write the binary variant");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (limit->parsed()) return cmd_limit_check(widths, samples, band, seed, out_path);
    if (variance->parsed()) return cmd_variance_check(schedule, v_band, v_seed, v_out);
    if (regress->parsed())
      return cmd_regress(dataset, model, r_band, nu, lengthscale, truncation, folds, budget,
                         noise, r_seed, r_out);
    if (generate->parsed()) return cmd_generate(g_seed, g_out, g_binary);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "nogp: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "nogp: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "nogp: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
