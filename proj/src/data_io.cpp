#include "nogp/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "nogp/fno_sim.hpp"

namespace nogp {

namespace {

constexpr const char* kTextVersion = "nogp-dataset-1";
constexpr const char* kBinaryVersion = "nogp-dataset-1b";

NoGpConfig synthetic_truth_config() {
  NoGpConfig config;
  config.input_channels = 1;
  LayerSpec hidden;
  hidden.integral = FnoSpec{{5}, 1.0 / 11.0};
  hidden.sigma_w2 = 1.0;
  hidden.activation = ActivationKind::Relu;
  LayerSpec head;
  head.sigma_w2 = 1.0;
  config.layers = {hidden, head};
  return config;
}

}  // namespace

FunctionDataset generate_synthetic(std::uint64_t seed) {
  const int n = 100;
  const std::vector<int> band{5};
  FunctionDataset ds;
  ds.grid = TorusGrid({11});
  ds.data_seed = seed;
  ds.truth_seed = Rng(seed).split(0x7472757468ULL).next_u64();
  ds.has_seeds = true;

  Rng truth_rng(ds.truth_seed);
  const FnoParams truth =
      sample_fno_params(synthetic_truth_config(), {1, 1, 1}, truth_rng);

  Rng data_rng(seed);
  for (int i = 0; i < n; ++i) {
    const SpectralFunction f = sample_uniform_bandlimited(band, data_rng);
    ds.inputs.push_back(evaluate_on_grid(f, ds.grid));
    ds.targets.push_back(eval_fno(truth, f, ds.grid));
    ds.names.push_back("synthetic-" + std::to_string(i));
  }
  ds.validate();
  return ds;
}

namespace {

std::uint64_t swap_bytes(std::uint64_t x) {
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out = (out << 8) | ((x >> (8 * i)) & 0xFF);
  return out;
}

void write_doubles_binary(std::ostream& out, const Eigen::MatrixXd& values) {
  for (long r = 0; r < values.rows(); ++r)
    for (long c = 0; c < values.cols(); ++c) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(values(r, c));
      if constexpr (std::endian::native == std::endian::big) bits = swap_bytes(bits);
      out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
}

void read_doubles_binary(std::istream& in, Eigen::MatrixXd& values, int record) {
  for (long r = 0; r < values.rows(); ++r)
    for (long c = 0; c < values.cols(); ++c) {
      std::uint64_t bits = 0;
      in.read(reinterpret_cast<char*>(&bits), sizeof(bits));
      if (!in)
        throw std::runtime_error("load_dataset: length mismatch in record " +
                                 std::to_string(record));
      if constexpr (std::endian::native == std::endian::big) bits = swap_bytes(bits);
      values(r, c) = std::bit_cast<double>(bits);
    }
}

void write_doubles_text(std::ostream& out, const Eigen::MatrixXd& values) {
  char buf[64];
  bool first = true;
  for (long r = 0; r < values.rows(); ++r)
    for (long c = 0; c < values.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", values(r, c));
      if (!first) out << ',';
      out << buf;
      first = false;
    }
  out << '\n';
}

void read_doubles_text(std::istream& in, Eigen::MatrixXd& values, int record) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("load_dataset: length mismatch in record " + std::to_string(record));
  std::stringstream ss(line);
  std::string token;
  const long expected = values.size();
  long count = 0;
  while (std::getline(ss, token, ',')) {
    if (count >= expected) {
      ++count;
      break;
    }
    try {
      values(count / values.cols(), count % values.cols()) = std::stod(token);
    } catch (const std::exception&) {
      throw std::runtime_error("load_dataset: unparsable value in record " +
                               std::to_string(record));
    }
    ++count;
  }
  if (count != expected)
    throw std::runtime_error("load_dataset: length mismatch in record " + std::to_string(record));
}

}  // namespace

void save_dataset(const FunctionDataset& ds, const std::string& path, bool binary) {
  ds.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);

  nlohmann::json header;
  header["version"] = binary ? kBinaryVersion : kTextVersion;
  header["dx"] = ds.grid.dim();
  header["sizes"] = ds.grid.sizes;
  header["in_channels"] = ds.input_channels();
  header["n"] = ds.n();
  header["domain_map"] = {ds.domain_map[0], ds.domain_map[1]};
  if (ds.has_seeds) {
    header["meta"] = {{"data_seed", ds.data_seed}, {"truth_seed", ds.truth_seed}};
  }
  out << header.dump() << '\n';

  for (int i = 0; i < ds.n(); ++i) {
    if (binary) {
      write_doubles_binary(out, ds.inputs[i].values);
      write_doubles_binary(out, ds.targets[i].values);
    } else {
      write_doubles_text(out, ds.inputs[i].values);
      write_doubles_text(out, ds.targets[i].values);
    }
  }
  if (!out) throw std::runtime_error("save_dataset: write failed for " + path);
}

FunctionDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);

  std::string header_line;
  if (!std::getline(in, header_line))
    throw std::runtime_error("load_dataset: missing header line in " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_dataset: malformed header: " + std::string(e.what()));
  }

  FunctionDataset ds;
  bool binary = false;
  try {
    const std::string version = header.at("version").get<std::string>();
    if (version == kBinaryVersion)
      binary = true;
    else if (version != kTextVersion)
      throw std::runtime_error("load_dataset: unknown version " + version);
    ds.grid = TorusGrid(header.at("sizes").get<std::vector<int>>());
    if (header.at("dx").get<int>() != ds.grid.dim())
      throw std::runtime_error("load_dataset: dx inconsistent with sizes");
    const auto dm = header.at("domain_map").get<std::vector<double>>();
    if (dm.size() != 2) throw std::runtime_error("load_dataset: domain_map must have 2 entries");
    ds.domain_map = {dm[0], dm[1]};
    if (header.contains("meta")) {
      ds.data_seed = header["meta"].value("data_seed", std::uint64_t{0});
      ds.truth_seed = header["meta"].value("truth_seed", std::uint64_t{0});
      ds.has_seeds = true;
    }
    const int n = header.at("n").get<int>();
    const int channels = header.at("in_channels").get<int>();
    if (n < 1 || channels < 1) throw std::runtime_error("load_dataset: invalid n/in_channels");

    for (int i = 0; i < n; ++i) {
      GridFunction f(ds.grid, channels);
      GridFunction g(ds.grid, 1);
      if (binary) {
        read_doubles_binary(in, f.values, i);
        read_doubles_binary(in, g.values, i);
      } else {
        read_doubles_text(in, f.values, i);
        read_doubles_text(in, g.values, i);
      }
      if (!f.values.allFinite() || !g.values.allFinite())
        throw std::runtime_error("load_dataset: non-finite values in record " + std::to_string(i));
      ds.inputs.push_back(std::move(f));
      ds.targets.push_back(std::move(g));
      ds.names.push_back("record-" + std::to_string(i));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_dataset: malformed header: " + std::string(e.what()));
  }
  ds.validate();
  return ds;
}

FunctionDataset subsample(const FunctionDataset& ds, int n_keep, int stride, std::uint64_t seed) {
  ds.validate();
  if (n_keep < 1 || n_keep > ds.n())
    throw std::invalid_argument("subsample: need 1 <= n_keep <= n");
  if (stride < 1) throw std::invalid_argument("subsample: stride must be >= 1");
  for (int m : ds.grid.sizes)
    if (m % stride != 0)
      throw std::invalid_argument("subsample: stride must divide every grid size "
                                  "(non-equispaced request)");

  // Seeded selection of functions, kept in original order.
  std::vector<int> indices(ds.n());
  for (int i = 0; i < ds.n(); ++i) indices[i] = i;
  if (n_keep < ds.n()) {
    Rng rng(seed);
    for (int i = ds.n() - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
      std::swap(indices[i], indices[j]);
    }
    indices.resize(n_keep);
    std::sort(indices.begin(), indices.end());
  }

  FunctionDataset picked = ds.select(indices);
  if (stride == 1) return picked;

  std::vector<int> coarse_sizes(ds.grid.sizes);
  for (int& m : coarse_sizes) m /= stride;
  const TorusGrid coarse(coarse_sizes);
  // Row indices of the kept points (stride sublattice, row-major).
  std::vector<long> rows(coarse.total());
  for (long flat = 0; flat < coarse.total(); ++flat) {
    long rest = flat;
    long fine_flat = 0;
    std::vector<int> multi(coarse.dim());
    for (int j = coarse.dim() - 1; j >= 0; --j) {
      multi[j] = static_cast<int>(rest % coarse.sizes[j]);
      rest /= coarse.sizes[j];
    }
    for (int j = 0; j < coarse.dim(); ++j)
      fine_flat = fine_flat * ds.grid.sizes[j] + static_cast<long>(multi[j]) * stride;
    rows[flat] = fine_flat;
  }

  FunctionDataset out;
  out.grid = coarse;
  out.domain_map = picked.domain_map;
  out.data_seed = picked.data_seed;
  out.truth_seed = picked.truth_seed;
  out.has_seeds = picked.has_seeds;
  out.names = picked.names;
  for (int i = 0; i < picked.n(); ++i) {
    GridFunction f(coarse, picked.inputs[i].channels);
    GridFunction g(coarse, 1);
    for (long p = 0; p < coarse.total(); ++p) {
      f.values.row(p) = picked.inputs[i].values.row(rows[p]);
      g.values.row(p) = picked.targets[i].values.row(rows[p]);
    }
    out.inputs.push_back(std::move(f));
    out.targets.push_back(std::move(g));
  }
  out.validate();
  return out;
}

std::string dataset_hash(const FunctionDataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_bytes = [&](const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (int m : ds.grid.sizes) mix_bytes(&m, sizeof(m));
  for (int i = 0; i < ds.n(); ++i) {
    mix_bytes(ds.inputs[i].values.data(), sizeof(double) * ds.inputs[i].values.size());
    mix_bytes(ds.targets[i].values.data(), sizeof(double) * ds.targets[i].values.size());
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

}  // namespace nogp
