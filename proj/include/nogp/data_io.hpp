#pragma once

#include <cstdint>
#include <string>

#include "nogp/gp_regress.hpp"

namespace nogp {

// Dataset generation and file I/O.
//
// Files are line-oriented: a JSON header line
//   {"version": "nogp-dataset-1", "dx": 1, "sizes": [11], "in_channels": 1,
//    "n": 100, "domain_map": [lo, hi], "meta": {...}}
// followed per function by one input line and one target line of
// comma-separated decimal floats (row-major grid index, then channel).
// The binary variant ("nogp-dataset-1b") carries the same header line
// followed by raw little-endian 64-bit floats in the same record order.

// Synthetic operator-regression task: 100 band-limit-5 uniform inputs on the
// 11-point grid, targets produced by a fixed randomly-initialized width-1
// band-5 ground-truth network. Pure function of the seed (the ground-truth
// seed is derived from it and recorded in the dataset).
FunctionDataset generate_synthetic(std::uint64_t seed);

void save_dataset(const FunctionDataset& ds, const std::string& path, bool binary = false);
FunctionDataset load_dataset(const std::string& path);

// Keep n_keep functions (seeded random selection) and every stride-th grid
// point; the stride must divide every grid size to preserve periodic
// equispacing.
FunctionDataset subsample(const FunctionDataset& ds, int n_keep, int stride, std::uint64_t seed);

// FNV-1a content hash of grid sizes and values; binds models to datasets.
std::string dataset_hash(const FunctionDataset& ds);

}  // namespace nogp
