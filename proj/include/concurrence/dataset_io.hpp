#pragma once

#include <filesystem>
#include <string>

#include "concurrence/signal.hpp"

namespace concurrence {

/// Reads a dataset manifest (JSON: {version, pairs:[{pair_id, group_id?,
/// x_file, y_file}], metadata?}) plus the per-pair CSV signal files it
/// references. Paths are resolved relative to the manifest's directory. The
/// returned dataset is fully validated.
SignalDataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes manifest + per-pair CSVs (one row per time step, one column per
/// channel, no header) under `dir`. Returns the manifest path. load_dataset
/// inverts this to full double precision.
std::filesystem::path save_dataset(const SignalDataset& dataset,
                                   const std::filesystem::path& dir,
                                   const std::string& manifest_name = "dataset.json");

}  // namespace concurrence
