#pragma once

#include <optional>

#include "deepjam/io.hpp"
#include "deepjam/jam.hpp"
#include "deepjam/metrics.hpp"

namespace deepjam::commands {

namespace fs = std::filesystem;

inline constexpr const char* kSoftwareVersion = "deepjam 0.1.0";

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> iterations;
};

SimConfig sim_config_from(const io::ConfigMap& cfg);
JamConfig jam_config_from(const io::ConfigMap& cfg);

/// Resolve --preset names against DEEPJAM_PRESET_DIR, ./presets and the
/// installed data directory.
fs::path resolve_preset(const std::string& name);

/// Generate a simulated dataset. Returns the dataset directory.
void run_simulate(int scenario, const fs::path& config_path, const Overrides& overrides, const fs::path& out_dir);

/// Run the joint alignment on the training split of a dataset; writes the
/// checkpoint, centering warp, warps, templates, histories and manifest.
void run_train(const fs::path& data_dir, const fs::path& config_path, const Overrides& overrides,
               const fs::path& out_dir);

/// Inference: predict warps for every subject of a dataset with a trained
/// checkpoint plus its stored centering warp; writes warps and aligned
/// functions.
void run_align(const fs::path& checkpoint, const fs::path& data_dir, const fs::path& out_dir);

/// Recompute common and subject-specific templates from a training run.
void run_template(const fs::path& result_dir);

/// Variance report (per split) plus plot-data files for a train or align
/// result directory.
void run_evaluate(const fs::path& result_dir);

}  // namespace deepjam::commands
