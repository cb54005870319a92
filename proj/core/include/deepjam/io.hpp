#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "deepjam/simgen.hpp"
#include "deepjam/warpnet.hpp"

namespace deepjam::io {

namespace fs = std::filesystem;

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& s);

/// Write-to-temp-then-rename so readers never observe partial files.
void atomic_write(const fs::path& path, const std::string& content);

std::string read_file(const fs::path& path);

/// Exclusive lock on an output directory (refuses concurrent writers).
class DirLock {
public:
    explicit DirLock(const fs::path& dir);
    ~DirLock();
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    fs::path lock_path_;
};

// ---- delimited numeric files -------------------------------------------
//
// One '#'-prefixed header row of space-separated key=value pairs (grid
// metadata), then comma-separated rows of shortest-exact decimals.

using Metadata = std::map<std::string, std::string>;

struct MatrixFile {
    Metadata metadata;
    MatrixXd values;
};

std::string encode_matrix(const MatrixXd& values, const Metadata& metadata);
MatrixFile decode_matrix(const std::string& text);
void write_matrix(const fs::path& path, const MatrixXd& values, const Metadata& metadata);
MatrixFile read_matrix(const fs::path& path);

Metadata grid_metadata(const Grid& grid);
Grid grid_from_metadata(const Metadata& metadata);

// ---- flat key = value configuration files ------------------------------

struct ConfigMap {
    std::map<std::string, std::string> entries;
    std::string source;  // for error messages

    bool has(const std::string& key) const { return entries.count(key) > 0; }
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;

    /// Rejects keys outside the known schema.
    void require_known_keys(const std::vector<std::string>& known) const;
};

ConfigMap parse_config(const std::string& text, const std::string& source);
ConfigMap load_config(const fs::path& path);

// ---- binary checkpoint ---------------------------------------------------
//
// Layout (little-endian), documented in the README:
//   magic "DJAMCKPT", u32 version, NetConfig fields, i64 step_count,
//   per layer: dims + weight/bias/Adam tensors as raw f64.

void save_checkpoint(const fs::path& path, const WarpNetParams& params);
WarpNetParams load_checkpoint(const fs::path& path);

// ---- dataset directories -------------------------------------------------

void write_dataset(const fs::path& dir, const SimDataset& dataset, std::uint64_t seed);
SimDataset read_dataset(const fs::path& dir);

/// Per-subject warps as one file (rows = subjects, columns = grid points).
void write_warps(const fs::path& path, const std::vector<Warp>& warps);
std::vector<Warp> read_warps(const fs::path& path);

void write_samples(const fs::path& path, const std::vector<FunctionSample>& samples, int channel);
FunctionSample read_sample(const fs::path& path);
void write_sample(const fs::path& path, const FunctionSample& sample);

}  // namespace deepjam::io
