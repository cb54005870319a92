#include "deepjam/io.hpp"

#include <charconv>
#include <fcntl.h>
#include <unistd.h>
#include <cstring>
#include <fstream>
#include <sstream>

namespace deepjam::io {

namespace {

constexpr char kCheckpointMagic[8] = {'D', 'J', 'A', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::uint32_t kDatasetVersion = 1;

[[noreturn]] void fail(const std::string& message) { throw RuntimeError(message); }

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

void append_raw(std::string& out, const void* data, std::size_t bytes) {
    out.append(static_cast<const char*>(data), bytes);
}

template <typename T>
void append_value(std::string& out, T v) {
    append_raw(out, &v, sizeof(T));
}

class Reader {
public:
    Reader(const std::string& data, std::string name) : data_(data), name_(std::move(name)) {}

    template <typename T>
    T take() {
        T v;
        take_raw(&v, sizeof(T));
        return v;
    }

    void take_raw(void* dst, std::size_t bytes) {
        if (pos_ + bytes > data_.size()) fail(name_ + ": truncated file");
        std::memcpy(dst, data_.data() + pos_, bytes);
        pos_ += bytes;
    }

    bool exhausted() const { return pos_ == data_.size(); }

private:
    const std::string& data_;
    std::string name_;
    std::size_t pos_ = 0;
};

void append_matrix_data(std::string& out, const MatrixXd& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) append_value(out, m(r, c));
}

void read_matrix_data(Reader& in, MatrixXd& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = in.take<double>();
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc()) fail("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end) fail("parse_double: bad number '" + s + "'");
    return v;
}

void atomic_write(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail("atomic_write: cannot open " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) fail("atomic_write: short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail("atomic_write: rename to " + path.string() + " failed: " + ec.message());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

DirLock::DirLock(const fs::path& dir) {
    fs::create_directories(dir);
    lock_path_ = dir / ".deepjam.lock";
    const int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) fail("output directory " + dir.string() + " is locked by another writer (remove " +
                     lock_path_.string() + " if stale)");
    ::close(fd);
}

DirLock::~DirLock() {
    std::error_code ec;
    fs::remove(lock_path_, ec);
}

std::string encode_matrix(const MatrixXd& values, const Metadata& metadata) {
    std::string out = "#";
    Metadata meta = metadata;
    meta["rows"] = std::to_string(values.rows());
    meta["cols"] = std::to_string(values.cols());
    for (const auto& [k, v] : meta) out += " " + k + "=" + v;
    out += "\n";
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            if (c) out += ",";
            out += format_double(values(r, c));
        }
        out += "\n";
    }
    return out;
}

MatrixFile decode_matrix(const std::string& text) {
    MatrixFile out;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.empty() || line[0] != '#') fail("decode_matrix: missing header row");
    for (const std::string& tok : split(trim(line.substr(1)), ' ')) {
        if (tok.empty()) continue;
        const auto eq = tok.find('=');
        if (eq == std::string::npos) fail("decode_matrix: bad header token '" + tok + "'");
        out.metadata[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    const auto rows_it = out.metadata.find("rows");
    const auto cols_it = out.metadata.find("cols");
    if (rows_it == out.metadata.end() || cols_it == out.metadata.end()) fail("decode_matrix: header lacks rows/cols");
    const int rows = std::stoi(rows_it->second);
    const int cols = std::stoi(cols_it->second);
    out.values.resize(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) fail("decode_matrix: missing row " + std::to_string(r));
        const std::vector<std::string> cells = split(trim(line), ',');
        if (static_cast<int>(cells.size()) != cols) fail("decode_matrix: row " + std::to_string(r) + " has wrong arity");
        for (int c = 0; c < cols; ++c) out.values(r, c) = parse_double(cells[static_cast<std::size_t>(c)]);
    }
    return out;
}

void write_matrix(const fs::path& path, const MatrixXd& values, const Metadata& metadata) {
    atomic_write(path, encode_matrix(values, metadata));
}

MatrixFile read_matrix(const fs::path& path) {
    try {
        return decode_matrix(read_file(path));
    } catch (const Error& e) {
        fail(path.string() + ": " + e.what());
    }
}

Metadata grid_metadata(const Grid& grid) {
    return {{"grid_points", std::to_string(grid.num_points)},
            {"grid_lo", format_double(grid.lo)},
            {"grid_hi", format_double(grid.hi)}};
}

Grid grid_from_metadata(const Metadata& metadata) {
    const auto need = [&](const char* key) -> const std::string& {
        const auto it = metadata.find(key);
        if (it == metadata.end()) fail(std::string("matrix header lacks ") + key);
        return it->second;
    };
    return Grid(std::stoi(need("grid_points")), parse_double(need("grid_lo")), parse_double(need("grid_hi")));
}

std::string ConfigMap::get_string(const std::string& key) const {
    const auto it = entries.find(key);
    if (it == entries.end()) throw ValidationError(source + ": missing required key '" + key + "'");
    return it->second;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = entries.find(key);
    return it == entries.end() ? fallback : it->second;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
    const auto it = entries.find(key);
    if (it == entries.end()) return fallback;
    try {
        return parse_double(it->second);
    } catch (const Error&) {
        throw ValidationError(source + ": key '" + key + "' is not a number: '" + it->second + "'");
    }
}

int ConfigMap::get_int(const std::string& key, int fallback) const {
    const auto it = entries.find(key);
    if (it == entries.end()) return fallback;
    try {
        std::size_t used = 0;
        const int v = std::stoi(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ValidationError(source + ": key '" + key + "' is not an integer: '" + it->second + "'");
    }
}

std::uint64_t ConfigMap::get_uint64(const std::string& key, std::uint64_t fallback) const {
    const auto it = entries.find(key);
    if (it == entries.end()) return fallback;
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ValidationError(source + ": key '" + key + "' is not an unsigned integer: '" + it->second + "'");
    }
}

void ConfigMap::require_known_keys(const std::vector<std::string>& known) const {
    for (const auto& [key, value] : entries) {
        bool ok = false;
        for (const std::string& k : known) ok = ok || k == key;
        if (!ok) throw ValidationError(source + ": unknown key '" + key + "'");
    }
}

ConfigMap parse_config(const std::string& text, const std::string& source) {
    ConfigMap cfg;
    cfg.source = source;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ValidationError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) throw ValidationError(source + ":" + std::to_string(lineno) + ": empty key");
        if (cfg.entries.count(key))
            throw ValidationError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        cfg.entries[key] = value;
    }
    return cfg;
}

ConfigMap load_config(const fs::path& path) { return parse_config(read_file(path), path.string()); }

void save_checkpoint(const fs::path& path, const WarpNetParams& params) {
    params.validate();
    std::string out;
    append_raw(out, kCheckpointMagic, sizeof(kCheckpointMagic));
    append_value(out, kCheckpointVersion);
    const NetConfig& c = params.config;
    append_value<std::int32_t>(out, c.input_points);
    append_value<std::int32_t>(out, c.channels);
    append_value<std::int32_t>(out, c.num_layers);
    append_value<std::int32_t>(out, c.filters_per_hidden_layer);
    append_value<std::int32_t>(out, c.kernel_size);
    append_value(out, c.learning_rate);
    append_value(out, c.adam_beta1);
    append_value(out, c.adam_beta2);
    append_value(out, c.adam_epsilon);
    append_value<std::int32_t>(out, c.batch_size);
    append_value<std::uint64_t>(out, c.seed);
    append_value<std::int64_t>(out, params.step_count);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const ConvLayer& layer = params.layers[l];
        append_value<std::int32_t>(out, layer.kernel_size);
        append_value<std::int32_t>(out, layer.in_filters);
        append_value<std::int32_t>(out, layer.out_filters);
        append_matrix_data(out, layer.weight);
        append_matrix_data(out, MatrixXd(layer.bias));
        append_matrix_data(out, params.adam_m_weight[l]);
        append_matrix_data(out, params.adam_v_weight[l]);
        append_matrix_data(out, MatrixXd(params.adam_m_bias[l]));
        append_matrix_data(out, MatrixXd(params.adam_v_bias[l]));
    }
    atomic_write(path, out);
}

WarpNetParams load_checkpoint(const fs::path& path) {
    const std::string data = read_file(path);
    Reader in(data, path.string());
    char magic[8];
    in.take_raw(magic, sizeof(magic));
    if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) fail(path.string() + ": not a checkpoint file");
    const auto version = in.take<std::uint32_t>();
    if (version != kCheckpointVersion) fail(path.string() + ": unsupported checkpoint version");
    NetConfig c;
    c.input_points = in.take<std::int32_t>();
    c.channels = in.take<std::int32_t>();
    c.num_layers = in.take<std::int32_t>();
    c.filters_per_hidden_layer = in.take<std::int32_t>();
    c.kernel_size = in.take<std::int32_t>();
    c.learning_rate = in.take<double>();
    c.adam_beta1 = in.take<double>();
    c.adam_beta2 = in.take<double>();
    c.adam_epsilon = in.take<double>();
    c.batch_size = in.take<std::int32_t>();
    c.seed = in.take<std::uint64_t>();
    WarpNetParams params;
    params.config = c;
    params.step_count = in.take<std::int64_t>();
    int cin = c.channels;
    for (int l = 0; l < c.num_layers; ++l) {
        ConvLayer layer;
        layer.kernel_size = in.take<std::int32_t>();
        layer.in_filters = in.take<std::int32_t>();
        layer.out_filters = in.take<std::int32_t>();
        if (layer.kernel_size != c.kernel_size || layer.in_filters != cin)
            fail(path.string() + ": inconsistent layer shapes");
        layer.weight.resize(layer.kernel_size * layer.in_filters, layer.out_filters);
        read_matrix_data(in, layer.weight);
        MatrixXd bias(layer.out_filters, 1);
        read_matrix_data(in, bias);
        layer.bias = bias.col(0);
        MatrixXd mw(layer.weight.rows(), layer.weight.cols()), vw(layer.weight.rows(), layer.weight.cols());
        read_matrix_data(in, mw);
        read_matrix_data(in, vw);
        MatrixXd mb(layer.out_filters, 1), vb(layer.out_filters, 1);
        read_matrix_data(in, mb);
        read_matrix_data(in, vb);
        params.adam_m_weight.push_back(std::move(mw));
        params.adam_v_weight.push_back(std::move(vw));
        params.adam_m_bias.push_back(mb.col(0));
        params.adam_v_bias.push_back(vb.col(0));
        cin = layer.out_filters;
        params.layers.push_back(std::move(layer));
    }
    if (!in.exhausted()) fail(path.string() + ": trailing bytes");
    params.validate();
    return params;
}

void write_warps(const fs::path& path, const std::vector<Warp>& warps) {
    if (warps.empty()) fail("write_warps: nothing to write");
    const Grid grid = warps.front().grid;
    MatrixXd values(static_cast<Eigen::Index>(warps.size()), grid.num_points);
    for (std::size_t i = 0; i < warps.size(); ++i) {
        require_same_grid(grid, warps[i].grid, "write_warps");
        values.row(static_cast<Eigen::Index>(i)) = warps[i].values.transpose();
    }
    Metadata meta = grid_metadata(grid);
    meta["kind"] = "warps";
    write_matrix(path, values, meta);
}

std::vector<Warp> read_warps(const fs::path& path) {
    const MatrixFile file = read_matrix(path);
    const Grid grid = grid_from_metadata(file.metadata);
    if (file.values.cols() != grid.num_points) fail(path.string() + ": column count != grid points");
    std::vector<Warp> out;
    out.reserve(static_cast<std::size_t>(file.values.rows()));
    for (Eigen::Index i = 0; i < file.values.rows(); ++i) {
        Warp w{grid, file.values.row(i).transpose()};
        w.validate("read_warps");
        out.push_back(std::move(w));
    }
    return out;
}

void write_samples(const fs::path& path, const std::vector<FunctionSample>& samples, int channel) {
    if (samples.empty()) fail("write_samples: nothing to write");
    const Grid grid = samples.front().grid;
    MatrixXd values(static_cast<Eigen::Index>(samples.size()), grid.num_points);
    for (std::size_t i = 0; i < samples.size(); ++i)
        values.row(static_cast<Eigen::Index>(i)) = samples[i].values.col(channel).transpose();
    Metadata meta = grid_metadata(grid);
    meta["kind"] = "functions";
    meta["channel"] = std::to_string(channel);
    write_matrix(path, values, meta);
}

void write_sample(const fs::path& path, const FunctionSample& sample) {
    Metadata meta = grid_metadata(sample.grid);
    meta["kind"] = "sample";
    write_matrix(path, sample.values, meta);
}

FunctionSample read_sample(const fs::path& path) {
    const MatrixFile file = read_matrix(path);
    const Grid grid = grid_from_metadata(file.metadata);
    FunctionSample f{grid, file.values};
    f.validate("read_sample");
    return f;
}

namespace {

fs::path channel_path(const fs::path& dir, int j) { return dir / ("channel_" + std::to_string(j) + ".csv"); }

}  // namespace

void write_dataset(const fs::path& dir, const SimDataset& dataset, std::uint64_t seed) {
    fs::create_directories(dir);
    const int J = dataset.functions.front().channels();
    for (int j = 0; j < J; ++j) write_samples(channel_path(dir, j), dataset.functions, j);
    write_warps(dir / "warps_local.csv", dataset.true_local);
    write_warps(dir / "warps_global.csv", dataset.true_global);
    write_warps(dir / "warps_total.csv", dataset.true_total);
    write_sample(dir / "template.csv", dataset.common_template);
    if (dataset.amplitude_factors.size() > 0)
        write_matrix(dir / "amplitudes.csv", dataset.amplitude_factors, {{"kind", "amplitudes"}});

    std::string manifest;
    manifest += "format_version = " + std::to_string(kDatasetVersion) + "\n";
    manifest += "scenario = " + std::to_string(dataset.scenario) + "\n";
    manifest += "num_periods = " + std::to_string(dataset.num_periods) + "\n";
    manifest += "channels = " + std::to_string(J) + "\n";
    manifest += "subjects = " + std::to_string(dataset.functions.size()) + "\n";
    manifest += "grid_points = " + std::to_string(dataset.functions.front().grid.num_points) + "\n";
    manifest += "seed = " + std::to_string(seed) + "\n";
    manifest += "split_train = " + std::to_string(dataset.split.train) + "\n";
    manifest += "split_tune = " + std::to_string(dataset.split.tune) + "\n";
    manifest += "split_validation = " + std::to_string(dataset.split.validation) + "\n";
    manifest += "split_test = " + std::to_string(dataset.split.test) + "\n";
    atomic_write(dir / "dataset.cfg", manifest);
}

SimDataset read_dataset(const fs::path& dir) {
    const ConfigMap manifest = load_config(dir / "dataset.cfg");
    SimDataset ds;
    ds.scenario = manifest.get_int("scenario", 0);
    ds.num_periods = manifest.get_int("num_periods", 0);
    const int J = manifest.get_int("channels", 0);
    const int n = manifest.get_int("subjects", 0);
    ds.split.train = manifest.get_int("split_train", 0);
    ds.split.tune = manifest.get_int("split_tune", 0);
    ds.split.validation = manifest.get_int("split_validation", 0);
    ds.split.test = manifest.get_int("split_test", 0);
    if (J < 1 || n < 1 || ds.num_periods < 1) fail(dir.string() + ": corrupt dataset manifest");
    if (ds.split.train + ds.split.tune + ds.split.validation + ds.split.test != n)
        fail(dir.string() + ": split counts do not cover the subjects");

    std::vector<MatrixFile> channels;
    channels.reserve(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) channels.push_back(read_matrix(channel_path(dir, j)));
    const Grid grid = grid_from_metadata(channels.front().metadata);
    for (const MatrixFile& ch : channels)
        if (ch.values.rows() != n || ch.values.cols() != grid.num_points) fail(dir.string() + ": channel shape mismatch");
    ds.functions.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        MatrixXd values(grid.num_points, J);
        for (int j = 0; j < J; ++j) values.col(j) = channels[static_cast<std::size_t>(j)].values.row(i).transpose();
        FunctionSample f{grid, std::move(values)};
        f.validate("read_dataset");
        ds.functions.push_back(std::move(f));
    }
    ds.true_local = read_warps(dir / "warps_local.csv");
    ds.true_global = read_warps(dir / "warps_global.csv");
    ds.true_total = read_warps(dir / "warps_total.csv");
    ds.common_template = read_sample(dir / "template.csv");
    if (fs::exists(dir / "amplitudes.csv")) ds.amplitude_factors = read_matrix(dir / "amplitudes.csv").values;
    return ds;
}

}  // namespace deepjam::io
