#include "deepjam/commands.hpp"

#include <cstdio>
#include <cstdlib>

namespace deepjam::commands {

namespace {

const std::vector<std::string> kConfigSchema = {
    // simulation
    "scenario", "n_total", "train_fraction", "tune_fraction", "validation_fraction", "test_fraction",
    "num_periods", "points_per_period", "warp_roughness", "basis_size", "seed",
    // training
    "outer_iterations", "num_layers", "filters_per_hidden_layer", "kernel_size", "learning_rate", "batch_size",
    "adam_beta1", "adam_beta2", "adam_epsilon", "karcher_stopping_criterion", "karcher_max_iterations",
    "karcher_step_size", "template_anchor_rule", "subject_template_mode"};

std::string three_sig(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

std::string join_history(const std::vector<double>& h) {
    MatrixXd m(static_cast<Eigen::Index>(h.size()), 1);
    for (std::size_t i = 0; i < h.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = h[i];
    return io::encode_matrix(m, {{"kind", "history"}});
}

io::Metadata srsf_metadata(const SrsfSample& q) {
    io::Metadata meta = io::grid_metadata(q.grid);
    meta["kind"] = "srsf";
    for (int j = 0; j < q.channels(); ++j) meta["anchor" + std::to_string(j)] = io::format_double(q.anchor[j]);
    return meta;
}

SrsfSample read_srsf(const fs::path& path) {
    const io::MatrixFile file = io::read_matrix(path);
    SrsfSample q{io::grid_from_metadata(file.metadata), file.values, VectorXd::Zero(file.values.cols())};
    for (int j = 0; j < q.channels(); ++j) {
        const auto it = file.metadata.find("anchor" + std::to_string(j));
        if (it == file.metadata.end()) throw RuntimeError(path.string() + ": missing anchor metadata");
        q.anchor[j] = io::parse_double(it->second);
    }
    q.validate("read_srsf");
    return q;
}

struct SplitRange {
    std::string name;
    int start = 0;
    int count = 0;
};

std::vector<SplitRange> split_ranges(const SplitCounts& s) {
    std::vector<SplitRange> out;
    int offset = 0;
    for (const auto& [name, count] : std::initializer_list<std::pair<const char*, int>>{
             {"train", s.train}, {"tune", s.tune}, {"validation", s.validation}, {"test", s.test}}) {
        out.push_back({name, offset, count});
        offset += count;
    }
    return out;
}

FunctionSample extended_template(const SimDataset& ds) {
    FunctionSample ext = extend_function(ds.common_template, ds.num_periods);
    ext.grid = Grid(ext.grid.num_points, 0.0, 1.0);
    return ext;
}

std::string format_report(const std::string& split, const VarianceReport& r) {
    std::string out;
    out += "# cumulative cross-sectional variance (split: " + split + ")\n";
    out += "channel  observed  aligned  reduction_percent\n";
    for (Eigen::Index j = 0; j < r.observed_ccsv.size(); ++j)
        out += std::to_string(j + 1) + "  " + three_sig(r.observed_ccsv[j]) + "  " + three_sig(r.aligned_ccsv[j]) +
               "  " + three_sig(r.ccsv_reduction_percent[j]) + "\n";
    if (r.has_template()) {
        out += "# squared distance of cross-sectional mean to template (split: " + split + ")\n";
        out += "channel  observed  aligned  reduction_percent\n";
        for (Eigen::Index j = 0; j < r.observed_mean_distance.size(); ++j)
            out += std::to_string(j + 1) + "  " + three_sig(r.observed_mean_distance[j]) + "  " +
                   three_sig(r.aligned_mean_distance[j]) + "  " + three_sig(r.mean_distance_reduction_percent[j]) +
                   "\n";
    }
    return out;
}

std::string csv_report_row(const std::string& split, int channel, const VarianceReport& r) {
    std::string row = split + "," + std::to_string(channel + 1) + "," + io::format_double(r.observed_ccsv[channel]) +
                      "," + io::format_double(r.aligned_ccsv[channel]) + "," +
                      io::format_double(r.ccsv_reduction_percent[channel]);
    if (r.has_template())
        row += "," + io::format_double(r.observed_mean_distance[channel]) + "," +
               io::format_double(r.aligned_mean_distance[channel]) + "," +
               io::format_double(r.mean_distance_reduction_percent[channel]);
    return row + "\n";
}

void write_plot_subset(const fs::path& dir, const std::string& stem, const std::vector<FunctionSample>& fs, int limit) {
    const int n = std::min(limit, static_cast<int>(fs.size()));
    std::vector<FunctionSample> subset(fs.begin(), fs.begin() + n);
    for (int j = 0; j < fs.front().channels(); ++j)
        io::write_samples(dir / (stem + "_ch" + std::to_string(j) + ".csv"), subset, j);
}

FunctionSample cross_sectional_mean_sample(const std::vector<FunctionSample>& fs) {
    MatrixXd mean = MatrixXd::Zero(fs.front().values.rows(), fs.front().values.cols());
    for (const FunctionSample& f : fs) mean += f.values;
    mean /= static_cast<double>(fs.size());
    return FunctionSample{fs.front().grid, std::move(mean)};
}

}  // namespace

SimConfig sim_config_from(const io::ConfigMap& cfg) {
    SimConfig out;
    out.n_total = cfg.get_int("n_total", out.n_total);
    out.train_fraction = cfg.get_double("train_fraction", out.train_fraction);
    out.tune_fraction = cfg.get_double("tune_fraction", out.tune_fraction);
    out.validation_fraction = cfg.get_double("validation_fraction", out.validation_fraction);
    out.test_fraction = cfg.get_double("test_fraction", out.test_fraction);
    out.num_periods = cfg.get_int("num_periods", out.num_periods);
    out.points_per_period = cfg.get_int("points_per_period", out.points_per_period);
    out.seed = cfg.get_uint64("seed", out.seed);
    out.warp_roughness = cfg.get_double("warp_roughness", out.warp_roughness);
    out.basis_size = cfg.get_int("basis_size", out.basis_size);
    out.validate();
    return out;
}

JamConfig jam_config_from(const io::ConfigMap& cfg) {
    JamConfig out;
    out.num_periods = cfg.get_int("num_periods", out.num_periods);
    out.outer_iterations = cfg.get_int("outer_iterations", out.outer_iterations);
    out.karcher.stopping_criterion = cfg.get_double("karcher_stopping_criterion", out.karcher.stopping_criterion);
    out.karcher.max_iterations = cfg.get_int("karcher_max_iterations", out.karcher.max_iterations);
    out.karcher.step_size = cfg.get_double("karcher_step_size", out.karcher.step_size);
    out.net.num_layers = cfg.get_int("num_layers", out.net.num_layers);
    out.net.filters_per_hidden_layer = cfg.get_int("filters_per_hidden_layer", out.net.filters_per_hidden_layer);
    out.net.kernel_size = cfg.get_int("kernel_size", out.net.kernel_size);
    out.net.learning_rate = cfg.get_double("learning_rate", out.net.learning_rate);
    out.net.batch_size = cfg.get_int("batch_size", out.net.batch_size);
    out.net.adam_beta1 = cfg.get_double("adam_beta1", out.net.adam_beta1);
    out.net.adam_beta2 = cfg.get_double("adam_beta2", out.net.adam_beta2);
    out.net.adam_epsilon = cfg.get_double("adam_epsilon", out.net.adam_epsilon);
    out.net.seed = cfg.get_uint64("seed", out.net.seed);

    const std::string anchor = cfg.get_string("template_anchor_rule", "mean_initial_values");
    if (anchor == "zero")
        out.template_anchor_rule = TemplateAnchorRule::zero;
    else if (anchor == "mean_initial_values")
        out.template_anchor_rule = TemplateAnchorRule::mean_initial_values;
    else
        throw ValidationError(cfg.source + ": template_anchor_rule must be 'zero' or 'mean_initial_values'");

    const std::string mode = cfg.get_string("subject_template_mode", "amplitude");
    if (mode == "warp")
        out.subject_template_mode = SubjectTemplateMode::warp;
    else if (mode == "amplitude")
        out.subject_template_mode = SubjectTemplateMode::amplitude;
    else
        throw ValidationError(cfg.source + ": subject_template_mode must be 'warp' or 'amplitude'");
    return out;
}

fs::path resolve_preset(const std::string& name) {
    std::vector<fs::path> candidates;
    if (const char* env = std::getenv("DEEPJAM_PRESET_DIR")) candidates.push_back(fs::path(env) / (name + ".cfg"));
    candidates.push_back(fs::path("presets") / (name + ".cfg"));
#ifdef DEEPJAM_PRESET_SOURCE_DIR
    candidates.push_back(fs::path(DEEPJAM_PRESET_SOURCE_DIR) / (name + ".cfg"));
#endif
    for (const fs::path& p : candidates)
        if (fs::exists(p)) return p;
    throw ValidationError("preset '" + name + "' not found (set DEEPJAM_PRESET_DIR or use --config)");
}

void run_simulate(int scenario, const fs::path& config_path, const Overrides& overrides, const fs::path& out_dir) {
    io::ConfigMap cfg = config_path.empty() ? io::ConfigMap{{}, "<defaults>"} : io::load_config(config_path);
    cfg.require_known_keys(kConfigSchema);
    if (scenario == 0) scenario = cfg.get_int("scenario", 1);
    SimConfig sim = sim_config_from(cfg);
    if (overrides.seed) sim.seed = *overrides.seed;

    io::DirLock lock(out_dir);
    SimDataset ds;
    if (scenario == 1)
        ds = scenario1(sim);
    else if (scenario == 2)
        ds = scenario2(sim);
    else
        throw ValidationError("scenario must be 1 or 2, got " + std::to_string(scenario));
    io::write_dataset(out_dir, ds, sim.seed);
}

namespace {

void write_alignment_outputs(const fs::path& out_dir, const AlignmentResult& result,
                             const std::vector<FunctionSample>& subjects) {
    io::save_checkpoint(out_dir / "checkpoint.bin", result.net);
    io::write_warps(out_dir / "centering_warp.csv", {result.centering_warp});
    io::write_warps(out_dir / "warps_total.csv", result.total_warps);
    io::write_warps(out_dir / "warps_local_mean.csv", result.local_means);
    io::write_warps(out_dir / "warps_global.csv", result.global_warps);
    io::write_matrix(out_dir / "template_srsf.csv", result.common_template_srsf.values,
                     srsf_metadata(result.common_template_srsf));
    io::write_sample(out_dir / "template.csv", result.common_template);
    for (int j = 0; j < subjects.front().channels(); ++j)
        io::write_samples(out_dir / ("subject_templates_ch" + std::to_string(j) + ".csv"), result.subject_templates,
                          j);
    io::atomic_write(out_dir / "loss_history.csv", join_history(result.loss_history));
    io::atomic_write(out_dir / "variance_history.csv", join_history(result.variance_history));
}

}  // namespace

void run_train(const fs::path& data_dir, const fs::path& config_path, const Overrides& overrides,
               const fs::path& out_dir) {
    io::ConfigMap cfg = config_path.empty() ? io::ConfigMap{{}, "<defaults>"} : io::load_config(config_path);
    cfg.require_known_keys(kConfigSchema);
    const SimDataset ds = io::read_dataset(data_dir);

    JamConfig jam = jam_config_from(cfg);
    if (cfg.has("num_periods") && jam.num_periods != ds.num_periods)
        throw ValidationError("config num_periods = " + std::to_string(jam.num_periods) +
                              " does not match the dataset's K = " + std::to_string(ds.num_periods));
    jam.num_periods = ds.num_periods;
    if (overrides.seed) jam.net.seed = *overrides.seed;
    if (overrides.iterations) jam.outer_iterations = *overrides.iterations;

    if (ds.split.train < 1) throw ValidationError(data_dir.string() + ": dataset has no training split");
    std::vector<FunctionSample> train_subjects(ds.functions.begin(), ds.functions.begin() + ds.split.train);

    io::DirLock lock(out_dir);
    const AlignmentResult result = run_deepjam(train_subjects, jam);
    write_alignment_outputs(out_dir, result, train_subjects);

    std::string manifest;
    manifest += "kind = train\n";
    manifest += std::string("software = ") + kSoftwareVersion + "\n";
    manifest += "data_dir = " + data_dir.string() + "\n";
    manifest += "checkpoint = checkpoint.bin\n";
    manifest += "centering_warp = centering_warp.csv\n";
    manifest += "subjects_start = 0\n";
    manifest += "subjects_count = " + std::to_string(ds.split.train) + "\n";
    manifest += "seed = " + std::to_string(jam.net.seed) + "\n";
    manifest += "cfg.num_periods = " + std::to_string(jam.num_periods) + "\n";
    manifest += "cfg.outer_iterations = " + std::to_string(jam.outer_iterations) + "\n";
    manifest += "cfg.num_layers = " + std::to_string(jam.net.num_layers) + "\n";
    manifest += "cfg.filters_per_hidden_layer = " + std::to_string(jam.net.filters_per_hidden_layer) + "\n";
    manifest += "cfg.kernel_size = " + std::to_string(jam.net.kernel_size) + "\n";
    manifest += "cfg.learning_rate = " + io::format_double(jam.net.learning_rate) + "\n";
    manifest += "cfg.batch_size = " + std::to_string(jam.net.batch_size) + "\n";
    manifest += "cfg.adam_beta1 = " + io::format_double(jam.net.adam_beta1) + "\n";
    manifest += "cfg.adam_beta2 = " + io::format_double(jam.net.adam_beta2) + "\n";
    manifest += "cfg.adam_epsilon = " + io::format_double(jam.net.adam_epsilon) + "\n";
    manifest += "cfg.karcher_stopping_criterion = " + io::format_double(jam.karcher.stopping_criterion) + "\n";
    manifest += "cfg.karcher_max_iterations = " + std::to_string(jam.karcher.max_iterations) + "\n";
    manifest += "cfg.karcher_step_size = " + io::format_double(jam.karcher.step_size) + "\n";
    manifest += std::string("cfg.template_anchor_rule = ") +
                (jam.template_anchor_rule == TemplateAnchorRule::zero ? "zero" : "mean_initial_values") + "\n";
    manifest += std::string("cfg.subject_template_mode = ") +
                (jam.subject_template_mode == SubjectTemplateMode::warp ? "warp" : "amplitude") + "\n";
    manifest += "final_loss = " + io::format_double(result.loss_history.back()) + "\n";
    io::atomic_write(out_dir / "run_manifest.cfg", manifest);

    run_evaluate(out_dir);
}

void run_align(const fs::path& checkpoint, const fs::path& data_dir, const fs::path& out_dir) {
    const fs::path ckpt_file = fs::is_directory(checkpoint) ? checkpoint / "checkpoint.bin" : checkpoint;
    const fs::path centering_file = ckpt_file.parent_path() / "centering_warp.csv";
    const WarpNetParams net = io::load_checkpoint(ckpt_file);
    const std::vector<Warp> centering = io::read_warps(centering_file);
    if (centering.size() != 1) throw RuntimeError(centering_file.string() + ": expected exactly one warp");

    const SimDataset ds = io::read_dataset(data_dir);
    io::DirLock lock(out_dir);
    const std::vector<Warp> warps = align_with_net(net, centering.front(), ds.functions);
    io::write_warps(out_dir / "warps_total.csv", warps);

    std::vector<FunctionSample> aligned;
    aligned.reserve(ds.functions.size());
    for (std::size_t i = 0; i < ds.functions.size(); ++i)
        aligned.push_back(warp_function(ds.functions[i], warps[i]));
    for (int j = 0; j < ds.functions.front().channels(); ++j)
        io::write_samples(out_dir / ("aligned_ch" + std::to_string(j) + ".csv"), aligned, j);

    std::string manifest;
    manifest += "kind = align\n";
    manifest += std::string("software = ") + kSoftwareVersion + "\n";
    manifest += "data_dir = " + data_dir.string() + "\n";
    manifest += "checkpoint = " + ckpt_file.string() + "\n";
    manifest += "subjects_start = 0\n";
    manifest += "subjects_count = " + std::to_string(ds.functions.size()) + "\n";
    io::atomic_write(out_dir / "run_manifest.cfg", manifest);
}

void run_template(const fs::path& result_dir) {
    const io::ConfigMap manifest = io::load_config(result_dir / "run_manifest.cfg");
    if (manifest.get_string("kind") != "train")
        throw ValidationError(result_dir.string() + ": template extraction needs a training run directory");
    const SimDataset ds = io::read_dataset(manifest.get_string("data_dir"));
    const int K = manifest.get_int("cfg.num_periods", ds.num_periods);
    const int count = manifest.get_int("subjects_count", 0);
    const std::string mode_name = manifest.get_string("cfg.subject_template_mode", "amplitude");
    const SubjectTemplateMode mode =
        mode_name == "warp" ? SubjectTemplateMode::warp : SubjectTemplateMode::amplitude;
    const std::string anchor_name = manifest.get_string("cfg.template_anchor_rule", "mean_initial_values");
    const TemplateAnchorRule rule =
        anchor_name == "zero" ? TemplateAnchorRule::zero : TemplateAnchorRule::mean_initial_values;
    KarcherConfig karcher;
    karcher.stopping_criterion = manifest.get_double("cfg.karcher_stopping_criterion", karcher.stopping_criterion);
    karcher.max_iterations = manifest.get_int("cfg.karcher_max_iterations", karcher.max_iterations);
    karcher.step_size = manifest.get_double("cfg.karcher_step_size", karcher.step_size);

    const std::vector<Warp> totals = io::read_warps(result_dir / "warps_total.csv");
    if (static_cast<int>(totals.size()) != count)
        throw RuntimeError(result_dir.string() + ": warp count does not match the manifest");
    const SrsfSample mu_q = read_srsf(result_dir / "template_srsf.csv");
    std::vector<FunctionSample> subjects(ds.functions.begin(), ds.functions.begin() + count);
    const FunctionSample common = extract_common_template(mu_q, rule, subjects);

    std::vector<FunctionSample> subject_templates;
    std::vector<Warp> local_means, global_parts;
    subject_templates.reserve(subjects.size());
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        const WarpDecomposition parts = decompose_total_warp(totals[i], K, karcher);
        subject_templates.push_back(subject_template(srsf(subjects[i]), subjects[i], common, parts, K, mode));
        local_means.push_back(parts.local_mean);
        global_parts.push_back(parts.global_part);
    }
    io::write_sample(result_dir / "template.csv", common);
    io::write_warps(result_dir / "warps_local_mean.csv", local_means);
    io::write_warps(result_dir / "warps_global.csv", global_parts);
    for (int j = 0; j < subjects.front().channels(); ++j)
        io::write_samples(result_dir / ("subject_templates_ch" + std::to_string(j) + ".csv"), subject_templates, j);
}

void run_evaluate(const fs::path& result_dir) {
    const io::ConfigMap manifest = io::load_config(result_dir / "run_manifest.cfg");
    const SimDataset ds = io::read_dataset(manifest.get_string("data_dir"));
    const int start = manifest.get_int("subjects_start", 0);
    const int count = manifest.get_int("subjects_count", 0);
    const std::vector<Warp> warps = io::read_warps(result_dir / "warps_total.csv");
    if (static_cast<int>(warps.size()) != count)
        throw RuntimeError(result_dir.string() + ": warp count does not match the manifest");

    std::vector<FunctionSample> observed(ds.functions.begin() + start, ds.functions.begin() + start + count);
    std::vector<FunctionSample> aligned;
    aligned.reserve(observed.size());
    for (int i = 0; i < count; ++i) aligned.push_back(warp_function(observed[static_cast<std::size_t>(i)],
                                                                    warps[static_cast<std::size_t>(i)]));

    const FunctionSample tmpl = extended_template(ds);
    std::string text_report;
    std::string csv_report = "split,channel,observed_ccsv,aligned_ccsv,ccsv_reduction_percent";
    csv_report += ",observed_mean_distance,aligned_mean_distance,mean_distance_reduction_percent\n";
    for (const SplitRange& split : split_ranges(ds.split)) {
        const int lo = std::max(split.start, start);
        const int hi = std::min(split.start + split.count, start + count);
        if (hi - lo < 2) continue;
        std::vector<FunctionSample> obs_split(ds.functions.begin() + lo, ds.functions.begin() + hi);
        std::vector<FunctionSample> ali_split(aligned.begin() + (lo - start), aligned.begin() + (hi - start));
        const VarianceReport report = make_variance_report(obs_split, ali_split, tmpl);
        text_report += format_report(split.name, report);
        for (int j = 0; j < ds.functions.front().channels(); ++j) csv_report += csv_report_row(split.name, j, report);
    }
    io::atomic_write(result_dir / "report.txt", text_report);
    io::atomic_write(result_dir / "report.csv", csv_report);

    const fs::path plot_dir = result_dir / "plotdata";
    fs::create_directories(plot_dir);
    const int limit = 25;
    write_plot_subset(plot_dir, "observed", observed, limit);
    write_plot_subset(plot_dir, "aligned", aligned, limit);
    io::write_sample(plot_dir / "mean_observed.csv", cross_sectional_mean_sample(observed));
    io::write_sample(plot_dir / "mean_aligned.csv", cross_sectional_mean_sample(aligned));
    io::write_sample(plot_dir / "template_extended.csv", tmpl);
    std::vector<Warp> warp_subset(warps.begin(), warps.begin() + std::min<std::size_t>(limit, warps.size()));
    io::write_warps(plot_dir / "warps_total.csv", warp_subset);
    for (const char* name : {"warps_local_mean.csv", "warps_global.csv"}) {
        if (fs::exists(result_dir / name)) {
            std::vector<Warp> w = io::read_warps(result_dir / name);
            w.resize(std::min<std::size_t>(limit, w.size()), w.front());
            io::write_warps(plot_dir / name, w);
        }
    }
    for (const char* name : {"loss_history.csv", "variance_history.csv"}) {
        if (fs::exists(result_dir / name)) io::atomic_write(plot_dir / name, io::read_file(result_dir / name));
    }
}

}  // namespace deepjam::commands
