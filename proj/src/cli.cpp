#include "gyrodiff/cli.hpp"

#include "gyrodiff/errors.hpp"
#include "gyrodiff/geo.hpp"
#include "gyrodiff/io.hpp"
#include "gyrodiff/models.hpp"
#include "gyrodiff/pipeline.hpp"
#include "gyrodiff/plot.hpp"
#include "gyrodiff/runtime.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <map>
#include <sstream>

#ifndef GYRODIFF_VERSION
#define GYRODIFF_VERSION "0.0.0"
#endif

namespace gyrodiff::cli {

using nlohmann::json;
using config::HeadingMethod;

namespace {

// Records inputs and outputs of one command and writes manifest.json last.
class Manifest {
public:
    Manifest(const Context& ctx, std::string command, json options = json::object())
        : ctx_(ctx), command_(std::move(command)), options_(std::move(options)),
          start_(std::chrono::steady_clock::now()) {}

    void input(const fs::path& path) { inputs_.push_back(entry(path)); }
    void output(const fs::path& path) { outputs_.push_back(entry(path)); }
    void dataset_input(const fs::path& dir) {
        inputs_.push_back({{"path", relative(dir)}, {"sha256", io::dataset_hash(dir)}});
    }

    void write(const fs::path& dir) const {
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        json doc;
        doc["manifest_version"] = 1;
        doc["code_version"] = GYRODIFF_VERSION;
        doc["command"] = command_;
        doc["options"] = options_;
        doc["config"] = json::parse(config::to_json(ctx_.config));
        doc["config_hash"] = config::config_hash(ctx_.config);
        doc["jobs"] = ctx_.jobs;
        doc["inputs"] = inputs_;
        doc["outputs"] = outputs_;
        doc["timings"] = {{"wall_seconds", wall}, {"finished_utc", utc_now()}};
        io::write_atomic(dir / "manifest.json", doc.dump(2) + "\n");
    }

private:
    json entry(const fs::path& path) const {
        return {{"path", relative(path)}, {"sha256", io::sha256_file(path)}};
    }
    std::string relative(const fs::path& path) const {
        return fs::relative(path, ctx_.out).generic_string();
    }
    static std::string utc_now() {
        const std::time_t t = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        return buf;
    }

    const Context& ctx_;
    std::string command_;
    json options_;
    std::chrono::steady_clock::time_point start_;
    json inputs_ = json::array();
    json outputs_ = json::array();
};

void log(const Context& ctx, const std::string& line) {
    if (!ctx.quiet) {
        std::cerr << line << '\n';
    }
}

std::string fmt(double v, int digits = 4) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string fmt17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

fs::path evaluation_dataset(const Context& ctx) {
    const Layout layout{ctx.out};
    const fs::path dir = ctx.config.dataset.source == "recorded" ? layout.recorded() : layout.noisy();
    if (!fs::exists(dir / "metadata.json")) {
        throw MissingArtifact("dataset " + dir.string() + " not found (run " +
                              (ctx.config.dataset.source == "recorded" ? "ingest" : "generate") +
                              " first)");
    }
    return dir;
}

io::DatasetFiles require_dataset(const fs::path& dir, const std::string& producer) {
    if (!fs::exists(dir / "metadata.json")) {
        throw MissingArtifact("dataset " + dir.string() + " not found (run " + producer + " first)");
    }
    return io::load_dataset(dir);
}

pipeline::DenoisingStage make_stage(const models::StoredDenoiser& d, const pipeline::PipelineConfig& p) {
    return {&d.network, d.schedule, p};
}

models::StoredHeading require_heading(const Context& ctx, HeadingMethod m) {
    const fs::path path = Layout{ctx.out}.heading(m);
    if (!fs::exists(path)) {
        throw MissingCheckpoint("heading checkpoint " + path.string() + " not found (run train-heading --method " +
                                std::string(config::to_string(m)) + ")");
    }
    return models::load_heading(path);
}

models::StoredDenoiser require_denoiser(const Context& ctx, const std::string& why) {
    const fs::path path = Layout{ctx.out}.denoiser();
    if (!fs::exists(path)) {
        throw MissingArtifact(why + " needs a trained denoiser at " + path.string() +
                              " (run train-denoiser first)");
    }
    return models::load_denoiser(path);
}

// Stage reproducing the preprocessing a heading network was trained with.
pipeline::DenoisingStage stage_for(const models::StoredHeading& h, const models::StoredDenoiser* d,
                                   int jobs) {
    if (!h.preprocessing.denoised) {
        return {};
    }
    if (!d) {
        throw MissingArtifact("heading model '" + h.method + "' expects denoised inputs");
    }
    if (d->sha256 != h.preprocessing.denoiser_sha256) {
        throw ChecksumError("denoiser checkpoint differs from the one heading model '" + h.method +
                            "' was trained with");
    }
    auto p = h.preprocessing.pipeline;
    p.jobs = jobs;
    return make_stage(*d, p);
}

void write_report(const pipeline::EvalReport& report, const fs::path& dir, const std::string& svg_name,
                  Manifest& manifest) {
    io::write_atomic(dir / "report.json", report.to_json());
    io::write_atomic(dir / "report.csv", report.to_csv());
    io::write_atomic(dir / svg_name, plot::render_svg(plot::chart_for(report)));
    for (const auto* name : {"report.json", "report.csv"}) {
        manifest.output(dir / name);
    }
    manifest.output(dir / svg_name);
}

} // namespace

void cmd_generate(const Context& ctx) {
    const Layout layout{ctx.out};
    Manifest manifest(ctx, "generate");
    const auto synth_cfg = config::synthetic_config(ctx.config);
    const auto clean = synth::generate_synthetic_dataset(synth_cfg);
    const auto noise = config::noise_model(ctx.config);
    const auto noisy = synth::synthesize_noisy_dataset(clean, ctx.config.dataset.source_rate_hz, noise, noise.seed);

    json meta{{"generator", "synthetic"},
              {"increment_deg", ctx.config.dataset.increment_deg},
              {"duration_s", ctx.config.dataset.duration_s},
              {"sample_rate_hz", ctx.config.dataset.sample_rate_hz},
              {"latitude_deg", ctx.config.dataset.latitude_deg},
              {"base_seed", ctx.config.base_seed}};
    io::save_dataset(layout.clean(), {clean, meta.dump()});
    meta["noise"] = {{"white_noise_std_deg_s", ctx.config.noise.white_noise_std_deg_s},
                     {"constant_bias_std_deg_s", ctx.config.noise.constant_bias_std_deg_s},
                     {"source_rate_hz", ctx.config.dataset.source_rate_hz},
                     {"seed", noise.seed},
                     {"per_sequence_seed", "seed + sequence id"}};
    io::save_dataset(layout.noisy(), {noisy, meta.dump()});
    for (const auto& dir : {layout.clean(), layout.noisy()}) {
        for (const char* f : {"metadata.json", "train.f64", "train_labels.txt", "val.f64", "val_labels.txt",
                              "test.f64", "test_labels.txt"}) {
            manifest.output(dir / f);
        }
    }
    manifest.write(ctx.out / "data");
    log(ctx, "generated " + std::to_string(clean.size()) + " sequences (" + std::to_string(clean.train.size()) +
                 "/" + std::to_string(clean.val.size()) + "/" + std::to_string(clean.test.size()) + ")");
}

namespace {

struct Recording {
    std::string file;
    double heading = 0.0;
    double latitude = 0.0;
};

// Parses one "time,gx,gy,gz" file. A non-numeric first line is a header.
SampleMatrix read_recording_csv(const fs::path& path, double rate_hz) {
    std::istringstream in(io::read_file(path));
    std::string line;
    std::vector<std::array<double, 3>> rows;
    double last_time = -std::numeric_limits<double>::infinity();
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::array<double, 4> v{};
        std::istringstream fields(line);
        std::string cell;
        int k = 0;
        bool numeric = true;
        while (std::getline(fields, cell, ',')) {
            if (k >= 4) {
                throw FormatError(path.string() + " row " + std::to_string(row) + ": more than 4 columns");
            }
            char* end = nullptr;
            v[static_cast<std::size_t>(k)] = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0' || !std::isfinite(v[static_cast<std::size_t>(k)])) {
                numeric = false;
            }
            ++k;
        }
        if (!numeric && row == 1) {
            continue;
        }
        if (!numeric || k != 4) {
            throw FormatError(path.string() + " row " + std::to_string(row) +
                              ": expected four numeric columns time,gx,gy,gz");
        }
        if (!(v[0] > last_time)) {
            throw FormatError(path.string() + " row " + std::to_string(row) + ": non-monotone timestamp " +
                              fmt17(v[0]));
        }
        if (!rows.empty() && std::abs((v[0] - last_time) * rate_hz - 1.0) > 0.01) {
            throw RateMismatch(path.string() + " row " + std::to_string(row) + ": sample interval " +
                               fmt17(v[0] - last_time) + " s does not match " + fmt(rate_hz) + " Hz");
        }
        last_time = v[0];
        rows.push_back({v[1], v[2], v[3]});
    }
    if (rows.empty()) {
        throw FormatError(path.string() + ": no samples");
    }
    SampleMatrix m(static_cast<Eigen::Index>(rows.size()), 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        m.row(static_cast<Eigen::Index>(i)) << rows[i][0], rows[i][1], rows[i][2];
    }
    return m;
}

std::vector<Recording> read_labels(const fs::path& input) {
    const fs::path path = input / "labels.json";
    json doc;
    try {
        doc = json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    std::vector<Recording> out;
    try {
        const double default_lat = doc.value("latitude_deg", 0.0);
        for (const auto& r : doc.at("recordings")) {
            out.push_back({r.at("file").get<std::string>(),
                           geo::wrap_two_pi(geo::deg2rad(r.at("heading_deg").get<double>())),
                           geo::deg2rad(r.value("latitude_deg", default_lat))});
        }
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    if (out.empty()) {
        throw FormatError(path.string() + ": no recordings listed");
    }
    return out;
}

} // namespace

void cmd_ingest(const Context& ctx, const fs::path& input) {
    const auto& g = ctx.config.ingest;
    Manifest manifest(ctx, "ingest", {{"input", fs::absolute(input).string()}});
    auto recordings = read_labels(input);
    manifest.input(input / "labels.json");
    std::stable_sort(recordings.begin(), recordings.end(),
                     [](const Recording& a, const Recording& b) { return a.heading < b.heading; });

    std::vector<TimeSequence> seqs;
    for (const auto& r : recordings) {
        const fs::path file = input / r.file;
        TimeSequence raw;
        raw.samples = read_recording_csv(file, g.source_rate_hz);
        raw.sample_rate_hz = g.source_rate_hz;
        raw.heading = r.heading;
        raw.latitude = r.latitude;
        raw.source = SourceTag::recorded;
        seqs.push_back(synth::downsample(raw, g.target_rate_hz));
        manifest.input(file);
    }
    const double total = g.train + g.val + g.test;
    const synth::SplitRatio ratio{g.train / total, g.val / total, g.test / total};
    const auto assignment = synth::stratified_assignment(seqs.size(), ratio);

    synth::DatasetSplit data;
    data.ratio = ratio;
    const double half = geo::deg2rad(g.augment_half_range_deg);
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        if (assignment[i] == 0) {
            for (auto& a : synth::augment_by_heading_rotation(seqs[i], g.augment_count, half)) {
                data.train.push_back(std::move(a));
            }
        } else {
            (assignment[i] == 1 ? data.val : data.test).push_back(seqs[i]);
        }
    }
    std::int64_t id = 0;
    for (auto* split : {&data.train, &data.val, &data.test}) {
        for (auto& s : *split) {
            s.id = id++;
        }
    }
    const Layout layout{ctx.out};
    json meta{{"generator", "ingest"},
              {"source_rate_hz", g.source_rate_hz},
              {"target_rate_hz", g.target_rate_hz},
              {"augment_count", g.augment_count},
              {"augment_half_range_deg", g.augment_half_range_deg},
              {"recordings", recordings.size()}};
    io::save_dataset(layout.recorded(), {data, meta.dump()});
    for (const char* f : {"metadata.json", "train.f64", "train_labels.txt", "val.f64", "val_labels.txt",
                          "test.f64", "test_labels.txt"}) {
        manifest.output(layout.recorded() / f);
    }
    manifest.write(layout.recorded());
    log(ctx, "ingested " + std::to_string(seqs.size()) + " recordings -> " + std::to_string(data.train.size()) +
                 "/" + std::to_string(data.val.size()) + "/" + std::to_string(data.test.size()));
}

void cmd_train_denoiser(const Context& ctx) {
    const Layout layout{ctx.out};
    Manifest manifest(ctx, "train-denoiser");
    const auto files = require_dataset(layout.clean(), "generate");
    manifest.dataset_input(layout.clean());

    // Clean sequences are constant in time, so a dataset-level channel
    // scaling stands in for per-sequence normalization here.
    const auto scaler = ChannelScaler::fit(files.data.train);
    synth::DatasetSplit scaled;
    for (const auto& s : files.data.train) {
        scaled.train.push_back(s.with_samples(scaler.apply(s.samples)));
    }
    for (const auto& s : files.data.val) {
        scaled.val.push_back(s.with_samples(scaler.apply(s.samples)));
    }

    const auto sched = config::schedule(ctx.config);
    const auto train_cfg = config::denoiser_train_config(ctx.config);
    const auto result = diffusion::train_denoiser(
        scaled, train_cfg, sched, ctx.config.denoiser.architecture, [&](const diffusion::DiffusionEpoch& e) {
            log(ctx, "denoiser epoch " + std::to_string(e.epoch) + " train " + fmt(e.train_loss) + " val " +
                         fmt(e.val_loss));
        });

    std::string curve = "epoch,train_loss,val_loss\n";
    for (const auto& e : result.curve) {
        curve += std::to_string(e.epoch) + "," + fmt17(e.train_loss) + "," + fmt17(e.val_loss) + "\n";
    }
    const json extra{{"train_config",
                      {{"batch_size", train_cfg.batch_size},
                       {"learning_rate", train_cfg.learning_rate},
                       {"max_epochs", train_cfg.max_epochs},
                       {"patience", train_cfg.patience},
                       {"svd_threshold", train_cfg.svd_threshold},
                       {"svd_window", train_cfg.svd_window}}},
                     {"seeds", {{"base_seed", ctx.config.base_seed}, {"training_seed", train_cfg.base_seed}}},
                     {"training_scaler",
                      {{"mean", {scaler.mean(0), scaler.mean(1), scaler.mean(2)}},
                       {"scale", {scaler.scale(0), scaler.scale(1), scaler.scale(2)}}}},
                     {"best_epoch", result.best_epoch},
                     {"epochs_run", result.curve.size()}};
    models::save_denoiser(layout.denoiser(), result.network, sched, extra.dump());
    io::write_atomic(layout.denoiser_dir() / "curve.csv", curve);
    manifest.output(layout.denoiser());
    manifest.output(layout.denoiser_dir() / "curve.csv");
    manifest.write(layout.denoiser_dir());
    log(ctx, "denoiser best epoch " + std::to_string(result.best_epoch));
}

void cmd_train_heading(const Context& ctx, HeadingMethod method) {
    const Layout layout{ctx.out};
    const bool aided = method == HeadingMethod::aided;
    Manifest manifest(ctx, "train-heading", {{"method", std::string(config::to_string(method))}});
    std::optional<models::StoredDenoiser> denoiser;
    if (aided) {
        denoiser = require_denoiser(ctx, "denoiser-aided heading training");
        manifest.input(layout.denoiser());
    }
    const fs::path data_dir = evaluation_dataset(ctx);
    const auto files = io::load_dataset(data_dir);
    manifest.dataset_input(data_dir);

    models::Preprocessing prep;
    prep.pipeline = config::pipeline_config(ctx.config, ctx.jobs);
    heading::Preprocessor preprocessor;
    pipeline::DenoisingStage stage;
    if (aided) {
        prep.denoised = true;
        prep.denoiser_sha256 = denoiser->sha256;
        stage = make_stage(*denoiser, prep.pipeline);
        preprocessor = stage;
    }
    const auto train_cfg = config::heading_train_config(ctx.config, method);
    const auto arch = config::heading_architecture(ctx.config, method);
    const auto result = heading::train_heading(
        files.data.train, files.data.val, train_cfg, arch, preprocessor, [&](const heading::HeadingEpoch& e) {
            log(ctx, std::string(config::to_string(method)) + " epoch " + std::to_string(e.epoch) + " lr " +
                         fmt(e.learning_rate) + " train " + fmt(geo::rad2deg(e.train_crmse)) + " deg val " +
                         fmt(geo::rad2deg(e.val_crmse)) + " deg");
        });

    std::string curve = "epoch,learning_rate,train_crmse_deg,val_crmse_deg\n";
    for (const auto& e : result.curve) {
        curve += std::to_string(e.epoch) + "," + fmt17(e.learning_rate) + "," + fmt17(geo::rad2deg(e.train_crmse)) +
                 "," + fmt17(geo::rad2deg(e.val_crmse)) + "\n";
    }
    const fs::path dir = layout.heading_dir(method);
    const json extra{{"variant", std::string(heading::to_string(train_cfg.variant))},
                     {"train_config",
                      {{"lr_max", train_cfg.lr_max},
                       {"lr_min", train_cfg.lr_min},
                       {"epochs", train_cfg.epochs},
                       {"batch_size", train_cfg.batch_size},
                       {"patience", train_cfg.patience}}},
                     {"seeds", {{"base_seed", ctx.config.base_seed}, {"training_seed", train_cfg.base_seed}}},
                     {"best_epoch", result.best_epoch},
                     {"epochs_run", result.curve.size()}};
    models::save_heading(layout.heading(method), result.network, std::string(config::to_string(method)), prep,
                         extra.dump());
    io::write_atomic(dir / "curve.csv", curve);
    manifest.output(layout.heading(method));
    manifest.output(dir / "curve.csv");
    manifest.write(dir);
    log(ctx, std::string(config::to_string(method)) + " best validation CRMSE " +
                 fmt(geo::rad2deg(result.curve[static_cast<std::size_t>(result.best_epoch)].val_crmse)) + " deg");
}

void cmd_evaluate(const Context& ctx) {
    const Layout layout{ctx.out};
    Manifest manifest(ctx, "evaluate");
    const auto baseline = require_heading(ctx, HeadingMethod::baseline);
    const auto aided = require_heading(ctx, HeadingMethod::aided);
    manifest.input(layout.heading(HeadingMethod::baseline));
    manifest.input(layout.heading(HeadingMethod::aided));
    std::optional<models::StoredDenoiser> denoiser;
    if (aided.preprocessing.denoised) {
        denoiser = require_denoiser(ctx, "evaluation of the aided model");
        manifest.input(layout.denoiser());
    }
    const fs::path data_dir = evaluation_dataset(ctx);
    const auto files = io::load_dataset(data_dir);
    manifest.dataset_input(data_dir);

    pipeline::ComparisonModels m{&baseline.network, &aided.network,
                                 stage_for(aided, denoiser ? &*denoiser : nullptr, ctx.jobs)};
    auto report = pipeline::run_method_comparison(files.data.test, m, ctx.config.pipeline.durations_s,
                                                  ctx.config.base_seed);
    json meta = json::parse(report.metadata_json);
    meta["dataset"] = data_dir.filename().string();
    meta["dataset_hash"] = io::dataset_hash(data_dir);
    meta["config_hash"] = config::config_hash(ctx.config);
    report.metadata_json = meta.dump();
    write_report(report, layout.eval_dir(), "comparison.svg", manifest);
    manifest.write(layout.eval_dir());
    for (const auto& r : report.rows) {
        if (r.method != "classical" || r.duration_s == files.data.test.front().duration()) {
            log(ctx, r.method + " " + fmt(r.duration_s) + " s: " + fmt(r.crmse_deg) + " deg");
        }
    }
}

void cmd_sweep(const Context& ctx, std::optional<bool> retrain) {
    const Layout layout{ctx.out};
    const bool do_retrain = retrain.value_or(ctx.config.pipeline.sweep_retrain);
    Manifest manifest(ctx, "sweep-tback", {{"retrain", do_retrain}});
    const auto denoiser = require_denoiser(ctx, "the t_back sweep");
    manifest.input(layout.denoiser());
    const fs::path data_dir = evaluation_dataset(ctx);
    const auto files = io::load_dataset(data_dir);
    manifest.dataset_input(data_dir);

    pipeline::SweepOptions options;
    options.retrain = do_retrain;
    options.train_config = config::heading_train_config(ctx.config, HeadingMethod::aided);
    options.architecture = config::heading_architecture(ctx.config, HeadingMethod::aided);
    std::optional<models::StoredHeading> reuse;
    auto p = config::pipeline_config(ctx.config, ctx.jobs);
    if (!do_retrain) {
        reuse = require_heading(ctx, HeadingMethod::aided);
        manifest.input(layout.heading(HeadingMethod::aided));
        options.reuse = &reuse->network;
        if (reuse->preprocessing.denoised) {
            p = reuse->preprocessing.pipeline;
            p.jobs = ctx.jobs;
        }
    }
    auto report = pipeline::run_tback_sweep(files.data, ctx.config.pipeline.sweep_values,
                                            make_stage(denoiser, p), options);
    json meta = json::parse(report.metadata_json);
    meta["dataset_hash"] = io::dataset_hash(data_dir);
    meta["config_hash"] = config::config_hash(ctx.config);
    report.metadata_json = meta.dump();
    write_report(report, layout.sweep_dir(), "sweep.svg", manifest);
    manifest.write(layout.sweep_dir());
    for (const auto& r : report.rows) {
        log(ctx, "t_back " + std::to_string(*r.t_back) + ": " + fmt(r.crmse_deg) + " deg");
    }
}

void cmd_ablate(const Context& ctx) {
    const Layout layout{ctx.out};
    Manifest manifest(ctx, "ablate-norm");
    const auto denoiser = require_denoiser(ctx, "the normalization ablation");
    manifest.input(layout.denoiser());
    const fs::path data_dir = evaluation_dataset(ctx);
    const auto files = io::load_dataset(data_dir);
    manifest.dataset_input(data_dir);
    auto report = pipeline::run_normalization_ablation(
        files.data, make_stage(denoiser, config::pipeline_config(ctx.config, ctx.jobs)),
        config::heading_train_config(ctx.config, HeadingMethod::aided),
        config::heading_architecture(ctx.config, HeadingMethod::aided));
    json meta = json::parse(report.metadata_json);
    meta["dataset_hash"] = io::dataset_hash(data_dir);
    meta["config_hash"] = config::config_hash(ctx.config);
    report.metadata_json = meta.dump();
    write_report(report, layout.ablation_dir(), "ablation.svg", manifest);
    manifest.write(layout.ablation_dir());
    for (const auto& r : report.rows) {
        log(ctx, std::string(to_string(*r.scope)) + " " + r.split + ": " + fmt(r.crmse_deg) + " deg");
    }
    log(ctx, "preferred scope: " + std::string(to_string(pipeline::preferred_scope(report))));
}

void cmd_plot(const fs::path& report_path, const fs::path& output) {
    const auto report = pipeline::EvalReport::from_json(io::read_file(report_path));
    io::write_atomic(output, plot::render_svg(plot::chart_for(report)));
}

int run(int argc, const char* const* argv) {
    tune_allocator();
    CLI::App app{"Gyrocompass heading estimation with a diffusion denoiser"};
    app.require_subcommand(1);
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    int jobs = 1;
    bool quiet = false;
    app.add_option("--config", config_path, "Experiment config (JSON) or a run manifest");
    app.add_option("--seed", seed, "Override base_seed");
    app.add_option("--out", out_dir, "Override output_dir");
    app.add_option("--jobs", jobs, "Worker threads for batched denoising")->check(CLI::PositiveNumber);
    app.add_flag("-q,--quiet", quiet, "Suppress progress output");

    auto* generate = app.add_subcommand("generate", "Synthesize clean and noisy datasets");
    auto* ingest = app.add_subcommand("ingest", "Import recorded CSV files");
    std::string input_dir;
    ingest->add_option("--input", input_dir, "Directory with recordings and labels.json");
    auto* train_denoiser = app.add_subcommand("train-denoiser", "Train the diffusion denoiser");
    auto* train_heading = app.add_subcommand("train-heading", "Train a heading network");
    std::string method_text;
    train_heading->add_option("--method", method_text, "baseline (raw inputs) or aided (denoised inputs)");
    auto* evaluate = app.add_subcommand("evaluate", "Compare classical, baseline and aided CRMSE");
    auto* sweep = app.add_subcommand("sweep-tback", "Validation CRMSE over t_back values");
    bool reuse = false, retrain = false;
    sweep->add_flag("--reuse", reuse, "Evaluate the trained aided network instead of retraining");
    sweep->add_flag("--retrain", retrain, "Retrain the heading network for every t_back");
    auto* ablate = app.add_subcommand("ablate-norm", "Per-sample vs per-sequence normalization");
    auto* plot_cmd = app.add_subcommand("plot", "Render the SVG chart of a report.json");
    std::string report_path, plot_out;
    plot_cmd->add_option("--report", report_path, "report.json to plot")->required();
    plot_cmd->add_option("--output", plot_out, "SVG path (default: next to the report)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ConfigError("").exit_code();
    }

    try {
        if (plot_cmd->parsed()) {
            const fs::path out = plot_out.empty() ? fs::path(report_path).replace_extension(".svg") : fs::path(plot_out);
            cmd_plot(report_path, out);
            return 0;
        }
        Context ctx;
        json manifest_options = json::object();
        if (!config_path.empty()) {
            ctx.config = config::load_config(config_path);
            const json doc = json::parse(io::read_file(config_path), nullptr, false);
            if (doc.is_object() && doc.contains("manifest_version")) {
                manifest_options = doc.value("options", json::object());
            }
        }
        if (seed) {
            ctx.config.base_seed = *seed;
        }
        if (!out_dir.empty()) {
            ctx.config.output_dir = out_dir;
        }
        ctx.out = ctx.config.output_dir;
        ctx.jobs = jobs;
        ctx.quiet = quiet;

        if (generate->parsed()) {
            cmd_generate(ctx);
        } else if (ingest->parsed()) {
            if (input_dir.empty()) {
                input_dir = manifest_options.value("input", "");
            }
            if (input_dir.empty()) {
                throw ConfigError("ingest needs --input");
            }
            cmd_ingest(ctx, input_dir);
        } else if (train_denoiser->parsed()) {
            cmd_train_denoiser(ctx);
        } else if (train_heading->parsed()) {
            if (method_text.empty()) {
                method_text = manifest_options.value("method", "");
            }
            if (method_text.empty()) {
                throw ConfigError("train-heading needs --method baseline|aided");
            }
            cmd_train_heading(ctx, config::heading_method_from_string(method_text));
        } else if (evaluate->parsed()) {
            cmd_evaluate(ctx);
        } else if (sweep->parsed()) {
            if (reuse && retrain) {
                throw ConfigError("--reuse and --retrain are exclusive");
            }
            std::optional<bool> choice;
            if (reuse || retrain) {
                choice = retrain;
            } else if (manifest_options.contains("retrain")) {
                choice = manifest_options["retrain"].get<bool>();
            }
            cmd_sweep(ctx, choice);
        } else if (ablate->parsed()) {
            cmd_ablate(ctx);
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace gyrodiff::cli
