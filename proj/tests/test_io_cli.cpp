#include <gtest/gtest.h>

#include "gyrodiff/cli.hpp"
#include "gyrodiff/config.hpp"
#include "gyrodiff/errors.hpp"
#include "gyrodiff/geo.hpp"
#include "gyrodiff/io.hpp"
#include "gyrodiff/models.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <random>

using namespace gyrodiff;
namespace fs = std::filesystem;
using geo::deg2rad;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("gyrodiff_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

config::ExperimentConfig toy_config(const fs::path& out) {
    config::ExperimentConfig c;
    c.output_dir = out.string();
    c.base_seed = 3;
    c.dataset.increment_deg = 15.0;
    c.denoiser.architecture = {1, 4, 20};
    c.denoiser.max_epochs = 2;
    c.heading.hidden = 4;
    c.heading.layers = 1;
    c.heading.epochs = 2;
    c.pipeline.t_back = 995;
    return c;
}

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "gyrodiff");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

} // namespace

TEST(Hashing, KnownDigest) {
    EXPECT_EQ(io::sha256_hex(std::string("abc")),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Array, RejectsBadHeaders) {
    EXPECT_THROW(io::decode_array("nonsense"), FormatError);
    EXPECT_THROW(io::decode_array("gyrodiff-array 1 1 2 3\nshort"), FormatError);
    EXPECT_THROW(io::decode_array("gyrodiff-array 1 1 2 4\n"), FormatError);
}

TEST(Dataset, BitExactRoundTrip) {
    const auto dir = scratch("dataset");
    synth::SyntheticConfig cfg;
    cfg.increment = deg2rad(30.0);
    auto data = synth::synthesize_noisy_dataset(synth::generate_synthetic_dataset(cfg), 600.0,
                                                {1e-4, 1e-6, 0}, 7);
    data.test[0].heading.reset();
    io::save_dataset(dir, {data, R"({"note":"x"})"});
    const auto back = io::load_dataset(dir);
    ASSERT_EQ(back.data.size(), data.size());
    for (auto [a, b] : {std::pair{&data.train, &back.data.train}, {&data.val, &back.data.val},
                        {&data.test, &back.data.test}}) {
        ASSERT_EQ(a->size(), b->size());
        for (std::size_t i = 0; i < a->size(); ++i) {
            EXPECT_EQ((*a)[i].samples, (*b)[i].samples);
            EXPECT_EQ((*a)[i].heading, (*b)[i].heading);
            EXPECT_EQ((*a)[i].id, (*b)[i].id);
            EXPECT_EQ((*a)[i].latitude, (*b)[i].latitude);
        }
    }
    EXPECT_EQ(nlohmann::json::parse(back.metadata_json)["note"], "x");
    const auto h = io::dataset_hash(dir);
    io::save_dataset(dir, {data, "{}"});
    EXPECT_EQ(io::dataset_hash(dir), h);
    EXPECT_THROW(io::load_dataset(dir / "missing"), IoError);
}

TEST(Checkpoint, ReproducesInferenceBitExactly) {
    const auto dir = scratch("ckpt");
    diffusion::DenoiserNetwork den({2, 5, 20});
    den.initialize(1);
    const auto sched = diffusion::build_schedule(100, 1e-3, 2e-2);
    models::save_denoiser(dir / "d.ckpt", den, sched);
    const auto loaded = models::load_denoiser(dir / "d.ckpt");
    EXPECT_EQ(loaded.network.architecture(), den.architecture());
    EXPECT_EQ(loaded.schedule.alpha_bars, sched.alpha_bars);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n;
    SampleMatrix x(50, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
    EXPECT_EQ(loaded.network.predict_noise(x, 40), den.predict_noise(x, 40));

    heading::HeadingNetwork h({1, 3, 0.05});
    h.initialize(4);
    h.input_scaler().mean << 1e-5, -2e-5, 0.1;
    h.input_scaler().scale << 3e-5, 7e-5, 1.0 / 3.0;
    models::Preprocessing prep;
    prep.denoised = true;
    prep.denoiser_sha256 = loaded.sha256;
    prep.pipeline.t_back = 960;
    prep.pipeline.scope = NormScope::per_sample;
    prep.pipeline.seed = 0xfedcba9876543210ULL;
    models::save_heading(dir / "h.ckpt", h, "aided", prep);
    const auto lh = models::load_heading(dir / "h.ckpt");
    EXPECT_EQ(lh.method, "aided");
    EXPECT_EQ(lh.network.input_scaler().scale, h.input_scaler().scale);
    EXPECT_EQ(lh.network.predict({x}), h.predict({x}));
    EXPECT_EQ(lh.preprocessing.pipeline.seed, prep.pipeline.seed);
    EXPECT_EQ(lh.preprocessing.pipeline.scope, NormScope::per_sample);
    EXPECT_THROW(models::load_heading(dir / "d.ckpt"), FormatError);
}

TEST(Checkpoint, DetectsCorruption) {
    const auto dir = scratch("corrupt");
    diffusion::DenoiserNetwork den({1, 3, 20});
    den.initialize(1);
    models::save_denoiser(dir / "d.ckpt", den, diffusion::build_schedule());
    std::string bytes = io::read_file(dir / "d.ckpt");
    bytes[bytes.size() - 5] ^= 0x10;
    io::write_atomic(dir / "d.ckpt", bytes);
    EXPECT_THROW(models::load_denoiser(dir / "d.ckpt"), ChecksumError);
    io::write_atomic(dir / "d.ckpt", bytes.substr(0, bytes.size() - 8));
    EXPECT_THROW(models::load_denoiser(dir / "d.ckpt"), ChecksumError);
    io::write_atomic(dir / "x.ckpt", "not a checkpoint\n");
    EXPECT_THROW(io::load_checkpoint(dir / "x.ckpt"), FormatError);
    EXPECT_THROW(io::load_checkpoint(dir / "none.ckpt"), MissingCheckpoint);
}

TEST(Config, DefaultsAndRoundTrip) {
    const auto c = config::parse_config("{}");
    EXPECT_EQ(c.pipeline.t_back, 950);
    EXPECT_EQ(c.schedule.steps, 1000);
    EXPECT_EQ(c.denoiser.architecture.layers, 5);
    EXPECT_EQ(c.heading.enhanced_batch_size, 32);
    const auto again = config::parse_config(config::to_json(c));
    EXPECT_EQ(config::to_json(again), config::to_json(c));
    EXPECT_EQ(config::config_hash(again), config::config_hash(c));

    const auto base = config::heading_train_config(c, config::HeadingMethod::baseline);
    EXPECT_EQ(base.batch_size, 100);
    EXPECT_EQ(base.variant, heading::Variant::baseline);
    EXPECT_EQ(config::heading_architecture(c, config::HeadingMethod::baseline).dropout, 0.0);
    EXPECT_EQ(config::heading_architecture(c, config::HeadingMethod::aided).dropout, 0.05);
}

TEST(Config, Diagnostics) {
    try {
        config::parse_config("{\n  \"dataset\": {\n    \"increment_deg\": 1,,\n  }\n}", "cfg.json");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("cfg.json:3:"), std::string::npos) << e.what();
    }
    try {
        config::parse_config(R"({"heading": {"epoch": 3}})");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("heading.epoch"), std::string::npos);
    }
    try {
        config::parse_config(R"({"pipeline": {"t_back": 1200}})");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("pipeline.t_back"), std::string::npos);
    }
    EXPECT_THROW(config::parse_config(R"({"pipeline": {"scope": "global"}})"), ConfigError);
    EXPECT_THROW(config::parse_config(R"({"denoiser": {"svd_threshold": 1.0}})"), ConfigError);
    EXPECT_THROW(config::parse_config(R"({"denoiser": {"svd_window": 7}})"), ConfigError);
    EXPECT_EQ(config::parse_config(R"({"denoiser": {"svd_window": 5}})").denoiser.svd_window, 5);
    EXPECT_THROW(config::parse_config(R"({"base_seed": -1})"), ConfigError);
    EXPECT_THROW(config::parse_config(R"({"dataset": {"split": [0.5, 0.5]}})"), ConfigError);
}

TEST(Config, AcceptsManifest) {
    auto c = config::parse_config("{}");
    c.base_seed = 99;
    const std::string manifest = R"({"manifest_version": 1, "config": )" + config::to_json(c) + "}";
    EXPECT_EQ(config::parse_config(manifest).base_seed, 99u);
}

TEST(Commands, GenerateIsDeterministic) {
    const auto out = scratch("generate");
    cli::Context ctx{config::parse_config("{}"), out / "a"};
    ctx.quiet = true;
    cli::cmd_generate(ctx);
    const cli::Layout layout{ctx.out};
    const auto clean = io::load_dataset(layout.clean());
    EXPECT_EQ(clean.data.train.size(), 432u);
    EXPECT_EQ(clean.data.val.size(), 144u);
    EXPECT_EQ(clean.data.test.size(), 144u);
    EXPECT_EQ(clean.data.train[0].n_time(), 300);
    const auto h = io::dataset_hash(layout.noisy());
    cli::cmd_generate(ctx);
    EXPECT_EQ(io::dataset_hash(layout.noisy()), h);
    EXPECT_TRUE(fs::exists(ctx.out / "data" / "manifest.json"));
}

TEST(Commands, TwofoldOrderAndFullRun) {
    const auto out = scratch("commands");
    cli::Context ctx{toy_config(out), out};
    ctx.quiet = true;
    cli::cmd_generate(ctx);
    EXPECT_THROW(cli::cmd_train_heading(ctx, config::HeadingMethod::aided), MissingArtifact);
    EXPECT_THROW(cli::cmd_evaluate(ctx), MissingCheckpoint);

    cli::cmd_train_denoiser(ctx);
    cli::cmd_train_heading(ctx, config::HeadingMethod::baseline);
    cli::cmd_train_heading(ctx, config::HeadingMethod::aided);
    cli::cmd_evaluate(ctx);
    const cli::Layout layout{out};
    const std::string curve = io::read_file(layout.heading_dir(config::HeadingMethod::aided) / "curve.csv");
    EXPECT_EQ(std::count(curve.begin(), curve.end(), '\n'), 3); // header + 2 epochs
    EXPECT_EQ(curve.substr(0, curve.find('\n')), "epoch,learning_rate,train_crmse_deg,val_crmse_deg");
    EXPECT_TRUE(fs::exists(layout.eval_dir() / "comparison.svg"));

    const auto report = io::read_file(layout.eval_dir() / "report.csv");
    const auto manifest = nlohmann::json::parse(io::read_file(layout.eval_dir() / "manifest.json"));
    EXPECT_EQ(manifest["command"], "evaluate");
    EXPECT_FALSE(manifest["outputs"].empty());

    // Replacing the denoiser invalidates the aided model.
    diffusion::DenoiserNetwork other({1, 4, 20});
    other.initialize(77);
    models::save_denoiser(layout.denoiser(), other, diffusion::build_schedule());
    EXPECT_THROW(cli::cmd_evaluate(ctx), ChecksumError);
    cli::cmd_train_denoiser(ctx);
    cli::cmd_evaluate(ctx);
    EXPECT_EQ(io::read_file(layout.eval_dir() / "report.csv"), report);
}

TEST(Cli, ExitCodes) {
    const auto out = scratch("cli");
    std::ofstream(out / "bad.json") << "{\"dataset\": {\"increment_deg\": -1}}";
    EXPECT_EQ(run_cli({"--config", (out / "bad.json").string(), "generate"}), 2);
    EXPECT_EQ(run_cli({"--config", (out / "missing.json").string(), "generate"}), 2);
    EXPECT_EQ(run_cli({"-q", "--out", (out / "run").string(), "evaluate"}), 7);
    EXPECT_EQ(run_cli({"-q", "--out", (out / "run").string(), "train-heading"}), 2);
    EXPECT_EQ(run_cli({"nonsense"}), 2);
    EXPECT_EQ(run_cli({"--help"}), 0);
}

namespace {

void write_recording(const fs::path& path, double heading, double lat, double rate, double duration,
                     std::uint64_t seed) {
    const auto clean = synth::generate_clean_sequence(heading, lat, duration, rate);
    const auto noisy = synth::add_sensor_noise(clean, {1e-5, 0.0, seed});
    std::ofstream out(path);
    out << "time,gx,gy,gz\n";
    char buf[160];
    for (Eigen::Index t = 0; t < noisy.n_time(); ++t) {
        std::snprintf(buf, sizeof buf, "%.6f,%.17g,%.17g,%.17g\n", static_cast<double>(t) / rate,
                      noisy.samples(t, 0), noisy.samples(t, 1), noisy.samples(t, 2));
        out << buf;
    }
}

} // namespace

TEST(Commands, IngestRecordedSet) {
    const auto dir = scratch("ingest");
    const fs::path in = dir / "recordings";
    fs::create_directories(in);
    nlohmann::json labels{{"latitude_deg", 32.11}, {"recordings", nlohmann::json::array()}};
    const double rate = 30.0;
    for (int i = 0; i < 34; ++i) {
        const std::string name = "rec" + std::to_string(i) + ".csv";
        const double heading_deg = std::fmod(i * 37.0, 360.0);
        write_recording(in / name, deg2rad(heading_deg), deg2rad(32.11), rate, 100.0, i);
        labels["recordings"].push_back({{"file", name}, {"heading_deg", heading_deg}});
    }
    std::ofstream(in / "labels.json") << labels.dump(2);

    auto cfg = config::parse_config("{}");
    cfg.ingest.source_rate_hz = rate;
    cli::Context ctx{cfg, dir / "out"};
    ctx.quiet = true;
    cli::cmd_ingest(ctx, in);
    const auto data = io::load_dataset(cli::Layout{ctx.out}.recorded()).data;
    EXPECT_EQ(data.train.size(), 2400u);
    EXPECT_EQ(data.val.size(), 4u);
    EXPECT_EQ(data.test.size(), 6u);
    EXPECT_EQ(data.train[0].n_time(), 300);
    EXPECT_EQ(data.val[0].source, SourceTag::recorded);
    EXPECT_NEAR(data.val[0].latitude, deg2rad(32.11), 1e-15);
    // Held-out splits are not augmented: their headings are the listed ones.
    for (const auto* split : {&data.val, &data.test}) {
        for (const auto& s : *split) {
            const double deg = geo::rad2deg(*s.heading);
            bool listed = false;
            for (int i = 0; i < 34; ++i) {
                listed = listed || std::abs(deg - std::fmod(i * 37.0, 360.0)) < 1e-9;
            }
            EXPECT_TRUE(listed) << deg;
        }
    }

    // Non-monotone timestamps name the offending row.
    {
        std::ofstream bad(in / "rec0.csv");
        bad << "time,gx,gy,gz\n0,1,2,3\n0.0333333,1,2,3\n0.0166667,1,2,3\n";
    }
    try {
        cli::cmd_ingest(ctx, in);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("row 4"), std::string::npos) << e.what();
    }
}
