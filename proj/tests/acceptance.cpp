// Acceptance run: prints one PASS/FAIL line per criterion.
//
// Usage: acceptance [--work DIR] [criterion ...]

#include "gyrodiff/cli.hpp"
#include "gyrodiff/config.hpp"
#include "gyrodiff/denoiser.hpp"
#include "gyrodiff/errors.hpp"
#include "gyrodiff/geo.hpp"
#include "gyrodiff/heading.hpp"
#include "gyrodiff/io.hpp"
#include "gyrodiff/models.hpp"
#include "gyrodiff/pipeline.hpp"
#include "gyrodiff/runtime.hpp"
#include "gyrodiff/schedule.hpp"
#include "gyrodiff/svd_loss.hpp"
#include "gyrodiff/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

using namespace gyrodiff;
namespace fs = std::filesystem;
using json = nlohmann::json;
using geo::deg2rad;
using geo::rad2deg;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    std::function<Outcome(const fs::path&)> run;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

void progress(const std::string& text) { std::cerr << "  .. " << text << std::endl; }

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = n(rng);
    }
    return m;
}

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "gyrodiff");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

void require_ok(int code, const std::string& what) {
    if (code != 0) {
        throw std::runtime_error(what + " exited with code " + std::to_string(code));
    }
}

cli::Context quiet_context(const config::ExperimentConfig& cfg) {
    cli::Context ctx{cfg, cfg.output_dir};
    ctx.quiet = true;
    return ctx;
}

Outcome geo_oracle(const fs::path&) {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> heading(0.0, 2 * std::numbers::pi);
    std::uniform_real_distribution<double> lat(deg2rad(-80.0), deg2rad(80.0));
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double psi = heading(rng);
        const auto seq = synth::generate_clean_sequence(psi, lat(rng), 100.0, 3.0);
        worst = std::max(worst, std::abs(geo::wrap_pi(geo::classical_gyrocompass(seq, 100.0) - psi)));
    }
    const double elapsed = seconds_since(start);
    return {worst < 1e-9 && elapsed < 5.0, fmt("max error %.3g rad, %.2f s", worst, elapsed)};
}

Outcome latitude_sensitivity(const fs::path&) {
    const double signal = rad2deg(geo::max_horizontal_signal({deg2rad(32.11), 0.0}));
    const double rel = std::abs(signal - 0.0035) / 0.0035;
    return {rel <= 0.02, fmt("%.6f deg/s, %.2f%% from 0.0035", signal, 100 * rel)};
}

Outcome marginal_equivalence(const fs::path&) {
    const auto start = std::chrono::steady_clock::now();
    const auto sched = diffusion::build_schedule(50, 1e-3, 0.05);
    std::mt19937_64 pick(3);
    std::uniform_real_distribution<double> x_dist(-3.0, 3.0);
    std::uniform_int_distribution<int> t_dist(1, 50);
    nn::Rng rng(4);
    const int draws = 100000;
    double worst = 0.0;
    for (int c = 0; c < 5; ++c) {
        const std::vector<double> x0{x_dist(pick)};
        const int t = t_dist(pick);
        double sum = 0.0, sum_sq = 0.0;
        for (int i = 0; i < draws; ++i) {
            const double v = diffusion::forward_noise_markov(x0, t, rng, sched)[0];
            sum += v;
            sum_sq += v * v;
        }
        const double mean = sum / draws;
        const double var = (sum_sq - draws * mean * mean) / (draws - 1);
        const double ab = sched.alpha_bar(t);
        const double expected_mean = std::sqrt(ab) * x0[0];
        const double expected_var = 1.0 - ab;
        const double z_mean = std::abs(mean - expected_mean) / std::sqrt(expected_var / draws);
        const double z_var = std::abs(var - expected_var) / (expected_var * std::sqrt(2.0 / (draws - 1)));
        worst = std::max({worst, z_mean, z_var});
    }
    const double elapsed = seconds_since(start);
    return {worst < 3.0 && elapsed < 120.0,
            fmt("largest deviation %.2f standard errors, %.1f s", worst, elapsed)};
}

Outcome reverse_inversion(const fs::path&) {
    std::mt19937_64 rng(5);
    nn::Rng noise(6);
    const auto one = diffusion::build_schedule(1, 0.02, 0.3);
    const SampleMatrix x0 = random_matrix(300, 3, rng);
    const SampleMatrix eps = random_matrix(300, 3, rng);
    const SampleMatrix x1 = std::sqrt(one.alpha_bar(1)) * x0 + std::sqrt(1 - one.alpha_bar(1)) * eps;
    const diffusion::NoisePredictor exact = [&](const SampleMatrix&, int) { return eps; };
    const double single = (diffusion::denoise(exact, x1, 0, one, noise, {false}) - x0).cwiseAbs().maxCoeff();

    const auto ten = diffusion::build_schedule(10, 0.01, 0.2);
    const SampleMatrix x10 = std::sqrt(ten.alpha_bar(10)) * x0 + std::sqrt(1 - ten.alpha_bar(10)) * eps;
    const diffusion::NoisePredictor oracle = [&](const SampleMatrix& x, int t) -> SampleMatrix {
        return (x - std::sqrt(ten.alpha_bar(t)) * x0) / std::sqrt(1.0 - ten.alpha_bar(t));
    };
    const double multi = (diffusion::denoise(oracle, x10, 0, ten, noise, {false}) - x0).cwiseAbs().maxCoeff();
    return {single < 1e-10 && multi < 1e-6, fmt("one step %.2g, ten steps %.2g", single, multi)};
}

Outcome svd_loss(const fs::path&) {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(7);
    std::vector<Eigen::MatrixXd> p, t;
    double plain = 0.0;
    for (int k = 0; k < 4; ++k) {
        p.push_back(random_matrix(30, 3, rng));
        t.push_back(random_matrix(30, 3, rng));
        plain += (p.back() - t.back()).squaredNorm() / 90.0;
    }
    plain /= 4.0;
    const double mse_gap = std::abs(diffusion::svd_mse_loss(p, t, 0.0) - plain);

    double idem_gap = 0.0;
    for (double tau : {0.0, 0.3, 0.7}) {
        const Eigen::MatrixXd once = diffusion::svd_filter(p[0], tau);
        idem_gap = std::max(idem_gap, (diffusion::svd_filter(once, tau) - once).cwiseAbs().maxCoeff());
    }

    double grad_gap = 0.0;
    for (double tau : {0.0, 0.1}) {
        std::vector<Eigen::MatrixXd> pred{random_matrix(12, 3, rng), random_matrix(12, 3, rng)};
        std::vector<Eigen::MatrixXd> grad;
        std::vector<Eigen::MatrixXd> target{t[0].topRows(12), t[1].topRows(12)};
        diffusion::svd_mse_loss(pred, target, tau, &grad);
        for (std::size_t k = 0; k < pred.size(); ++k) {
            for (Eigen::Index i = 0; i < pred[k].size(); ++i) {
                auto plus = pred, minus = pred;
                const double h = 1e-6;
                plus[k].data()[i] += h;
                minus[k].data()[i] -= h;
                const double num = (diffusion::svd_mse_loss(plus, target, tau) -
                                    diffusion::svd_mse_loss(minus, target, tau)) /
                                   (2 * h);
                grad_gap = std::max(grad_gap, std::abs(grad[k].data()[i] - num) /
                                                  std::max(std::abs(num), 1e-3));
            }
        }
    }
    const double elapsed = seconds_since(start);
    return {mse_gap < 1e-9 && idem_gap < 1e-12 && grad_gap < 1e-5 && elapsed < 10.0,
            fmt("mse gap %.2g, idempotence gap %.2g, gradient rel gap %.2g, %.2f s", mse_gap, idem_gap,
                grad_gap, elapsed)};
}

Outcome lr_endpoints(const fs::path&) {
    const auto cfg = heading::HeadingTrainConfig::enhanced();
    const double first = heading::lr_at_epoch(0, cfg);
    const double last = heading::lr_at_epoch(cfg.epochs, cfg);
    const bool pass = std::abs(first - 0.005) <= 1e-12 * 0.005 && std::abs(last - 0.0005) <= 1e-12 * 0.0005;
    return {pass, fmt("eta_0 %.17g, eta_N %.17g", first, last)};
}

Outcome crmse_identities(const fs::path&) {
    const std::vector<double> wrap_p{deg2rad(359.0)}, wrap_g{deg2rad(1.0)};
    const double wrap = rad2deg(heading::crmse(wrap_p, wrap_g));
    const std::vector<double> same{0.3, 2.0, 6.0};
    const double zero = heading::crmse(same, same);
    const std::vector<double> batch_p{deg2rad(90.0), deg2rad(180.0)}, batch_g{0.0, 0.0};
    const double batch = rad2deg(heading::crmse(batch_p, batch_g));
    const bool pass = std::abs(wrap - 2.0) < 1e-9 && zero == 0.0 && std::abs(batch - 142.3) <= 0.1;
    return {pass, fmt("wrap %.6f deg, zero %.1f, batch %.4f deg", wrap, zero, batch)};
}

Outcome desk_training(const fs::path&) {
    const auto start = std::chrono::steady_clock::now();
    synth::SyntheticConfig cfg;
    cfg.increment = deg2rad(5.0);
    const auto data = synth::generate_synthetic_dataset(cfg);
    auto tc = heading::HeadingTrainConfig::enhanced();
    tc.epochs = 50;
    tc.base_seed = 1;
    const auto result =
        heading::train_heading(data.train, data.val, tc, heading::architecture_for(heading::Variant::enhanced));
    const double best = rad2deg(result.curve[static_cast<std::size_t>(result.best_epoch)].val_crmse);
    const double elapsed = seconds_since(start);
    return {data.size() == 72 && best < 2.0 && elapsed < 600.0,
            fmt("%zu sequences, best validation CRMSE %.3f deg at epoch %d, %.1f s", data.size(), best,
                result.best_epoch, elapsed)};
}

struct SeedResult {
    std::uint64_t seed;
    double classical;
    double baseline;
    double aided;
};

Outcome relative_improvement(const fs::path& work) {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<SeedResult> results;
    fs::path shared_denoiser;
    for (std::uint64_t seed : seeds) {
        config::ExperimentConfig cfg;
        cfg.base_seed = seed;
        cfg.output_dir = (work / "relative" / ("seed" + std::to_string(seed))).string();
        cfg.denoiser.max_epochs = 20;
        cfg.heading.epochs = 100;
        const auto ctx = quiet_context(cfg);
        const cli::Layout layout{ctx.out};
        progress(fmt("seed %llu: generate", static_cast<unsigned long long>(seed)));
        cli::cmd_generate(ctx);
        if (shared_denoiser.empty()) {
            progress("train denoiser");
            cli::cmd_train_denoiser(ctx);
            shared_denoiser = layout.denoiser();
        } else {
            fs::create_directories(layout.denoiser_dir());
            fs::copy_file(shared_denoiser, layout.denoiser(), fs::copy_options::overwrite_existing);
        }
        progress("train baseline heading");
        cli::cmd_train_heading(ctx, config::HeadingMethod::baseline);
        progress("train denoiser-aided heading");
        cli::cmd_train_heading(ctx, config::HeadingMethod::aided);
        progress("evaluate");
        cli::cmd_evaluate(ctx);
        const auto report = pipeline::EvalReport::from_json(io::read_file(layout.eval_dir() / "report.json"));
        SeedResult r{seed, 0, 0, 0};
        for (const auto& row : report.rows) {
            if (row.method == "classical" && row.duration_s == 100.0) r.classical = row.crmse_deg;
            if (row.method == "baseline") r.baseline = row.crmse_deg;
            if (row.method == "denoiser_aided") r.aided = row.crmse_deg;
        }
        progress(fmt("seed %llu: classical %.3f, baseline %.3f, aided %.3f deg",
                     static_cast<unsigned long long>(seed), r.classical, r.baseline, r.aided));
        results.push_back(r);
    }
    double classical = 0, baseline = 0, aided = 0, improvement = 0;
    json summary = json::array();
    for (const auto& r : results) {
        classical += r.classical / results.size();
        baseline += r.baseline / results.size();
        aided += r.aided / results.size();
        improvement += (r.classical - r.aided) / r.classical / results.size();
        summary.push_back({{"seed", r.seed}, {"classical", r.classical}, {"baseline", r.baseline}, {"aided", r.aided}});
    }
    const double elapsed = seconds_since(start);
    io::write_atomic(work / "relative" / "summary.json",
                     json{{"seeds", summary}, {"elapsed_s", elapsed}}.dump(2) + "\n");
    const bool pass = aided < baseline && baseline < classical && improvement >= 0.10 && elapsed <= 7200.0;
    return {pass, fmt("mean CRMSE aided %.3f, baseline %.3f, classical %.3f deg; aided vs classical %+.1f%%; %.0f s",
                      aided, baseline, classical, 100 * improvement, elapsed)};
}

Outcome tback_harness(const fs::path& work) {
    const auto start = std::chrono::steady_clock::now();
    config::ExperimentConfig cfg;
    cfg.base_seed = 1;
    cfg.output_dir = (work / "sweep").string();
    cfg.denoiser.architecture = {2, 32, 20};
    cfg.denoiser.max_epochs = 5;
    cfg.heading.epochs = 20;
    cfg.pipeline.sweep_values = {100, 300, 500, 700, 900, 950, 980, cfg.schedule.steps};
    const auto ctx = quiet_context(cfg);
    const cli::Layout layout{ctx.out};
    progress("generate");
    cli::cmd_generate(ctx);
    progress("train denoiser");
    cli::cmd_train_denoiser(ctx);
    progress("train denoiser-aided heading");
    cli::cmd_train_heading(ctx, config::HeadingMethod::aided);
    progress("sweep");
    cli::cmd_sweep(ctx, false);

    const auto report = pipeline::EvalReport::from_json(io::read_file(layout.sweep_dir() / "report.json"));
    const auto stored = models::load_heading(layout.heading(config::HeadingMethod::aided));
    const auto data = io::load_dataset(layout.noisy()).data;
    const double plain = rad2deg(pipeline::evaluate_crmse(stored.network, data.val));
    bool complete = report.rows.size() == cfg.pipeline.sweep_values.size();
    std::string curve;
    double identity = std::nan("");
    for (const auto& row : report.rows) {
        complete = complete && std::isfinite(row.crmse_deg);
        curve += fmt("%s%d:%.2f", curve.empty() ? "" : " ", *row.t_back, row.crmse_deg);
        if (*row.t_back == cfg.schedule.steps) identity = row.crmse_deg;
    }
    complete = complete && fs::exists(layout.sweep_dir() / "sweep.svg");
    const double elapsed = seconds_since(start);
    const bool bitwise = identity == plain;
    return {complete && bitwise && elapsed <= 3600.0,
            fmt("t_back=T %s no-denoiser value (%.17g); curve %s; %.0f s", bitwise ? "equals" : "differs from",
                plain, curve.c_str(), elapsed)};
}

std::map<std::string, std::string> outputs_of(const fs::path& manifest) {
    std::map<std::string, std::string> out;
    const auto doc = json::parse(io::read_file(manifest));
    for (const auto& e : doc["outputs"]) {
        out[e["path"].get<std::string>()] = e["sha256"].get<std::string>();
    }
    return out;
}

Outcome determinism(const fs::path& work) {
    const fs::path out = work / "determinism";
    fs::remove_all(out);
    fs::create_directories(out);
    config::ExperimentConfig cfg;
    cfg.base_seed = 11;
    cfg.output_dir = out.string();
    cfg.dataset.increment_deg = 10.0;
    cfg.denoiser.architecture = {1, 8, 20};
    cfg.denoiser.max_epochs = 3;
    cfg.heading.hidden = 8;
    cfg.heading.layers = 1;
    cfg.heading.epochs = 5;
    cfg.pipeline.t_back = 990;
    io::write_atomic(out / "config.json", config::to_json(cfg));
    const cli::Layout layout{out};

    struct Step {
        std::vector<std::string> args;
        fs::path dir;
    };
    const std::vector<Step> steps{
        {{"generate"}, out / "data"},
        {{"train-denoiser"}, layout.denoiser_dir()},
        {{"train-heading", "--method", "baseline"}, layout.heading_dir(config::HeadingMethod::baseline)},
        {{"train-heading", "--method", "aided"}, layout.heading_dir(config::HeadingMethod::aided)},
        {{"evaluate"}, layout.eval_dir()},
    };
    std::vector<std::map<std::string, std::string>> first;
    for (const auto& s : steps) {
        auto args = s.args;
        args.insert(args.begin(), {"-q", "--config", (out / "config.json").string()});
        require_ok(run_cli(args), s.args.front());
        first.push_back(outputs_of(s.dir / "manifest.json"));
    }
    std::size_t files = 0;
    std::vector<std::string> differing;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const fs::path saved = out / ("manifest-" + std::to_string(i) + ".json");
        fs::copy_file(steps[i].dir / "manifest.json", saved, fs::copy_options::overwrite_existing);
        require_ok(run_cli({"-q", "--config", saved.string(), steps[i].args.front()}),
                   steps[i].args.front() + " rerun");
        const auto again = outputs_of(steps[i].dir / "manifest.json");
        files += again.size();
        if (again != first[i] || again.empty()) {
            differing.push_back(steps[i].args.front());
        }
    }
    std::string detail = fmt("%zu output files re-created from manifests", files);
    for (const auto& d : differing) {
        detail += ", differs: " + d;
    }
    return {differing.empty(), detail};
}

} // namespace

int main(int argc, char** argv) {
    tune_allocator();
    CLI::App app{"Acceptance criteria"};
    std::string work = (fs::temp_directory_path() / "gyrodiff_acceptance").string();
    std::vector<int> selected;
    app.add_option("--work", work, "Scratch directory");
    app.add_option("criteria", selected, "Criteria to run (default: all)");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria{
        {1, "geo oracle", geo_oracle},
        {2, "latitude sensitivity", latitude_sensitivity},
        {3, "diffusion marginal equivalence", marginal_equivalence},
        {4, "reverse-step inversion", reverse_inversion},
        {5, "SVD loss correctness", svd_loss},
        {6, "learning-rate endpoints", lr_endpoints},
        {7, "CRMSE identities", crmse_identities},
        {8, "desk-scale training", desk_training},
        {9, "relative improvement", relative_improvement},
        {10, "t_back harness", tback_harness},
        {11, "determinism", determinism},
    };
    fs::create_directories(work);
    int failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
            continue;
        }
        Outcome o;
        try {
            o = c.run(work);
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << "criterion " << c.id << " " << (o.pass ? "PASS" : "FAIL") << "  " << c.name << ": "
                  << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
