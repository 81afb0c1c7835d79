#include "gyrodiff/pipeline.hpp"

#include "gyrodiff/errors.hpp"
#include "gyrodiff/geo.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <thread>

namespace gyrodiff::pipeline {

using nlohmann::json;

bool DenoisingStage::is_identity() const {
    return network == nullptr || config.t_back == schedule.steps;
}

namespace {

void check_t_back(int t_back, const diffusion::NoiseSchedule& sched) {
    if (t_back < 0 || t_back > sched.steps) {
        throw ConfigError("t_back " + std::to_string(t_back) + " outside [0, " +
                          std::to_string(sched.steps) + "]");
    }
}

std::vector<TimeSequence> denoise_chunk(const DenoisingStage& stage,
                                        const std::vector<TimeSequence>& seqs, std::size_t start,
                                        std::size_t stop) {
    std::vector<SampleMatrix> normalized;
    std::vector<NormStats> stats;
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = start; i < stop; ++i) {
        auto [z, s] = normalize(seqs[i].samples, stage.config.scope);
        normalized.push_back(std::move(z));
        stats.push_back(std::move(s));
        seeds.push_back(stage.config.seed + static_cast<std::uint64_t>(seqs[i].id));
    }
    const auto denoised = diffusion::denoise_batch(*stage.network, std::move(normalized),
                                                   stage.config.t_back, stage.schedule, seeds,
                                                   {stage.config.stochastic});
    std::vector<TimeSequence> out;
    for (std::size_t k = 0; k < denoised.size(); ++k) {
        out.push_back(seqs[start + k].with_samples(denormalize(denoised[k], stats[k])));
    }
    return out;
}

} // namespace

std::vector<TimeSequence> DenoisingStage::operator()(const std::vector<TimeSequence>& seqs) const {
    if (network) {
        check_t_back(config.t_back, schedule);
    }
    if (is_identity() || seqs.empty()) {
        return seqs;
    }
    const std::size_t chunk = static_cast<std::size_t>(std::max(1, config.chunk));
    const std::size_t n_chunks = (seqs.size() + chunk - 1) / chunk;
    std::vector<std::vector<TimeSequence>> parts(n_chunks);
    auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t c = first; c < n_chunks; c += stride) {
            parts[c] = denoise_chunk(*this, seqs, c * chunk, std::min(seqs.size(), (c + 1) * chunk));
        }
    };
    const std::size_t jobs = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, config.jobs)),
                                                   n_chunks);
    if (jobs <= 1) {
        work(0, 1);
    } else {
        std::vector<std::exception_ptr> errors(jobs);
        std::vector<std::thread> workers;
        for (std::size_t j = 0; j < jobs; ++j) {
            workers.emplace_back([&, j] {
                try {
                    work(j, jobs);
                } catch (...) {
                    errors[j] = std::current_exception();
                }
            });
        }
        for (auto& w : workers) {
            w.join();
        }
        for (const auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }
    std::vector<TimeSequence> out;
    out.reserve(seqs.size());
    for (auto& p : parts) {
        std::move(p.begin(), p.end(), std::back_inserter(out));
    }
    return out;
}

heading::HeadingPrediction end_to_end_heading(const TimeSequence& raw, const DenoisingStage& stage,
                                              const heading::HeadingNetwork& net,
                                              Intermediates* dump) {
    SampleMatrix input = raw.samples;
    if (stage.network) {
        check_t_back(stage.config.t_back, stage.schedule);
    }
    if (!stage.is_identity()) {
        auto [z, stats] = normalize(raw.samples, stage.config.scope);
        nn::Rng rng(stage.config.seed + static_cast<std::uint64_t>(raw.id));
        SampleMatrix denoised = diffusion::denoise(*stage.network, z, stage.config.t_back,
                                                   stage.schedule, rng, {stage.config.stochastic});
        input = denormalize(denoised, stats);
        if (dump) {
            dump->normalized = std::move(z);
            dump->stats = std::move(stats);
            dump->denoised = std::move(denoised);
        }
    }
    if (dump) {
        dump->denormalized = input;
        dump->heading_input = net.input_scaler().apply(input);
    }
    return {net.predict({input}).front(), raw.id};
}

std::vector<double> predict_headings(const heading::HeadingNetwork& net,
                                     const std::vector<TimeSequence>& seqs, int chunk) {
    std::vector<double> out;
    out.reserve(seqs.size());
    const std::size_t step = static_cast<std::size_t>(std::max(1, chunk));
    for (std::size_t start = 0; start < seqs.size(); start += step) {
        std::vector<SampleMatrix> x;
        for (std::size_t i = start; i < std::min(seqs.size(), start + step); ++i) {
            x.push_back(seqs[i].samples);
        }
        const auto p = net.predict(x);
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

namespace {

std::vector<double> labels_of(const std::vector<TimeSequence>& seqs) {
    std::vector<double> out;
    for (const auto& s : seqs) {
        if (!s.heading) {
            throw MissingLabel("evaluation needs labelled sequences (id " + std::to_string(s.id) +
                               ")");
        }
        out.push_back(*s.heading);
    }
    return out;
}

} // namespace

double evaluate_crmse(const heading::HeadingNetwork& net, const std::vector<TimeSequence>& seqs) {
    return heading::crmse(predict_headings(net, seqs), labels_of(seqs));
}

double classical_crmse(const std::vector<TimeSequence>& seqs, double window_s) {
    std::vector<double> preds;
    for (const auto& s : seqs) {
        preds.push_back(geo::classical_gyrocompass(s, window_s));
    }
    return heading::crmse(preds, labels_of(seqs));
}

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out << "method,duration_s,t_back,scope,crmse_deg,seed,split\n";
    for (const auto& r : rows) {
        out << r.method << ',' << format_double(r.duration_s) << ','
            << (r.t_back ? std::to_string(*r.t_back) : "") << ','
            << (r.scope ? std::string(to_string(*r.scope)) : "") << ','
            << format_double(r.crmse_deg) << ',' << r.seed << ',' << r.split << '\n';
    }
    return out.str();
}

std::string EvalReport::to_json() const {
    json doc;
    doc["name"] = name;
    json rows_json = json::array();
    for (const auto& r : rows) {
        json row{{"method", r.method},   {"duration_s", r.duration_s}, {"crmse_deg", r.crmse_deg},
                 {"seed", r.seed},       {"split", r.split},           {"t_back", nullptr},
                 {"scope", nullptr}};
        if (r.t_back) {
            row["t_back"] = *r.t_back;
        }
        if (r.scope) {
            row["scope"] = std::string(to_string(*r.scope));
        }
        rows_json.push_back(std::move(row));
    }
    doc["rows"] = std::move(rows_json);
    doc["metadata"] = json::parse(metadata_json);
    return doc.dump(2) + "\n";
}

EvalReport EvalReport::from_json(const std::string& text) {
    EvalReport report;
    try {
        const json doc = json::parse(text);
        report.name = doc.at("name").get<std::string>();
        for (const auto& r : doc.at("rows")) {
            ReportRow row;
            row.method = r.at("method").get<std::string>();
            row.duration_s = r.at("duration_s").get<double>();
            row.crmse_deg = r.at("crmse_deg").get<double>();
            row.seed = r.at("seed").get<std::uint64_t>();
            row.split = r.at("split").get<std::string>();
            if (!r.at("t_back").is_null()) {
                row.t_back = r.at("t_back").get<int>();
            }
            if (!r.at("scope").is_null()) {
                row.scope = norm_scope_from_string(r.at("scope").get<std::string>());
            }
            report.rows.push_back(std::move(row));
        }
        report.metadata_json = doc.value("metadata", json::object()).dump();
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed report: ") + e.what());
    }
    return report;
}

std::vector<ReportRow> EvalReport::rows_for(const std::string& method) const {
    std::vector<ReportRow> out;
    std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
                 [&](const ReportRow& r) { return r.method == method; });
    return out;
}

EvalReport run_method_comparison(const std::vector<TimeSequence>& test,
                                 const ComparisonModels& models,
                                 const std::vector<double>& durations_s, std::uint64_t seed) {
    if (!models.baseline) {
        throw MissingCheckpoint("method comparison needs the baseline heading network");
    }
    if (!models.aided) {
        throw MissingCheckpoint("method comparison needs the denoiser-aided heading network");
    }
    if (test.empty()) {
        throw EmptyBatch("method comparison on an empty test set");
    }
    EvalReport report;
    report.name = "method_comparison";
    const double full = test.front().duration();
    for (double d : durations_s) {
        report.rows.push_back({"classical", d, std::nullopt, std::nullopt,
                               geo::rad2deg(classical_crmse(test, d)), seed, "test"});
    }
    report.rows.push_back({"baseline", full, std::nullopt, std::nullopt,
                           geo::rad2deg(evaluate_crmse(*models.baseline, test)), seed, "test"});
    const auto denoised = models.stage(test);
    report.rows.push_back({"denoiser_aided", full,
                           models.stage.network ? std::optional<int>(models.stage.config.t_back)
                                                : std::nullopt,
                           models.stage.config.scope,
                           geo::rad2deg(evaluate_crmse(*models.aided, denoised)), seed, "test"});
    json meta{{"seed", seed},
              {"n_test", test.size()},
              {"t_back", models.stage.config.t_back},
              {"scope", std::string(to_string(models.stage.config.scope))}};
    report.metadata_json = meta.dump();
    return report;
}

EvalReport run_tback_sweep(const synth::DatasetSplit& data, const std::vector<int>& values,
                           const DenoisingStage& stage, const SweepOptions& options) {
    if (!stage.network) {
        throw MissingCheckpoint("t_back sweep needs a denoiser");
    }
    for (int v : values) {
        check_t_back(v, stage.schedule);
    }
    if (!options.retrain && !options.reuse) {
        throw ConfigError("t_back sweep without retraining needs a heading network to reuse");
    }
    const auto& val = data.val.empty() ? data.test : data.val;
    EvalReport report;
    report.name = "tback_sweep";
    for (int v : values) {
        DenoisingStage cell = stage;
        cell.config.t_back = v;
        double value = 0.0;
        if (options.retrain) {
            const auto trained = heading::train_heading(data.train, val, options.train_config,
                                                        options.architecture, cell);
            value = trained.curve[static_cast<std::size_t>(trained.best_epoch)].val_crmse;
        } else {
            value = evaluate_crmse(*options.reuse, cell(val));
        }
        report.rows.push_back({"denoiser_aided", val.empty() ? 0.0 : val.front().duration(), v,
                               stage.config.scope, geo::rad2deg(value),
                               options.train_config.base_seed, "val"});
    }
    json meta{{"retrain", options.retrain},
              {"steps", stage.schedule.steps},
              {"seed", stage.config.seed},
              {"heading_seed", options.train_config.base_seed}};
    report.metadata_json = meta.dump();
    return report;
}

EvalReport run_normalization_ablation(const synth::DatasetSplit& data, const DenoisingStage& stage,
                                      const heading::HeadingTrainConfig& train_config,
                                      const heading::HeadingArchitecture& architecture) {
    if (!stage.network) {
        throw MissingCheckpoint("normalization ablation needs a denoiser");
    }
    EvalReport report;
    report.name = "normalization_ablation";
    double best = std::numeric_limits<double>::infinity();
    NormScope chosen = NormScope::per_sequence;
    for (NormScope scope : {NormScope::per_sequence, NormScope::per_sample}) {
        DenoisingStage cell = stage;
        cell.config.scope = scope;
        const auto train_in = cell(data.train);
        const auto val_in = cell(data.val);
        const auto trained = heading::train_heading(train_in, val_in, train_config, architecture);
        const double train_crmse = evaluate_crmse(trained.network, train_in);
        const double val_crmse = evaluate_crmse(trained.network, val_in);
        const double duration = data.train.front().duration();
        report.rows.push_back({"denoiser_aided", duration, stage.config.t_back, scope,
                               geo::rad2deg(train_crmse), train_config.base_seed, "train"});
        report.rows.push_back({"denoiser_aided", duration, stage.config.t_back, scope,
                               geo::rad2deg(val_crmse), train_config.base_seed, "val"});
        if (val_crmse < best) {
            best = val_crmse;
            chosen = scope;
        }
    }
    json meta{{"preferred_scope", std::string(to_string(chosen))},
              {"t_back", stage.config.t_back},
              {"heading_seed", train_config.base_seed}};
    report.metadata_json = meta.dump();
    return report;
}

NormScope preferred_scope(const EvalReport& ablation) {
    double best = std::numeric_limits<double>::infinity();
    std::optional<NormScope> chosen;
    for (const auto& r : ablation.rows) {
        if (r.split == "val" && r.scope && r.crmse_deg < best) {
            best = r.crmse_deg;
            chosen = r.scope;
        }
    }
    if (!chosen) {
        throw FormatError("ablation report has no validation rows");
    }
    return *chosen;
}

} // namespace gyrodiff::pipeline
