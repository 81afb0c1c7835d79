#include "gyrodiff/config.hpp"

#include "gyrodiff/errors.hpp"
#include "gyrodiff/geo.hpp"
#include "gyrodiff/io.hpp"
#include "gyrodiff/seeds.hpp"

#include <json.hpp>

#include <cmath>
#include <set>

namespace gyrodiff::config {

using nlohmann::json;

std::string_view to_string(HeadingMethod m) { return m == HeadingMethod::baseline ? "baseline" : "aided"; }

HeadingMethod heading_method_from_string(std::string_view text) {
    if (text == "baseline") {
        return HeadingMethod::baseline;
    }
    if (text == "aided") {
        return HeadingMethod::aided;
    }
    throw ConfigError("unknown heading method '" + std::string(text) + "' (expected baseline or aided)");
}

namespace {

// Reads an object field by field; leftovers are reported as unknown.
class Reader {
public:
    Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) {
            throw ConfigError("field '" + display() + "': expected an object");
        }
    }

    ~Reader() noexcept(false) {
        if (std::uncaught_exceptions() > 0) {
            return;
        }
        for (const auto& [key, value] : obj_.items()) {
            if (!seen_.count(key)) {
                throw ConfigError("unknown field '" + join(key) + "'");
            }
        }
    }

    template <typename T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        const auto it = obj_.find(key);
        if (it == obj_.end()) {
            return;
        }
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!it->is_boolean()) throw ConfigError("");
            } else if constexpr (std::is_integral_v<T>) {
                if (!it->is_number_integer()) throw ConfigError("");
                if constexpr (std::is_unsigned_v<T>) {
                    if (it->is_number_integer() && !it->is_number_unsigned()) throw ConfigError("");
                }
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!it->is_number()) throw ConfigError("");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!it->is_string()) throw ConfigError("");
            }
            out = it->get<T>();
        } catch (const std::exception&) {
            throw ConfigError("field '" + join(key) + "': expected " + type_name<T>() + ", got " +
                              it->dump());
        }
    }

    const json* child(const std::string& key) {
        seen_.insert(key);
        const auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    template <typename T>
    static std::string type_name() {
        if constexpr (std::is_same_v<T, bool>) return "a boolean";
        else if constexpr (std::is_unsigned_v<T>) return "a non-negative integer";
        else if constexpr (std::is_integral_v<T>) return "an integer";
        else if constexpr (std::is_floating_point_v<T>) return "a number";
        else if constexpr (std::is_same_v<T, std::string>) return "a string";
        else return "an array";
    }
    std::string display() const { return path_.empty() ? "<root>" : path_; }

    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) {
        throw ConfigError("field '" + field + "': " + what);
    }
}

void read_split(Reader& r, const std::string& key, synth::SplitRatio& split) {
    const json* node = r.child(key);
    if (!node) {
        return;
    }
    if (!node->is_array() || node->size() != 3 || !(*node)[0].is_number() ||
        !(*node)[1].is_number() || !(*node)[2].is_number()) {
        throw ConfigError("field '" + r.join(key) + "': expected [train, val, test] fractions");
    }
    split = {(*node)[0].get<double>(), (*node)[1].get<double>(), (*node)[2].get<double>()};
}

template <typename T>
void read_list(Reader& r, const std::string& key, std::vector<T>& out) {
    const json* node = r.child(key);
    if (!node) {
        return;
    }
    if (!node->is_array()) {
        throw ConfigError("field '" + r.join(key) + "': expected an array");
    }
    out.clear();
    for (std::size_t i = 0; i < node->size(); ++i) {
        const auto& v = (*node)[i];
        const bool ok = std::is_integral_v<T> ? v.is_number_integer() : v.is_number();
        if (!ok) {
            throw ConfigError("field '" + r.join(key) + "[" + std::to_string(i) + "]': expected " +
                              (std::is_integral_v<T> ? "an integer" : "a number"));
        }
        out.push_back(v.get<T>());
    }
}

// 1-based line and column of a byte offset.
std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

void validate(const ExperimentConfig& c) {
    require(c.dataset.source == "synthetic" || c.dataset.source == "recorded", "dataset.source",
            "expected \"synthetic\" or \"recorded\"");
    require(c.dataset.increment_deg > 0, "dataset.increment_deg", "must be positive");
    require(c.dataset.duration_s > 0, "dataset.duration_s", "must be positive");
    require(c.dataset.sample_rate_hz > 0, "dataset.sample_rate_hz", "must be positive");
    require(c.dataset.source_rate_hz >= c.dataset.sample_rate_hz, "dataset.source_rate_hz",
            "must be at least dataset.sample_rate_hz");
    require(std::abs(c.dataset.latitude_deg) < 90, "dataset.latitude_deg", "must lie in (-90, 90)");
    require(c.noise.white_noise_std_deg_s >= 0, "noise.white_noise_std_deg_s", "must be >= 0");
    require(c.noise.constant_bias_std_deg_s >= 0, "noise.constant_bias_std_deg_s", "must be >= 0");
    require(c.schedule.steps >= 1, "schedule.steps", "must be >= 1");
    require(c.schedule.beta_min > 0 && c.schedule.beta_min < c.schedule.beta_max &&
                c.schedule.beta_max < 1,
            "schedule", "need 0 < beta_min < beta_max < 1");
    const auto& d = c.denoiser;
    require(d.architecture.layers >= 1, "denoiser.layers", "must be >= 1");
    require(d.architecture.hidden >= 1, "denoiser.hidden", "must be >= 1");
    require(d.architecture.embed_dim >= 2 && d.architecture.embed_dim % 2 == 0,
            "denoiser.embed_dim", "must be an even number >= 2");
    require(d.batch_size >= 1, "denoiser.batch_size", "must be >= 1");
    require(d.learning_rate > 0, "denoiser.learning_rate", "must be positive");
    require(d.max_epochs >= 1, "denoiser.max_epochs", "must be >= 1");
    require(d.patience >= 1, "denoiser.patience", "must be >= 1");
    require(d.svd_threshold >= 0 && d.svd_threshold < 1, "denoiser.svd_threshold",
            "must lie in [0, 1)");
    const auto n_time = std::llround(c.dataset.duration_s * c.dataset.sample_rate_hz);
    require(d.svd_window >= 1 && n_time % d.svd_window == 0, "denoiser.svd_window",
            "must be >= 1 and divide the sequence length");
    const auto& h = c.heading;
    require(h.layers >= 1, "heading.layers", "must be >= 1");
    require(h.hidden >= 1, "heading.hidden", "must be >= 1");
    require(h.lr_min > 0 && h.lr_min <= h.lr_max, "heading", "need 0 < lr_min <= lr_max");
    require(h.epochs >= 1, "heading.epochs", "must be >= 1");
    require(h.patience >= 1, "heading.patience", "must be >= 1");
    require(h.baseline_batch_size >= 1, "heading.baseline_batch_size", "must be >= 1");
    require(h.enhanced_batch_size >= 1, "heading.enhanced_batch_size", "must be >= 1");
    require(h.enhanced_dropout >= 0 && h.enhanced_dropout < 1, "heading.enhanced_dropout",
            "must lie in [0, 1)");
    const auto& p = c.pipeline;
    require(p.t_back >= 0 && p.t_back <= c.schedule.steps, "pipeline.t_back",
            "must lie in [0, schedule.steps]");
    require(p.chunk >= 1, "pipeline.chunk", "must be >= 1");
    for (int v : p.sweep_values) {
        require(v >= 0 && v <= c.schedule.steps, "pipeline.sweep_values",
                "values must lie in [0, schedule.steps]");
    }
    for (double v : p.durations_s) {
        require(v > 0 && v <= c.dataset.duration_s, "pipeline.durations_s",
                "values must lie in (0, dataset.duration_s]");
    }
    const auto& g = c.ingest;
    require(g.source_rate_hz > 0 && g.target_rate_hz > 0, "ingest", "rates must be positive");
    require(g.train >= 1 && g.val >= 0 && g.test >= 0, "ingest", "need train >= 1, val, test >= 0");
    require(g.augment_count >= 1, "ingest.augment_count", "must be >= 1");
    require(g.augment_half_range_deg >= 0, "ingest.augment_half_range_deg", "must be >= 0");
}

ExperimentConfig from_json(const json& doc) {
    ExperimentConfig c;
    Reader root(doc, "");
    root.get("base_seed", c.base_seed);
    root.get("output_dir", c.output_dir);
    if (const json* n = root.child("dataset")) {
        Reader r(*n, "dataset");
        r.get("source", c.dataset.source);
        r.get("increment_deg", c.dataset.increment_deg);
        r.get("duration_s", c.dataset.duration_s);
        r.get("sample_rate_hz", c.dataset.sample_rate_hz);
        r.get("source_rate_hz", c.dataset.source_rate_hz);
        r.get("latitude_deg", c.dataset.latitude_deg);
        read_split(r, "split", c.dataset.split);
    }
    if (const json* n = root.child("noise")) {
        Reader r(*n, "noise");
        r.get("white_noise_std_deg_s", c.noise.white_noise_std_deg_s);
        r.get("constant_bias_std_deg_s", c.noise.constant_bias_std_deg_s);
    }
    if (const json* n = root.child("schedule")) {
        Reader r(*n, "schedule");
        r.get("steps", c.schedule.steps);
        r.get("beta_min", c.schedule.beta_min);
        r.get("beta_max", c.schedule.beta_max);
    }
    if (const json* n = root.child("denoiser")) {
        Reader r(*n, "denoiser");
        r.get("layers", c.denoiser.architecture.layers);
        r.get("hidden", c.denoiser.architecture.hidden);
        r.get("embed_dim", c.denoiser.architecture.embed_dim);
        r.get("batch_size", c.denoiser.batch_size);
        r.get("learning_rate", c.denoiser.learning_rate);
        r.get("max_epochs", c.denoiser.max_epochs);
        r.get("patience", c.denoiser.patience);
        r.get("svd_threshold", c.denoiser.svd_threshold);
        r.get("svd_window", c.denoiser.svd_window);
    }
    if (const json* n = root.child("heading")) {
        Reader r(*n, "heading");
        r.get("layers", c.heading.layers);
        r.get("hidden", c.heading.hidden);
        r.get("lr_max", c.heading.lr_max);
        r.get("lr_min", c.heading.lr_min);
        r.get("epochs", c.heading.epochs);
        r.get("patience", c.heading.patience);
        r.get("baseline_batch_size", c.heading.baseline_batch_size);
        r.get("enhanced_batch_size", c.heading.enhanced_batch_size);
        r.get("enhanced_dropout", c.heading.enhanced_dropout);
    }
    if (const json* n = root.child("pipeline")) {
        Reader r(*n, "pipeline");
        r.get("t_back", c.pipeline.t_back);
        std::string scope(to_string(c.pipeline.scope));
        r.get("scope", scope);
        try {
            c.pipeline.scope = norm_scope_from_string(scope);
        } catch (const ConfigError& e) {
            throw ConfigError("field 'pipeline.scope': " + e.message());
        }
        r.get("stochastic", c.pipeline.stochastic);
        r.get("chunk", c.pipeline.chunk);
        read_list(r, "sweep_values", c.pipeline.sweep_values);
        r.get("sweep_retrain", c.pipeline.sweep_retrain);
        read_list(r, "durations_s", c.pipeline.durations_s);
    }
    if (const json* n = root.child("ingest")) {
        Reader r(*n, "ingest");
        r.get("source_rate_hz", c.ingest.source_rate_hz);
        r.get("target_rate_hz", c.ingest.target_rate_hz);
        r.get("train", c.ingest.train);
        r.get("val", c.ingest.val);
        r.get("test", c.ingest.test);
        r.get("augment_count", c.ingest.augment_count);
        r.get("augment_half_range_deg", c.ingest.augment_half_range_deg);
    }
    validate(c);
    return c;
}

} // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // byte is one past the offending character.
        const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        std::string what = e.what();
        const auto pos = what.find("syntax error");
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                          (pos == std::string::npos ? what : what.substr(pos)));
    }
    if (doc.is_object() && doc.contains("manifest_version")) {
        if (!doc.contains("config")) {
            throw ConfigError(source + ": manifest has no embedded config");
        }
        doc = doc["config"];
    }
    try {
        return from_json(doc);
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.message());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const IoError&) {
        throw ConfigError("cannot read config " + path.string());
    }
    return parse_config(text, path.string());
}

std::string to_json(const ExperimentConfig& c) {
    json doc;
    doc["base_seed"] = c.base_seed;
    doc["output_dir"] = c.output_dir;
    doc["dataset"] = {{"source", c.dataset.source},
                      {"increment_deg", c.dataset.increment_deg},
                      {"duration_s", c.dataset.duration_s},
                      {"sample_rate_hz", c.dataset.sample_rate_hz},
                      {"source_rate_hz", c.dataset.source_rate_hz},
                      {"latitude_deg", c.dataset.latitude_deg},
                      {"split", {c.dataset.split.train, c.dataset.split.val, c.dataset.split.test}}};
    doc["noise"] = {{"white_noise_std_deg_s", c.noise.white_noise_std_deg_s},
                    {"constant_bias_std_deg_s", c.noise.constant_bias_std_deg_s}};
    doc["schedule"] = {{"steps", c.schedule.steps},
                       {"beta_min", c.schedule.beta_min},
                       {"beta_max", c.schedule.beta_max}};
    doc["denoiser"] = {{"layers", c.denoiser.architecture.layers},
                       {"hidden", c.denoiser.architecture.hidden},
                       {"embed_dim", c.denoiser.architecture.embed_dim},
                       {"batch_size", c.denoiser.batch_size},
                       {"learning_rate", c.denoiser.learning_rate},
                       {"max_epochs", c.denoiser.max_epochs},
                       {"patience", c.denoiser.patience},
                       {"svd_threshold", c.denoiser.svd_threshold},
                       {"svd_window", c.denoiser.svd_window}};
    doc["heading"] = {{"layers", c.heading.layers},
                      {"hidden", c.heading.hidden},
                      {"lr_max", c.heading.lr_max},
                      {"lr_min", c.heading.lr_min},
                      {"epochs", c.heading.epochs},
                      {"patience", c.heading.patience},
                      {"baseline_batch_size", c.heading.baseline_batch_size},
                      {"enhanced_batch_size", c.heading.enhanced_batch_size},
                      {"enhanced_dropout", c.heading.enhanced_dropout}};
    doc["pipeline"] = {{"t_back", c.pipeline.t_back},
                       {"scope", std::string(to_string(c.pipeline.scope))},
                       {"stochastic", c.pipeline.stochastic},
                       {"chunk", c.pipeline.chunk},
                       {"sweep_values", c.pipeline.sweep_values},
                       {"sweep_retrain", c.pipeline.sweep_retrain},
                       {"durations_s", c.pipeline.durations_s}};
    doc["ingest"] = {{"source_rate_hz", c.ingest.source_rate_hz},
                     {"target_rate_hz", c.ingest.target_rate_hz},
                     {"train", c.ingest.train},
                     {"val", c.ingest.val},
                     {"test", c.ingest.test},
                     {"augment_count", c.ingest.augment_count},
                     {"augment_half_range_deg", c.ingest.augment_half_range_deg}};
    return doc.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& cfg) { return io::sha256_hex(to_json(cfg)); }

synth::SyntheticConfig synthetic_config(const ExperimentConfig& cfg) {
    synth::SyntheticConfig s;
    s.increment = geo::deg2rad(cfg.dataset.increment_deg);
    s.duration_s = cfg.dataset.duration_s;
    s.sample_rate_hz = cfg.dataset.sample_rate_hz;
    s.latitude = geo::deg2rad(cfg.dataset.latitude_deg);
    s.split = cfg.dataset.split;
    return s;
}

synth::NoiseModel noise_model(const ExperimentConfig& cfg) {
    return {geo::deg2rad(cfg.noise.white_noise_std_deg_s),
            geo::deg2rad(cfg.noise.constant_bias_std_deg_s),
            derive_seed(cfg.base_seed, SeedPurpose::dataset_noise)};
}

diffusion::NoiseSchedule schedule(const ExperimentConfig& cfg) {
    return diffusion::build_schedule(cfg.schedule.steps, cfg.schedule.beta_min, cfg.schedule.beta_max);
}

diffusion::DiffusionTrainConfig denoiser_train_config(const ExperimentConfig& cfg) {
    diffusion::DiffusionTrainConfig t;
    t.batch_size = cfg.denoiser.batch_size;
    t.learning_rate = cfg.denoiser.learning_rate;
    t.max_epochs = cfg.denoiser.max_epochs;
    t.patience = cfg.denoiser.patience;
    t.svd_threshold = cfg.denoiser.svd_threshold;
    t.svd_window = cfg.denoiser.svd_window;
    t.base_seed = derive_seed(cfg.base_seed, SeedPurpose::denoiser_training);
    return t;
}

heading::HeadingTrainConfig heading_train_config(const ExperimentConfig& cfg, HeadingMethod m) {
    auto t = m == HeadingMethod::baseline ? heading::HeadingTrainConfig::baseline()
                                          : heading::HeadingTrainConfig::enhanced();
    t.lr_max = cfg.heading.lr_max;
    t.lr_min = cfg.heading.lr_min;
    t.epochs = cfg.heading.epochs;
    t.patience = cfg.heading.patience;
    t.batch_size = m == HeadingMethod::baseline ? cfg.heading.baseline_batch_size
                                                : cfg.heading.enhanced_batch_size;
    // Both methods start from the same weights for a paired comparison.
    t.base_seed = derive_seed(cfg.base_seed, SeedPurpose::heading_training);
    return t;
}

heading::HeadingArchitecture heading_architecture(const ExperimentConfig& cfg, HeadingMethod m) {
    return {cfg.heading.layers, cfg.heading.hidden,
            m == HeadingMethod::baseline ? 0.0 : cfg.heading.enhanced_dropout};
}

pipeline::PipelineConfig pipeline_config(const ExperimentConfig& cfg, int jobs) {
    pipeline::PipelineConfig p;
    p.t_back = cfg.pipeline.t_back;
    p.scope = cfg.pipeline.scope;
    p.stochastic = cfg.pipeline.stochastic;
    p.seed = derive_seed(cfg.base_seed, SeedPurpose::diffusion_eps);
    p.chunk = cfg.pipeline.chunk;
    p.jobs = jobs;
    return p;
}

} // namespace gyrodiff::config
