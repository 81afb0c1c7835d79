#include "gyrodiff/models.hpp"

#include "gyrodiff/errors.hpp"

#include <json.hpp>

namespace gyrodiff::models {

using nlohmann::json;

namespace {

json row_json(const Eigen::RowVector3d& v) { return {v(0), v(1), v(2)}; }

Eigen::RowVector3d row_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

void check_kind(const io::Checkpoint& c, const std::string& kind, const std::filesystem::path& path) {
    if (c.kind != kind) {
        throw FormatError(path.string() + " holds a " + c.kind + " checkpoint, expected " + kind);
    }
}

} // namespace

void save_denoiser(const std::filesystem::path& path, const diffusion::DenoiserNetwork& net,
                   const diffusion::NoiseSchedule& sched, const std::string& extra_json) {
    json header = json::parse(extra_json);
    const auto& a = net.architecture();
    header["architecture"] = {{"layers", a.layers}, {"hidden", a.hidden}, {"embed_dim", a.embed_dim}};
    header["schedule"] = {{"steps", sched.steps}, {"beta_min", sched.beta_min}, {"beta_max", sched.beta_max}};
    io::save_checkpoint(path, {"denoiser", header.dump(), net.parameters()});
}

StoredDenoiser load_denoiser(const std::filesystem::path& path) {
    const auto ckpt = io::load_checkpoint(path);
    check_kind(ckpt, "denoiser", path);
    try {
        const json h = json::parse(ckpt.header_json);
        const auto& a = h.at("architecture");
        diffusion::DenoiserArchitecture arch{a.at("layers").get<int>(), a.at("hidden").get<int>(),
                                             a.at("embed_dim").get<int>()};
        const auto& s = h.at("schedule");
        StoredDenoiser out{diffusion::DenoiserNetwork(arch),
                           diffusion::build_schedule(s.at("steps").get<int>(),
                                                     s.at("beta_min").get<double>(),
                                                     s.at("beta_max").get<double>()),
                           io::sha256_file(path)};
        if (out.network.parameters().size() != ckpt.parameters.size()) {
            throw FormatError(path.string() + ": parameter count does not match the architecture");
        }
        out.network.parameters() = ckpt.parameters;
        return out;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": bad denoiser header: " + e.what());
    }
}

void save_heading(const std::filesystem::path& path, const heading::HeadingNetwork& net,
                  const std::string& method, const Preprocessing& prep, const std::string& extra_json) {
    json header = json::parse(extra_json);
    const auto& a = net.architecture();
    header["method"] = method;
    header["architecture"] = {{"layers", a.layers}, {"hidden", a.hidden}, {"dropout", a.dropout}};
    header["input_scaler"] = {{"mean", row_json(net.input_scaler().mean)},
                              {"scale", row_json(net.input_scaler().scale)}};
    header["preprocessing"] = {{"denoised", prep.denoised},
                               {"denoiser_sha256", prep.denoiser_sha256},
                               {"t_back", prep.pipeline.t_back},
                               {"scope", std::string(to_string(prep.pipeline.scope))},
                               {"stochastic", prep.pipeline.stochastic},
                               {"seed", prep.pipeline.seed},
                               {"chunk", prep.pipeline.chunk}};
    io::save_checkpoint(path, {"heading", header.dump(), net.parameters()});
}

StoredHeading load_heading(const std::filesystem::path& path) {
    const auto ckpt = io::load_checkpoint(path);
    check_kind(ckpt, "heading", path);
    try {
        const json h = json::parse(ckpt.header_json);
        const auto& a = h.at("architecture");
        heading::HeadingArchitecture arch{a.at("layers").get<int>(), a.at("hidden").get<int>(),
                                          a.at("dropout").get<double>()};
        StoredHeading out{heading::HeadingNetwork(arch), h.at("method").get<std::string>(), {}};
        if (out.network.parameters().size() != ckpt.parameters.size()) {
            throw FormatError(path.string() + ": parameter count does not match the architecture");
        }
        out.network.parameters() = ckpt.parameters;
        out.network.input_scaler().mean = row_from(h.at("input_scaler").at("mean"));
        out.network.input_scaler().scale = row_from(h.at("input_scaler").at("scale"));
        const auto& p = h.at("preprocessing");
        out.preprocessing.denoised = p.at("denoised").get<bool>();
        out.preprocessing.denoiser_sha256 = p.at("denoiser_sha256").get<std::string>();
        out.preprocessing.pipeline.t_back = p.at("t_back").get<int>();
        out.preprocessing.pipeline.scope = norm_scope_from_string(p.at("scope").get<std::string>());
        out.preprocessing.pipeline.stochastic = p.at("stochastic").get<bool>();
        out.preprocessing.pipeline.seed = p.at("seed").get<std::uint64_t>();
        out.preprocessing.pipeline.chunk = p.at("chunk").get<int>();
        return out;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": bad heading header: " + e.what());
    }
}

} // namespace gyrodiff::models
