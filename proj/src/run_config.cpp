#include "kbqa/run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace kbqa {

using nlohmann::json;

SynthFiles RunPaths::data_files() const {
    SynthFiles f = SynthFiles::in(data_dir);
    if (kb) f.kb = *kb;
    if (train) f.train = *train;
    if (valid) f.valid = *valid;
    if (test) f.test = *test;
    return f;
}

RunConfig RunConfig::from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("invalid config: expected a JSON object");
    RunConfig c;
    if (j.contains("preset")) {
        if (!j.at("preset").is_string()) throw std::invalid_argument("invalid config: 'preset' must be a string");
        c.preset = j.at("preset").get<std::string>();
        c.train = TrainConfig::preset(c.preset);
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "preset") continue;
        if (key == "train") {
            c.train = TrainConfig::from_json(value, c.train);
        } else if (key == "transe") {
            c.train = TrainConfig::from_json(json{{"transe", value}}, c.train);
        } else if (key == "synth") {
            c.synth = SynthConfig::from_json(value, c.synth);
        } else if (key == "workers") {
            if (!value.is_number_unsigned() || value.get<std::size_t>() == 0) {
                throw std::invalid_argument("invalid config: 'workers' must be a positive integer");
            }
            c.workers = value.get<std::size_t>();
        } else if (key == "paths") {
            if (!value.is_object()) throw std::invalid_argument("invalid config: 'paths' must be an object");
            for (const auto& [pk, pv] : value.items()) {
                if (!pv.is_string()) throw std::invalid_argument("invalid config: paths." + pk + " must be a string");
                const std::filesystem::path p = pv.get<std::string>();
                if (pk == "data_dir") c.paths.data_dir = p;
                else if (pk == "kb") c.paths.kb = p;
                else if (pk == "train") c.paths.train = p;
                else if (pk == "valid") c.paths.valid = p;
                else if (pk == "test") c.paths.test = p;
                else if (pk == "out_dir") c.paths.out_dir = p;
                else throw std::invalid_argument("invalid config: unknown key 'paths." + pk + "'");
            }
        } else {
            throw std::invalid_argument("invalid config: unknown key '" + key + "'");
        }
    }
    return c;
}

namespace {

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
}

}  // namespace

json RunConfig::resolve_json(const std::optional<std::filesystem::path>& explicit_path) {
    if (explicit_path) return load_json(*explicit_path);
    if (const char* env = std::getenv(kConfigEnvVar); env && *env) return load_json(env);
    return json::object();
}

json RunConfig::to_json() const {
    json paths_json{{"data_dir", paths.data_dir.string()}, {"out_dir", paths.out_dir.string()}};
    if (paths.kb) paths_json["kb"] = paths.kb->string();
    if (paths.train) paths_json["train"] = paths.train->string();
    if (paths.valid) paths_json["valid"] = paths.valid->string();
    if (paths.test) paths_json["test"] = paths.test->string();
    return json{{"preset", preset}, {"train", train.to_json()}, {"synth", synth.to_json()}, {"paths", paths_json},
                {"workers", workers}};
}

}  // namespace kbqa
