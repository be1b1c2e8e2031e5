#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "kbqa/synthetic.hpp"
#include "kbqa/trainer.hpp"

namespace kbqa {

inline constexpr char kConfigEnvVar[] = "KBQA_CONFIG";

struct RunPaths {
    std::filesystem::path data_dir = "data";  // gen output; default location of the four data files
    std::optional<std::filesystem::path> kb;
    std::optional<std::filesystem::path> train;
    std::optional<std::filesystem::path> valid;
    std::optional<std::filesystem::path> test;
    std::filesystem::path out_dir = "run";  // checkpoints and metrics log

    SynthFiles data_files() const;
};

// Everything a command may read, merged from preset, config file and flags
// (in that order of precedence, flags last).
struct RunConfig {
    std::string preset = "desk";
    TrainConfig train = TrainConfig::desk();
    SynthConfig synth;
    RunPaths paths;
    std::size_t workers = 1;

    /// Keys: preset, train, transe (alias for train.transe), synth, paths,
    /// workers. Unknown keys are rejected.
    static RunConfig from_json(const nlohmann::json& j);

    /// Raw config document: explicit path if given, else $KBQA_CONFIG if set,
    /// else an empty object.
    static nlohmann::json resolve_json(const std::optional<std::filesystem::path>& explicit_path);

    nlohmann::json to_json() const;
};

}  // namespace kbqa
