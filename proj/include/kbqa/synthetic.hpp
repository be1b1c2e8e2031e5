#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "kbqa/qa_data.hpp"

namespace kbqa {

struct SynthConfig {
    std::size_t entities = 50;   // ordinary entities, type classes not included
    std::size_t relations = 6;   // the type relation not included
    std::size_t types = 4;
    std::size_t facts_per_entity = 3;
    std::size_t templates_per_relation = 4;
    double train_fraction = 0.6;
    double valid_fraction = 0.15;
    double test_fraction = 0.25;
    double oov_fraction = 0.0;  // minimum share of test questions with an answer never seen in train
    std::uint64_t seed = 7;

    /// Throws std::invalid_argument naming the first violated constraint.
    void validate() const;

    nlohmann::json to_json() const;
    static SynthConfig from_json(const nlohmann::json& j, SynthConfig base);
};

struct SynthTypeInfo {
    std::string name;
    std::string wh_word;
};

struct SynthData {
    std::vector<std::array<std::string, 3>> facts;  // kb-store triple order
    std::vector<QaRecord> train;
    std::vector<QaRecord> valid;
    std::vector<QaRecord> test;
    std::vector<SynthTypeInfo> types;
    double oov_fraction = 0.0;  // measured on the emitted test split
};

/// Type classes and their wh-words, in generation order.
const std::vector<SynthTypeInfo>& synth_type_bank();

SynthData generate(const SynthConfig& config);

/// The generated facts as a store.
KbStore synth_store(const SynthData& data, KbOptions options = {});

/// Share of test questions with at least one gold answer absent from every
/// train gold set.
double measure_oov_fraction(const std::vector<QaRecord>& train, const std::vector<QaRecord>& test);

struct SynthFiles {
    std::filesystem::path kb;
    std::filesystem::path train;
    std::filesystem::path valid;
    std::filesystem::path test;

    static SynthFiles in(const std::filesystem::path& dir);
    std::vector<std::filesystem::path> all() const { return {kb, train, valid, test}; }
};

/// Refuses to replace existing files unless `overwrite` is set.
void write_synth(const SynthData& data, const SynthFiles& files, bool overwrite);

/// Lowercase hex SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);

}  // namespace kbqa
