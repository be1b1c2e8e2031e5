#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kbqa/encoder.hpp"
#include "kbqa/kb_store.hpp"
#include "kbqa/model.hpp"
#include "kbqa/qa_data.hpp"
#include "kbqa/transe.hpp"

namespace kbqa {

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t batch_size = 50;
    std::size_t dim = 128;
    double margin = 0.6;
    std::size_t negatives = 500;
    std::size_t epochs = 30;
    std::uint64_t seed = 1;
    Mode mode = Mode::kBiLstmAttGki;
    int max_hops = 2;
    std::size_t context_cap = 64;
    bool normalize_embeddings = true;      // unit rows of both tables after each QA epoch
    std::optional<double> inference_margin;  // defaults to `margin`
    TransEConfig transe;
    std::size_t workers = 1;  // evaluation threads; not part of the saved config

    static TrainConfig paper();
    static TrainConfig desk();
    static TrainConfig preset(std::string_view name);

    double answer_margin() const { return inference_margin.value_or(margin); }
    void validate() const;

    nlohmann::json to_json() const;
    /// Overlays the keys of `j` onto `base`; unknown keys are rejected.
    static TrainConfig from_json(const nlohmann::json& j, TrainConfig base);
};

/// [margin + s_neg - s_pos]_+
double pair_loss(double s_pos, double s_neg, double margin);

/// Weighted pairwise loss of one (q, a, a') triple on a tape.
template <typename T>
Var triple_loss(Tape<T>& tape, const Model<T>& model, const EncodedQuestion& question, const CandidateAnswer& positive,
                const CandidateAnswer& negative, double margin, double weight = 1.0);

struct QaTriple {
    std::size_t question = 0;
    const CandidateAnswer* positive = nullptr;
    const CandidateAnswer* negative = nullptr;
    double weight = 1.0;
};

std::vector<QaTriple> expand_triples(std::span<const Question> questions, std::span<const TrainingExample> examples);

/// Weighted objective sum_q 1/|P_q| sum_a sum_a' L without updating.
template <typename T>
double qa_objective(const Model<T>& model, std::span<const Question> questions, std::span<const QaTriple> triples,
                    double margin);

/// One SGD pass over the shuffled triples (mini-batch gradients are sums of
/// triple gradients), then row normalization of both embedding tables when
/// configured. Returns the objective accumulated during the pass.
double qa_epoch(Model<float>& model, std::span<const Question> questions, std::vector<QaTriple> triples,
                const TrainConfig& config, Rng& rng);

struct Dataset {
    KbStore store;
    Vocabulary vocab;
    QaSplit train;
    QaSplit valid;

    /// Vocabulary from the training questions; tokens assigned on both splits.
    static Dataset make(KbStore store, QaSplit train, QaSplit valid);
};

struct EpochRecord {
    std::size_t epoch = 0;
    double objective = 0.0;
    std::size_t triples = 0;
    double valid_f1 = 0.0;
    std::size_t transe_epochs = 0;
    double transe_loss = 0.0;
    double seconds = 0.0;  // wall time, excluded from the metrics log
};

/// Deterministic per-epoch log line; TransE fields are omitted when no
/// TransE epoch ran.
std::string format_metrics_line(const EpochRecord& record);

struct TrainHooks {
    std::function<void(const EpochRecord&, const Model<float>&)> on_epoch;
    std::function<void(const std::string&)> on_warning;
};

struct TrainResult {
    Model<float> best;
    std::size_t best_epoch = 0;
    double best_valid_f1 = 0.0;
    std::vector<EpochRecord> history;
    std::size_t transe_epochs = 0;
};

/// QA epochs alternating with TransE epochs on the shared KB table when the
/// mode includes global KB information. The best model is chosen by
/// validation F1 (earliest wins ties; last epoch when there is no validation
/// split).
TrainResult multitask_train(const Dataset& data, const TrainConfig& config, const TrainHooks& hooks = {});

ModelShape model_shape(const TrainConfig& config, const Dataset& data);

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ModelCheckpoint {
    std::uint32_t epoch = 0;
    TrainConfig config;
    std::vector<std::string> words;
    std::vector<std::string> kb_names;
    Model<float> model;
};

ModelCheckpoint make_checkpoint(const Model<float>& model, const TrainConfig& config, const Dataset& data,
                                std::uint32_t epoch);

void write_checkpoint(std::ostream& out, const ModelCheckpoint& checkpoint);
ModelCheckpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& checkpoint);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Throws CheckpointError when the store's vocabulary differs from the one
/// the checkpoint was trained against.
void check_kb_compatible(const ModelCheckpoint& checkpoint, const KbStore& store);

}  // namespace kbqa
