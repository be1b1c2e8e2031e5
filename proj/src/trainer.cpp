#include "kbqa/trainer.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>

#include "kbqa/attention.hpp"
#include "kbqa/inference.hpp"

namespace kbqa {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

TrainConfig TrainConfig::paper() { return TrainConfig{}; }

TrainConfig TrainConfig::desk() {
    TrainConfig c;
    c.dim = 16;
    c.negatives = 20;
    c.batch_size = 16;
    return c;
}

TrainConfig TrainConfig::preset(std::string_view name) {
    if (name == "paper") return paper();
    if (name == "desk") return desk();
    throw std::invalid_argument("unknown preset '" + std::string(name) + "' (expected paper or desk)");
}

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("invalid config: " + what); };
    if (!(margin > 0)) fail("margin must be positive");
    if (dim == 0 || dim % 2 != 0) fail("dim must be positive and even");
    if (!(learning_rate > 0)) fail("learning_rate must be positive");
    if (batch_size == 0) fail("batch_size must be positive");
    if (negatives == 0) fail("negatives must be positive");
    if (epochs == 0) fail("epochs must be positive");
    if (max_hops < 1 || max_hops > 2) fail("max_hops must be 1 or 2");
    if (context_cap == 0) fail("context_cap must be positive");
    if (inference_margin && !(*inference_margin > 0)) fail("inference_margin must be positive");
    if (!(transe.margin > 0)) fail("transe.margin must be positive");
    if (transe.batch_size == 0) fail("transe.batch_size must be positive");
    if (!(transe.learning_rate > 0)) fail("transe.learning_rate must be positive");
    if (workers == 0) fail("workers must be positive");
}

json TrainConfig::to_json() const {
    json j;
    j["learning_rate"] = learning_rate;
    j["batch_size"] = batch_size;
    j["dim"] = dim;
    j["margin"] = margin;
    j["negatives"] = negatives;
    j["epochs"] = epochs;
    j["seed"] = seed;
    j["mode"] = std::string(mode_name(mode));
    j["max_hops"] = max_hops;
    j["context_cap"] = context_cap;
    j["normalize_embeddings"] = normalize_embeddings;
    j["inference_margin"] = inference_margin ? json(*inference_margin) : json(nullptr);
    j["transe"] = {{"margin", transe.margin},
                   {"epochs_per_qa_epoch", transe.epochs_per_qa_epoch},
                   {"batch_size", transe.batch_size},
                   {"learning_rate", transe.learning_rate},
                   {"normalize_entities", transe.normalize_entities}};
    return j;
}

namespace {

template <typename V>
void take(const json& j, const char* key, V& out, std::set<std::string>& seen) {
    if (!j.contains(key)) return;
    seen.insert(key);
    try {
        out = j.at(key).get<V>();
    } catch (const json::exception&) {
        throw std::invalid_argument(std::string("invalid config: bad value for '") + key + "'");
    }
}

void reject_unknown(const json& j, const std::set<std::string>& seen, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!seen.contains(key)) throw std::invalid_argument("invalid config: unknown key '" + where + key + "'");
    }
}

}  // namespace

TrainConfig TrainConfig::from_json(const json& j, TrainConfig c) {
    if (!j.is_object()) throw std::invalid_argument("invalid config: expected a JSON object");
    std::set<std::string> seen;
    take(j, "learning_rate", c.learning_rate, seen);
    take(j, "batch_size", c.batch_size, seen);
    take(j, "dim", c.dim, seen);
    take(j, "margin", c.margin, seen);
    take(j, "negatives", c.negatives, seen);
    take(j, "epochs", c.epochs, seen);
    take(j, "seed", c.seed, seen);
    take(j, "max_hops", c.max_hops, seen);
    take(j, "context_cap", c.context_cap, seen);
    take(j, "normalize_embeddings", c.normalize_embeddings, seen);
    if (j.contains("mode")) {
        seen.insert("mode");
        const auto m = j.at("mode").is_string() ? parse_mode(j.at("mode").get<std::string>()) : std::nullopt;
        if (!m) throw std::invalid_argument("invalid config: unknown mode " + j.at("mode").dump());
        c.mode = *m;
    }
    if (j.contains("inference_margin")) {
        seen.insert("inference_margin");
        const json& v = j.at("inference_margin");
        if (v.is_null()) c.inference_margin.reset();
        else if (v.is_number()) c.inference_margin = v.get<double>();
        else throw std::invalid_argument("invalid config: bad value for 'inference_margin'");
    }
    if (j.contains("transe")) {
        seen.insert("transe");
        const json& t = j.at("transe");
        if (!t.is_object()) throw std::invalid_argument("invalid config: 'transe' must be an object");
        std::set<std::string> tseen;
        take(t, "margin", c.transe.margin, tseen);
        take(t, "epochs_per_qa_epoch", c.transe.epochs_per_qa_epoch, tseen);
        take(t, "batch_size", c.transe.batch_size, tseen);
        take(t, "learning_rate", c.transe.learning_rate, tseen);
        take(t, "normalize_entities", c.transe.normalize_entities, tseen);
        reject_unknown(t, tseen, "transe.");
    }
    reject_unknown(j, seen, "");
    return c;
}

// ---------------------------------------------------------------------------
// Losses

double pair_loss(double s_pos, double s_neg, double margin) {
    if (!(margin > 0)) throw std::invalid_argument("pair_loss: margin must be positive");
    return std::max(0.0, margin + s_neg - s_pos);
}

template <typename T>
Var triple_loss(Tape<T>& tape, const Model<T>& model, const EncodedQuestion& question, const CandidateAnswer& positive,
                const CandidateAnswer& negative, double margin, double weight) {
    const ScoreMode mode = score_mode(model.mode());
    const Var s_pos = score(tape, model, question, aspect_embeddings(tape, model, positive), mode).score;
    const Var s_neg = score(tape, model, question, aspect_embeddings(tape, model, negative), mode).score;
    const Var hinge = tape.relu(tape.add(tape.constant(static_cast<T>(margin)), tape.sub(s_neg, s_pos)));
    return weight == 1.0 ? hinge : tape.scale(hinge, static_cast<T>(weight));
}

std::vector<QaTriple> expand_triples(std::span<const Question> questions, std::span<const TrainingExample> examples) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < questions.size(); ++i) index.emplace(questions[i].id, i);
    std::vector<QaTriple> out;
    for (const TrainingExample& ex : examples) {
        auto it = index.find(ex.question_id);
        if (it == index.end()) throw std::invalid_argument("expand_triples: unknown question '" + ex.question_id + "'");
        for (const CandidateAnswer& neg : ex.negatives) out.push_back({it->second, &ex.positive, &neg, ex.weight});
    }
    return out;
}

namespace {

// Scores on one tape, caching each candidate's score by address.
template <typename T>
class QuestionGraph {
public:
    QuestionGraph(Tape<T>& tape, const Model<T>& model, const Question& q)
        : tape_(tape), model_(model), enc_(encode_question(tape, model, q.tokens)), mode_(score_mode(model.mode())) {}

    Var score_of(const CandidateAnswer* c) {
        auto it = cache_.find(c);
        if (it != cache_.end()) return it->second;
        const Var s = score(tape_, model_, enc_, aspect_embeddings(tape_, model_, *c), mode_).score;
        cache_.emplace(c, s);
        return s;
    }

    Var loss(const QaTriple& t, double margin) {
        const Var gap = tape_.sub(score_of(t.negative), score_of(t.positive));
        const Var hinge = tape_.relu(tape_.add(tape_.constant(static_cast<T>(margin)), gap));
        return t.weight == 1.0 ? hinge : tape_.scale(hinge, static_cast<T>(t.weight));
    }

private:
    Tape<T>& tape_;
    const Model<T>& model_;
    EncodedQuestion enc_;
    ScoreMode mode_;
    std::map<const CandidateAnswer*, Var> cache_;
};

// Triples of one mini-batch grouped by question in first-appearance order.
std::vector<std::pair<std::size_t, std::vector<const QaTriple*>>> group_by_question(std::span<const QaTriple> batch) {
    std::vector<std::pair<std::size_t, std::vector<const QaTriple*>>> groups;
    std::unordered_map<std::size_t, std::size_t> slot;
    for (const QaTriple& t : batch) {
        auto [it, inserted] = slot.emplace(t.question, groups.size());
        if (inserted) groups.push_back({t.question, {}});
        groups[it->second].second.push_back(&t);
    }
    return groups;
}

}  // namespace

template <typename T>
double qa_objective(const Model<T>& model, std::span<const Question> questions, std::span<const QaTriple> triples,
                    double margin) {
    double total = 0.0;
    for (const auto& [qi, group] : group_by_question(triples)) {
        Tape<T> tape(&model.params());
        QuestionGraph<T> graph(tape, model, questions[qi]);
        for (const QaTriple* t : group) total += static_cast<double>(tape.value(graph.loss(*t, margin)).item());
    }
    return total;
}

double qa_epoch(Model<float>& model, std::span<const Question> questions, std::vector<QaTriple> triples,
                const TrainConfig& config, Rng& rng) {
    shuffle(std::span<QaTriple>(triples), rng);
    double objective = 0.0;
    GradientSet<float> grads(model.params());
    const float lr = static_cast<float>(config.learning_rate);
    for (std::size_t start = 0; start < triples.size(); start += config.batch_size) {
        const std::size_t end = std::min(triples.size(), start + config.batch_size);
        grads.clear();
        bool any = false;
        for (const auto& [qi, group] : group_by_question(std::span<const QaTriple>(triples).subspan(start, end - start))) {
            Tape<float> tape(&model.params());
            QuestionGraph<float> graph(tape, model, questions[qi]);
            std::vector<Var> active;
            for (const QaTriple* t : group) {
                const Var l = graph.loss(*t, config.margin);
                const float v = tape.value(l).item();
                objective += v;
                if (v > 0.0f) active.push_back(l);
            }
            if (active.empty()) continue;
            const Var sum = active.size() == 1 ? active.front() : tape.sum(tape.concat(active));
            tape.backward_into(sum, grads);
            any = true;
        }
        if (any) sgd_step(model.params(), grads, lr);
    }
    if (config.normalize_embeddings) {
        l2_normalize_rows_inplace(model.params()[model.word_embeddings()]);
        l2_normalize_rows_inplace(model.params()[model.kb_embeddings()]);
    }
    return objective;
}

// ---------------------------------------------------------------------------
// Training loop

Dataset Dataset::make(KbStore store, QaSplit train, QaSplit valid) {
    Dataset d{std::move(store), Vocabulary::build(question_texts(train.questions)), std::move(train), std::move(valid)};
    assign_tokens(d.train.questions, d.vocab);
    assign_tokens(d.valid.questions, d.vocab);
    return d;
}

ModelShape model_shape(const TrainConfig& config, const Dataset& data) {
    return ModelShape{config.dim, data.vocab.size(), data.store.vocab_size(), config.mode};
}

std::string format_metrics_line(const EpochRecord& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "epoch=%zu objective=%.6f triples=%zu valid_f1=%.6f", r.epoch, r.objective,
                  r.triples, r.valid_f1);
    std::string line = buf;
    if (r.transe_epochs > 0) {
        std::snprintf(buf, sizeof(buf), " transe_epochs=%zu transe_loss=%.6f", r.transe_epochs, r.transe_loss);
        line += buf;
    }
    return line;
}

namespace {

constexpr std::uint64_t kInitTag = 1;
constexpr std::uint64_t kNegativeTag = 2;
constexpr std::uint64_t kShuffleTag = 3;
constexpr std::uint64_t kTransETag = 4;

}  // namespace

TrainResult multitask_train(const Dataset& data, const TrainConfig& config, const TrainHooks& hooks) {
    config.validate();
    if (data.train.questions.empty()) throw std::invalid_argument("multitask_train: no usable training questions");
    auto warn = [&](const std::string& msg) {
        if (hooks.on_warning) hooks.on_warning(msg);
    };

    Model<float> model = Model<float>::init(model_shape(config, data), derive_seed(config.seed, kInitTag, 0));
    const auto& questions = data.train.questions;

    std::vector<CandidateSet> cands;
    cands.reserve(questions.size());
    for (const Question& q : questions) {
        CandidateSet c = data.store.candidate_set(q.topic, config.max_hops);
        c.question_id = q.id;
        cands.push_back(std::move(c));
    }

    std::optional<TransETask> task;
    if (uses_gki(config.mode) && config.transe.epochs_per_qa_epoch > 0) {
        std::vector<ResourceId> topics;
        for (const Question& q : questions) topics.push_back(q.topic);
        for (const Question& q : data.valid.questions) topics.push_back(q.topic);
        task = TransETask::build(filter_facts(data.store, topics));
        if (task->empty()) {
            warn("no KB facts within two hops of the question topics; TransE phase skipped");
            task.reset();
        }
    }
    Rng transe_rng(derive_seed(config.seed, kTransETag, 0));

    TrainResult result{model, 0, -1.0, {}, 0};
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        EpochRecord rec;
        rec.epoch = epoch;

        ExampleStats stats;
        std::vector<TrainingExample> examples;
        for (std::size_t i = 0; i < questions.size(); ++i) {
            auto ex = make_training_examples(questions[i], cands[i], config.negatives,
                                             derive_seed(config.seed, kNegativeTag, epoch * 1000003ULL + i), cands, &stats);
            std::move(ex.begin(), ex.end(), std::back_inserter(examples));
        }
        if (epoch == 1 && stats.short_examples > 0) {
            warn(std::to_string(stats.short_examples) + " training examples have fewer than " +
                 std::to_string(config.negatives) + " negatives");
        }
        if (epoch == 1 && stats.questions_without_positive > 0) {
            warn(std::to_string(stats.questions_without_positive) +
                 " training questions have no gold answer among their candidates");
        }
        auto triples = expand_triples(questions, examples);
        rec.triples = triples.size();
        Rng shuffle_rng(derive_seed(config.seed, kShuffleTag, epoch));
        rec.objective = qa_epoch(model, questions, std::move(triples), config, shuffle_rng);

        if (task) {
            double loss = 0.0;
            for (std::size_t t = 0; t < config.transe.epochs_per_qa_epoch; ++t) {
                loss = transe_epoch(*task, model, config.transe, transe_rng).mean_loss;
                ++rec.transe_epochs;
            }
            rec.transe_loss = loss;
            result.transe_epochs += rec.transe_epochs;
        }

        const bool has_valid = data.valid.total() > 0;
        if (has_valid) {
            rec.valid_f1 = evaluate(data.valid, data.store, model, config.answer_margin(), config.max_hops, config.workers).mean_f1;
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.history.push_back(rec);
        if (!has_valid || rec.valid_f1 > result.best_valid_f1) {
            result.best = model;
            result.best_epoch = epoch;
            result.best_valid_f1 = rec.valid_f1;
        }
        if (hooks.on_epoch) hooks.on_epoch(rec, model);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'K', 'B', 'Q', 'A', 'C', 'K', 'P', 'T'};

void put_u32(std::ostream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

void put_string(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_strings(std::ostream& out, const std::vector<std::string>& items) {
    put_u32(out, static_cast<std::uint32_t>(items.size()));
    for (const auto& s : items) put_string(out, s);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw CheckpointError("checkpoint truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::string get_string(std::istream& in) {
    const std::uint32_t n = get_u32(in);
    if (n > (1u << 30)) throw CheckpointError("checkpoint string length out of range");
    std::string s(n, '\0');
    if (n && !in.read(s.data(), n)) throw CheckpointError("checkpoint truncated");
    return s;
}

std::vector<std::string> get_strings(std::istream& in) {
    const std::uint32_t n = get_u32(in);
    std::vector<std::string> out;
    out.reserve(std::min<std::uint32_t>(n, 1u << 20));
    for (std::uint32_t i = 0; i < n; ++i) out.push_back(get_string(in));
    return out;
}

}  // namespace

ModelCheckpoint make_checkpoint(const Model<float>& model, const TrainConfig& config, const Dataset& data,
                                std::uint32_t epoch) {
    std::vector<std::string> kb_names;
    kb_names.reserve(data.store.vocab_size());
    for (std::size_t i = 0; i < data.store.vocab_size(); ++i) {
        kb_names.push_back(data.store.name(ResourceId{static_cast<std::uint32_t>(i)}));
    }
    return ModelCheckpoint{epoch, config, data.vocab.words(), std::move(kb_names), model};
}

void write_checkpoint(std::ostream& out, const ModelCheckpoint& ck) {
    out.write(kMagic, sizeof(kMagic));
    put_u32(out, kCheckpointVersion);
    put_u32(out, ck.epoch);
    put_string(out, ck.config.to_json().dump());
    put_strings(out, ck.words);
    put_strings(out, ck.kb_names);
    const auto& params = ck.model.params();
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const ParamId id{i};
        const Tensor<float>& t = params[id];
        put_string(out, params.name(id));
        put_u32(out, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t dim : t.shape()) put_u32(out, static_cast<std::uint32_t>(dim));
        for (float v : t.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    if (!out) throw CheckpointError("failed to write checkpoint");
}

ModelCheckpoint read_checkpoint(std::istream& in) {
    char magic[sizeof(kMagic)];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw CheckpointError("not a checkpoint file (bad magic header)");
    }
    const std::uint32_t version = get_u32(in);
    if (version != kCheckpointVersion) {
        throw CheckpointError("checkpoint format version " + std::to_string(version) + " is not supported (this build reads version " +
                              std::to_string(kCheckpointVersion) + ")");
    }
    const std::uint32_t epoch = get_u32(in);
    TrainConfig config;
    try {
        config = TrainConfig::from_json(json::parse(get_string(in)), TrainConfig{});
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("checkpoint config is unreadable: ") + e.what());
    }
    auto words = get_strings(in);
    auto kb_names = get_strings(in);
    const std::uint32_t count = get_u32(in);
    ParamStore<float> params;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = get_string(in);
        const std::uint32_t rank = get_u32(in);
        if (rank == 0 || rank > 4) throw CheckpointError("tensor '" + name + "' has unsupported rank");
        Shape shape;
        for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(get_u32(in));
        Tensor<float> t(shape);
        for (float& v : t.values()) v = std::bit_cast<float>(get_u32(in));
        params.add(std::move(name), std::move(t));
    }
    const ModelShape shape{config.dim, words.size(), kb_names.size(), config.mode};
    try {
        Model<float> model = Model<float>::from_params(shape, std::move(params));
        return ModelCheckpoint{epoch, config, std::move(words), std::move(kb_names), std::move(model)};
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("checkpoint tensors do not match its config: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& checkpoint) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open '" + path.string() + "' for writing");
    write_checkpoint(out, checkpoint);
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
    return read_checkpoint(in);
}

void check_kb_compatible(const ModelCheckpoint& ck, const KbStore& store) {
    bool same = ck.kb_names.size() == store.vocab_size();
    for (std::size_t i = 0; same && i < ck.kb_names.size(); ++i) {
        same = ck.kb_names[i] == store.name(ResourceId{static_cast<std::uint32_t>(i)});
    }
    if (!same) throw CheckpointError("the KB does not match the one this checkpoint was trained on");
}

template Var triple_loss(Tape<float>&, const Model<float>&, const EncodedQuestion&, const CandidateAnswer&,
                         const CandidateAnswer&, double, double);
template Var triple_loss(Tape<double>&, const Model<double>&, const EncodedQuestion&, const CandidateAnswer&,
                         const CandidateAnswer&, double, double);
template double qa_objective(const Model<float>&, std::span<const Question>, std::span<const QaTriple>, double);
template double qa_objective(const Model<double>&, std::span<const Question>, std::span<const QaTriple>, double);

}  // namespace kbqa
