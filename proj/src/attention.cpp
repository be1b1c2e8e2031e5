#include "kbqa/attention.hpp"

#include <atomic>
#include <stdexcept>

namespace kbqa {

namespace {
std::atomic<std::uint64_t> attention_calls{0};
}

std::uint64_t attention_invocations() { return attention_calls.load(); }

std::string_view aspect_name(Aspect aspect) {
    switch (aspect) {
        case kEntityAspect: return "entity";
        case kRelationAspect: return "relation";
        case kTypeAspect: return "type";
        case kContextAspect: return "context";
    }
    return "unknown";
}

template <typename T>
AspectVars aspect_embeddings(Tape<T>& tape, const Model<T>& model, const CandidateAnswer& candidate) {
    const Var table = tape.param(model.kb_embeddings());
    const std::size_t vocab = model.shape().kb_vocab;
    auto lookup = [&](ResourceId id) {
        if (id.value >= vocab) {
            throw std::out_of_range("resource id " + std::to_string(id.value) + " outside KB vocabulary of size " +
                                    std::to_string(vocab));
        }
        return tape.gather(table, id.value);
    };
    auto average = [&](const std::vector<ResourceId>& ids, const char* what) {
        if (ids.empty()) throw std::invalid_argument(std::string("candidate has no ") + what);
        std::vector<Var> rows;
        rows.reserve(ids.size());
        for (ResourceId id : ids) rows.push_back(lookup(id));
        return rows.size() == 1 ? rows.front() : tape.mean(rows);
    };
    AspectVars out;
    out[kEntityAspect] = lookup(candidate.entity);
    out[kRelationAspect] = average(candidate.relation_path, "relation path");
    out[kTypeAspect] = average(candidate.types, "types");
    out[kContextAspect] = average(candidate.context, "context");
    return out;
}

template <typename T>
Var attention_logits(Tape<T>& tape, const Model<T>& model, const EncodedQuestion& question, Var aspect) {
    const Var w = tape.param(model.attention_weight());
    const Var b = tape.param(model.attention_bias());
    std::vector<Var> logits;
    logits.reserve(question.length());
    for (const Var& h : question.states) {
        const Var joint = tape.tanh(tape.concat(h, aspect));
        logits.push_back(tape.add(tape.dot(w, joint), b));
    }
    return tape.concat(logits);
}

template <typename T>
Var attention_weights(Tape<T>& tape, const Model<T>& model, const EncodedQuestion& question, Var aspect) {
    attention_calls.fetch_add(1, std::memory_order_relaxed);
    return tape.softmax(attention_logits(tape, model, question, aspect));
}

template <typename T>
Var aspect_question_vector(Tape<T>& tape, const EncodedQuestion& question, Var alpha) {
    return tape.matvec_t(question.matrix, alpha);
}

template <typename T>
ScoreTerms score(Tape<T>& tape, const Model<T>& model, const EncodedQuestion& question, const AspectVars& aspects,
                 ScoreMode mode) {
    ScoreTerms out;
    std::array<Var, kAspectCount> terms;
    for (std::size_t i = 0; i < kAspectCount; ++i) {
        Var q = question.fixed;
        if (mode == ScoreMode::kAttention) {
            out.attention[i] = attention_weights(tape, model, question, aspects[i]);
            q = aspect_question_vector(tape, question, out.attention[i]);
        }
        terms[i] = tape.dot(q, aspects[i]);
    }
    out.score = tape.sum(tape.concat(terms));
    return out;
}

template <typename T>
std::vector<T> score_candidates(const Model<T>& model, std::span<const WordId> tokens,
                                std::span<const CandidateAnswer> candidates) {
    Tape<T> tape(&model.params());
    const EncodedQuestion enc = encode_question(tape, model, tokens);
    const ScoreMode mode = score_mode(model.mode());
    std::vector<T> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) {
        const AspectVars aspects = aspect_embeddings(tape, model, c);
        out.push_back(tape.value(score(tape, model, enc, aspects, mode).score).item());
    }
    return out;
}

template <typename T>
Tensor<T> attention_matrix(const Model<T>& model, std::span<const WordId> tokens, const CandidateAnswer& candidate) {
    if (!uses_attention(model.mode())) {
        throw std::logic_error("attention weights are undefined for mode " + std::string(mode_name(model.mode())));
    }
    Tape<T> tape(&model.params());
    const EncodedQuestion enc = encode_question(tape, model, tokens);
    const AspectVars aspects = aspect_embeddings(tape, model, candidate);
    Tensor<T> out({kAspectCount, enc.length()});
    for (std::size_t i = 0; i < kAspectCount; ++i) {
        const auto& alpha = tape.value(attention_weights(tape, model, enc, aspects[i]));
        for (std::size_t j = 0; j < enc.length(); ++j) out(i, j) = alpha[j];
    }
    return out;
}

#define KBQA_INSTANTIATE(T)                                                                                     \
    template AspectVars aspect_embeddings(Tape<T>&, const Model<T>&, const CandidateAnswer&);                  \
    template Var attention_logits(Tape<T>&, const Model<T>&, const EncodedQuestion&, Var);                     \
    template Var attention_weights(Tape<T>&, const Model<T>&, const EncodedQuestion&, Var);                    \
    template Var aspect_question_vector(Tape<T>&, const EncodedQuestion&, Var);                                \
    template ScoreTerms score(Tape<T>&, const Model<T>&, const EncodedQuestion&, const AspectVars&, ScoreMode); \
    template std::vector<T> score_candidates(const Model<T>&, std::span<const WordId>,                         \
                                             std::span<const CandidateAnswer>);                                \
    template Tensor<T> attention_matrix(const Model<T>&, std::span<const WordId>, const CandidateAnswer&);

KBQA_INSTANTIATE(float)
KBQA_INSTANTIATE(double)
#undef KBQA_INSTANTIATE

}  // namespace kbqa
