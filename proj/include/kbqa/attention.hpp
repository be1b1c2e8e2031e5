#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "kbqa/autodiff.hpp"
#include "kbqa/encoder.hpp"
#include "kbqa/kb_store.hpp"
#include "kbqa/model.hpp"

namespace kbqa {

enum Aspect : std::size_t { kEntityAspect = 0, kRelationAspect = 1, kTypeAspect = 2, kContextAspect = 3 };
inline constexpr std::size_t kAspectCount = 4;

std::string_view aspect_name(Aspect aspect);

// e_e, e_r, e_t, e_c as tape variables.
using AspectVars = std::array<Var, kAspectCount>;

enum class ScoreMode { kAttention, kFixed };

inline ScoreMode score_mode(Mode mode) { return uses_attention(mode) ? ScoreMode::kAttention : ScoreMode::kFixed; }

/// Entity embedding, and means over relation path, types and context.
template <typename T>
AspectVars aspect_embeddings(Tape<T>& tape, const Model<T>& model, const CandidateAnswer& candidate);

/// w_j = W . tanh([h_j ; e]) + b for every token j.
template <typename T>
Var attention_logits(Tape<T>& tape, const Model<T>& model, const EncodedQuestion& question, Var aspect);

/// softmax over attention_logits.
template <typename T>
Var attention_weights(Tape<T>& tape, const Model<T>& model, const EncodedQuestion& question, Var aspect);

/// q = sum_j alpha_j h_j.
template <typename T>
Var aspect_question_vector(Tape<T>& tape, const EncodedQuestion& question, Var alpha);

struct ScoreTerms {
    Var score;
    std::array<Var, kAspectCount> attention{};  // set only in attention mode
};

/// S(q,a) = sum over aspects of q_i . e_i. In fixed mode every q_i is the
/// question's fixed representation.
template <typename T>
ScoreTerms score(Tape<T>& tape, const Model<T>& model, const EncodedQuestion& question, const AspectVars& aspects,
                 ScoreMode mode);

/// Scores every candidate against one question, sharing the encoding.
template <typename T>
std::vector<T> score_candidates(const Model<T>& model, std::span<const WordId> tokens,
                                std::span<const CandidateAnswer> candidates);

/// Attention weights as a 4 x n tensor (rows follow Aspect order).
template <typename T>
Tensor<T> attention_matrix(const Model<T>& model, std::span<const WordId> tokens, const CandidateAnswer& candidate);

/// Number of attention_weights evaluations in this process.
std::uint64_t attention_invocations();

}  // namespace kbqa
