#pragma once

#include <span>
#include <vector>

#include "kbqa/autodiff.hpp"
#include "kbqa/model.hpp"
#include "kbqa/qa_data.hpp"

namespace kbqa {

enum class Direction { kForward, kBackward };

// Per-token states of one question, recorded on a tape.
struct EncodedQuestion {
    std::vector<Var> forward;   // ->h_1 .. ->h_n
    std::vector<Var> backward;  // <-h_1 .. <-h_n, aligned to token positions (empty when unidirectional)
    std::vector<Var> states;    // h_j = [->h_j ; <-h_j]
    Var matrix;                 // n x d stack of `states`
    Var fixed;                  // [->h_n ; <-h_1], or ->h_n when unidirectional

    std::size_t length() const { return states.size(); }
};

/// Row j is the embedding of token j. Ids past the table are rejected.
template <typename T>
std::vector<Var> embed_words(Tape<T>& tape, const Model<T>& model, std::span<const WordId> tokens);

/// Standard LSTM (sigmoid gates, tanh candidate, h = o * tanh(c)) from zero
/// state. The backward direction reads the inputs right to left and returns
/// states re-aligned to the original positions.
template <typename T>
std::vector<Var> lstm_direction(Tape<T>& tape, const LstmIds& ids, std::span<const Var> inputs, Direction direction);

template <typename T>
EncodedQuestion encode_question(Tape<T>& tape, const Model<T>& model, std::span<const WordId> tokens);

}  // namespace kbqa
