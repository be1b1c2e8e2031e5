#include "kbqa/encoder.hpp"

#include <stdexcept>

namespace kbqa {

template <typename T>
std::vector<Var> embed_words(Tape<T>& tape, const Model<T>& model, std::span<const WordId> tokens) {
    const Var table = tape.param(model.word_embeddings());
    const std::size_t vocab = model.shape().word_vocab;
    std::vector<Var> rows;
    rows.reserve(tokens.size());
    for (WordId w : tokens) {
        if (w.value >= vocab) {
            throw std::out_of_range("word id " + std::to_string(w.value) + " outside vocabulary of size " +
                                    std::to_string(vocab));
        }
        rows.push_back(tape.gather(table, w.value));
    }
    return rows;
}

template <typename T>
std::vector<Var> lstm_direction(Tape<T>& tape, const LstmIds& ids, std::span<const Var> inputs, Direction direction) {
    if (inputs.empty()) throw std::invalid_argument("lstm_direction: empty input sequence");
    const std::size_t n = inputs.size();
    std::array<Var, 4> weight;
    std::array<Var, 4> bias;
    for (std::size_t g = 0; g < 4; ++g) {
        weight[g] = tape.param(ids.weight[g]);
        bias[g] = tape.param(ids.bias[g]);
    }

    Var h = tape.input(Tensor<T>::zeros({ids.hidden}));
    Var c = tape.input(Tensor<T>::zeros({ids.hidden}));
    std::vector<Var> out(n);
    for (std::size_t step = 0; step < n; ++step) {
        const std::size_t pos = direction == Direction::kForward ? step : n - 1 - step;
        const Var z = tape.concat(inputs[pos], h);
        auto pre = [&](Gate g) { return tape.add(tape.matvec(weight[g], z), bias[g]); };
        const Var in_gate = tape.sigmoid(pre(kInputGate));
        const Var forget_gate = tape.sigmoid(pre(kForgetGate));
        const Var out_gate = tape.sigmoid(pre(kOutputGate));
        const Var candidate = tape.tanh(pre(kCellGate));
        c = tape.add(tape.mul(forget_gate, c), tape.mul(in_gate, candidate));
        h = tape.mul(out_gate, tape.tanh(c));
        out[pos] = h;
    }
    return out;
}

template <typename T>
EncodedQuestion encode_question(Tape<T>& tape, const Model<T>& model, std::span<const WordId> tokens) {
    if (tokens.empty()) throw std::invalid_argument("encode_question: a question needs at least one token");
    const auto embedded = embed_words(tape, model, tokens);
    EncodedQuestion enc;
    enc.forward = lstm_direction(tape, model.forward_lstm(), embedded, Direction::kForward);
    if (is_bidirectional(model.mode())) {
        enc.backward = lstm_direction(tape, model.backward_lstm(), embedded, Direction::kBackward);
        enc.states.reserve(tokens.size());
        for (std::size_t j = 0; j < tokens.size(); ++j) enc.states.push_back(tape.concat(enc.forward[j], enc.backward[j]));
        enc.fixed = tape.concat(enc.forward.back(), enc.backward.front());
    } else {
        enc.states = enc.forward;
        enc.fixed = enc.forward.back();
    }
    enc.matrix = tape.stack(enc.states);
    return enc;
}

template std::vector<Var> embed_words(Tape<float>&, const Model<float>&, std::span<const WordId>);
template std::vector<Var> embed_words(Tape<double>&, const Model<double>&, std::span<const WordId>);
template std::vector<Var> lstm_direction(Tape<float>&, const LstmIds&, std::span<const Var>, Direction);
template std::vector<Var> lstm_direction(Tape<double>&, const LstmIds&, std::span<const Var>, Direction);
template EncodedQuestion encode_question(Tape<float>&, const Model<float>&, std::span<const WordId>);
template EncodedQuestion encode_question(Tape<double>&, const Model<double>&, std::span<const WordId>);

}  // namespace kbqa
