#include <gtest/gtest.h>

#include "kbqa/encoder.hpp"
#include "kbqa/model.hpp"
#include "test_support.hpp"

using namespace kbqa;
namespace kt = kbqa::testing;

namespace {

ModelShape shape(std::size_t d, Mode mode = Mode::kBiLstmAtt, std::size_t words = 6, std::size_t kb = 8) {
    return ModelShape{d, words, kb, mode};
}

std::vector<double> values_of(const Tape<double>& tape, Var v) {
    const auto s = tape.value(v).values();
    return {s.begin(), s.end()};
}

std::array<kt::Vec, 4> gate_weights(const Model<double>& m, const LstmIds& ids) {
    std::array<kt::Vec, 4> out;
    for (int g = 0; g < 4; ++g) {
        const auto s = m.params()[ids.weight[g]].values();
        out[g].assign(s.begin(), s.end());
    }
    return out;
}

std::array<kt::Vec, 4> gate_biases(const Model<double>& m, const LstmIds& ids) {
    std::array<kt::Vec, 4> out;
    for (int g = 0; g < 4; ++g) {
        const auto s = m.params()[ids.bias[g]].values();
        out[g].assign(s.begin(), s.end());
    }
    return out;
}

// Randomizes biases too so the reference comparison covers them.
Model<double> random_model(const ModelShape& s, std::uint64_t seed, double range = 0.5) {
    Model<double> m = Model<double>::init(s, seed);
    Rng rng(seed + 1);
    for (std::size_t i = 0; i < m.params().size(); ++i) {
        for (double& v : m.params()[ParamId{i}].values()) v = std::uniform_real_distribution<double>(-range, range)(rng);
    }
    return m;
}

}  // namespace

TEST(ModelShape, RejectsOddOrZeroDimension) {
    EXPECT_THROW(Model<float>::init(shape(7), 1), std::invalid_argument);
    EXPECT_THROW(Model<float>::init(shape(0), 1), std::invalid_argument);
    const auto m = Model<float>::init(shape(8), 1);
    EXPECT_EQ(m.forward_lstm().hidden, 4u);
    EXPECT_EQ(m.backward_lstm().hidden, 4u);
    EXPECT_EQ(m.params()[m.attention_weight()].size(), 16u);
    const auto u = Model<float>::init(shape(8, Mode::kLstm), 1);
    EXPECT_EQ(u.forward_lstm().hidden, 8u);
}

TEST(ModelShape, InitialValuesInRange) {
    const auto m = Model<float>::init(shape(16), 3);
    for (std::size_t i = 0; i < m.params().size(); ++i) {
        for (float v : m.params()[ParamId{i}].values()) {
            EXPECT_GE(v, -0.08f);
            EXPECT_LE(v, 0.08f);
        }
    }
}

TEST(ModelShape, EmbeddingTablesHoldOneRowPerResource) {
    const auto m = Model<float>::init(shape(4, Mode::kBiLstm, 11, 13), 3);
    EXPECT_EQ(m.params()[m.word_embeddings()].shape(), (Shape{11, 4}));
    EXPECT_EQ(m.params()[m.kb_embeddings()].shape(), (Shape{13, 4}));
}

TEST(EmbedWords, LookupRows) {
    const auto m = Model<double>::init(shape(4), 2);
    Tape<double> tape(&m.params());
    const std::vector<WordId> one{WordId{3}};
    const auto rows = embed_words(tape, m, one);
    ASSERT_EQ(rows.size(), 1u);
    const auto table = m.params()[m.word_embeddings()];
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(tape.value(rows[0])[i], table(3, i));

    const std::vector<WordId> rep{WordId{2}, WordId{2}};
    const auto r2 = embed_words(tape, m, rep);
    EXPECT_TRUE(tape.value(r2[0]).identical(tape.value(r2[1])));

    const std::vector<WordId> unk{Vocabulary::kUnk, Vocabulary::kUnk};
    const auto r3 = embed_words(tape, m, unk);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(tape.value(r3[1])[i], table(0, i));

    const std::vector<WordId> bad{WordId{6}};
    EXPECT_THROW(embed_words(tape, m, bad), std::out_of_range);
}

TEST(Lstm, ZeroWeightsAndInputsGiveZeroStates) {
    auto m = Model<double>::init(shape(8), 2);
    for (std::size_t i = 0; i < m.params().size(); ++i) m.params()[ParamId{i}].fill(0.0);
    Tape<double> tape(&m.params());
    const std::vector<WordId> tokens{WordId{1}, WordId{2}, WordId{3}};
    const auto enc = encode_question(tape, m, tokens);
    for (Var s : enc.states) {
        for (double v : tape.value(s).values()) EXPECT_EQ(v, 0.0);
    }
}

TEST(Lstm, SingleStepHasNoDirection) {
    const auto m = random_model(shape(8), 4);
    Tape<double> tape(&m.params());
    const std::vector<WordId> tokens{WordId{2}};
    const auto x = embed_words(tape, m, tokens);
    const auto f = lstm_direction(tape, m.forward_lstm(), x, Direction::kForward);
    const auto b = lstm_direction(tape, m.forward_lstm(), x, Direction::kBackward);
    EXPECT_TRUE(tape.value(f[0]).identical(tape.value(b[0])));
}

TEST(Lstm, MatchesReferenceRecurrence) {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_model(shape(8), 100 + trial);
        std::vector<WordId> tokens;
        for (int j = 0; j < 3; ++j) tokens.push_back(WordId{static_cast<std::uint32_t>(uniform_index(rng, 6))});
        Tape<double> tape(&m.params());
        const auto enc = encode_question(tape, m, tokens);

        std::vector<kt::Vec> xs;
        const auto& table = m.params()[m.word_embeddings()];
        for (WordId w : tokens) xs.emplace_back(table.row(w.value).begin(), table.row(w.value).end());
        const auto fwd = kt::oracle_lstm(xs, gate_weights(m, m.forward_lstm()), gate_biases(m, m.forward_lstm()), 4, false);
        const auto bwd = kt::oracle_lstm(xs, gate_weights(m, m.backward_lstm()), gate_biases(m, m.backward_lstm()), 4, true);
        for (std::size_t j = 0; j < 3; ++j) {
            const auto h = values_of(tape, enc.states[j]);
            ASSERT_EQ(h.size(), 8u);
            for (std::size_t i = 0; i < 4; ++i) {
                EXPECT_NEAR(h[i], fwd[j][i], 1e-5);
                EXPECT_NEAR(h[4 + i], bwd[j][i], 1e-5);
            }
        }
        const auto fixed = values_of(tape, enc.fixed);
        for (std::size_t i = 0; i < 4; ++i) {
            EXPECT_NEAR(fixed[i], fwd[2][i], 1e-12);
            EXPECT_NEAR(fixed[4 + i], bwd[0][i], 1e-12);
        }
    }
}

TEST(Lstm, UnidirectionalReferenceAndFixedState) {
    const auto m = random_model(shape(4, Mode::kLstm), 9);
    const std::vector<WordId> tokens{WordId{1}, WordId{4}};
    Tape<double> tape(&m.params());
    const auto enc = encode_question(tape, m, tokens);
    std::vector<kt::Vec> xs;
    const auto& table = m.params()[m.word_embeddings()];
    for (WordId w : tokens) xs.emplace_back(table.row(w.value).begin(), table.row(w.value).end());
    const auto fwd = kt::oracle_lstm(xs, gate_weights(m, m.forward_lstm()), gate_biases(m, m.forward_lstm()), 4, false);
    EXPECT_TRUE(enc.backward.empty());
    const auto fixed = values_of(tape, enc.fixed);
    ASSERT_EQ(fixed.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(fixed[i], fwd[1][i], 1e-12);
}

TEST(BiLstm, ShapeContract) {
    const auto m = Model<double>::init(shape(4), 1);
    Tape<double> tape(&m.params());
    const std::vector<WordId> tokens{WordId{1}, WordId{2}};
    const auto enc = encode_question(tape, m, tokens);
    EXPECT_EQ(tape.value(enc.matrix).shape(), (Shape{2, 4}));
}

TEST(BiLstm, ReversalSwapsDirections) {
    const auto m = random_model(shape(8), 12);
    // Same parameters with the two directions exchanged.
    ParamStore<double> swapped;
    for (std::size_t i = 0; i < m.params().size(); ++i) {
        std::string name = m.params().name(ParamId{i});
        if (name.rfind("lstm.fwd.", 0) == 0) name.replace(5, 3, "bwd");
        else if (name.rfind("lstm.bwd.", 0) == 0) name.replace(5, 3, "fwd");
        swapped.add(name, m.params()[ParamId{i}]);
    }
    const auto m2 = Model<double>::from_params(m.shape(), std::move(swapped));
    const std::vector<WordId> tokens{WordId{1}, WordId{5}, WordId{2}, WordId{3}};
    const std::vector<WordId> reversed(tokens.rbegin(), tokens.rend());
    Tape<double> t1(&m.params());
    Tape<double> t2(&m2.params());
    const auto a = encode_question(t1, m, tokens);
    const auto b = encode_question(t2, m2, reversed);
    const std::size_t n = tokens.size();
    for (std::size_t j = 0; j < n; ++j) {
        const auto fa = values_of(t1, a.forward[n - 1 - j]);
        const auto bb = values_of(t2, b.backward[j]);
        for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_NEAR(fa[i], bb[i], 1e-12);
    }
}

TEST(BiLstm, Causality) {
    const auto m = random_model(shape(8), 13);
    const std::vector<WordId> a{WordId{1}, WordId{2}, WordId{3}, WordId{4}};
    const std::vector<WordId> b{WordId{1}, WordId{2}, WordId{5}, WordId{0}};  // differs after position 1
    const std::vector<WordId> c{WordId{5}, WordId{0}, WordId{3}, WordId{4}};  // differs before position 2
    Tape<double> tape(&m.params());
    const auto ea = encode_question(tape, m, a);
    const auto eb = encode_question(tape, m, b);
    const auto ec = encode_question(tape, m, c);
    for (std::size_t j = 0; j <= 1; ++j) EXPECT_TRUE(tape.value(ea.forward[j]).identical(tape.value(eb.forward[j])));
    for (std::size_t j = 2; j < 4; ++j) EXPECT_TRUE(tape.value(ea.backward[j]).identical(tape.value(ec.backward[j])));
    EXPECT_FALSE(tape.value(ea.forward[2]).identical(tape.value(eb.forward[2])));
}

TEST(BiLstm, GradientMatchesFiniteDifferences) {
    for (std::size_t n = 1; n <= 6; ++n) {
        auto m = random_model(shape(8), 40 + n);
        std::vector<WordId> tokens;
        for (std::size_t j = 0; j < n; ++j) tokens.push_back(WordId{static_cast<std::uint32_t>((j * 7 + 1) % 6)});
        Tape<double> probe(&m.params());
        const Var weights = probe.input(Tensor<double>::uniform({n * 8}, -1.0, 1.0, *std::make_unique<Rng>(n)));
        const Tensor<double> w = probe.value(weights);
        const auto f = [&](Tape<double>& tape) {
            const auto enc = encode_question(tape, m, tokens);
            std::vector<Var> rows(enc.states.begin(), enc.states.end());
            const Var flat = tape.concat(std::span<const Var>(rows));
            return tape.dot(tape.tanh(flat), tape.input(w));
        };
        const auto result = kt::check_gradients(m.params(), f);
        EXPECT_LT(result.max_rel_error, 1e-4) << "n=" << n << " worst " << result.worst;
    }
}
