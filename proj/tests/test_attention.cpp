#include <gtest/gtest.h>

#include "kbqa/attention.hpp"
#include "test_support.hpp"

using namespace kbqa;
namespace kt = kbqa::testing;

namespace {

// Encoded question built directly from given hidden states.
EncodedQuestion from_rows(Tape<double>& tape, const std::vector<kt::Vec>& H) {
    EncodedQuestion enc;
    for (const auto& h : H) enc.states.push_back(tape.input(Tensor<double>::vector(h)));
    enc.matrix = tape.stack(enc.states);
    enc.fixed = enc.states.back();
    return enc;
}

kt::Vec random_vec(Rng& rng, std::size_t n, double lo = -1.5, double hi = 1.5) {
    std::uniform_real_distribution<double> u(lo, hi);
    kt::Vec v(n);
    for (double& x : v) x = u(rng);
    return v;
}

Model<double> model_with(std::size_t d, Mode mode, const kt::Vec& W, double b) {
    auto m = Model<double>::init(ModelShape{d, 4, 8, mode}, 1);
    auto& w = m.params()[m.attention_weight()];
    for (std::size_t i = 0; i < W.size(); ++i) w[i] = W[i];
    m.params()[m.attention_bias()][0] = b;
    return m;
}

std::vector<double> vals(const Tape<double>& tape, Var v) {
    auto s = tape.value(v).values();
    return {s.begin(), s.end()};
}

}  // namespace

TEST(AspectEmbeddings, MeansOfLists) {
    auto m = Model<double>::init(ModelShape{2, 4, 8, Mode::kBiLstmAtt}, 1);
    auto& table = m.params()[m.kb_embeddings()];
    const double rows[8][2] = {{0, 0}, {0, 0}, {1, 2}, {-1, -2}, {0.5, 3}, {2, -1}, {4, 4}, {7, 1}};
    for (std::size_t r = 0; r < 8; ++r) {
        table(r, 0) = rows[r][0];
        table(r, 1) = rows[r][1];
    }
    CandidateAnswer c;
    c.entity = ResourceId{7};
    c.relation_path = {ResourceId{4}, ResourceId{5}};
    c.types = {ResourceId{6}};
    c.context = {ResourceId{2}};
    Tape<double> tape(&m.params());
    auto a = aspect_embeddings(tape, m, c);
    EXPECT_EQ(vals(tape, a[kEntityAspect]), (std::vector<double>{7, 1}));
    EXPECT_EQ(vals(tape, a[kRelationAspect]), (std::vector<double>{1.25, 1.0}));
    EXPECT_EQ(vals(tape, a[kTypeAspect]), (std::vector<double>{4, 4}));
    EXPECT_EQ(vals(tape, a[kContextAspect]), (std::vector<double>{1, 2}));

    c.context = {ResourceId{2}, ResourceId{3}};  // v and -v
    a = aspect_embeddings(tape, m, c);
    EXPECT_EQ(vals(tape, a[kContextAspect]), (std::vector<double>{0, 0}));

    c.context = {ResourceId{8}};
    EXPECT_THROW(aspect_embeddings(tape, m, c), std::out_of_range);
}

TEST(Attention, IdenticalStatesGiveUniformWeights) {
    Rng rng(1);
    const auto m = model_with(4, Mode::kBiLstmAtt, random_vec(rng, 8), 0.3);
    Tape<double> tape(&m.params());
    const kt::Vec h = random_vec(rng, 4);
    const auto enc = from_rows(tape, {h, h, h});
    const auto alpha = vals(tape, attention_weights(tape, m, enc, tape.input(Tensor<double>::vector(random_vec(rng, 4)))));
    for (double a : alpha) EXPECT_NEAR(a, 1.0 / 3.0, 1e-12);
}

TEST(Attention, ZeroWeightVectorGivesUniformWeights) {
    Rng rng(2);
    const auto m = model_with(4, Mode::kBiLstmAtt, kt::Vec(8, 0.0), 2.5);
    Tape<double> tape(&m.params());
    const auto enc = from_rows(tape, {random_vec(rng, 4), random_vec(rng, 4), random_vec(rng, 4), random_vec(rng, 4)});
    const auto alpha = vals(tape, attention_weights(tape, m, enc, tape.input(Tensor<double>::vector(random_vec(rng, 4)))));
    for (double a : alpha) EXPECT_NEAR(a, 0.25, 1e-12);
}

TEST(Attention, SmallInstanceMatchesScalarEvaluation) {
    const kt::Vec W{0.3, -0.7, 1.1, 0.4};
    const double b = 0.2;
    const std::vector<kt::Vec> H{{0.5, -0.25}, {-1.0, 0.75}};
    const kt::Vec e{0.1, 0.9};
    const auto m = model_with(2, Mode::kBiLstmAtt, W, b);
    Tape<double> tape(&m.params());
    const auto enc = from_rows(tape, H);
    const auto alpha = vals(tape, attention_weights(tape, m, enc, tape.input(Tensor<double>::vector(e))));
    const auto expect = kt::oracle_attention(H, e, W, b);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(alpha[j], expect[j], 1e-6);
}

TEST(QuestionVector, Examples) {
    const auto m = model_with(2, Mode::kBiLstmAtt, kt::Vec(4, 0.0), 0.0);
    Tape<double> tape(&m.params());
    const auto one = from_rows(tape, {{0.3, -0.4}});
    EXPECT_EQ(vals(tape, aspect_question_vector(tape, one, tape.input(Tensor<double>::vector({1.0})))),
              (std::vector<double>{0.3, -0.4}));

    const auto same = from_rows(tape, {{2, 5}, {2, 5}, {2, 5}});
    const auto q = vals(tape, aspect_question_vector(tape, same, tape.input(Tensor<double>::vector({1 / 3.0, 1 / 3.0, 1 / 3.0}))));
    EXPECT_NEAR(q[0], 2.0, 1e-12);
    EXPECT_NEAR(q[1], 5.0, 1e-12);

    const auto two = from_rows(tape, {{0, 4}, {4, 0}});
    EXPECT_EQ(vals(tape, aspect_question_vector(tape, two, tape.input(Tensor<double>::vector({0.25, 0.75})))),
              (std::vector<double>{3, 1}));
}

TEST(Score, ZeroAspectsGiveZero) {
    Rng rng(3);
    const auto m = model_with(2, Mode::kBiLstmAtt, random_vec(rng, 4), 0.1);
    Tape<double> tape(&m.params());
    const auto enc = from_rows(tape, {random_vec(rng, 2), random_vec(rng, 2)});
    AspectVars a;
    for (auto& v : a) v = tape.input(Tensor<double>::zeros({2}));
    EXPECT_EQ(tape.value(score(tape, m, enc, a, ScoreMode::kAttention).score).item(), 0.0);
    EXPECT_EQ(tape.value(score(tape, m, enc, a, ScoreMode::kFixed).score).item(), 0.0);
}

TEST(Score, OneNonzeroAspectIsOneDotProduct) {
    Rng rng(4);
    const kt::Vec W = random_vec(rng, 4);
    const auto m = model_with(2, Mode::kBiLstmAtt, W, 0.1);
    const std::vector<kt::Vec> H{random_vec(rng, 2), random_vec(rng, 2), random_vec(rng, 2)};
    const kt::Vec e = random_vec(rng, 2);
    Tape<double> tape(&m.params());
    const auto enc = from_rows(tape, H);
    AspectVars a;
    for (auto& v : a) v = tape.input(Tensor<double>::zeros({2}));
    a[kTypeAspect] = tape.input(Tensor<double>::vector(e));
    const double s = tape.value(score(tape, m, enc, a, ScoreMode::kAttention).score).item();
    EXPECT_NEAR(s, kt::dot(kt::oracle_question_vector(H, kt::oracle_attention(H, e, W, 0.1)), e), 1e-12);
}

TEST(Score, RandomSmallInstancesMatchScalarEvaluation) {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const kt::Vec W = random_vec(rng, 4);
        const double b = random_vec(rng, 1)[0];
        const std::size_t n = 1 + uniform_index(rng, 4);
        std::vector<kt::Vec> H;
        for (std::size_t j = 0; j < n; ++j) H.push_back(random_vec(rng, 2));
        std::vector<kt::Vec> aspects;
        for (int i = 0; i < 4; ++i) aspects.push_back(random_vec(rng, 2));
        const auto m = model_with(2, Mode::kBiLstmAtt, W, b);
        Tape<double> tape(&m.params());
        const auto enc = from_rows(tape, H);
        AspectVars a;
        for (int i = 0; i < 4; ++i) a[i] = tape.input(Tensor<double>::vector(aspects[i]));
        const auto terms = score(tape, m, enc, a, ScoreMode::kAttention);
        EXPECT_NEAR(tape.value(terms.score).item(), kt::oracle_score(H, aspects, W, b), 1e-6);
        for (int i = 0; i < 4; ++i) {
            const auto alpha = vals(tape, terms.attention[i]);
            const auto expect = kt::oracle_attention(H, aspects[i], W, b);
            for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(alpha[j], expect[j], 1e-6);
        }
    }
}

TEST(Score, FixedModeUsesFinalStates) {
    Rng rng(6);
    const auto m = model_with(2, Mode::kBiLstm, random_vec(rng, 4), 0.0);
    Tape<double> tape(&m.params());
    const std::vector<kt::Vec> H{random_vec(rng, 2), random_vec(rng, 2)};
    const auto enc = from_rows(tape, H);
    std::vector<kt::Vec> aspects;
    AspectVars a;
    double expect = 0;
    for (int i = 0; i < 4; ++i) {
        aspects.push_back(random_vec(rng, 2));
        a[i] = tape.input(Tensor<double>::vector(aspects[i]));
        expect += kt::dot(H.back(), aspects[i]);
    }
    EXPECT_NEAR(tape.value(score(tape, m, enc, a, ScoreMode::kFixed).score).item(), expect, 1e-12);
}

TEST(Score, FixedModesNeverInvokeAttention) {
    const KbStore kb = kt::make_kb({{"t", "r", "a"}, {"t", "s", "b"}, {"a", "type", "c"}});
    for (Mode mode : {Mode::kLstm, Mode::kBiLstm, Mode::kBiLstmGki}) {
        const auto m = Model<float>::init(ModelShape{8, 4, kb.vocab_size(), mode}, 3);
        const auto before = attention_invocations();
        const std::vector<WordId> tokens{WordId{1}, WordId{2}};
        score_candidates(m, tokens, kb.candidate_set(kt::rid(kb, "t"), 2).candidates);
        EXPECT_EQ(attention_invocations(), before) << mode_name(mode);
        EXPECT_THROW(attention_matrix(m, tokens, kb.candidate_set(kt::rid(kb, "t"), 2).candidates[0]), std::logic_error);
    }
    const auto att = Model<float>::init(ModelShape{8, 4, kb.vocab_size(), Mode::kBiLstmAtt}, 3);
    const auto before = attention_invocations();
    const std::vector<WordId> tokens{WordId{1}};
    score_candidates(att, tokens, kb.candidate_set(kt::rid(kb, "t"), 2).candidates);
    EXPECT_GT(attention_invocations(), before);
}

TEST(Score, ContextPermutationAndSharedAspects) {
    Rng rng(7);
    const auto m = Model<double>::init(ModelShape{8, 5, 10, Mode::kBiLstmAtt}, 21);
    CandidateAnswer c;
    c.entity = ResourceId{4};
    c.relation_path = {ResourceId{2}, ResourceId{3}};
    c.types = {ResourceId{5}};
    c.context = {ResourceId{6}, ResourceId{7}, ResourceId{8}};
    CandidateAnswer p = c;
    p.context = {ResourceId{8}, ResourceId{6}, ResourceId{7}};
    const std::vector<WordId> tokens{WordId{1}, WordId{2}, WordId{3}};
    const std::vector<CandidateAnswer> cands{c, p, c};
    const auto s = score_candidates(m, tokens, cands);
    EXPECT_NEAR(s[0], s[1], 1e-12);
    EXPECT_EQ(s[0], s[2]);
}

TEST(AttentionMatrix, RowsAreDistributions) {
    const KbStore kb = kt::make_kb({{"t", "r", "a"}, {"a", "type", "c"}, {"a", "s", "z"}});
    const auto m = Model<float>::init(ModelShape{8, 6, kb.vocab_size(), Mode::kBiLstmAttGki}, 3);
    const std::vector<WordId> tokens{WordId{1}, WordId{2}, WordId{5}};
    const auto alpha = attention_matrix(m, tokens, kb.candidate_set(kt::rid(kb, "t"), 2).candidates[0]);
    ASSERT_EQ(alpha.shape(), (Shape{4, 3}));
    for (std::size_t i = 0; i < 4; ++i) {
        double sum = 0;
        for (float a : alpha.row(i)) {
            EXPECT_GE(a, 0.0f);
            sum += a;
        }
        EXPECT_NEAR(sum, 1.0, 1e-6);
    }
}

TEST(Score, GradientMatchesFiniteDifferences) {
    const KbStore kb = kt::make_kb({{"t", "r", "a"}, {"a", "type", "c"}, {"a", "s", "z"}, {"z", "u", "y"}});
    for (Mode mode : {Mode::kBiLstmAtt, Mode::kBiLstm, Mode::kLstm}) {
        auto m = Model<double>::init(ModelShape{8, 6, kb.vocab_size(), mode}, 5);
        Rng rng(9);
        for (std::size_t i = 0; i < m.params().size(); ++i) {
            for (double& v : m.params()[ParamId{i}].values()) v = std::uniform_real_distribution<double>(-0.6, 0.6)(rng);
        }
        const auto cands = kb.candidate_set(kt::rid(kb, "t"), 2).candidates;
        const std::vector<WordId> tokens{WordId{1}, WordId{4}, WordId{2}, WordId{5}};
        const auto f = [&](Tape<double>& tape) {
            const auto enc = encode_question(tape, m, tokens);
            return score(tape, m, enc, aspect_embeddings(tape, m, cands.back()), score_mode(mode)).score;
        };
        const auto r = kt::check_gradients(m.params(), f);
        EXPECT_LT(r.max_rel_error, 1e-4) << mode_name(mode) << " worst " << r.worst;
    }
}
