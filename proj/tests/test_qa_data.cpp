#include <gtest/gtest.h>

#include <sstream>

#include "kbqa/qa_data.hpp"
#include "test_support.hpp"

using namespace kbqa;
using kbqa::testing::make_kb;
using kbqa::testing::rid;

namespace {

QaSplit load(const std::string& text, const KbStore& kb) {
    std::istringstream in(text);
    return load_qa(in, kb);
}

Question question_with(const KbStore& kb, const std::string& topic, const std::vector<std::string>& gold) {
    Question q;
    q.id = "q";
    q.text = "what";
    q.topic = rid(kb, topic);
    for (const auto& g : gold) q.gold.push_back(rid(kb, g));
    std::sort(q.gold.begin(), q.gold.end());
    return q;
}

bool same_candidate(const CandidateAnswer& a, const CandidateAnswer& b) {
    return a.entity == b.entity && a.relation_path == b.relation_path && a.types == b.types && a.context == b.context;
}

}  // namespace

TEST(LoadQa, HappyPath) {
    const KbStore kb = make_kb({{"a", "r", "b"}});
    const auto split = load(R"({"question":"who x","topic":"a","answers":["b"]})", kb);
    ASSERT_EQ(split.questions.size(), 1u);
    EXPECT_EQ(split.questions[0].topic, rid(kb, "a"));
    EXPECT_EQ(split.questions[0].gold, std::vector<ResourceId>{rid(kb, "b")});
    EXPECT_EQ(split.questions[0].id, "1");
}

TEST(LoadQa, UnknownTopicIsSkippedAndCounted) {
    const KbStore kb = make_kb({{"a", "r", "b"}});
    const auto split = load(R"({"question":"who x","topic":"zz","answers":["b"]})", kb);
    EXPECT_EQ(split.questions.size(), 0u);
    EXPECT_EQ(split.skipped.size(), 1u);
    EXPECT_EQ(split.total(), 1u);
}

TEST(LoadQa, PartialAnswerResolution) {
    const KbStore kb = make_kb({{"a", "r", "b"}});
    const auto split = load(R"({"id":"x1","question":"who x","topic":"a","answers":["b","missing"]})", kb);
    ASSERT_EQ(split.questions.size(), 1u);
    EXPECT_EQ(split.questions[0].gold.size(), 1u);
    EXPECT_EQ(split.dropped_answers, 1u);
    EXPECT_EQ(split.questions[0].id, "x1");
}

TEST(LoadQa, MalformedRecordNamesLine) {
    const KbStore kb = make_kb({{"a", "r", "b"}});
    try {
        load("{\"question\":\"q\",\"topic\":\"a\",\"answers\":[\"b\"]}\n{\"question\":\"q\",\"topic\":\"a\"}\n", kb);
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_THROW(load("not json", kb), FormatError);
}

TEST(LoadQa, RecordRoundTrip) {
    QaRecord r{"q7", "where is it", "a", {"b", "c"}};
    const QaRecord back = parse_qa_record(format_qa_record(r), "<test>", 1);
    EXPECT_EQ(back.id, r.id);
    EXPECT_EQ(back.question, r.question);
    EXPECT_EQ(back.topic, r.topic);
    EXPECT_EQ(back.answers, r.answers);
}

TEST(Tokenize, Examples) {
    EXPECT_EQ(split_words("Who is the president of France?"),
              (std::vector<std::string>{"who", "is", "the", "president", "of", "france"}));
    const Vocabulary v = Vocabulary::build(std::vector<std::string>{"who is the president of france"});
    EXPECT_EQ(v.encode(""), std::vector<WordId>{Vocabulary::kUnk});
    EXPECT_EQ(v.encode("?!..."), std::vector<WordId>{Vocabulary::kUnk});
    const auto ids = v.encode("who is the emperor");
    ASSERT_EQ(ids.size(), 4u);
    EXPECT_EQ(ids[3], Vocabulary::kUnk);
    EXPECT_NE(ids[0], Vocabulary::kUnk);
    for (WordId id : ids) EXPECT_LT(id.value, v.size());
}

TEST(Tokenize, VocabularyFromWordsRoundTrips) {
    const Vocabulary v = Vocabulary::build(std::vector<std::string>{"a b c", "c d"});
    const Vocabulary w = Vocabulary::from_words(v.words());
    EXPECT_EQ(w.words(), v.words());
    EXPECT_EQ(w.encode("d a"), v.encode("d a"));
    EXPECT_THROW(Vocabulary::from_words({"a"}), std::invalid_argument);
}

TEST(Examples, TwoPositivesThreeNegativesEach) {
    std::vector<kbqa::testing::Triple> t;
    for (int i = 0; i < 12; ++i) t.emplace_back("topic", "r", "n" + std::to_string(i));
    const KbStore kb = make_kb(t);
    const Question q = question_with(kb, "topic", {"n0", "n1"});
    const auto cands = kb.candidate_set(q.topic, 2);
    ASSERT_EQ(cands.candidates.size(), 12u);
    const auto ex = make_training_examples(q, cands, 3, 42, {});
    ASSERT_EQ(ex.size(), 2u);
    for (const auto& e : ex) {
        EXPECT_DOUBLE_EQ(e.weight, 0.5);
        ASSERT_EQ(e.negatives.size(), 3u);
        std::set<ResourceId> distinct;
        for (const auto& n : e.negatives) {
            distinct.insert(n.entity);
            EXPECT_FALSE(std::binary_search(q.gold.begin(), q.gold.end(), n.entity));
        }
        EXPECT_EQ(distinct.size(), 3u);
        EXPECT_TRUE(std::binary_search(q.gold.begin(), q.gold.end(), e.positive.entity));
    }
}

TEST(Examples, ShortfallFilledFromForeignCandidates) {
    const KbStore kb = make_kb({{"t", "r", "gold"},
                                {"t", "r", "wrong"},
                                {"u", "s", "f1"},
                                {"u", "s", "f2"},
                                {"u", "s", "f3"},
                                {"u", "s", "f4"},
                                {"u", "s", "f5"}});
    const Question q = question_with(kb, "t", {"gold"});
    auto cands = kb.candidate_set(q.topic, 1);
    cands.question_id = "q";
    ASSERT_EQ(cands.candidates.size(), 2u);
    auto foreign = kb.candidate_set(rid(kb, "u"), 1);
    foreign.question_id = "other";
    ASSERT_EQ(foreign.candidates.size(), 5u);
    const std::vector<CandidateSet> pool{cands, foreign};

    ExampleStats stats;
    const auto ex = make_training_examples(q, cands, 3, 9, pool, &stats);
    ASSERT_EQ(ex.size(), 1u);
    ASSERT_EQ(ex[0].negatives.size(), 3u);
    EXPECT_EQ(ex[0].negatives[0].entity, rid(kb, "wrong"));
    std::set<ResourceId> foreign_ids;
    for (const auto& c : foreign.candidates) foreign_ids.insert(c.entity);
    EXPECT_TRUE(foreign_ids.contains(ex[0].negatives[1].entity));
    EXPECT_TRUE(foreign_ids.contains(ex[0].negatives[2].entity));
    EXPECT_NE(ex[0].negatives[1].entity, ex[0].negatives[2].entity);
    EXPECT_EQ(stats.foreign_negatives, 2u);
    EXPECT_EQ(stats.short_examples, 0u);
    // Foreign candidates keep their own aspects.
    for (int i = 1; i < 3; ++i) {
        EXPECT_EQ(ex[0].negatives[i].relation_path, std::vector<ResourceId>{rid(kb, "s")});
    }
}

TEST(Examples, ExhaustedPoolKeepsFewerNegatives) {
    const KbStore kb = make_kb({{"t", "r", "gold"}, {"t", "r", "wrong"}});
    const Question q = question_with(kb, "t", {"gold"});
    const auto cands = kb.candidate_set(q.topic, 1);
    ExampleStats stats;
    const auto ex = make_training_examples(q, cands, 5, 1, {}, &stats);
    ASSERT_EQ(ex.size(), 1u);
    EXPECT_EQ(ex[0].negatives.size(), 1u);
    EXPECT_EQ(stats.short_examples, 1u);
}

TEST(Examples, NoGoldAmongCandidatesGivesNothing) {
    const KbStore kb = make_kb({{"t", "r", "a"}, {"x", "r", "y"}});
    const Question q = question_with(kb, "t", {"y"});
    ExampleStats stats;
    EXPECT_TRUE(make_training_examples(q, kb.candidate_set(q.topic, 2), 3, 1, {}, &stats).empty());
    EXPECT_EQ(stats.questions_without_positive, 1u);
    EXPECT_THROW(make_training_examples(q, kb.candidate_set(q.topic, 2), 0, 1, {}), std::invalid_argument);
}

TEST(Examples, EntityReachedTwiceIsOnePositive) {
    // gold is reachable via r (1 hop) and via s.s (2 hops).
    const KbStore kb = make_kb({{"t", "r", "gold"}, {"t", "s", "m"}, {"m", "s", "gold"}, {"t", "r", "w"}});
    const Question q = question_with(kb, "t", {"gold"});
    const auto ex = make_training_examples(q, kb.candidate_set(q.topic, 2), 2, 3, {});
    ASSERT_EQ(ex.size(), 1u);
    EXPECT_EQ(ex[0].positive.relation_path.size(), 1u);
    EXPECT_DOUBLE_EQ(ex[0].weight, 1.0);
}

TEST(Examples, PropertiesOnRandomKbs) {
    Rng rng(55);
    for (int trial = 0; trial < 30; ++trial) {
        const KbStore kb = make_kb(kbqa::testing::random_triples(rng, 20, 4, 70));
        std::vector<CandidateSet> pool;
        std::vector<Question> qs;
        for (ResourceId e : kb.entities()) {
            auto cs = kb.candidate_set(e, 2);
            if (cs.candidates.empty()) continue;
            Question q;
            q.id = "q" + std::to_string(qs.size());
            q.topic = e;
            q.gold = {cs.candidates[uniform_index(rng, cs.candidates.size())].entity};
            cs.question_id = q.id;
            qs.push_back(q);
            pool.push_back(std::move(cs));
        }
        for (std::size_t i = 0; i < qs.size(); ++i) {
            const auto a = make_training_examples(qs[i], pool[i], 6, 1000 + i, pool);
            const auto b = make_training_examples(qs[i], pool[i], 6, 1000 + i, pool);
            ASSERT_EQ(a.size(), b.size());
            for (std::size_t j = 0; j < a.size(); ++j) {
                ASSERT_EQ(a[j].negatives.size(), b[j].negatives.size());
                EXPECT_EQ(a[j].negatives.size(), 6u);
                for (std::size_t n = 0; n < a[j].negatives.size(); ++n) {
                    EXPECT_TRUE(same_candidate(a[j].negatives[n], b[j].negatives[n]));
                    EXPECT_FALSE(std::binary_search(qs[i].gold.begin(), qs[i].gold.end(), a[j].negatives[n].entity));
                    EXPECT_LT(a[j].negatives[n].entity.value, kb.vocab_size());
                }
            }
        }
    }
}
