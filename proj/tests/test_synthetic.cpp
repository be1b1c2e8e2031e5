#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include <unistd.h>

#include "kbqa/synthetic.hpp"
#include "test_support.hpp"

using namespace kbqa;
namespace fs = std::filesystem;
namespace kt = kbqa::testing;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("kbqa_synth_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::set<std::string> question_ids(const std::vector<QaRecord>& recs) {
    std::set<std::string> out;
    for (const auto& r : recs) out.insert(r.id);
    return out;
}

}  // namespace

TEST(SynthConfig, Validation) {
    EXPECT_NO_THROW(SynthConfig{}.validate());
    auto bad = [](auto mutate) {
        SynthConfig c;
        mutate(c);
        return c;
    };
    EXPECT_THROW(bad([](SynthConfig& c) { c.entities = 0; }).validate(), std::invalid_argument);
    EXPECT_THROW(bad([](SynthConfig& c) { c.types = 1; }).validate(), std::invalid_argument);
    EXPECT_THROW(bad([](SynthConfig& c) { c.types = 6; }).validate(), std::invalid_argument);
    EXPECT_THROW(bad([](SynthConfig& c) { c.entities = 3; }).validate(), std::invalid_argument);
    EXPECT_THROW(bad([](SynthConfig& c) { c.relations = 9; }).validate(), std::invalid_argument);  // 9 x 4 > 32 phrases
    EXPECT_THROW(bad([](SynthConfig& c) { c.train_fraction = 0.7; }).validate(), std::invalid_argument);
    EXPECT_THROW(bad([](SynthConfig& c) { c.test_fraction = -0.1; c.train_fraction = 0.95; }).validate(),
                 std::invalid_argument);
    EXPECT_THROW(bad([](SynthConfig& c) { c.oov_fraction = 1.5; }).validate(), std::invalid_argument);
    EXPECT_THROW(generate(bad([](SynthConfig& c) { c.relations = 20; })), std::invalid_argument);
    // 100% unseen test answers cannot be reached on this KB.
    EXPECT_THROW(generate(bad([](SynthConfig& c) { c.oov_fraction = 1.0; c.entities = 8; })), std::invalid_argument);
}

TEST(SynthConfig, JsonRoundTrip) {
    SynthConfig c;
    c.entities = 33;
    c.oov_fraction = 0.3;
    const auto back = SynthConfig::from_json(c.to_json(), SynthConfig{});
    EXPECT_EQ(back.to_json(), c.to_json());
    EXPECT_THROW(SynthConfig::from_json(nlohmann::json{{"entity_count", 4}}, c), std::invalid_argument);
    EXPECT_THROW(SynthConfig::from_json(nlohmann::json{{"entities", "many"}}, c), std::invalid_argument);
}

TEST(Generate, CountsMatchConfig) {
    const SynthConfig c;
    const auto data = generate(c);
    std::set<std::string> entities, relations, classes;
    std::map<std::string, std::size_t> types_of;
    for (const auto& [s, r, o] : data.facts) {
        if (r == "type") {
            classes.insert(o);
            ++types_of[s];
            entities.insert(s);
        } else {
            relations.insert(r);
            entities.insert(s);
            entities.insert(o);
        }
    }
    EXPECT_EQ(entities.size(), c.entities);
    EXPECT_EQ(relations.size(), c.relations);
    EXPECT_EQ(classes.size(), c.types);
    for (const auto& e : entities) EXPECT_EQ(types_of[e], 1u) << e;
    const std::size_t total = data.train.size() + data.valid.size() + data.test.size();
    EXPECT_GE(total, 250u);
    EXPECT_LE(total, 350u);
    EXPECT_NEAR(static_cast<double>(data.test.size()) / total, c.test_fraction, 0.01);
    EXPECT_NEAR(static_cast<double>(data.valid.size()) / total, c.valid_fraction, 0.01);
}

TEST(Generate, GoldReachableAndQuestionsWellFormed) {
    for (std::uint64_t seed : {1, 7, 99}) {
        SynthConfig c;
        c.seed = seed;
        const auto data = generate(c);
        const KbStore kb = synth_store(data);
        std::map<std::string, std::string> wh_of_type;
        for (const auto& t : data.types) wh_of_type[t.name] = t.wh_word;
        for (const auto* split : {&data.train, &data.valid, &data.test}) {
            for (const auto& q : *split) {
                const auto cands = kb.candidate_set(std::string_view(q.topic), 2);
                ASSERT_TRUE(cands.topic_known);
                std::set<std::string> reachable;
                for (const auto& cand : cands.candidates) reachable.insert(kb.name(cand.entity));
                ASSERT_FALSE(q.answers.empty());
                for (const auto& a : q.answers) {
                    EXPECT_TRUE(reachable.contains(a)) << q.id << " " << a;
                    // The wh-word names the answer's type.
                    const auto type = kb.aspects_of(*kb.find_entity(a), {}, std::nullopt).types.at(0);
                    EXPECT_EQ(split_words(q.question).front(), wh_of_type.at(kb.name(type))) << q.question;
                }
                const auto words = split_words(q.question);
                ASSERT_EQ(words.size(), 3u);
                EXPECT_EQ(words[2], q.topic);
            }
        }
    }
}

TEST(Generate, GoldIsExactlyTheOneHopObjects) {
    const auto data = generate(SynthConfig{});
    std::map<std::pair<std::string, std::string>, std::set<std::string>> objects;
    for (const auto& [s, r, o] : data.facts) {
        if (r != "type") objects[{s, r}].insert(o);
    }
    // Every question's gold equals the object set of one (topic, relation) pair.
    for (const auto& q : data.train) {
        const std::set<std::string> gold(q.answers.begin(), q.answers.end());
        bool found = false;
        for (const auto& [key, objs] : objects) {
            if (key.first == q.topic && objs == gold) found = true;
        }
        EXPECT_TRUE(found) << q.id;
    }
}

TEST(Generate, SplitsDisjointAndDeterministic) {
    const auto a = generate(SynthConfig{});
    const auto b = generate(SynthConfig{});
    const auto ids_train = question_ids(a.train), ids_valid = question_ids(a.valid), ids_test = question_ids(a.test);
    for (const auto& id : ids_test) {
        EXPECT_FALSE(ids_train.contains(id));
        EXPECT_FALSE(ids_valid.contains(id));
    }
    for (const auto& id : ids_valid) EXPECT_FALSE(ids_train.contains(id));
    EXPECT_EQ(a.facts, b.facts);
    ASSERT_EQ(a.test.size(), b.test.size());
    for (std::size_t i = 0; i < a.test.size(); ++i) EXPECT_EQ(format_qa_record(a.test[i]), format_qa_record(b.test[i]));

    SynthConfig other;
    other.seed = 8;
    EXPECT_NE(generate(other).facts, a.facts);
}

TEST(Generate, OovFractionIsMet) {
    for (double target : {0.0, 0.3, 0.5}) {
        SynthConfig c;
        c.oov_fraction = target;
        const auto data = generate(c);
        EXPECT_GE(data.oov_fraction + 1e-12, target);
        EXPECT_EQ(data.oov_fraction, measure_oov_fraction(data.train, data.test));
    }
}

TEST(MeasureOov, Examples) {
    const std::vector<QaRecord> train{{"1", "", "t", {"a", "b"}}};
    const std::vector<QaRecord> test{{"2", "", "t", {"a"}}, {"3", "", "t", {"a", "c"}}};
    EXPECT_DOUBLE_EQ(measure_oov_fraction(train, test), 0.5);
    EXPECT_EQ(measure_oov_fraction(train, {}), 0.0);
}

TEST(WriteSynth, ChecksumsAreStableAndOverwriteIsGuarded) {
    const auto data = generate(SynthConfig{});
    const fs::path d1 = scratch("a"), d2 = scratch("b");
    write_synth(data, SynthFiles::in(d1), false);
    write_synth(generate(SynthConfig{}), SynthFiles::in(d2), false);
    const auto f1 = SynthFiles::in(d1).all(), f2 = SynthFiles::in(d2).all();
    for (std::size_t i = 0; i < f1.size(); ++i) {
        ASSERT_TRUE(fs::exists(f1[i]));
        EXPECT_EQ(file_sha256(f1[i]), file_sha256(f2[i]));
        EXPECT_EQ(file_sha256(f1[i]).size(), 64u);
    }
    EXPECT_THROW(write_synth(data, SynthFiles::in(d1), false), std::runtime_error);
    EXPECT_NO_THROW(write_synth(data, SynthFiles::in(d1), true));

    // Files parse back through the regular loaders.
    const KbStore kb = KbStore::load(SynthFiles::in(d1).kb);
    EXPECT_EQ(kb.facts().size(), data.facts.size());
    const auto test = load_qa(SynthFiles::in(d1).test, kb);
    EXPECT_EQ(test.questions.size(), data.test.size());
    EXPECT_TRUE(test.skipped.empty());
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST(FileSha256, KnownValue) {
    const fs::path d = scratch("sha");
    std::ofstream(d / "abc") << "abc";
    EXPECT_EQ(file_sha256(d / "abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_THROW(file_sha256(d / "missing"), std::runtime_error);
    fs::remove_all(d);
}
