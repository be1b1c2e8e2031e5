#include "kbqa/qa_data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

#include "kbqa/random.hpp"

namespace kbqa {

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c) || (c < 0x80 && std::ispunct(c))) {
            if (!current.empty()) out.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

Vocabulary::Vocabulary() { add(std::string(kUnkWord)); }

void Vocabulary::add(const std::string& w) {
    if (index_.contains(w)) return;
    index_.emplace(w, WordId{static_cast<std::uint32_t>(words_.size())});
    words_.push_back(w);
}

Vocabulary Vocabulary::build(std::span<const std::string> texts) {
    Vocabulary v;
    for (const auto& t : texts) {
        for (const auto& w : split_words(t)) v.add(w);
    }
    return v;
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
    if (words.empty() || words.front() != kUnkWord) {
        throw std::invalid_argument("word list must start with " + std::string(kUnkWord));
    }
    Vocabulary v;
    for (std::size_t i = 1; i < words.size(); ++i) {
        if (v.index_.contains(words[i])) throw std::invalid_argument("duplicate word in vocabulary: " + words[i]);
        v.add(words[i]);
    }
    return v;
}

WordId Vocabulary::lookup(std::string_view word) const {
    if (auto it = index_.find(std::string(word)); it != index_.end()) return it->second;
    return kUnk;
}

std::vector<WordId> Vocabulary::encode(std::string_view text) const {
    std::vector<WordId> out;
    for (const auto& w : split_words(text)) out.push_back(lookup(w));
    if (out.empty()) out.push_back(kUnk);
    return out;
}

QaRecord parse_qa_record(std::string_view line, const std::string& source, std::size_t line_no) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(source, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw FormatError(source, line_no, "record must be a JSON object");
    auto require_string = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_string()) {
            throw FormatError(source, line_no, std::string("field '") + key + "' must be a string");
        }
        return j[key].get<std::string>();
    };
    QaRecord r;
    r.question = require_string("question");
    r.topic = require_string("topic");
    if (!j.contains("answers") || !j["answers"].is_array()) {
        throw FormatError(source, line_no, "field 'answers' must be a list of strings");
    }
    for (const auto& a : j["answers"]) {
        if (!a.is_string()) throw FormatError(source, line_no, "field 'answers' must be a list of strings");
        r.answers.push_back(a.get<std::string>());
    }
    if (j.contains("id")) {
        if (!j["id"].is_string()) throw FormatError(source, line_no, "field 'id' must be a string");
        r.id = j["id"].get<std::string>();
    } else {
        r.id = std::to_string(line_no);
    }
    return r;
}

std::string format_qa_record(const QaRecord& record) {
    nlohmann::json j;
    j["id"] = record.id;
    j["question"] = record.question;
    j["topic"] = record.topic;
    j["answers"] = record.answers;
    return j.dump();
}

namespace {

void resolve_into(QaSplit& split, QaRecord rec, const KbStore& store) {
    auto topic = store.find_entity(rec.topic);
    if (!topic) {
        split.skipped.push_back({std::move(rec), "unknown topic entity"});
        return;
    }
    Question q;
    q.id = rec.id;
    q.text = rec.question;
    q.topic = *topic;
    for (const auto& a : rec.answers) {
        if (auto id = store.find_entity(a)) {
            q.gold.push_back(*id);
        } else {
            ++split.dropped_answers;
        }
    }
    std::sort(q.gold.begin(), q.gold.end());
    q.gold.erase(std::unique(q.gold.begin(), q.gold.end()), q.gold.end());
    split.questions.push_back(std::move(q));
}

}  // namespace

QaSplit load_qa(std::istream& in, const KbStore& store, const std::string& source) {
    QaSplit split;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        resolve_into(split, parse_qa_record(line, source, line_no), store);
    }
    return split;
}

QaSplit resolve_qa(std::span<const QaRecord> records, const KbStore& store) {
    QaSplit split;
    for (const auto& rec : records) resolve_into(split, rec, store);
    return split;
}

QaSplit load_qa(const std::filesystem::path& path, const KbStore& store) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open QA file " + path.string());
    return load_qa(in, store, path.string());
}

std::vector<std::string> question_texts(std::span<const Question> questions) {
    std::vector<std::string> out;
    out.reserve(questions.size());
    for (const auto& q : questions) out.push_back(q.text);
    return out;
}

void assign_tokens(std::span<Question> questions, const Vocabulary& vocab) {
    for (auto& q : questions) q.tokens = vocab.encode(q.text);
}

namespace {

bool is_gold(const Question& q, ResourceId e) {
    return std::binary_search(q.gold.begin(), q.gold.end(), e);
}

}  // namespace

std::vector<TrainingExample> make_training_examples(const Question& q, const CandidateSet& cands, std::size_t k,
                                                    std::uint64_t seed, std::span<const CandidateSet> pool,
                                                    ExampleStats* stats) {
    if (k == 0) throw std::invalid_argument("make_training_examples: k must be at least 1");
    ExampleStats local;
    ExampleStats& st = stats ? *stats : local;

    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
    std::set<ResourceId> seen_positive;
    for (std::size_t i = 0; i < cands.candidates.size(); ++i) {
        const ResourceId e = cands.candidates[i].entity;
        if (!is_gold(q, e)) {
            negatives.push_back(i);
        } else if (seen_positive.insert(e).second) {
            positives.push_back(i);
        }
    }
    if (positives.empty()) {
        ++st.questions_without_positive;
        return {};
    }

    Rng rng(seed);
    std::vector<TrainingExample> out;
    out.reserve(positives.size());
    const double weight = 1.0 / static_cast<double>(positives.size());

    for (std::size_t pos : positives) {
        TrainingExample ex;
        ex.question_id = q.id;
        ex.positive = cands.candidates[pos];
        ex.weight = weight;

        // Partial Fisher-Yates over the local negatives.
        std::vector<std::size_t> local_pool = negatives;
        const std::size_t take = std::min(k, local_pool.size());
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + uniform_index(rng, local_pool.size() - i);
            std::swap(local_pool[i], local_pool[j]);
            ex.negatives.push_back(cands.candidates[local_pool[i]]);
        }

        if (ex.negatives.size() < k && !pool.empty()) {
            std::vector<std::size_t> set_order(pool.size());
            for (std::size_t i = 0; i < set_order.size(); ++i) set_order[i] = i;
            shuffle(std::span<std::size_t>(set_order), rng);
            for (std::size_t s : set_order) {
                const CandidateSet& other = pool[s];
                if (other.question_id == q.id) continue;
                std::vector<std::size_t> eligible;
                for (std::size_t i = 0; i < other.candidates.size(); ++i) {
                    if (!is_gold(q, other.candidates[i].entity)) eligible.push_back(i);
                }
                shuffle(std::span<std::size_t>(eligible), rng);
                for (std::size_t i : eligible) {
                    if (ex.negatives.size() == k) break;
                    ex.negatives.push_back(other.candidates[i]);
                    ++st.foreign_negatives;
                }
                if (ex.negatives.size() == k) break;
            }
        }
        if (ex.negatives.size() < k) {
            ++st.short_examples;
        }
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace kbqa
