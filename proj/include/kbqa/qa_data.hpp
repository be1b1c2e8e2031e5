#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kbqa/kb_store.hpp"

namespace kbqa {

struct WordId {
    std::uint32_t value = 0;
    auto operator<=>(const WordId&) const = default;
};

/// Lowercases ASCII, splits on whitespace and punctuation, drops punctuation.
std::vector<std::string> split_words(std::string_view text);

class Vocabulary {
public:
    static constexpr std::string_view kUnkWord = "<unk>";
    static constexpr WordId kUnk{0};

    Vocabulary();

    /// Vocabulary over every word of `texts`, in first-seen order after UNK.
    static Vocabulary build(std::span<const std::string> texts);
    static Vocabulary from_words(std::vector<std::string> words);

    std::size_t size() const { return words_.size(); }
    WordId lookup(std::string_view word) const;
    const std::string& word(WordId id) const { return words_.at(id.value); }
    const std::vector<std::string>& words() const { return words_; }

    /// Token ids of `text`; never empty (a text without words yields [UNK]).
    std::vector<WordId> encode(std::string_view text) const;

private:
    void add(const std::string& w);

    std::vector<std::string> words_;
    std::unordered_map<std::string, WordId> index_;
};

struct Question {
    std::string id;
    std::string text;
    std::vector<WordId> tokens;
    ResourceId topic;
    std::vector<ResourceId> gold;  // ascending, deduplicated
};

struct QaRecord {
    std::string id;
    std::string question;
    std::string topic;
    std::vector<std::string> answers;
};

struct SkippedQuestion {
    QaRecord record;
    std::string reason;
};

struct QaSplit {
    std::vector<Question> questions;
    std::vector<SkippedQuestion> skipped;
    std::size_t dropped_answers = 0;

    std::size_t total() const { return questions.size() + skipped.size(); }
};

/// Parses one JSON-lines record with fields `question`, `topic`, `answers`
/// and an optional `id`.
QaRecord parse_qa_record(std::string_view line, const std::string& source, std::size_t line_no);
std::string format_qa_record(const QaRecord& record);

QaSplit load_qa(std::istream& in, const KbStore& store, const std::string& source = "<stream>");
QaSplit load_qa(const std::filesystem::path& path, const KbStore& store);
/// Same resolution as load_qa for records already in memory.
QaSplit resolve_qa(std::span<const QaRecord> records, const KbStore& store);

std::vector<std::string> question_texts(std::span<const Question> questions);
void assign_tokens(std::span<Question> questions, const Vocabulary& vocab);

struct TrainingExample {
    std::string question_id;
    CandidateAnswer positive;
    std::vector<CandidateAnswer> negatives;
    double weight = 1.0;  // 1 / |P_q|
};

struct ExampleStats {
    std::size_t questions_without_positive = 0;
    std::size_t short_examples = 0;  // fewer than k negatives available
    std::size_t foreign_negatives = 0;
};

/// Positive entities P_q are the gold answers present in `cands`; each is
/// represented by its first (shortest-path) candidate. Negatives are drawn
/// without replacement from the non-gold candidates, topped up from the
/// foreign candidate sets in `pool` when fewer than k exist locally.
std::vector<TrainingExample> make_training_examples(const Question& q, const CandidateSet& cands, std::size_t k,
                                                    std::uint64_t seed, std::span<const CandidateSet> pool,
                                                    ExampleStats* stats = nullptr);

}  // namespace kbqa
