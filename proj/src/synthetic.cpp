#include "kbqa/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <openssl/evp.h>

#include "kbqa/random.hpp"

namespace kbqa {

using nlohmann::json;

namespace {

// One word per question template; each relation owns a disjoint slice.
const std::vector<std::string>& phrase_bank() {
    static const std::vector<std::string> bank = {
        "capital",  "leader",    "founder",  "author",   "owner",    "birthplace", "spouse",   "member",
        "origin",   "language",  "currency", "director", "producer", "creator",    "neighbor", "partner",
        "rival",    "sponsor",   "mentor",   "successor", "parent",  "child",      "employer", "anthem",
        "mascot",   "symbol",    "heir",     "patron",   "host",     "venue",      "inventor", "editor",
    };
    return bank;
}

constexpr char kTypeRelation[] = "type";

}  // namespace

const std::vector<SynthTypeInfo>& synth_type_bank() {
    static const std::vector<SynthTypeInfo> bank = {
        {"person", "who"}, {"location", "where"}, {"date", "when"}, {"object", "what"}, {"group", "which"},
    };
    return bank;
}

void SynthConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("invalid synthetic config: " + what); };
    if (entities == 0 || relations == 0 || types == 0 || facts_per_entity == 0 || templates_per_relation == 0) {
        fail("all counts must be positive");
    }
    if (types < 2) fail("at least 2 types are needed so that relations can have distinct domain and range");
    if (types > synth_type_bank().size()) {
        fail("at most " + std::to_string(synth_type_bank().size()) + " types are supported (one wh-word each)");
    }
    if (entities < types) fail("need at least one entity per type");
    if (relations * templates_per_relation > phrase_bank().size()) {
        fail(std::to_string(relations) + " relations x " + std::to_string(templates_per_relation) +
             " templates needs more distinct phrases than the " + std::to_string(phrase_bank().size()) + " available");
    }
    for (double f : {train_fraction, valid_fraction, test_fraction}) {
        if (!(f >= 0.0 && f <= 1.0)) fail("split fractions must lie in [0, 1]");
    }
    if (std::abs(train_fraction + valid_fraction + test_fraction - 1.0) > 1e-9) fail("split fractions must sum to 1");
    if (train_fraction <= 0.0 || test_fraction <= 0.0) fail("train and test fractions must be positive");
    if (!(oov_fraction >= 0.0 && oov_fraction <= 1.0)) fail("oov_fraction must lie in [0, 1]");
}

json SynthConfig::to_json() const {
    return json{{"entities", entities},
                {"relations", relations},
                {"types", types},
                {"facts_per_entity", facts_per_entity},
                {"templates_per_relation", templates_per_relation},
                {"train_fraction", train_fraction},
                {"valid_fraction", valid_fraction},
                {"test_fraction", test_fraction},
                {"oov_fraction", oov_fraction},
                {"seed", seed}};
}

SynthConfig SynthConfig::from_json(const json& j, SynthConfig c) {
    if (!j.is_object()) throw std::invalid_argument("invalid synthetic config: expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "entities") c.entities = value.get<std::size_t>();
            else if (key == "relations") c.relations = value.get<std::size_t>();
            else if (key == "types") c.types = value.get<std::size_t>();
            else if (key == "facts_per_entity") c.facts_per_entity = value.get<std::size_t>();
            else if (key == "templates_per_relation") c.templates_per_relation = value.get<std::size_t>();
            else if (key == "train_fraction") c.train_fraction = value.get<double>();
            else if (key == "valid_fraction") c.valid_fraction = value.get<double>();
            else if (key == "test_fraction") c.test_fraction = value.get<double>();
            else if (key == "oov_fraction") c.oov_fraction = value.get<double>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else throw std::invalid_argument("invalid synthetic config: unknown key '" + key + "'");
        } catch (const json::exception&) {
            throw std::invalid_argument("invalid synthetic config: bad value for '" + key + "'");
        }
    }
    return c;
}

KbStore synth_store(const SynthData& data, KbOptions options) {
    KbBuilder builder(std::move(options));
    for (const auto& f : data.facts) builder.add(f[0], f[1], f[2]);
    return std::move(builder).build();
}

double measure_oov_fraction(const std::vector<QaRecord>& train, const std::vector<QaRecord>& test) {
    if (test.empty()) return 0.0;
    std::set<std::string> seen;
    for (const auto& r : train) seen.insert(r.answers.begin(), r.answers.end());
    std::size_t unseen = 0;
    for (const auto& r : test) {
        if (std::any_of(r.answers.begin(), r.answers.end(), [&](const std::string& a) { return !seen.contains(a); })) {
            ++unseen;
        }
    }
    return static_cast<double>(unseen) / static_cast<double>(test.size());
}

SynthData generate(const SynthConfig& config) {
    config.validate();
    Rng rng(derive_seed(config.seed, 0x5717, 0));
    const std::size_t T = config.types;
    const std::size_t R = config.relations;
    const std::size_t E = config.entities;

    SynthData out;
    out.types.assign(synth_type_bank().begin(), synth_type_bank().begin() + static_cast<std::ptrdiff_t>(T));

    // Relation r maps domain(r) -> range(r), domain != range; ranges and
    // domains both cycle through the types.
    std::vector<std::size_t> range(R), domain(R);
    for (std::size_t r = 0; r < R; ++r) {
        range[r] = r % T;
        domain[r] = (r + 1 + r / T) % T;
        if (domain[r] == range[r]) domain[r] = (domain[r] + 1) % T;
    }
    std::vector<std::vector<std::string>> phrases(R);
    std::vector<std::string> relation_names(R);
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t t = 0; t < config.templates_per_relation; ++t) {
            phrases[r].push_back(phrase_bank()[r * config.templates_per_relation + t]);
        }
        relation_names[r] = "has_" + phrases[r].front();
    }

    std::vector<std::size_t> entity_type(E);
    for (std::size_t e = 0; e < E; ++e) entity_type[e] = e % T;
    shuffle(std::span<std::size_t>(entity_type), rng);
    std::vector<std::vector<std::size_t>> by_type(T);
    for (std::size_t e = 0; e < E; ++e) by_type[entity_type[e]].push_back(e);
    auto entity_name = [](std::size_t e) { return "e" + std::to_string(e); };

    for (std::size_t e = 0; e < E; ++e) out.facts.push_back({entity_name(e), kTypeRelation, out.types[entity_type[e]].name});

    // (subject, relation) -> objects
    std::map<std::pair<std::size_t, std::size_t>, std::set<std::size_t>> objects;
    for (std::size_t s = 0; s < E; ++s) {
        std::vector<std::size_t> usable;
        for (std::size_t r = 0; r < R; ++r) {
            if (domain[r] == entity_type[s]) usable.push_back(r);
        }
        if (usable.empty()) continue;
        std::size_t added = 0;
        for (std::size_t attempt = 0; added < config.facts_per_entity && attempt < 8 * config.facts_per_entity; ++attempt) {
            const std::size_t r = usable[uniform_index(rng, usable.size())];
            const auto& pool = by_type[range[r]];
            const std::size_t o = pool[uniform_index(rng, pool.size())];
            if (objects[{s, r}].insert(o).second) {
                out.facts.push_back({entity_name(s), relation_names[r], entity_name(o)});
                ++added;
            }
        }
    }

    std::vector<QaRecord> questions;
    for (const auto& [key, objs] : objects) {
        const auto [s, r] = key;
        for (const std::string& phrase : phrases[r]) {
            QaRecord q;
            char id[32];
            std::snprintf(id, sizeof(id), "q%04zu", questions.size() + 1);
            q.id = id;
            q.question = out.types[range[r]].wh_word + " " + phrase + " " + entity_name(s);
            q.topic = entity_name(s);
            for (std::size_t o : objs) q.answers.push_back(entity_name(o));
            std::sort(q.answers.begin(), q.answers.end());
            questions.push_back(std::move(q));
        }
    }

    const std::size_t n = questions.size();
    const auto n_test = static_cast<std::size_t>(std::llround(config.test_fraction * static_cast<double>(n)));
    const auto n_valid = static_cast<std::size_t>(std::llround(config.valid_fraction * static_cast<double>(n)));
    if (n_test == 0 || n_test + n_valid >= n) {
        throw std::invalid_argument("invalid synthetic config: " + std::to_string(n) +
                                    " questions cannot fill nonempty train and test splits");
    }

    // Hold out answer entities until enough test questions are forced to
    // contain an answer that never appears in train.
    std::vector<bool> forced(n, false);
    std::size_t forced_count = 0;
    const auto target = static_cast<std::size_t>(std::ceil(config.oov_fraction * static_cast<double>(n_test) - 1e-9));
    if (target > 0) {
        std::map<std::string, std::vector<std::size_t>> by_answer;
        for (std::size_t i = 0; i < n; ++i) {
            for (const auto& a : questions[i].answers) by_answer[a].push_back(i);
        }
        std::vector<std::string> answers;
        for (const auto& [a, qs] : by_answer) answers.push_back(a);
        shuffle(std::span<std::string>(answers), rng);
        for (const auto& a : answers) {
            if (forced_count >= target) break;
            std::size_t extra = 0;
            for (std::size_t i : by_answer[a]) extra += forced[i] ? 0 : 1;
            if (forced_count + extra > n_test) continue;
            for (std::size_t i : by_answer[a]) forced[i] = true;
            forced_count += extra;
        }
        if (forced_count < target) {
            throw std::invalid_argument("invalid synthetic config: oov_fraction " + std::to_string(config.oov_fraction) +
                                        " cannot be met with a test split of " + std::to_string(n_test) + " questions");
        }
    }

    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i) {
        if (forced[i]) out.test.push_back(questions[i]);
        else rest.push_back(i);
    }
    shuffle(std::span<std::size_t>(rest), rng);
    std::size_t next = 0;
    while (out.test.size() < n_test) out.test.push_back(questions[rest[next++]]);
    for (std::size_t v = 0; v < n_valid; ++v) out.valid.push_back(questions[rest[next++]]);
    while (next < rest.size()) out.train.push_back(questions[rest[next++]]);
    auto by_id = [](const QaRecord& a, const QaRecord& b) { return a.id < b.id; };
    std::sort(out.train.begin(), out.train.end(), by_id);
    std::sort(out.valid.begin(), out.valid.end(), by_id);
    std::sort(out.test.begin(), out.test.end(), by_id);
    out.oov_fraction = measure_oov_fraction(out.train, out.test);
    return out;
}

SynthFiles SynthFiles::in(const std::filesystem::path& dir) {
    return {dir / "kb.tsv", dir / "train.jsonl", dir / "valid.jsonl", dir / "test.jsonl"};
}

void write_synth(const SynthData& data, const SynthFiles& files, bool overwrite) {
    if (!overwrite) {
        for (const auto& p : files.all()) {
            if (std::filesystem::exists(p)) {
                throw std::runtime_error("refusing to overwrite existing file '" + p.string() + "' (use --overwrite)");
            }
        }
    }
    auto open = [](const std::filesystem::path& p) {
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
        return out;
    };
    {
        auto out = open(files.kb);
        for (const auto& f : data.facts) out << f[0] << '\t' << f[1] << '\t' << f[2] << '\n';
    }
    auto write_split = [&](const std::filesystem::path& p, const std::vector<QaRecord>& records) {
        auto out = open(p);
        for (const auto& r : records) out << format_qa_record(r) << '\n';
    };
    write_split(files.train, data.train);
    write_split(files.valid, data.valid);
    write_split(files.test, data.test);
}

std::string file_sha256(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("SHA-256 unavailable");
    }
    char buf[1 << 14];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char b[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(b, sizeof(b), "%02x", digest[i]);
        hex += b;
    }
    return hex;
}

}  // namespace kbqa
