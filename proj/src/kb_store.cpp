#include "kbqa/kb_store.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace kbqa {

FormatError::FormatError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

KbStore::KbStore(KbOptions options) : options_(std::move(options)) {
    intern(kNoTypeName, ResourceKind::kEntity);
    intern(kNoContextName, ResourceKind::kEntity);
}

ResourceId KbStore::intern(std::string_view name, ResourceKind kind) {
    if (auto it = index_.find(std::string(name)); it != index_.end()) {
        if (kinds_[it->second.value] != kind) {
            throw std::invalid_argument("resource '" + std::string(name) + "' used both as entity and relation");
        }
        return it->second;
    }
    const ResourceId id{static_cast<std::uint32_t>(names_.size())};
    names_.emplace_back(name);
    kinds_.push_back(kind);
    index_.emplace(std::string(name), id);
    by_subject_.emplace_back();
    by_object_.emplace_back();
    if (kind == ResourceKind::kRelation && name == options_.type_relation) type_relation_ = id;
    return id;
}

bool KbStore::add_fact(const Fact& f) {
    if (contains(f)) return false;
    const std::size_t idx = facts_.size();
    facts_.push_back(f);
    by_subject_[f.subject.value].push_back(idx);
    by_object_[f.object.value].push_back(idx);
    return true;
}

bool KbStore::contains(const Fact& f) const {
    if (f.subject.value >= by_subject_.size()) return false;
    for (std::size_t idx : by_subject_[f.subject.value]) {
        if (facts_[idx] == f) return true;
    }
    return false;
}

std::optional<ResourceId> KbStore::find(std::string_view name) const {
    if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
    return std::nullopt;
}

std::optional<ResourceId> KbStore::find_entity(std::string_view name) const {
    auto id = find(name);
    if (id && is_entity(*id) && !is_sentinel(*id)) return id;
    return std::nullopt;
}

std::span<const std::size_t> KbStore::facts_with_subject(ResourceId id) const {
    return by_subject_.at(id.value);
}

std::span<const std::size_t> KbStore::facts_with_object(ResourceId id) const {
    return by_object_.at(id.value);
}

std::vector<ResourceId> KbStore::entities() const {
    std::vector<ResourceId> out;
    for (std::uint32_t i = 0; i < names_.size(); ++i) {
        const ResourceId id{i};
        if (kinds_[i] == ResourceKind::kEntity && !is_sentinel(id)) out.push_back(id);
    }
    return out;
}

std::vector<ResourceId> KbStore::relations() const {
    std::vector<ResourceId> out;
    for (std::uint32_t i = 0; i < names_.size(); ++i) {
        if (kinds_[i] == ResourceKind::kRelation) out.push_back(ResourceId{i});
    }
    return out;
}

std::vector<ResourceId> KbStore::neighbors(ResourceId entity) const {
    std::vector<ResourceId> out;
    for (std::size_t idx : facts_with_subject(entity)) {
        if (!is_type_fact(facts_[idx])) out.push_back(facts_[idx].object);
    }
    for (std::size_t idx : facts_with_object(entity)) {
        if (!is_type_fact(facts_[idx])) out.push_back(facts_[idx].subject);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

struct Step {
    ResourceId relation;
    ResourceId entity;
};

}  // namespace

CandidateSet KbStore::candidate_set(ResourceId topic, int max_hops) const {
    if (max_hops < 1 || max_hops > 2) throw std::invalid_argument("max_hops must be 1 or 2");
    CandidateSet out;
    out.topic = topic;
    if (!is_entity(topic) || is_sentinel(topic)) {
        out.topic_known = false;
        return out;
    }

    auto steps_from = [this](ResourceId e) {
        std::vector<Step> steps;
        for (std::size_t idx : facts_with_subject(e)) {
            const Fact& f = facts_[idx];
            if (!is_type_fact(f)) steps.push_back({f.relation, f.object});
        }
        for (std::size_t idx : facts_with_object(e)) {
            const Fact& f = facts_[idx];
            if (!is_type_fact(f)) steps.push_back({f.relation, f.subject});
        }
        return steps;
    };

    // (path, entity) keys, ordered by hop count, then path, then entity.
    std::set<std::tuple<std::size_t, std::vector<ResourceId>, ResourceId>> found;
    for (const Step& first : steps_from(topic)) {
        if (first.entity != topic) found.emplace(1, std::vector<ResourceId>{first.relation}, first.entity);
        if (max_hops < 2) continue;
        for (const Step& second : steps_from(first.entity)) {
            if (second.entity == topic) continue;
            found.emplace(2, std::vector<ResourceId>{first.relation, second.relation}, second.entity);
        }
    }

    out.candidates.reserve(found.size());
    for (const auto& [hops, path, entity] : found) {
        out.candidates.push_back(aspects_of(entity, path, topic));
    }
    return out;
}

CandidateSet KbStore::candidate_set(std::string_view topic_name, int max_hops) const {
    if (auto id = find_entity(topic_name)) return candidate_set(*id, max_hops);
    CandidateSet out;
    out.topic_known = false;
    return out;
}

CandidateAnswer KbStore::aspects_of(ResourceId entity, std::vector<ResourceId> relation_path,
                                    std::optional<ResourceId> topic) const {
    if (!is_entity(entity)) throw std::invalid_argument("aspects_of: resource is not an entity");
    CandidateAnswer out;
    out.entity = entity;
    out.relation_path = std::move(relation_path);

    if (type_relation_) {
        for (std::size_t idx : facts_with_subject(entity)) {
            const Fact& f = facts_[idx];
            if (f.relation == *type_relation_) out.types.push_back(f.object);
        }
        std::sort(out.types.begin(), out.types.end());
        out.types.erase(std::unique(out.types.begin(), out.types.end()), out.types.end());
    }
    if (out.types.empty()) out.types.push_back(no_type());

    for (ResourceId n : neighbors(entity)) {
        if (n == entity || (topic && n == *topic)) continue;
        if (out.context.size() == options_.context_cap) break;
        out.context.push_back(n);
    }
    if (out.context.empty()) out.context.push_back(no_context());
    return out;
}

KbStore KbStore::parse(std::istream& in, KbOptions options, const std::string& source) {
    KbBuilder builder(std::move(options));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 3) {
            throw FormatError(source, line_no,
                              "expected 3 tab-separated fields, found " + std::to_string(fields.size()));
        }
        for (const auto& f : fields) {
            if (f.empty()) throw FormatError(source, line_no, "empty field");
            if (f == kNoTypeName || f == kNoContextName) {
                throw FormatError(source, line_no, "reserved resource name '" + f + "'");
            }
        }
        try {
            builder.add(fields[0], fields[1], fields[2]);
        } catch (const std::invalid_argument& e) {
            throw FormatError(source, line_no, e.what());
        }
    }
    return std::move(builder).build();
}

KbStore KbStore::load(const std::filesystem::path& path, KbOptions options) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open triple file " + path.string());
    return parse(in, std::move(options), path.string());
}

KbBuilder::KbBuilder(KbOptions options) : store_(std::move(options)) {}

bool KbBuilder::add(std::string_view subject, std::string_view relation, std::string_view object) {
    const ResourceId s = store_.intern(subject, ResourceKind::kEntity);
    const ResourceId r = store_.intern(relation, ResourceKind::kRelation);
    const ResourceId o = store_.intern(object, ResourceKind::kEntity);
    return store_.add_fact(Fact{s, r, o});
}

KbStore KbBuilder::build() && {
    return std::move(store_);
}

}  // namespace kbqa
