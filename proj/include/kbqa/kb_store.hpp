#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kbqa {

// Index into the shared KB vocabulary (entities, relations and sentinels).
struct ResourceId {
    std::uint32_t value = 0;
    auto operator<=>(const ResourceId&) const = default;
};

enum class ResourceKind : std::uint8_t { kEntity, kRelation };

struct Fact {
    ResourceId subject;
    ResourceId relation;
    ResourceId object;
    auto operator<=>(const Fact&) const = default;
};

struct CandidateAnswer {
    ResourceId entity;
    std::vector<ResourceId> relation_path;  // 1 or 2 relations, topic -> entity
    std::vector<ResourceId> types;
    std::vector<ResourceId> context;
};

struct CandidateSet {
    std::string question_id;
    ResourceId topic;
    bool topic_known = true;  // false: topic missing from the store
    std::vector<CandidateAnswer> candidates;
};

struct KbOptions {
    std::string type_relation = "type";
    std::size_t context_cap = 64;
};

class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& source, std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Immutable in-memory triple store. Facts of the configured type relation
// feed the type aspect only; neighborhood traversal and context skip them.
class KbStore {
public:
    static constexpr std::string_view kNoTypeName = "<no_type>";
    static constexpr std::string_view kNoContextName = "<no_context>";

    static KbStore load(const std::filesystem::path& path, KbOptions options = {});
    static KbStore parse(std::istream& in, KbOptions options = {}, const std::string& source = "<stream>");

    std::size_t vocab_size() const { return names_.size(); }
    std::size_t loaded_resource_count() const { return names_.size() - 2; }
    const std::string& name(ResourceId id) const { return names_.at(id.value); }
    ResourceKind kind(ResourceId id) const { return kinds_.at(id.value); }
    std::optional<ResourceId> find(std::string_view name) const;
    std::optional<ResourceId> find_entity(std::string_view name) const;
    bool is_entity(ResourceId id) const { return id.value < kinds_.size() && kinds_[id.value] == ResourceKind::kEntity; }
    bool is_sentinel(ResourceId id) const { return id == no_type() || id == no_context(); }

    ResourceId no_type() const { return ResourceId{0}; }
    ResourceId no_context() const { return ResourceId{1}; }
    std::optional<ResourceId> type_relation() const { return type_relation_; }
    const KbOptions& options() const { return options_; }

    std::span<const Fact> facts() const { return facts_; }
    std::span<const std::size_t> facts_with_subject(ResourceId id) const;
    std::span<const std::size_t> facts_with_object(ResourceId id) const;
    bool contains(const Fact& f) const;
    bool is_type_fact(const Fact& f) const { return type_relation_ && f.relation == *type_relation_; }

    /// Entity ids excluding sentinels, ascending.
    std::vector<ResourceId> entities() const;
    std::vector<ResourceId> relations() const;

    /// Entities sharing a non-type fact with `entity`, either direction,
    /// ascending and deduplicated.
    std::vector<ResourceId> neighbors(ResourceId entity) const;

    CandidateSet candidate_set(ResourceId topic, int max_hops) const;
    CandidateSet candidate_set(std::string_view topic_name, int max_hops) const;

    CandidateAnswer aspects_of(ResourceId entity, std::vector<ResourceId> relation_path,
                               std::optional<ResourceId> topic) const;

    friend class KbBuilder;

private:
    explicit KbStore(KbOptions options);
    ResourceId intern(std::string_view name, ResourceKind kind);
    bool add_fact(const Fact& f);

    KbOptions options_;
    std::vector<std::string> names_;
    std::vector<ResourceKind> kinds_;
    std::unordered_map<std::string, ResourceId> index_;
    std::vector<Fact> facts_;
    std::vector<std::vector<std::size_t>> by_subject_;
    std::vector<std::vector<std::size_t>> by_object_;
    std::optional<ResourceId> type_relation_;
};

// Assembles a store fact by fact; used by the loader, tests and generators.
class KbBuilder {
public:
    explicit KbBuilder(KbOptions options = {});

    /// Returns false when the fact was already present.
    bool add(std::string_view subject, std::string_view relation, std::string_view object);

    KbStore build() &&;

private:
    KbStore store_;
};

}  // namespace kbqa
