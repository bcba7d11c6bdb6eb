#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace titan::ontology {

enum class EntityKind : std::uint8_t {
    AttackPattern,
    CourseOfAction,
    Malware,
    Tool,
    Campaign,
    IntrusionSet,
    DataComponent,
    DataSource,
    Asset,
};

inline constexpr std::size_t kEntityKindCount = 9;

inline constexpr std::array<EntityKind, kEntityKindCount> kAllKinds = {
    EntityKind::AttackPattern, EntityKind::CourseOfAction, EntityKind::Malware,
    EntityKind::Tool,          EntityKind::Campaign,       EntityKind::IntrusionSet,
    EntityKind::DataComponent, EntityKind::DataSource,     EntityKind::Asset,
};

constexpr std::size_t index_of(EntityKind kind) { return static_cast<std::size_t>(kind); }

/// Canonical hyphenated token, e.g. "intrusion-set".
std::string_view kind_token(EntityKind kind);
/// Token used inside relation names, e.g. "intrusion_set".
std::string kind_relation_token(EntityKind kind);
/// Human phrasing, e.g. "intrusion set".
std::string kind_display_name(EntityKind kind);

std::optional<EntityKind> parse_kind(std::string_view token);
/// Accepts the underscore form used in relation names.
std::optional<EntityKind> parse_kind_relation_token(std::string_view token);

/// `is_<kind>_type` seed relation name.
std::string type_seed_relation(EntityKind kind);
std::optional<EntityKind> parse_type_seed_relation(std::string_view token);

struct RelationSignature {
    EntityKind source_kind;
    std::string name;
    EntityKind target_kind;
    std::string inverse_name;

    friend auto operator<=>(const RelationSignature&, const RelationSignature&) = default;
};

struct RegistryOptions {
    bool include_subtechniques = true;
};

/// Closed, immutable catalog of typed relations. Lookups are keyed by
/// (source kind, relation name): the same name may invert differently
/// depending on where it starts.
class RelationRegistry {
public:
    RelationRegistry() = default;

    /// Adds `forward` and its reverse. Throws RegistryFormatError on a clash.
    void add(const RelationSignature& forward);
    /// Context-free short token, must resolve to a canonical name.
    void add_alias(std::string alias, std::string canonical);
    /// Registers every verb stem (name minus target-kind suffix) that maps to a
    /// single canonical name as a context-free alias. Ambiguous stems become
    /// contextual aliases, resolvable only with a source kind.
    void derive_stem_aliases();

    const RelationSignature* find(EntityKind source, std::string_view name) const;
    const RelationSignature& signature_of(EntityKind source, std::string_view name) const;

    bool is_canonical(std::string_view token) const;
    bool is_contextual_alias(std::string_view token) const;

    /// Resolves aliases. With a source kind, contextual stems resolve too.
    std::string normalize(std::string_view token,
                          std::optional<EntityKind> source = std::nullopt) const;

    std::string inverse_of(EntityKind source, std::string_view name) const;

    const std::vector<RelationSignature>& signatures() const { return signatures_; }
    const std::map<std::string, std::string, std::less<>>& aliases() const { return aliases_; }
    /// Signatures leaving `source`, ordered by name.
    std::vector<const RelationSignature*> outgoing(EntityKind source) const;
    /// All distinct canonical relation names, sorted.
    std::vector<std::string> relation_names() const;

    /// One signature per line: `source_kind<TAB>name<TAB>target_kind<TAB>inverse`,
    /// followed by `ALIAS<TAB>alias<TAB>canonical` lines.
    std::string export_table() const;
    static RelationRegistry import_table(std::string_view text);

    friend bool operator==(const RelationRegistry& a, const RelationRegistry& b) {
        return a.signatures_ == b.signatures_ && a.aliases_ == b.aliases_;
    }

private:
    void insert_one(const RelationSignature& sig);

    std::vector<RelationSignature> signatures_;  // sorted by (source, name)
    std::map<std::pair<EntityKind, std::string>, std::size_t, std::less<>> by_key_;
    std::map<std::string, std::string, std::less<>> aliases_;
    // stem -> (source kind -> canonical), only for ambiguous stems
    std::map<std::string, std::map<EntityKind, std::string>, std::less<>> contextual_;
    std::set<std::string, std::less<>> canonical_;
};

RelationRegistry build_default_registry(const RegistryOptions& options = {});

/// Free-function forms of the registry lookups.
std::string normalize_relation(const RelationRegistry& registry, std::string_view token,
                               std::optional<EntityKind> source_kind = std::nullopt);
const RelationSignature& signature_of(const RelationRegistry& registry, EntityKind source_kind,
                                      std::string_view token);

}  // namespace titan::ontology
