#include "titan/ontology.hpp"

#include <algorithm>
#include <sstream>

#include "titan/error.hpp"

namespace titan::ontology {

namespace {

constexpr std::array<std::string_view, kEntityKindCount> kKindTokens = {
    "attack-pattern", "course-of-action", "malware",        "tool",  "campaign",
    "intrusion-set",  "data-component",   "data-source",    "asset",
};

std::string replace_all(std::string_view text, char from, char to) {
    std::string out(text);
    std::replace(out.begin(), out.end(), from, to);
    return out;
}

// Name minus "_<target kind>" suffix; empty when the suffix is missing.
std::string verb_stem(const RelationSignature& sig) {
    const std::string suffix = "_" + kind_relation_token(sig.target_kind);
    if (sig.name.size() <= suffix.size() ||
        sig.name.compare(sig.name.size() - suffix.size(), suffix.size(), suffix) != 0) {
        return {};
    }
    return sig.name.substr(0, sig.name.size() - suffix.size());
}

std::vector<std::string> split_tabs(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        out.emplace_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

std::string_view kind_token(EntityKind kind) { return kKindTokens[index_of(kind)]; }

std::string kind_relation_token(EntityKind kind) { return replace_all(kind_token(kind), '-', '_'); }

std::string kind_display_name(EntityKind kind) { return replace_all(kind_token(kind), '-', ' '); }

std::optional<EntityKind> parse_kind(std::string_view token) {
    for (std::size_t i = 0; i < kKindTokens.size(); ++i) {
        if (kKindTokens[i] == token) return kAllKinds[i];
    }
    return std::nullopt;
}

std::optional<EntityKind> parse_kind_relation_token(std::string_view token) {
    for (EntityKind kind : kAllKinds) {
        if (kind_relation_token(kind) == token) return kind;
    }
    return std::nullopt;
}

std::string type_seed_relation(EntityKind kind) {
    return "is_" + kind_relation_token(kind) + "_type";
}

std::optional<EntityKind> parse_type_seed_relation(std::string_view token) {
    constexpr std::string_view prefix = "is_";
    constexpr std::string_view suffix = "_type";
    if (token.size() <= prefix.size() + suffix.size() || !token.starts_with(prefix) ||
        !token.ends_with(suffix)) {
        return std::nullopt;
    }
    return parse_kind_relation_token(
        token.substr(prefix.size(), token.size() - prefix.size() - suffix.size()));
}

void RelationRegistry::insert_one(const RelationSignature& sig) {
    auto key = std::make_pair(sig.source_kind, sig.name);
    if (auto it = by_key_.find(key); it != by_key_.end()) {
        if (signatures_[it->second] == sig) return;
        throw RegistryFormatError("conflicting signature for (" +
                                  std::string(kind_token(sig.source_kind)) + ", " + sig.name + ")");
    }
    auto pos = std::lower_bound(signatures_.begin(), signatures_.end(), sig,
                                [](const RelationSignature& a, const RelationSignature& b) {
                                    return std::tie(a.source_kind, a.name) <
                                           std::tie(b.source_kind, b.name);
                                });
    signatures_.insert(pos, sig);
    by_key_.clear();
    for (std::size_t i = 0; i < signatures_.size(); ++i) {
        by_key_.emplace(std::make_pair(signatures_[i].source_kind, signatures_[i].name), i);
    }
    canonical_.insert(sig.name);
}

void RelationRegistry::add(const RelationSignature& forward) {
    if (forward.name == forward.inverse_name) {
        throw RegistryFormatError("self-inverse relation not allowed: " + forward.name);
    }
    insert_one(forward);
    insert_one(RelationSignature{forward.target_kind, forward.inverse_name, forward.source_kind,
                                 forward.name});
}

void RelationRegistry::add_alias(std::string alias, std::string canonical) {
    if (!is_canonical(canonical)) {
        throw RegistryFormatError("alias '" + alias + "' targets unknown relation '" + canonical +
                                  "'");
    }
    if (is_canonical(alias)) {
        throw RegistryFormatError("alias shadows canonical relation: " + alias);
    }
    if (auto it = aliases_.find(alias); it != aliases_.end() && it->second != canonical) {
        throw RegistryFormatError("alias '" + alias + "' already maps to '" + it->second + "'");
    }
    aliases_[std::move(alias)] = std::move(canonical);
}

void RelationRegistry::derive_stem_aliases() {
    std::map<std::string, std::set<std::string>> stems;
    for (const auto& sig : signatures_) {
        if (auto stem = verb_stem(sig); !stem.empty()) stems[stem].insert(sig.name);
    }
    contextual_.clear();
    for (const auto& [stem, names] : stems) {
        if (is_canonical(stem)) continue;
        if (names.size() == 1) {
            if (!aliases_.contains(stem)) aliases_[stem] = *names.begin();
            continue;
        }
        auto& per_kind = contextual_[stem];
        for (EntityKind kind : kAllKinds) {
            std::vector<std::string> hits;
            for (const auto& name : names) {
                if (find(kind, name) != nullptr) hits.push_back(name);
            }
            if (hits.size() == 1) per_kind[kind] = hits.front();
        }
    }
}

const RelationSignature* RelationRegistry::find(EntityKind source, std::string_view name) const {
    auto it = by_key_.find(std::make_pair(source, std::string(name)));
    return it == by_key_.end() ? nullptr : &signatures_[it->second];
}

const RelationSignature& RelationRegistry::signature_of(EntityKind source,
                                                        std::string_view name) const {
    if (const auto* sig = find(source, name)) return *sig;
    throw NoSuchSignature("no relation '" + std::string(name) + "' from " +
                          std::string(kind_token(source)));
}

bool RelationRegistry::is_canonical(std::string_view token) const {
    return canonical_.find(token) != canonical_.end();
}

bool RelationRegistry::is_contextual_alias(std::string_view token) const {
    return contextual_.find(token) != contextual_.end();
}

std::string RelationRegistry::normalize(std::string_view token,
                                        std::optional<EntityKind> source) const {
    if (token.empty()) throw UnknownRelation("empty relation token");
    if (is_canonical(token)) return std::string(token);
    if (auto it = aliases_.find(token); it != aliases_.end()) return it->second;
    if (auto it = contextual_.find(token); it != contextual_.end()) {
        if (source) {
            if (auto hit = it->second.find(*source); hit != it->second.end()) return hit->second;
            throw UnknownRelation("relation '" + std::string(token) + "' is ambiguous from " +
                                  std::string(kind_token(*source)));
        }
        throw UnknownRelation("relation '" + std::string(token) +
                              "' needs a source kind to resolve");
    }
    throw UnknownRelation("unknown relation '" + std::string(token) + "'");
}

std::string RelationRegistry::inverse_of(EntityKind source, std::string_view name) const {
    return signature_of(source, name).inverse_name;
}

std::vector<const RelationSignature*> RelationRegistry::outgoing(EntityKind source) const {
    std::vector<const RelationSignature*> out;
    for (const auto& sig : signatures_) {
        if (sig.source_kind == source) out.push_back(&sig);
    }
    return out;
}

std::vector<std::string> RelationRegistry::relation_names() const {
    return {canonical_.begin(), canonical_.end()};
}

std::string RelationRegistry::export_table() const {
    std::ostringstream out;
    for (const auto& sig : signatures_) {
        out << kind_token(sig.source_kind) << '\t' << sig.name << '\t'
            << kind_token(sig.target_kind) << '\t' << sig.inverse_name << '\n';
    }
    for (const auto& [alias, canonical] : aliases_) {
        out << "ALIAS\t" << alias << '\t' << canonical << '\n';
    }
    return out.str();
}

RelationRegistry RelationRegistry::import_table(std::string_view text) {
    RelationRegistry registry;
    std::vector<std::pair<std::string, std::string>> aliases;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        auto fields = split_tabs(line);
        auto where = " (line " + std::to_string(line_no) + ")";
        if (fields.size() == 3 && fields[0] == "ALIAS") {
            aliases.emplace_back(fields[1], fields[2]);
            continue;
        }
        if (fields.size() != 4) throw RegistryFormatError("expected 4 fields" + where);
        auto source = parse_kind(fields[0]);
        auto target = parse_kind(fields[2]);
        if (!source || !target) throw RegistryFormatError("unknown entity kind" + where);
        registry.insert_one(RelationSignature{*source, fields[1], *target, fields[3]});
    }
    for (const auto& sig : registry.signatures_) {
        const auto* back = registry.find(sig.target_kind, sig.inverse_name);
        if (back == nullptr || back->inverse_name != sig.name || back->target_kind != sig.source_kind) {
            throw RegistryFormatError("table is not closed under inversion at " + sig.name);
        }
    }
    for (auto& [alias, canonical] : aliases) registry.add_alias(alias, canonical);
    registry.derive_stem_aliases();
    return registry;
}

RelationRegistry build_default_registry(const RegistryOptions& options) {
    using K = EntityKind;
    RelationRegistry registry;

    const std::array<std::pair<K, const char*>, 4> users = {{
        {K::Malware, "used_by_malware"},
        {K::Tool, "used_by_tool"},
        {K::IntrusionSet, "used_by_intrusion_set"},
        {K::Campaign, "used_by_campaign"},
    }};
    for (const auto& [source, inverse] : users) {
        registry.add({source, "uses_attack_pattern", K::AttackPattern, inverse});
    }
    registry.add({K::IntrusionSet, "uses_malware", K::Malware, "used_by_intrusion_set"});
    registry.add({K::Campaign, "uses_malware", K::Malware, "used_by_campaign"});
    registry.add({K::IntrusionSet, "uses_tool", K::Tool, "used_by_intrusion_set"});
    registry.add({K::Campaign, "uses_tool", K::Tool, "used_by_campaign"});

    registry.add({K::AttackPattern, "mitigated_by_course_of_action", K::CourseOfAction,
                  "mitigates_attack_pattern"});
    registry.add({K::AttackPattern, "detected_by_data_component", K::DataComponent,
                  "detects_attack_pattern"});
    registry.add({K::DataComponent, "provided_by_data_source", K::DataSource,
                  "provides_data_component"});
    registry.add({K::Campaign, "attributed_to_intrusion_set", K::IntrusionSet,
                  "responsible_for_campaign"});
    registry.add({K::AttackPattern, "targets_asset", K::Asset, "targeted_by_attack_pattern"});
    if (options.include_subtechniques) {
        registry.add({K::AttackPattern, "subtechnique_of_attack_pattern", K::AttackPattern,
                      "has_subtechnique_attack_pattern"});
    }

    registry.add_alias("mitigated_by", "mitigated_by_course_of_action");
    registry.add_alias("targets", "targets_asset");
    registry.add_alias("attributed_to", "attributed_to_intrusion_set");
    registry.derive_stem_aliases();
    return registry;
}

std::string normalize_relation(const RelationRegistry& registry, std::string_view token,
                               std::optional<EntityKind> source_kind) {
    return registry.normalize(token, source_kind);
}

const RelationSignature& signature_of(const RelationRegistry& registry, EntityKind source_kind,
                                      std::string_view token) {
    return registry.signature_of(source_kind, token);
}

}  // namespace titan::ontology
