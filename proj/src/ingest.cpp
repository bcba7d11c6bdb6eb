#include "titan/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>
#include <utility>

#include "titan/error.hpp"

namespace titan::kg {

namespace {

using ontology::EntityKind;

std::optional<EntityKind> kind_for_stix_type(std::string_view type) {
    static const std::map<std::string_view, EntityKind> kTypes = {
        {"attack-pattern", EntityKind::AttackPattern},
        {"course-of-action", EntityKind::CourseOfAction},
        {"malware", EntityKind::Malware},
        {"tool", EntityKind::Tool},
        {"campaign", EntityKind::Campaign},
        {"intrusion-set", EntityKind::IntrusionSet},
        {"x-mitre-data-component", EntityKind::DataComponent},
        {"x-mitre-data-source", EntityKind::DataSource},
        {"x-mitre-asset", EntityKind::Asset},
    };
    auto it = kTypes.find(type);
    if (it == kTypes.end()) return std::nullopt;
    return it->second;
}

struct CountryKeyword {
    std::string_view tag;
    std::array<std::string_view, 3> forms;
};

// Best-effort attribution keywords; the tag is what `filter <country>` matches.
constexpr std::array<CountryKeyword, 18> kCountries = {{
    {"russia", {"russia", "russian", "russia-based"}},
    {"china", {"china", "chinese", "china-based"}},
    {"iran", {"iran", "iranian", "iran-based"}},
    {"north korea", {"north korea", "north korean", "dprk"}},
    {"south korea", {"south korea", "south korean", ""}},
    {"vietnam", {"vietnam", "vietnamese", ""}},
    {"pakistan", {"pakistan", "pakistani", ""}},
    {"india", {"india", "indian", ""}},
    {"lebanon", {"lebanon", "lebanese", ""}},
    {"turkey", {"turkey", "turkish", ""}},
    {"belarus", {"belarus", "belarusian", ""}},
    {"ukraine", {"ukraine", "ukrainian", ""}},
    {"nigeria", {"nigeria", "nigerian", ""}},
    {"israel", {"israel", "israeli", ""}},
    {"syria", {"syria", "syrian", ""}},
    {"palestine", {"palestine", "palestinian", "gaza"}},
    {"united arab emirates", {"united arab emirates", "emirati", ""}},
    {"united states", {"united states", "u.s.", ""}},
}};

std::string lowercase(std::string_view text) {
    std::string out(text);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool contains_word(std::string_view haystack, std::string_view word) {
    for (auto pos = haystack.find(word); pos != std::string_view::npos;
         pos = haystack.find(word, pos + 1)) {
        bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]);
        auto end = pos + word.size();
        bool right_ok = end >= haystack.size() || !is_word_char(haystack[end]) ||
                        !is_word_char(word.back());
        if (left_ok && right_ok) return true;
    }
    return false;
}

std::string asset_id(std::string_view platform) {
    std::string slug;
    for (char c : lowercase(platform)) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            slug += c;
        } else if (!slug.empty() && slug.back() != '-') {
            slug += '-';
        }
    }
    while (!slug.empty() && slug.back() == '-') slug.pop_back();
    return "x-titan-asset--" + slug;
}

Node make_node(const StixObject& obj, EntityKind kind) {
    Node node;
    node.id = obj.id;
    node.kind = kind;
    node.name = !obj.name.empty() ? obj.name : (!obj.external_id.empty() ? obj.external_id : obj.id);
    node.description = obj.description;

    const auto name_key = normalize_name(node.name);
    std::set<std::string> seen{name_key};
    auto add_alias = [&](const std::string& alias) {
        auto key = normalize_name(alias);
        if (key.empty() || !seen.insert(key).second) return;
        node.aliases.push_back(alias);
    };
    for (const auto& alias : obj.aliases) add_alias(alias);
    if (!obj.external_id.empty()) add_alias(obj.external_id);

    for (const auto& label : obj.labels) node.tags.push_back(lowercase(label));
    for (const auto& platform : obj.platforms) node.tags.push_back(lowercase(platform));
    std::string country_text = obj.description;
    for (const auto& alias : obj.aliases) country_text += "\n" + alias;
    for (auto& tag : extract_country_tags(country_text)) node.tags.push_back(std::move(tag));
    return node;
}

}  // namespace

std::vector<std::string> extract_country_tags(std::string_view text) {
    const auto lower = lowercase(text);
    std::vector<std::string> tags;
    for (const auto& country : kCountries) {
        for (auto form : country.forms) {
            if (!form.empty() && contains_word(lower, form)) {
                tags.emplace_back(country.tag);
                break;
            }
        }
    }
    return tags;
}

KnowledgeGraph build_graph(const std::vector<StixObject>& objects,
                           std::shared_ptr<const RelationRegistry> registry,
                           const BuildOptions& options, BuildReport* report) {
    BuildReport local;
    BuildReport& rep = report ? *report : local;
    rep = BuildReport{};

    GraphBuilder builder(registry);
    auto dropped = [&](const StixObject& obj) {
        return options.drop_revoked && (obj.revoked || obj.deprecated);
    };
    auto unknown_signature = [&](const std::string& message) {
        if (!options.lenient) throw UnknownSignature(message);
        rep.skipped.push_back(message);
    };

    std::vector<std::pair<std::string, std::string>> platform_edges;  // (ap id, platform)
    std::vector<std::pair<std::string, std::string>> data_source_refs;
    for (const auto& obj : objects) {
        if (obj.is_relationship()) continue;
        auto kind = kind_for_stix_type(obj.type);
        if (!kind) {
            ++rep.ignored_objects;
            continue;
        }
        if (dropped(obj)) {
            ++rep.dropped_objects;
            continue;
        }
        builder.add_node(make_node(obj, *kind));
        if (*kind == EntityKind::AttackPattern && options.synthesize_assets) {
            for (const auto& platform : obj.platforms) platform_edges.emplace_back(obj.id, platform);
        }
        if (*kind == EntityKind::DataComponent && !obj.data_source_ref.empty()) {
            data_source_refs.emplace_back(obj.id, obj.data_source_ref);
        }
    }

    for (const auto& [technique, platform] : platform_edges) {
        auto id = asset_id(platform);
        if (!builder.has_node(id)) {
            Node asset;
            asset.id = id;
            asset.name = platform;
            asset.kind = EntityKind::Asset;
            asset.tags.push_back(lowercase(platform));
            builder.add_node(std::move(asset));
        }
        builder.add_edge(technique, "targets_asset", id);
    }

    for (const auto& [component, source] : data_source_refs) {
        const Node* target = builder.find_node(source);
        if (target == nullptr) {
            ++rep.dangling_relationships;
            continue;
        }
        if (registry->find(EntityKind::DataComponent, "provided_by_data_source") == nullptr) {
            unknown_signature("no signature for data-component provided_by_data_source");
            continue;
        }
        builder.add_edge(component, "provided_by_data_source", source);
    }

    for (const auto& obj : objects) {
        if (!obj.is_relationship()) continue;
        if (dropped(obj)) {
            ++rep.dropped_objects;
            continue;
        }
        if (obj.relationship_type == "revoked-by") continue;
        const Node* src = builder.find_node(obj.source_ref);
        const Node* dst = builder.find_node(obj.target_ref);
        if (src == nullptr || dst == nullptr) {
            ++rep.dangling_relationships;
            continue;
        }
        std::string verb = obj.relationship_type;
        std::replace(verb.begin(), verb.end(), '-', '_');
        const std::string relation = verb + "_" + ontology::kind_relation_token(dst->kind);
        if (registry->find(src->kind, relation) == nullptr) {
            unknown_signature(obj.id + ": no signature (" +
                              std::string(ontology::kind_token(src->kind)) + ", " +
                              obj.relationship_type + ", " +
                              std::string(ontology::kind_token(dst->kind)) + ")");
            continue;
        }
        builder.add_edge(obj.source_ref, relation, obj.target_ref);
    }
    return builder.build();
}

KnowledgeGraph build_graph(const std::vector<StixObject>& objects, const BuildOptions& options,
                           BuildReport* report) {
    return build_graph(objects,
                       std::make_shared<const RelationRegistry>(ontology::build_default_registry()),
                       options, report);
}

}  // namespace titan::kg
