#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace titan::kg {

/// The subset of a STIX 2.x object the graph builder consumes.
struct StixObject {
    std::string type;
    std::string id;
    std::string name;
    std::vector<std::string> aliases;  // aliases + x_mitre_aliases, in document order
    std::string description;
    std::vector<std::string> labels;
    std::vector<std::string> platforms;  // x_mitre_platforms
    std::string external_id;             // ATT&CK id (T1059, G0007, ...) when present
    bool revoked = false;
    bool deprecated = false;  // x_mitre_deprecated

    // relationship objects
    std::string relationship_type;
    std::string source_ref;
    std::string target_ref;

    // x-mitre-data-component
    std::string data_source_ref;

    bool is_relationship() const { return type == "relationship"; }
};

/// Parses a bundle document (`{"type": "bundle", "objects": [...]}`) or a bare
/// object array. Throws MalformedBundle with the byte offset of the failure.
std::vector<StixObject> parse_stix_bundle(std::string_view document);

std::vector<StixObject> read_stix_bundle_file(const std::string& path);

}  // namespace titan::kg
