#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "titan/graph.hpp"
#include "titan/stix.hpp"

namespace titan::kg {

struct BuildOptions {
    bool drop_revoked = true;  // revoked or x_mitre_deprecated objects
    /// Relationships with no registry signature are reported instead of thrown.
    bool lenient = false;
    /// Derive asset nodes from attack-pattern x_mitre_platforms.
    bool synthesize_assets = true;
};

struct BuildReport {
    std::size_t dropped_objects = 0;
    std::size_t ignored_objects = 0;        // STIX types outside the ontology
    std::size_t dangling_relationships = 0;  // an endpoint was dropped or ignored
    std::vector<std::string> skipped;        // UnknownSignature messages (lenient mode)
};

/// Maps STIX objects onto the ontology: typed relation names are the
/// relationship verb plus the target kind (uses + malware -> uses_malware).
KnowledgeGraph build_graph(const std::vector<StixObject>& objects,
                           std::shared_ptr<const RelationRegistry> registry,
                           const BuildOptions& options = {}, BuildReport* report = nullptr);

KnowledgeGraph build_graph(const std::vector<StixObject>& objects,
                           const BuildOptions& options = {}, BuildReport* report = nullptr);

/// Lowercase country keywords mentioned in `text` ("Russian" -> "russia").
std::vector<std::string> extract_country_tags(std::string_view text);

}  // namespace titan::kg
