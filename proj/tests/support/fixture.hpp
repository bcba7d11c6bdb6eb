#pragma once

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "titan/graph.hpp"
#include "titan/ingest.hpp"
#include "titan/stix.hpp"

namespace titan::testing {

inline std::string data_path(const std::string& relative) {
    return std::string(TITAN_DATA_DIR) + "/" + relative;
}

inline std::string fixture_bundle_path() { return data_path("fixtures/enterprise-mini.json"); }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

/// The 20-node hand-built fixture graph.
inline const kg::KnowledgeGraph& fixture_graph() {
    static const kg::KnowledgeGraph graph =
        kg::build_graph(kg::read_stix_bundle_file(fixture_bundle_path()));
    return graph;
}

inline kg::NodeIndex node_named(const kg::KnowledgeGraph& graph, const std::string& name) {
    auto nodes = graph.resolve_name(name);
    if (nodes.size() != 1) throw std::runtime_error("fixture lookup failed for " + name);
    return nodes.front();
}

// Lowercase words from every name, alias, tag and description in the graph.
inline std::vector<std::string> fixture_vocabulary(const kg::KnowledgeGraph& g) {
    std::set<std::string> words;
    auto add = [&](const std::string& text) {
        std::string w;
        for (char c : text + " ") {
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '\'') {
                w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            } else if (!w.empty()) {
                words.insert(w);
                w.clear();
            }
        }
    };
    for (std::uint32_t i = 0; i < g.node_count(); ++i) {
        const auto& n = g.node(kg::NodeIndex{i});
        add(n.name);
        add(n.description);
        for (const auto& a : n.aliases) add(a);
        for (const auto& t : n.tags) add(t);
    }
    return {words.begin(), words.end()};
}

}  // namespace titan::testing
