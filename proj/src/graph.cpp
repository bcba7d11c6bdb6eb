#include "titan/graph.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "titan/error.hpp"

namespace titan::kg {

namespace {

constexpr std::string_view kSnapshotHeader = "# titan-graph-snapshot v1";

std::string escape_field(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '|': out += "\\|"; break;
            default: out += c;
        }
    }
    return out;
}

// Splits on unescaped `sep` and unescapes each piece.
std::vector<std::string> split_escaped(std::string_view text, char sep) {
    std::vector<std::string> out(1);
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\\' && i + 1 < text.size()) {
            char n = text[++i];
            switch (n) {
                case 't': out.back() += '\t'; break;
                case 'n': out.back() += '\n'; break;
                case 'r': out.back() += '\r'; break;
                default: out.back() += n;
            }
        } else if (c == sep) {
            out.emplace_back();
        } else {
            out.back() += c;
        }
    }
    return out;
}

std::string join_escaped(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += '|';
        out += escape_field(items[i]);
    }
    return out;
}

std::vector<std::string> split_list(std::string_view field) {
    if (field.empty()) return {};
    return split_escaped(field, '|');
}

std::vector<std::string_view> split_raw_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string unescape(std::string_view text) { return split_escaped(text, '\0').front(); }

}  // namespace

std::string normalize_name(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

KnowledgeGraph::KnowledgeGraph()
    : registry_(std::make_shared<const RelationRegistry>(ontology::build_default_registry())) {}

std::optional<NodeIndex> KnowledgeGraph::find(std::string_view id) const {
    auto it = id_index_.find(std::string(id));
    if (it == id_index_.end()) return std::nullopt;
    return it->second;
}

const Node& KnowledgeGraph::node_by_id(std::string_view id) const {
    auto index = find(id);
    if (!index) throw UnknownNode("no node with id '" + std::string(id) + "'");
    return node(*index);
}

std::span<const NodeIndex> KnowledgeGraph::nodes_of_kind(EntityKind kind) const {
    return by_kind_[ontology::index_of(kind)];
}

std::span<const NodeIndex> KnowledgeGraph::neighbors(NodeIndex index,
                                                     std::string_view relation) const {
    const auto& adj = adjacency_[to_underlying(index)];
    auto it = std::lower_bound(adj.begin(), adj.end(), relation,
                               [](const Adjacency& a, std::string_view r) { return a.relation < r; });
    if (it == adj.end() || it->relation != relation) return {};
    return it->targets;
}

std::span<const NodeIndex> KnowledgeGraph::lookup_name(std::string_view text) const {
    auto it = name_index_.find(normalize_name(text));
    if (it == name_index_.end()) return {};
    return it->second;
}

NodeSet KnowledgeGraph::resolve_name(std::string_view text, std::optional<EntityKind> kind) const {
    const auto key = normalize_name(text);
    NodeSet by_name;
    NodeSet by_alias;
    for (NodeIndex index : lookup_name(text)) {
        const Node& n = node(index);
        if (kind && n.kind != *kind) continue;
        if (normalize_name(n.name) == key) {
            by_name.push_back(index);
        } else {
            by_alias.push_back(index);
        }
    }
    return by_name.empty() ? by_alias : by_name;
}

std::vector<Edge> KnowledgeGraph::edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (std::uint32_t i = 0; i < adjacency_.size(); ++i) {
        for (const auto& adj : adjacency_[i]) {
            for (NodeIndex dst : adj.targets) out.push_back(Edge{NodeIndex{i}, adj.relation, dst});
        }
    }
    return out;
}

std::string KnowledgeGraph::export_snapshot() const {
    std::ostringstream out;
    out << kSnapshotHeader << '\n';
    for (const auto& sig : registry_->signatures()) {
        out << "REL\t" << ontology::kind_token(sig.source_kind) << '\t' << sig.name << '\t'
            << ontology::kind_token(sig.target_kind) << '\t' << sig.inverse_name << '\n';
    }
    for (const auto& [alias, canonical] : registry_->aliases()) {
        out << "ALIAS\t" << alias << '\t' << canonical << '\n';
    }
    for (const auto& n : nodes_) {
        out << "NODE\t" << escape_field(n.id) << '\t' << ontology::kind_token(n.kind) << '\t'
            << escape_field(n.name) << '\t' << join_escaped(n.aliases) << '\t'
            << join_escaped(n.tags) << '\t' << escape_field(n.description) << '\n';
    }
    for (const auto& e : edges()) {
        out << "EDGE\t" << escape_field(node(e.src).id) << '\t' << e.relation << '\t'
            << escape_field(node(e.dst).id) << '\n';
    }
    return out.str();
}

GraphBuilder::GraphBuilder(std::shared_ptr<const RelationRegistry> registry)
    : registry_(std::move(registry)) {}

bool GraphBuilder::add_node(Node node) {
    if (node.id.empty()) throw UnknownNode("node id must be non-empty");
    if (node.name.empty()) throw UnknownNode("node '" + node.id + "' has an empty name");
    std::sort(node.tags.begin(), node.tags.end());
    node.tags.erase(std::unique(node.tags.begin(), node.tags.end()), node.tags.end());
    auto id = node.id;
    return nodes_.emplace(std::move(id), std::move(node)).second;
}

bool GraphBuilder::has_node(std::string_view id) const { return nodes_.find(id) != nodes_.end(); }

Node* GraphBuilder::find_node(std::string_view id) {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
}

void GraphBuilder::add_edge(const std::string& src, const std::string& relation,
                            const std::string& dst) {
    auto s = nodes_.find(src);
    auto d = nodes_.find(dst);
    if (s == nodes_.end()) throw UnknownNode("edge source '" + src + "' is not a node");
    if (d == nodes_.end()) throw UnknownNode("edge target '" + dst + "' is not a node");
    const auto& sig = registry_->signature_of(s->second.kind, relation);
    if (sig.target_kind != d->second.kind) {
        throw NoSuchSignature("relation '" + relation + "' from " +
                              std::string(ontology::kind_token(s->second.kind)) + " targets " +
                              std::string(ontology::kind_token(sig.target_kind)) + ", not " +
                              std::string(ontology::kind_token(d->second.kind)));
    }
    edges_.emplace(src, relation, dst);
    edges_.emplace(dst, sig.inverse_name, src);
}

KnowledgeGraph GraphBuilder::build() const {
    KnowledgeGraph graph;
    graph.registry_ = registry_;

    graph.nodes_.reserve(nodes_.size());
    for (const auto& [id, node] : nodes_) graph.nodes_.push_back(node);
    std::sort(graph.nodes_.begin(), graph.nodes_.end(), [](const Node& a, const Node& b) {
        return std::tie(a.kind, a.name, a.id) < std::tie(b.kind, b.name, b.id);
    });

    for (std::uint32_t i = 0; i < graph.nodes_.size(); ++i) {
        const Node& n = graph.nodes_[i];
        NodeIndex index{i};
        graph.id_index_.emplace(n.id, index);
        graph.by_kind_[ontology::index_of(n.kind)].push_back(index);
        std::set<std::string> keys{normalize_name(n.name)};
        for (const auto& alias : n.aliases) keys.insert(normalize_name(alias));
        for (const auto& key : keys) {
            if (!key.empty()) graph.name_index_[key].push_back(index);
        }
    }

    std::vector<std::map<std::string, NodeSet>> adjacency(graph.nodes_.size());
    for (const auto& [src, rel, dst] : edges_) {
        adjacency[to_underlying(graph.id_index_.at(src))][rel].push_back(graph.id_index_.at(dst));
    }
    graph.adjacency_.resize(graph.nodes_.size());
    for (std::size_t i = 0; i < adjacency.size(); ++i) {
        for (auto& [rel, targets] : adjacency[i]) {
            std::sort(targets.begin(), targets.end());
            graph.adjacency_[i].push_back(Adjacency{rel, std::move(targets)});
        }
    }
    graph.edge_count_ = edges_.size();
    return graph;
}

Census node_census(const KnowledgeGraph& graph) {
    Census census;
    for (EntityKind kind : ontology::kAllKinds) {
        census.per_kind[ontology::index_of(kind)] = graph.nodes_of_kind(kind).size();
    }
    census.nodes = graph.node_count();
    census.edges = graph.edge_count();
    return census;
}

KnowledgeGraph import_snapshot(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& why) {
        throw SnapshotFormatError(why + " (line " + std::to_string(line_no) + ")");
    };

    if (!std::getline(in, line) || line != kSnapshotHeader) {
        line_no = 1;
        fail("missing snapshot header");
    }
    ++line_no;

    std::string registry_table;
    std::vector<Node> nodes;
    std::vector<std::tuple<std::string, std::string, std::string>> edges;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        auto fields = split_raw_tabs(line);
        const auto tag = fields.front();
        if (tag == "REL") {
            if (fields.size() != 5) fail("REL needs 4 fields");
            registry_table += line.substr(4) + "\n";
        } else if (tag == "ALIAS") {
            if (fields.size() != 3) fail("ALIAS needs 2 fields");
            registry_table += line + "\n";
        } else if (tag == "NODE") {
            if (fields.size() != 7) fail("NODE needs 6 fields");
            Node n;
            n.id = unescape(fields[1]);
            auto kind = ontology::parse_kind(fields[2]);
            if (!kind) fail("unknown kind '" + std::string(fields[2]) + "'");
            n.kind = *kind;
            n.name = unescape(fields[3]);
            n.aliases = split_list(fields[4]);
            n.tags = split_list(fields[5]);
            n.description = unescape(fields[6]);
            nodes.push_back(std::move(n));
        } else if (tag == "EDGE") {
            if (fields.size() != 4) fail("EDGE needs 3 fields");
            edges.emplace_back(unescape(fields[1]), std::string(fields[2]), unescape(fields[3]));
        } else {
            fail("unknown record '" + std::string(tag) + "'");
        }
    }

    std::shared_ptr<const RelationRegistry> registry;
    try {
        registry = std::make_shared<const RelationRegistry>(
            registry_table.empty() ? ontology::build_default_registry()
                                   : RelationRegistry::import_table(registry_table));
    } catch (const Error& e) {
        throw SnapshotFormatError(std::string("bad registry section: ") + e.what());
    }

    GraphBuilder builder(registry);
    for (auto& n : nodes) {
        auto id = n.id;
        if (!builder.add_node(std::move(n))) {
            throw SnapshotFormatError("duplicate node id '" + id + "'");
        }
    }
    for (const auto& [src, rel, dst] : edges) {
        try {
            builder.add_edge(src, rel, dst);
        } catch (const Error& e) {
            throw SnapshotFormatError(std::string("bad edge: ") + e.what());
        }
    }
    return builder.build();
}

KnowledgeGraph read_snapshot_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open snapshot: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return import_snapshot(buffer.str());
}

void write_snapshot_file(const KnowledgeGraph& graph, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write snapshot: " + path);
    out << graph.export_snapshot();
}

InvariantReport audit_graph(const KnowledgeGraph& graph) {
    const auto& registry = graph.registry();
    InvariantReport report;
    for (std::uint32_t i = 0; i < graph.node_count(); ++i) {
        const auto src = NodeIndex{i};
        for (const auto& adj : graph.adjacency(src)) {
            const auto* sig = registry.find(graph.node(src).kind, adj.relation);
            for (auto dst : adj.targets) {
                ++report.edges;
                if (sig == nullptr || sig->target_kind != graph.node(dst).kind) {
                    ++report.untyped;
                    continue;
                }
                const auto back = graph.neighbors(dst, sig->inverse_name);
                if (!std::binary_search(back.begin(), back.end(), src)) ++report.unpaired;
            }
        }
    }
    return report;
}

}  // namespace titan::kg
