#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "titan/ontology.hpp"

namespace titan::kg {

using ontology::EntityKind;
using ontology::RelationRegistry;

/// Position of a node in the graph's canonical (kind, name, id) order.
enum class NodeIndex : std::uint32_t {};

constexpr std::uint32_t to_underlying(NodeIndex index) { return static_cast<std::uint32_t>(index); }

/// Sorted, duplicate-free list of nodes. Since indices follow the canonical
/// node order, a sorted NodeSet is also sorted by (kind, name, id).
using NodeSet = std::vector<NodeIndex>;

struct Node {
    std::string id;
    std::string name;
    EntityKind kind = EntityKind::AttackPattern;
    std::vector<std::string> aliases;
    std::string description;
    std::vector<std::string> tags;  // lowercase, sorted, unique

    friend bool operator==(const Node&, const Node&) = default;
};

struct Adjacency {
    std::string relation;
    NodeSet targets;
};

struct Edge {
    NodeIndex src;
    std::string_view relation;
    NodeIndex dst;
};

struct Census {
    std::array<std::size_t, ontology::kEntityKindCount> per_kind{};
    std::size_t nodes = 0;
    std::size_t edges = 0;  // directed; forward and reverse each count once

    friend bool operator==(const Census&, const Census&) = default;
};

/// Lowercases ASCII and collapses whitespace runs; used for name/alias keys.
std::string normalize_name(std::string_view text);

/// Immutable typed multigraph. Build with GraphBuilder or import_snapshot.
class KnowledgeGraph {
public:
    KnowledgeGraph();

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edge_count_; }

    const Node& node(NodeIndex index) const { return nodes_[to_underlying(index)]; }
    std::optional<NodeIndex> find(std::string_view id) const;
    const Node& node_by_id(std::string_view id) const;

    std::span<const NodeIndex> nodes_of_kind(EntityKind kind) const;
    std::span<const NodeIndex> neighbors(NodeIndex index, std::string_view relation) const;
    const std::vector<Adjacency>& adjacency(NodeIndex index) const {
        return adjacency_[to_underlying(index)];
    }

    /// Nodes whose normalized name or alias equals normalize_name(text).
    std::span<const NodeIndex> lookup_name(std::string_view text) const;
    /// Exact name matches win over alias matches; optionally restricted to a kind.
    NodeSet resolve_name(std::string_view text,
                         std::optional<EntityKind> kind = std::nullopt) const;

    /// Every directed edge, in (src, relation, dst) order.
    std::vector<Edge> edges() const;

    const RelationRegistry& registry() const { return *registry_; }
    std::shared_ptr<const RelationRegistry> registry_ptr() const { return registry_; }

    /// Line-oriented, deterministic text export (see docs/formats.md).
    std::string export_snapshot() const;

private:
    friend class GraphBuilder;

    std::shared_ptr<const RelationRegistry> registry_;
    std::vector<Node> nodes_;
    std::vector<std::vector<Adjacency>> adjacency_;
    std::array<NodeSet, ontology::kEntityKindCount> by_kind_;
    std::unordered_map<std::string, NodeIndex> id_index_;
    std::map<std::string, NodeSet, std::less<>> name_index_;
    std::size_t edge_count_ = 0;
};

/// Accumulates nodes and typed edges; every edge is inserted with its reverse.
class GraphBuilder {
public:
    explicit GraphBuilder(std::shared_ptr<const RelationRegistry> registry);

    /// Returns false if a node with the same id already exists.
    bool add_node(Node node);
    bool has_node(std::string_view id) const;
    Node* find_node(std::string_view id);

    /// Adds (src, relation, dst) and its registry inverse. Throws UnknownNode
    /// or NoSuchSignature when the edge is not well-typed.
    void add_edge(const std::string& src, const std::string& relation, const std::string& dst);

    const RelationRegistry& registry() const { return *registry_; }

    KnowledgeGraph build() const;

private:
    std::shared_ptr<const RelationRegistry> registry_;
    std::map<std::string, Node, std::less<>> nodes_;
    std::set<std::tuple<std::string, std::string, std::string>> edges_;
};

Census node_census(const KnowledgeGraph& graph);

struct InvariantReport {
    std::size_t edges = 0;
    std::size_t untyped = 0;   // no signature for (source kind, relation) or wrong target kind
    std::size_t unpaired = 0;  // reverse edge missing
    bool ok() const { return untyped == 0 && unpaired == 0; }
};

/// Audits typedness and bidirectionality of every edge.
InvariantReport audit_graph(const KnowledgeGraph& graph);

/// Inverse of export_snapshot. Throws SnapshotFormatError.
KnowledgeGraph import_snapshot(std::string_view text);

KnowledgeGraph read_snapshot_file(const std::string& path);
void write_snapshot_file(const KnowledgeGraph& graph, const std::string& path);

}  // namespace titan::kg
