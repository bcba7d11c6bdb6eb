#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "titan/graph.hpp"
#include "titan/pathlang.hpp"

namespace titan::exec {

using kg::KnowledgeGraph;
using kg::NodeIndex;
using kg::NodeSet;

/// Working node sets, one per branch. A single branch until `select` runs.
struct Frontier {
    std::vector<NodeSet> branches;
    std::vector<std::string> branch_labels;  // select names, empty before select

    static Frontier single(NodeSet nodes) { return Frontier{{std::move(nodes)}, {}}; }
    friend bool operator==(const Frontier&, const Frontier&) = default;
};

struct TraversedEdge {
    NodeIndex src;
    std::string relation;
    NodeIndex dst;
    friend bool operator==(const TraversedEdge&, const TraversedEdge&) = default;
};

struct StepRecord {
    pathlang::PathStep step;
    std::vector<std::size_t> input_sizes;   // per branch
    std::vector<std::size_t> output_sizes;  // per branch
    std::vector<TraversedEdge> edges;       // traverse steps only
    friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct ExecutionResult {
    NodeSet answers;  // canonical (kind, name, id) order
    std::vector<StepRecord> trace;
    NodeSet start_nodes;
    friend bool operator==(const ExecutionResult&, const ExecutionResult&) = default;
};

Frontier step_traverse(const KnowledgeGraph& graph, const Frontier& frontier,
                       std::string_view relation, std::vector<TraversedEdge>* edges = nullptr);
/// Keeps nodes whose name, aliases, tags or description contain `keyword`
/// (case-insensitive, whole phrase).
Frontier step_filter(const KnowledgeGraph& graph, const Frontier& frontier,
                     std::string_view keyword);
/// Splits a single-branch frontier into one branch per name. Throws
/// SelectNameUnresolved, or OperatorArity for a multi-branch input.
Frontier step_select(const KnowledgeGraph& graph, const Frontier& frontier,
                     const std::vector<std::string>& names);
/// Intersection of all branches. Throws OperatorArity below two branches.
Frontier step_exec_common(const Frontier& frontier);
/// First branch minus the union of the others. Throws OperatorArity.
Frontier step_exec_difference(const Frontier& frontier);

bool node_matches_keyword(const kg::Node& node, std::string_view keyword);

/// Runs a validated program. Seeded programs ignore `start`; others need a
/// non-empty start set of the program's start kind (StartKindMismatch).
/// A select left unresolved by an exec operator yields the union of branches.
ExecutionResult execute(const KnowledgeGraph& graph, const pathlang::TypedProgram& program,
                        const std::optional<NodeSet>& start = std::nullopt);

/// Resolves start names (exact name, then alias) to nodes; all must share a
/// kind. Throws UnresolvedEntity.
NodeSet resolve_start_names(const KnowledgeGraph& graph, const std::vector<std::string>& names);

/// Parse, validate against the start nodes' kind, and execute.
ExecutionResult run_path(const KnowledgeGraph& graph, std::string_view path_text,
                         const std::vector<std::string>& start_names = {});

/// Answer names in answer order.
std::vector<std::string> answer_names(const KnowledgeGraph& graph, const ExecutionResult& result);

/// Stable text document: program, start nodes, answers, per-step trace.
std::string format_result(const KnowledgeGraph& graph, const pathlang::TypedProgram& program,
                          const ExecutionResult& result);
/// Same content as a JSON document.
std::string format_result_json(const KnowledgeGraph& graph, const pathlang::TypedProgram& program,
                               const ExecutionResult& result);

}  // namespace titan::exec
