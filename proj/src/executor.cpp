#include "titan/executor.hpp"

#include <algorithm>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "titan/error.hpp"

namespace titan::exec {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

NodeSet set_union(const NodeSet& a, const NodeSet& b) {
    NodeSet out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

void require_branches(const Frontier& frontier, std::string_view op) {
    if (frontier.branches.size() < 2) {
        throw OperatorArity(std::string(op) + " needs at least two branches, got " +
                            std::to_string(frontier.branches.size()));
    }
}

std::vector<std::size_t> branch_sizes(const Frontier& frontier) {
    std::vector<std::size_t> sizes;
    for (const auto& b : frontier.branches) sizes.push_back(b.size());
    return sizes;
}

bool contains_phrase(std::string_view field, const std::string& needle) {
    return kg::normalize_name(field).find(needle) != std::string::npos;
}

}  // namespace

Frontier step_traverse(const KnowledgeGraph& graph, const Frontier& frontier,
                       std::string_view relation, std::vector<TraversedEdge>* edges) {
    Frontier out;
    out.branch_labels = frontier.branch_labels;
    for (const auto& branch : frontier.branches) {
        NodeSet next;
        for (NodeIndex node : branch) {
            auto targets = graph.neighbors(node, relation);
            next.insert(next.end(), targets.begin(), targets.end());
            if (edges != nullptr) {
                for (NodeIndex dst : targets) {
                    edges->push_back(TraversedEdge{node, std::string(relation), dst});
                }
            }
        }
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        out.branches.push_back(std::move(next));
    }
    return out;
}

bool node_matches_keyword(const kg::Node& node, std::string_view keyword) {
    const auto needle = kg::normalize_name(keyword);
    if (needle.empty()) return false;
    if (contains_phrase(node.name, needle)) return true;
    for (const auto& alias : node.aliases) {
        if (contains_phrase(alias, needle)) return true;
    }
    for (const auto& tag : node.tags) {
        if (contains_phrase(tag, needle)) return true;
    }
    return contains_phrase(node.description, needle);
}

Frontier step_filter(const KnowledgeGraph& graph, const Frontier& frontier,
                     std::string_view keyword) {
    Frontier out;
    out.branch_labels = frontier.branch_labels;
    for (const auto& branch : frontier.branches) {
        NodeSet kept;
        std::copy_if(branch.begin(), branch.end(), std::back_inserter(kept),
                     [&](NodeIndex n) { return node_matches_keyword(graph.node(n), keyword); });
        out.branches.push_back(std::move(kept));
    }
    return out;
}

Frontier step_select(const KnowledgeGraph& graph, const Frontier& frontier,
                     const std::vector<std::string>& names) {
    if (frontier.branches.size() != 1) {
        throw OperatorArity("select needs a single-branch frontier");
    }
    const auto& pool = frontier.branches.front();
    Frontier out;
    for (const auto& name : names) {
        const auto key = kg::normalize_name(name);
        NodeSet by_name;
        NodeSet by_alias;
        for (NodeIndex n : pool) {
            const auto& node = graph.node(n);
            if (kg::normalize_name(node.name) == key) {
                by_name.push_back(n);
                continue;
            }
            for (const auto& alias : node.aliases) {
                if (kg::normalize_name(alias) == key) {
                    by_alias.push_back(n);
                    break;
                }
            }
        }
        NodeSet resolved = by_name.empty() ? std::move(by_alias) : std::move(by_name);
        if (resolved.empty()) {
            throw SelectNameUnresolved("select name '" + name + "' matches no node in the frontier");
        }
        out.branches.push_back(std::move(resolved));
        out.branch_labels.push_back(name);
    }
    return out;
}

Frontier step_exec_common(const Frontier& frontier) {
    require_branches(frontier, "exec_common");
    NodeSet acc = frontier.branches.front();
    for (std::size_t i = 1; i < frontier.branches.size(); ++i) {
        NodeSet next;
        const auto& b = frontier.branches[i];
        std::set_intersection(acc.begin(), acc.end(), b.begin(), b.end(), std::back_inserter(next));
        acc = std::move(next);
    }
    return Frontier::single(std::move(acc));
}

Frontier step_exec_difference(const Frontier& frontier) {
    require_branches(frontier, "exec_difference");
    NodeSet others;
    for (std::size_t i = 1; i < frontier.branches.size(); ++i) {
        others = set_union(others, frontier.branches[i]);
    }
    const auto& first = frontier.branches.front();
    NodeSet out;
    std::set_difference(first.begin(), first.end(), others.begin(), others.end(),
                        std::back_inserter(out));
    return Frontier::single(std::move(out));
}

ExecutionResult execute(const KnowledgeGraph& graph, const pathlang::TypedProgram& program,
                        const std::optional<NodeSet>& start) {
    ExecutionResult result;
    Frontier frontier;
    if (pathlang::is_seeded(program.program)) {
        frontier = Frontier::single({});
    } else {
        if (!start || start->empty()) {
            throw StartKindMismatch("path needs start nodes of kind " +
                                    std::string(ontology::kind_token(program.start_kind)));
        }
        NodeSet nodes = *start;
        std::sort(nodes.begin(), nodes.end());
        nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
        for (NodeIndex n : nodes) {
            if (graph.node(n).kind != program.start_kind) {
                throw StartKindMismatch("start node '" + graph.node(n).name + "' is a " +
                                        std::string(ontology::kind_token(graph.node(n).kind)) +
                                        ", path starts from " +
                                        std::string(ontology::kind_token(program.start_kind)));
            }
        }
        result.start_nodes = nodes;
        frontier = Frontier::single(std::move(nodes));
    }

    for (const auto& step : program.program.steps) {
        StepRecord record;
        record.step = step;
        record.input_sizes = branch_sizes(frontier);
        frontier = std::visit(
            Overloaded{
                [&](const pathlang::TypeSeed& s) {
                    auto extent = graph.nodes_of_kind(s.kind);
                    NodeSet nodes(extent.begin(), extent.end());
                    result.start_nodes = nodes;
                    return Frontier::single(std::move(nodes));
                },
                [&](const pathlang::Traverse& s) {
                    return step_traverse(graph, frontier, s.relation, &record.edges);
                },
                [&](const pathlang::Filter& s) { return step_filter(graph, frontier, s.keyword); },
                [&](const pathlang::Select& s) { return step_select(graph, frontier, s.names); },
                [&](const pathlang::ExecCommon&) { return step_exec_common(frontier); },
                [&](const pathlang::ExecDifference&) { return step_exec_difference(frontier); },
            },
            step);
        record.output_sizes = branch_sizes(frontier);
        result.trace.push_back(std::move(record));
    }

    for (const auto& branch : frontier.branches) result.answers = set_union(result.answers, branch);
    return result;
}

NodeSet resolve_start_names(const KnowledgeGraph& graph, const std::vector<std::string>& names) {
    NodeSet out;
    std::optional<ontology::EntityKind> kind;
    for (const auto& name : names) {
        auto nodes = graph.resolve_name(name, kind);
        if (nodes.empty()) throw UnresolvedEntity("no node named '" + name + "'");
        const auto first_kind = graph.node(nodes.front()).kind;
        bool mixed = std::any_of(nodes.begin(), nodes.end(),
                                 [&](NodeIndex n) { return graph.node(n).kind != first_kind; });
        if (mixed) {
            throw UnresolvedEntity("name '" + name + "' is ambiguous across entity kinds");
        }
        kind = first_kind;
        out = set_union(out, nodes);
    }
    return out;
}

ExecutionResult run_path(const KnowledgeGraph& graph, std::string_view path_text,
                         const std::vector<std::string>& start_names) {
    auto program = pathlang::parse_path(path_text, graph.registry());
    if (pathlang::is_seeded(program)) {
        return execute(graph, pathlang::validate_program(program, graph.registry()));
    }
    auto start = resolve_start_names(graph, start_names);
    if (start.empty()) throw MissingStartKind("path needs start entities");
    auto typed = pathlang::validate_program(program, graph.registry(), graph.node(start.front()).kind);
    return execute(graph, typed, start);
}

std::vector<std::string> answer_names(const KnowledgeGraph& graph, const ExecutionResult& result) {
    std::vector<std::string> names;
    names.reserve(result.answers.size());
    for (NodeIndex n : result.answers) names.push_back(graph.node(n).name);
    return names;
}

std::string format_result(const KnowledgeGraph& graph, const pathlang::TypedProgram& program,
                          const ExecutionResult& result) {
    auto describe = [&](NodeIndex n) {
        const auto& node = graph.node(n);
        return std::string(ontology::kind_token(node.kind)) + "\t" + node.name + "\t" + node.id;
    };
    auto sizes = [](const std::vector<std::size_t>& v) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(v[i]);
        }
        return out;
    };

    std::ostringstream out;
    out << "program: " << pathlang::render_path(program.program) << '\n';
    out << "start_kind: " << ontology::kind_token(program.start_kind) << '\n';
    out << "answer_kind: " << ontology::kind_token(program.answer_kind()) << '\n';
    out << "start: " << result.start_nodes.size() << '\n';
    for (NodeIndex n : result.start_nodes) out << "  " << describe(n) << '\n';
    out << "answers: " << result.answers.size() << '\n';
    for (NodeIndex n : result.answers) out << "  " << describe(n) << '\n';
    out << "trace: " << result.trace.size() << '\n';
    for (std::size_t i = 0; i < result.trace.size(); ++i) {
        const auto& rec = result.trace[i];
        out << "  step " << i + 1 << ": " << pathlang::render_step(rec.step)
            << "\tin=" << sizes(rec.input_sizes) << "\tout=" << sizes(rec.output_sizes)
            << "\tedges=" << rec.edges.size() << '\n';
        for (const auto& e : rec.edges) {
            out << "    " << graph.node(e.src).name << " -" << e.relation << "-> "
                << graph.node(e.dst).name << '\n';
        }
    }
    return out.str();
}

std::string format_result_json(const KnowledgeGraph& graph, const pathlang::TypedProgram& program,
                               const ExecutionResult& result) {
    using nlohmann::ordered_json;
    auto node_json = [&](NodeIndex n) {
        const auto& node = graph.node(n);
        return ordered_json{{"id", node.id},
                            {"name", node.name},
                            {"kind", std::string(ontology::kind_token(node.kind))}};
    };
    ordered_json doc;
    doc["program"] = pathlang::render_path(program.program);
    doc["start_kind"] = std::string(ontology::kind_token(program.start_kind));
    doc["answer_kind"] = std::string(ontology::kind_token(program.answer_kind()));
    doc["start"] = ordered_json::array();
    for (NodeIndex n : result.start_nodes) doc["start"].push_back(node_json(n));
    doc["answers"] = ordered_json::array();
    for (NodeIndex n : result.answers) doc["answers"].push_back(node_json(n));
    doc["trace"] = ordered_json::array();
    for (const auto& rec : result.trace) {
        ordered_json step;
        step["step"] = pathlang::render_step(rec.step);
        step["input_sizes"] = rec.input_sizes;
        step["output_sizes"] = rec.output_sizes;
        step["edges"] = ordered_json::array();
        for (const auto& e : rec.edges) {
            step["edges"].push_back({graph.node(e.src).id, e.relation, graph.node(e.dst).id});
        }
        doc["trace"].push_back(std::move(step));
    }
    return doc.dump(2) + "\n";
}

}  // namespace titan::exec
