#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <functional>

#include <json.hpp>

#include "support/brute_force.hpp"
#include "support/fixture.hpp"
#include "support/program_gen.hpp"
#include "titan/error.hpp"
#include "titan/executor.hpp"

using namespace titan;
using namespace titan::exec;
using ontology::EntityKind;
using testing::fixture_graph;

namespace {

std::vector<std::string> run_names(std::string_view path, std::vector<std::string> start = {}) {
    return answer_names(fixture_graph(), run_path(fixture_graph(), path, start));
}

using Names = std::vector<std::string>;

}  // namespace

TEST_CASE("worked examples on the fixture") {
    CHECK(run_names("uses_attack_pattern → mitigated_by", {"Emotet"}) == Names{"User Training"});
    CHECK(run_names("<PATH> attributed_to_intrusion_set <SEP> uses_malware <SEP> uses_attack_pattern "
                    "<SEP> mitigated_by_course_of_action </PATH>",
                    {"Unitronics Defacement Campaign"}) == Names{"Execution Prevention"});
    CHECK(run_names("<PATH> is_malware_type <SEP> select Sys10 MarkiRAT <SEP> uses_attack_pattern "
                    "<SEP> exec_difference </PATH>") == Names{"Phishing"});
    CHECK(run_names("is_malware_type → select Cannon LitePower → uses_attack_pattern → exec_common") ==
          Names{"PowerShell"});
    CHECK(run_names("uses_attack_pattern → targets_asset → filter windows", {"LitePower"}) ==
          Names{"Windows"});
    CHECK(run_names("used_by_intrusion_set → filter russia", {"Phishing"}) == Names{"APT28"});
    CHECK(run_names("uses_attack_pattern", {"fancy bear"}) ==
          Names{"Network Denial of Service", "Phishing"});
    CHECK(run_names("detects_attack_pattern → has_subtechnique_attack_pattern", {"Process Creation"}) ==
          Names{"PowerShell"});
    CHECK(run_names("provided_by_data_source", {"Process Creation"}) == Names{"Process"});
    CHECK(run_names("uses", {"Cobalt Strike"}) == Names{"PowerShell"});
    // Select without an exec operator yields the union of its branches.
    CHECK(run_names("is_malware_type → select Emotet MarkiRAT → uses_attack_pattern") ==
          Names{"Command and Scripting Interpreter", "Phishing"});
    // Multiple start entities of one kind.
    CHECK(run_names("uses_attack_pattern", {"Emotet", "MarkiRAT"}) ==
          Names{"Command and Scripting Interpreter", "Phishing"});
}

TEST_CASE("execution errors") {
    const auto& g = fixture_graph();
    CHECK_THROWS_AS(run_path(g, "uses_attack_pattern", {"Nonexistent"}), UnresolvedEntity);
    CHECK_THROWS_AS(run_path(g, "uses_attack_pattern", {}), MissingStartKind);
    CHECK_THROWS_AS(run_path(g, "mitigated_by", {"Emotet"}), TypeFlowError);
    CHECK_THROWS_AS(run_path(g, "is_malware_type → select Emotet Nobody → uses_attack_pattern"),
                    SelectNameUnresolved);

    auto typed = pathlang::compile_path("uses_attack_pattern", g.registry(), EntityKind::Malware);
    CHECK_THROWS_AS(execute(g, typed), StartKindMismatch);
    CHECK_THROWS_AS(execute(g, typed, NodeSet{testing::node_named(g, "APT28")}), StartKindMismatch);

    CHECK_THROWS_AS(step_exec_common(Frontier::single({})), OperatorArity);
    CHECK_THROWS_AS(step_exec_difference(Frontier::single({})), OperatorArity);
    Frontier two{{{}, {}}, {"a", "b"}};
    CHECK_THROWS_AS(step_select(g, two, {"x", "y"}), OperatorArity);
}

TEST_CASE("empty intermediate sets propagate") {
    CHECK(run_names("used_by_tool", {"Network Denial of Service"}).empty());
    CHECK(run_names("used_by_tool → uses_attack_pattern", {"Network Denial of Service"}).empty());
    CHECK(run_names("uses_attack_pattern → filter zzz → mitigated_by", {"Sys10"}).empty());
}

TEST_CASE("filter matches name, alias, tag and description") {
    const auto& g = fixture_graph();
    const auto& apt28 = g.node(testing::node_named(g, "APT28"));
    CHECK(node_matches_keyword(apt28, "apt28"));
    CHECK(node_matches_keyword(apt28, "FANCY   bear"));
    CHECK(node_matches_keyword(apt28, "russia"));
    CHECK_FALSE(node_matches_keyword(apt28, "iran"));
    CHECK_FALSE(node_matches_keyword(apt28, ""));
}

TEST_CASE("trace records edges and sizes") {
    const auto& g = fixture_graph();
    auto typed = pathlang::compile_path("is_malware_type → select Cannon LitePower → uses_attack_pattern → exec_common",
                                        g.registry());
    auto result = execute(g, typed);
    REQUIRE(result.trace.size() == 4);
    CHECK(result.trace[0].output_sizes == std::vector<std::size_t>{5});
    CHECK(result.trace[1].output_sizes == std::vector<std::size_t>{1, 1});
    CHECK(result.trace[2].output_sizes == std::vector<std::size_t>{2, 2});
    CHECK(result.trace[2].edges.size() == 4);
    CHECK(result.trace[3].output_sizes == std::vector<std::size_t>{1});
    CHECK(result.start_nodes.size() == 5);

    const auto text = format_result(g, typed, result);
    CHECK(text.find("answers: 1\n  attack-pattern\tPowerShell\t") != std::string::npos);
    CHECK(text.find("    Cannon -uses_attack_pattern-> PowerShell\n") != std::string::npos);
    auto doc = nlohmann::json::parse(format_result_json(g, typed, result));
    CHECK(doc["answers"].size() == 1);
    CHECK(doc["answers"][0]["name"] == "PowerShell");
    CHECK(doc["trace"].size() == 4);
    CHECK(doc["answer_kind"] == "attack-pattern");
    // Deterministic across runs.
    CHECK(format_result(g, typed, execute(g, typed)) == text);
}

TEST_CASE("answers are in canonical order") {
    const auto& g = fixture_graph();
    auto result = run_path(g, "is_attack_pattern_type", {});
    auto names = answer_names(g, result);
    CHECK(names == Names{"Command and Scripting Interpreter", "Network Denial of Service", "Phishing",
                         "PowerShell"});
}

namespace {

std::vector<std::string> ids_of(const kg::KnowledgeGraph& g, const NodeSet& nodes) {
    std::vector<std::string> ids;
    for (auto n : nodes) ids.push_back(g.node(n).id);
    return ids;
}

}  // namespace

TEST_CASE("oracle: every traverse program up to length 4 from every start node") {
    const auto& g = fixture_graph();
    testing::BruteForceInterpreter oracle(g.export_snapshot());
    const auto& reg = g.registry();
    std::size_t compared = 0;

    std::function<void(pathlang::PathProgram&, EntityKind, int, kg::NodeIndex)> walk;
    walk = [&](pathlang::PathProgram& p, EntityKind kind, int depth, kg::NodeIndex start) {
        if (!p.steps.empty()) {
            auto typed = pathlang::validate_program(p, reg, g.node(start).kind);
            CHECK(pathlang::validate_program(typed.program, reg, g.node(start).kind) == typed);
            auto mine = execute(g, typed, NodeSet{start});
            auto ref = oracle.run(p, {g.node(start).id});
            REQUIRE_FALSE(ref.error);
            CAPTURE(pathlang::render_path(p));
            CHECK(ids_of(g, mine.answers) == ref.answer_ids);
            CHECK(mine.trace.size() == p.steps.size());
            ++compared;
        }
        if (depth == 4) return;
        for (const auto* sig : reg.outgoing(kind)) {
            p.steps.emplace_back(pathlang::Traverse{sig->name});
            walk(p, sig->target_kind, depth + 1, start);
            p.steps.pop_back();
        }
    };
    for (std::uint32_t i = 0; i < g.node_count(); ++i) {
        pathlang::PathProgram p;
        walk(p, g.node(kg::NodeIndex{i}).kind, 0, kg::NodeIndex{i});
    }
    CHECK(compared > 5000);
}

TEST_CASE("oracle: seeded programs with every vocabulary filter") {
    const auto& g = fixture_graph();
    testing::BruteForceInterpreter oracle(g.export_snapshot());
    const auto& reg = g.registry();
    const auto vocab = testing::fixture_vocabulary(g);
    REQUIRE(vocab.size() > 50);
    std::size_t compared = 0;
    for (auto kind : ontology::kAllKinds) {
        std::vector<pathlang::PathProgram> bases;
        bases.push_back({{pathlang::TypeSeed{kind}}, {}});
        for (const auto* sig : reg.outgoing(kind)) {
            bases.push_back({{pathlang::TypeSeed{kind}, pathlang::Traverse{sig->name}}, {}});
        }
        for (const auto& base : bases) {
            for (const auto& kw : vocab) {
                auto p = base;
                p.steps.emplace_back(pathlang::Filter{kw});
                auto typed = pathlang::validate_program(p, reg);
                auto mine = execute(g, typed);
                auto before = execute(g, pathlang::validate_program(base, reg));
                CAPTURE(pathlang::render_path(p));
                CHECK(std::includes(before.answers.begin(), before.answers.end(), mine.answers.begin(),
                                    mine.answers.end()));
                CHECK(ids_of(g, mine.answers) == oracle.run(p, {}).answer_ids);
                ++compared;
            }
        }
    }
    CHECK(compared > 1000);
}

TEST_CASE("oracle: every two-name select with each operator") {
    const auto& g = fixture_graph();
    testing::BruteForceInterpreter oracle(g.export_snapshot());
    const auto& reg = g.registry();
    std::size_t compared = 0;
    for (auto kind : ontology::kAllKinds) {
        auto extent = g.nodes_of_kind(kind);
        for (auto a : extent) {
            for (auto b : extent) {
                if (a == b) continue;
                for (const auto* sig : reg.outgoing(kind)) {
                    for (int op = 0; op < 3; ++op) {
                        pathlang::PathProgram p;
                        p.steps.emplace_back(pathlang::TypeSeed{kind});
                        p.steps.emplace_back(pathlang::Select{{g.node(a).name, g.node(b).name}});
                        p.steps.emplace_back(pathlang::Traverse{sig->name});
                        if (op == 1) p.steps.emplace_back(pathlang::ExecCommon{});
                        if (op == 2) p.steps.emplace_back(pathlang::ExecDifference{});
                        auto mine = execute(g, pathlang::validate_program(p, reg));
                        auto ref = oracle.run(p, {});
                        CAPTURE(pathlang::render_path(p));
                        REQUIRE_FALSE(ref.error);
                        CHECK(ids_of(g, mine.answers) == ref.answer_ids);
                        CHECK(mine.trace.back().output_sizes.size() == (op == 0 ? 2u : 1u));
                        ++compared;
                    }
                }
            }
        }
    }
    CHECK(compared > 200);
}

TEST_CASE("oracle: random programs with operators") {
    const auto& g = fixture_graph();
    testing::BruteForceInterpreter oracle(g.export_snapshot());
    testing::ProgramGenerator gen(g.registry(), 2024);
    for (std::uint32_t i = 0; i < g.node_count(); ++i) gen.name_pool.push_back(g.node(kg::NodeIndex{i}).name);
    gen.name_pool.push_back("Fancy Bear");
    gen.name_pool.push_back("Geodo");
    gen.keyword_pool = {"windows", "linux", "russia", "iran", "rat", "process", "e", "shell", "t1059"};

    std::size_t agreed_errors = 0;
    std::size_t agreed_answers = 0;
    for (int i = 0; i < 4000; ++i) {
        auto gp = gen.next();
        auto typed = pathlang::validate_program(gp.program, g.registry(), gp.start_kind);
        auto extent = g.nodes_of_kind(typed.start_kind);
        if (extent.empty()) continue;
        // Start from a random non-empty subset of the start kind.
        NodeSet start;
        std::set<std::string> start_ids;
        for (auto n : extent) {
            if (gen.chance(0.5)) {
                start.push_back(n);
                start_ids.insert(g.node(n).id);
            }
        }
        if (start.empty()) {
            start.push_back(extent.front());
            start_ids.insert(g.node(extent.front()).id);
        }
        CAPTURE(pathlang::render_path(gp.program));
        auto ref = oracle.run(gp.program, start_ids);
        try {
            auto mine = execute(g, typed, start);
            std::vector<std::string> ids;
            for (auto n : mine.answers) ids.push_back(g.node(n).id);
            CHECK_FALSE(ref.error);
            CHECK(ids == ref.answer_ids);
            ++agreed_answers;
        } catch (const SelectNameUnresolved&) {
            CHECK(ref.error);
            ++agreed_errors;
        }
    }
    CHECK(agreed_answers > 1000);
    CHECK(agreed_errors > 50);
}

TEST_CASE("property: traversal followed by its inverse returns a superset of the non-isolated start") {
    const auto& g = fixture_graph();
    const auto& reg = g.registry();
    for (std::uint32_t i = 0; i < g.node_count(); ++i) {
        const kg::NodeIndex n{i};
        for (const auto* sig : reg.outgoing(g.node(n).kind)) {
            auto fwd = step_traverse(g, Frontier::single({n}), sig->name);
            auto back = step_traverse(g, fwd, sig->inverse_name);
            const auto& out = back.branches.front();
            if (!fwd.branches.front().empty()) {
                CHECK(std::binary_search(out.begin(), out.end(), n));
            }
        }
    }
}

TEST_CASE("property: exec operators are set algebra on branches") {
    const auto& g = fixture_graph();
    testing::ProgramGenerator gen(g.registry(), 99);
    for (int i = 0; i < 500; ++i) {
        Frontier f;
        const auto k = 2 + gen.pick(3);
        for (std::size_t b = 0; b < k; ++b) {
            NodeSet s;
            for (std::uint32_t n = 0; n < g.node_count(); ++n) {
                if (gen.chance(0.3)) s.push_back(kg::NodeIndex{n});
            }
            f.branches.push_back(s);
        }
        auto common = step_exec_common(f).branches.front();
        auto diff = step_exec_difference(f).branches.front();
        for (std::uint32_t n = 0; n < g.node_count(); ++n) {
            const kg::NodeIndex x{n};
            auto in = [&](const NodeSet& s) { return std::binary_search(s.begin(), s.end(), x); };
            bool all = std::all_of(f.branches.begin(), f.branches.end(), in);
            bool first_only = in(f.branches[0]) &&
                              std::none_of(f.branches.begin() + 1, f.branches.end(), in);
            CHECK(in(common) == all);
            CHECK(in(diff) == first_only);
        }
    }
}
