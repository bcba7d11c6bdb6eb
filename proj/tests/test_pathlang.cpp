#include <doctest.h>

#include "support/program_gen.hpp"
#include "titan/error.hpp"
#include "titan/pathlang.hpp"

using namespace titan;
using namespace titan::pathlang;
using ontology::EntityKind;

namespace {

const RelationRegistry& registry() {
    static const auto r = ontology::build_default_registry();
    return r;
}

}  // namespace

TEST_CASE("parse token and display forms") {
    const auto token = parse_path(
        "<PATH> uses_attack_pattern <SEP> mitigated_by_course_of_action </PATH>", registry());
    const auto display = parse_path("uses_attack_pattern → mitigated_by_course_of_action", registry());
    const auto ascii = parse_path("uses_attack_pattern -> mitigated_by", registry());
    const auto bare = parse_path("uses_attack_pattern <SEP> mitigated_by", registry());
    REQUIRE(token.steps.size() == 2);
    CHECK(token == display);
    CHECK(token == ascii);
    CHECK(token == bare);
    CHECK(std::get<Traverse>(token.steps[1]).relation == "mitigated_by_course_of_action");
    CHECK(render_path(token) ==
          "<PATH> uses_attack_pattern <SEP> mitigated_by_course_of_action </PATH>");
    CHECK(render_path(token, PathForm::Display) ==
          "uses_attack_pattern → mitigated_by_course_of_action");
}

TEST_CASE("parse operators") {
    auto p = parse_path(
        "<PATH> is_malware_type <SEP> select Cannon \"Fancy Bear\" <SEP> exec_common </PATH>",
        registry());
    REQUIRE(p.steps.size() == 3);
    CHECK(std::get<TypeSeed>(p.steps[0]).kind == EntityKind::Malware);
    CHECK(std::get<Select>(p.steps[1]).names == std::vector<std::string>{"Cannon", "Fancy Bear"});
    CHECK(std::holds_alternative<ExecCommon>(p.steps[2]));

    auto f = parse_path("targeted_by_attack_pattern → filter north korea", registry());
    CHECK(std::get<Filter>(f.steps[1]).keyword == "north korea");
    auto q = parse_path("targets → filter \"a → b\"", registry());
    CHECK(std::get<Filter>(q.steps[1]).keyword == "a → b");
    CHECK(std::get<Traverse>(q.steps[0]).relation == "targets_asset");
}

TEST_CASE("contextual aliases survive parsing and resolve on validation") {
    auto p = parse_path("uses → mitigated_by", registry());
    CHECK(std::get<Traverse>(p.steps[0]).relation == "uses");
    auto typed = validate_program(p, registry(), EntityKind::Malware);
    CHECK(std::get<Traverse>(typed.program.steps[0]).relation == "uses_attack_pattern");
    CHECK(typed.kinds == std::vector<EntityKind>{EntityKind::AttackPattern, EntityKind::CourseOfAction});
    CHECK(typed.answer_kind() == EntityKind::CourseOfAction);
    CHECK_THROWS_AS(validate_program(p, registry(), EntityKind::IntrusionSet), TypeFlowError);
}

TEST_CASE("syntax errors") {
    CHECK_THROWS_AS(parse_path("", registry()), SyntaxError);
    CHECK_THROWS_AS(parse_path("<PATH> </PATH>", registry()), SyntaxError);
    CHECK_THROWS_AS(parse_path("<PATH> uses_malware", registry()), SyntaxError);
    CHECK_THROWS_AS(parse_path("uses_malware </PATH>", registry()), SyntaxError);
    CHECK_THROWS_AS(parse_path("uses_malware <SEP> <SEP> uses_tool", registry()), SyntaxError);
    CHECK_THROWS_AS(parse_path("uses_malware extra", registry()), SyntaxError);
    CHECK_THROWS_AS(parse_path("<PATH> <PATH> uses_malware </PATH> </PATH>", registry()), SyntaxError);
    CHECK_THROWS_AS(parse_path("filter \"open", registry()), SyntaxError);
    CHECK_THROWS_AS(parse_path("flies_to_moon", registry()), UnknownRelation);
    CHECK_THROWS_AS(parse_path("is_spaceship_type", registry()), UnknownRelation);
    CHECK_THROWS_AS(parse_path("uses_malware → filter", registry()), MalformedOperator);
    CHECK_THROWS_AS(parse_path("uses_malware → select OnlyOne", registry()), MalformedOperator);
    CHECK_THROWS_AS(parse_path("uses_malware → select a b → exec_common now", registry()),
                    MalformedOperator);
}

TEST_CASE("structural placement rules") {
    CHECK_THROWS_AS(parse_path("uses_malware → is_malware_type", registry()), OperatorPlacementError);
    CHECK_THROWS_AS(parse_path("uses_malware → exec_common", registry()), OperatorPlacementError);
    CHECK_THROWS_AS(parse_path("uses_malware → select a b → exec_common → uses_attack_pattern", registry()),
                    OperatorPlacementError);
    CHECK_THROWS_AS(parse_path("uses_malware → select a b → select c d", registry()),
                    OperatorPlacementError);
    CHECK_THROWS_AS(parse_path("uses_malware → select a b → exec_common → exec_difference", registry()),
                    OperatorPlacementError);
    CHECK_NOTHROW(parse_path("uses_malware → select a b → filter x → exec_difference", registry()));
    CHECK_NOTHROW(parse_path("uses_malware → select a b → uses_attack_pattern", registry()));
}

TEST_CASE("type flow") {
    CHECK_THROWS_AS(compile_path("uses_malware", registry()), MissingStartKind);
    CHECK_THROWS_AS(compile_path("uses_malware", registry(), EntityKind::Malware), TypeFlowError);
    CHECK_THROWS_AS(compile_path("is_course_of_action_type → uses_attack_pattern", registry()),
                    TypeFlowError);
    auto t = compile_path("is_campaign_type → attributed_to → uses_malware → uses_attack_pattern",
                          registry(), EntityKind::Tool);  // seed overrides the hint
    CHECK(t.start_kind == EntityKind::Campaign);
    CHECK(t.answer_kind() == EntityKind::AttackPattern);
    CHECK(t.kinds.size() == 4);
}

TEST_CASE("length buckets and operator flags") {
    struct Case {
        const char* path;
        std::size_t length;
        const char* bucket;
        std::vector<std::string> ops;
    };
    const Case cases[] = {
        {"uses_attack_pattern", 1, "L1", {}},
        {"is_malware_type", 1, "L1", {}},
        {"is_malware_type → uses_attack_pattern", 2, "L2", {}},
        {"uses_attack_pattern → filter windows", 1, "L1", {"filter"}},
        {"uses_attack_pattern → mitigated_by → mitigates_attack_pattern", 3, "L3", {}},
        {"uses_malware → uses_attack_pattern → mitigated_by → mitigates_attack_pattern", 4, "L4+", {}},
        {"a → b → c → d → e → f", 6, "L4+", {}},
        {"uses_attack_pattern → select a b → exec_common", 1, "L1", {"select", "exec_common"}},
        {"uses_attack_pattern → select a b → filter x → exec_difference", 1, "L1",
         {"filter", "select", "exec_difference"}},
    };
    for (const auto& c : cases) {
        CAPTURE(c.path);
        PathProgram p;
        try {
            p = parse_path(c.path, registry());
        } catch (const UnknownRelation&) {
            // Relation-agnostic lengths: build a program of raw traverses.
            for (const char* r : {"a", "b", "c", "d", "e", "f"}) p.steps.emplace_back(Traverse{r});
        }
        auto prof = profile(p);
        CHECK(prof.length == c.length);
        CHECK(bucket_name(prof.bucket) == c.bucket);
        CHECK(prof.operators.names() == c.ops);
        CHECK(parse_bucket(c.bucket) == prof.bucket);
    }
    CHECK_FALSE(parse_bucket("L5").has_value());
}

TEST_CASE("property: render then parse is the identity") {
    testing::ProgramGenerator gen(registry(), 0x5eed);
    for (int i = 0; i < 2000; ++i) {
        auto g = gen.next();
        for (auto form : {PathForm::Token, PathForm::Display}) {
            const auto text = render_path(g.program, form);
            CAPTURE(text);
            PathProgram back;
            REQUIRE_NOTHROW(back = parse_path(text, registry()));
            CHECK(back == g.program);
            CHECK(render_path(back, form) == text);
        }
    }
}

TEST_CASE("property: generated programs validate and keep their profile") {
    testing::ProgramGenerator gen(registry(), 42);
    for (int i = 0; i < 1000; ++i) {
        auto g = gen.next();
        auto typed = validate_program(g.program, registry(), g.start_kind);
        CHECK(typed.program == g.program);
        CHECK(typed.kinds.size() == g.program.steps.size());
        auto prof = profile(g.program);
        std::size_t expected = 0;
        for (const auto& s : g.program.steps) {
            expected += std::holds_alternative<Traverse>(s) || std::holds_alternative<TypeSeed>(s);
        }
        CHECK(prof.length == expected);
        CHECK(profile(parse_path(render_path(g.program), registry())) == prof);
    }
}

TEST_CASE("property: arbitrary text never crashes the parser") {
    testing::ProgramGenerator gen(registry(), 7);
    for (int i = 0; i < 3000; ++i) {
        auto text = gen.random_text(12);
        if (gen.chance(0.5)) text = "<PATH> " + text + " </PATH>";
        try {
            auto p = parse_path(text, registry());
            CHECK(parse_path(render_path(p), registry()) == p);
        } catch (const Error&) {
        }
    }
}
