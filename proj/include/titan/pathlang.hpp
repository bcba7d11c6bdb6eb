#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "titan/ontology.hpp"

namespace titan::pathlang {

using ontology::EntityKind;
using ontology::RelationRegistry;

/// `is_<kind>_type`: start from every node of a kind.
struct TypeSeed {
    EntityKind kind;
    friend bool operator==(const TypeSeed&, const TypeSeed&) = default;
};

/// Canonical relation, or a contextual alias (e.g. `uses`) until validated.
struct Traverse {
    std::string relation;
    friend bool operator==(const Traverse&, const Traverse&) = default;
};

struct Filter {
    std::string keyword;
    friend bool operator==(const Filter&, const Filter&) = default;
};

struct Select {
    std::vector<std::string> names;
    friend bool operator==(const Select&, const Select&) = default;
};

struct ExecCommon {
    friend bool operator==(const ExecCommon&, const ExecCommon&) = default;
};

struct ExecDifference {
    friend bool operator==(const ExecDifference&, const ExecDifference&) = default;
};

using PathStep = std::variant<TypeSeed, Traverse, Filter, Select, ExecCommon, ExecDifference>;

struct PathProgram {
    std::vector<PathStep> steps;
    std::string source;  // text the program was parsed from, if any

    /// Structural equality; the source text is ignored.
    friend bool operator==(const PathProgram& a, const PathProgram& b) { return a.steps == b.steps; }
};

enum class PathForm {
    Token,    // <PATH> a <SEP> b </PATH>
    Display,  // a → b
};

/// Parses either surface form. Context-free aliases are normalized here;
/// contextual ones (`uses`, ...) are kept verbatim for validate_program.
/// Throws SyntaxError, UnknownRelation, MalformedOperator, OperatorPlacementError.
PathProgram parse_path(std::string_view text, const RelationRegistry& registry);
PathProgram parse_path(std::string_view text);  // default registry

std::string render_step(const PathStep& step);
std::string render_path(const PathProgram& program, PathForm form = PathForm::Token);

/// Throws OperatorPlacementError unless: TypeSeed only first, at most one
/// Select, at most one exec operator which is last and follows a Select.
void check_structure(const PathProgram& program);

struct TypedProgram {
    PathProgram program;            // relations fully canonical
    EntityKind start_kind;          // kind of the initial frontier
    std::vector<EntityKind> kinds;  // kind of the frontier after each step

    EntityKind answer_kind() const { return kinds.empty() ? start_kind : kinds.back(); }
    friend bool operator==(const TypedProgram&, const TypedProgram&) = default;
};

/// Kind-flow inference. Throws TypeFlowError, MissingStartKind, OperatorPlacementError.
TypedProgram validate_program(const PathProgram& program, const RelationRegistry& registry,
                              std::optional<EntityKind> start_kind = std::nullopt);

/// Parse with the registry, then validate; convenience for callers holding text.
TypedProgram compile_path(std::string_view text, const RelationRegistry& registry,
                          std::optional<EntityKind> start_kind = std::nullopt);

/// Whether the program starts with a TypeSeed (and so needs no start entities).
bool is_seeded(const PathProgram& program);

enum class LengthBucket { L1, L2, L3, L4Plus };

std::string_view bucket_name(LengthBucket bucket);
std::optional<LengthBucket> parse_bucket(std::string_view name);

struct OperatorFlags {
    bool filter = false;
    bool select = false;
    bool exec_common = false;
    bool exec_difference = false;

    bool any() const { return filter || select || exec_common || exec_difference; }
    /// Names of the set flags in canonical order.
    std::vector<std::string> names() const;
    friend bool operator==(const OperatorFlags&, const OperatorFlags&) = default;
};

struct PathProfile {
    std::size_t length = 0;  // TypeSeed + Traverse steps
    LengthBucket bucket = LengthBucket::L1;
    OperatorFlags operators;
    friend bool operator==(const PathProfile&, const PathProfile&) = default;
};

PathProfile profile(const PathProgram& program);

}  // namespace titan::pathlang
