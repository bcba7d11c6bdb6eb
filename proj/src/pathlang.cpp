#include "titan/pathlang.hpp"

#include <algorithm>
#include <cctype>

#include "titan/error.hpp"

namespace titan::pathlang {

namespace {

constexpr std::string_view kOpen = "<PATH>";
constexpr std::string_view kClose = "</PATH>";
constexpr std::string_view kSep = "<SEP>";
constexpr std::string_view kArrow = "\xE2\x86\x92";  // →
constexpr std::string_view kAsciiArrow = "->";

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view text) {
    while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
    while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
    return text;
}

std::size_t separator_at(std::string_view text, std::size_t pos) {
    for (auto sep : {kSep, kArrow, kAsciiArrow}) {
        if (text.substr(pos, sep.size()) == sep) return sep.size();
    }
    return 0;
}

bool contains_separator(std::string_view text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (separator_at(text, i) != 0) return true;
    }
    return false;
}

// Splits on separators outside double quotes.
std::vector<std::string_view> split_segments(std::string_view body) {
    std::vector<std::string_view> segments;
    bool quoted = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < body.size();) {
        if (body[i] == '"') {
            quoted = !quoted;
            ++i;
            continue;
        }
        if (!quoted) {
            if (auto len = separator_at(body, i); len != 0) {
                segments.push_back(body.substr(start, i - start));
                i += len;
                start = i;
                continue;
            }
        }
        ++i;
    }
    if (quoted) throw SyntaxError("unterminated quote in path");
    segments.push_back(body.substr(start));
    return segments;
}

// Whitespace-separated words; "double quoted" runs form one word.
std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < text.size()) {
        if (is_space(text[i])) {
            ++i;
            continue;
        }
        if (text[i] == '"') {
            auto close = text.find('"', i + 1);
            if (close == std::string_view::npos) throw SyntaxError("unterminated quote in path");
            words.emplace_back(text.substr(i + 1, close - i - 1));
            i = close + 1;
            continue;
        }
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i]) && text[i] != '"') ++i;
        words.emplace_back(text.substr(start, i - start));
    }
    return words;
}

std::string strip_quotes(std::string_view text) {
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
        return std::string(text.substr(1, text.size() - 2));
    }
    return std::string(text);
}

bool needs_quotes(std::string_view text) {
    if (text.empty() || text.front() == '"') return true;
    if (std::any_of(text.begin(), text.end(), is_space)) return true;
    return contains_separator(text);
}

std::string quote_if_needed(std::string_view text) {
    return needs_quotes(text) ? "\"" + std::string(text) + "\"" : std::string(text);
}

// Filter keywords run to the end of the segment, so inner spaces are fine.
std::string quote_keyword(std::string_view text) {
    const bool quote = text.empty() || text.front() == '"' || is_space(text.front()) ||
                       is_space(text.back()) || contains_separator(text) ||
                       text.find('"') != std::string_view::npos;
    return quote ? "\"" + std::string(text) + "\"" : std::string(text);
}

PathStep parse_segment(std::string_view segment, const RelationRegistry& registry) {
    segment = trim(segment);
    if (segment.empty()) throw SyntaxError("empty path segment");

    auto head_end = std::find_if(segment.begin(), segment.end(), is_space) - segment.begin();
    const auto head = segment.substr(0, static_cast<std::size_t>(head_end));
    const auto rest = trim(segment.substr(static_cast<std::size_t>(head_end)));

    if (head == "filter") {
        auto keyword = strip_quotes(rest);
        if (trim(keyword).empty()) throw MalformedOperator("filter needs a keyword");
        return Filter{std::move(keyword)};
    }
    if (head == "select") {
        auto names = split_words(rest);
        if (names.size() < 2) throw MalformedOperator("select needs at least two names");
        for (const auto& name : names) {
            if (trim(name).empty()) throw MalformedOperator("select name must be non-empty");
        }
        return Select{std::move(names)};
    }
    if (head == "exec_common" || head == "exec_difference") {
        if (!rest.empty()) {
            throw MalformedOperator(std::string(head) + " takes no arguments");
        }
        if (head == "exec_common") return ExecCommon{};
        return ExecDifference{};
    }
    if (!rest.empty()) {
        throw SyntaxError("unexpected text after relation '" + std::string(head) + "'");
    }
    if (head.starts_with("is_") && head.ends_with("_type")) {
        if (auto kind = ontology::parse_type_seed_relation(head)) return TypeSeed{*kind};
        throw UnknownRelation("unknown type seed '" + std::string(head) + "'");
    }
    if (registry.is_contextual_alias(head)) return Traverse{std::string(head)};
    return Traverse{registry.normalize(head)};
}

const RelationRegistry& default_registry() {
    static const RelationRegistry registry = ontology::build_default_registry();
    return registry;
}

}  // namespace

PathProgram parse_path(std::string_view text, const RelationRegistry& registry) {
    std::string_view body = trim(text);
    const bool open = body.starts_with(kOpen);
    const bool close = body.ends_with(kClose) && body.size() >= kClose.size();
    if (open != close) throw SyntaxError("unbalanced <PATH> wrapper");
    if (open) {
        if (body.size() < kOpen.size() + kClose.size()) {
            throw SyntaxError("unbalanced <PATH> wrapper");
        }
        body = body.substr(kOpen.size(), body.size() - kOpen.size() - kClose.size());
    }
    if (body.find(kOpen) != std::string_view::npos || body.find(kClose) != std::string_view::npos) {
        throw SyntaxError("nested or repeated <PATH> wrapper");
    }
    if (trim(body).empty()) throw SyntaxError("empty path program");

    PathProgram program;
    program.source = std::string(text);
    for (auto segment : split_segments(body)) {
        program.steps.push_back(parse_segment(segment, registry));
    }
    check_structure(program);
    return program;
}

PathProgram parse_path(std::string_view text) { return parse_path(text, default_registry()); }

std::string render_step(const PathStep& step) {
    return std::visit(
        Overloaded{
            [](const TypeSeed& s) { return ontology::type_seed_relation(s.kind); },
            [](const Traverse& s) { return s.relation; },
            [](const Filter& s) { return "filter " + quote_keyword(s.keyword); },
            [](const Select& s) {
                std::string out = "select";
                for (const auto& name : s.names) out += " " + quote_if_needed(name);
                return out;
            },
            [](const ExecCommon&) { return std::string("exec_common"); },
            [](const ExecDifference&) { return std::string("exec_difference"); },
        },
        step);
}

std::string render_path(const PathProgram& program, PathForm form) {
    std::string out = form == PathForm::Token ? std::string(kOpen) + " " : std::string();
    const std::string sep =
        form == PathForm::Token ? " " + std::string(kSep) + " " : " " + std::string(kArrow) + " ";
    for (std::size_t i = 0; i < program.steps.size(); ++i) {
        if (i) out += sep;
        out += render_step(program.steps[i]);
    }
    if (form == PathForm::Token) out += " " + std::string(kClose);
    return out;
}

void check_structure(const PathProgram& program) {
    if (program.steps.empty()) throw SyntaxError("empty path program");
    bool seen_select = false;
    for (std::size_t i = 0; i < program.steps.size(); ++i) {
        const auto& step = program.steps[i];
        const bool last = i + 1 == program.steps.size();
        if (std::holds_alternative<TypeSeed>(step) && i != 0) {
            throw OperatorPlacementError("type seed must be the first step");
        }
        if (std::holds_alternative<Select>(step)) {
            if (seen_select) throw OperatorPlacementError("only one select per path");
            seen_select = true;
        }
        if (std::holds_alternative<ExecCommon>(step) || std::holds_alternative<ExecDifference>(step)) {
            if (!last) throw OperatorPlacementError("exec operator must be the final step");
            if (!seen_select) throw OperatorPlacementError("exec operator requires an earlier select");
        }
    }
}

TypedProgram validate_program(const PathProgram& program, const RelationRegistry& registry,
                              std::optional<EntityKind> start_kind) {
    check_structure(program);
    TypedProgram typed;
    typed.program = program;
    if (const auto* seed = std::get_if<TypeSeed>(&program.steps.front())) {
        typed.start_kind = seed->kind;
    } else if (start_kind) {
        typed.start_kind = *start_kind;
    } else {
        throw MissingStartKind("path has no is_<kind>_type seed and no start kind was given");
    }

    EntityKind current = typed.start_kind;
    for (auto& step : typed.program.steps) {
        if (auto* seed = std::get_if<TypeSeed>(&step)) {
            current = seed->kind;
        } else if (auto* traverse = std::get_if<Traverse>(&step)) {
            std::string canonical;
            try {
                canonical = registry.normalize(traverse->relation, current);
            } catch (const UnknownRelation& e) {
                throw TypeFlowError(e.what());
            }
            const auto* sig = registry.find(current, canonical);
            if (sig == nullptr) {
                throw TypeFlowError("no relation '" + canonical + "' from " +
                                    std::string(ontology::kind_token(current)));
            }
            traverse->relation = canonical;
            current = sig->target_kind;
        }
        typed.kinds.push_back(current);
    }
    return typed;
}

TypedProgram compile_path(std::string_view text, const RelationRegistry& registry,
                          std::optional<EntityKind> start_kind) {
    return validate_program(parse_path(text, registry), registry, start_kind);
}

bool is_seeded(const PathProgram& program) {
    return !program.steps.empty() && std::holds_alternative<TypeSeed>(program.steps.front());
}

std::string_view bucket_name(LengthBucket bucket) {
    switch (bucket) {
        case LengthBucket::L1: return "L1";
        case LengthBucket::L2: return "L2";
        case LengthBucket::L3: return "L3";
        case LengthBucket::L4Plus: return "L4+";
    }
    return "L1";
}

std::optional<LengthBucket> parse_bucket(std::string_view name) {
    for (auto b : {LengthBucket::L1, LengthBucket::L2, LengthBucket::L3, LengthBucket::L4Plus}) {
        if (bucket_name(b) == name) return b;
    }
    return std::nullopt;
}

std::vector<std::string> OperatorFlags::names() const {
    std::vector<std::string> out;
    if (filter) out.emplace_back("filter");
    if (select) out.emplace_back("select");
    if (exec_common) out.emplace_back("exec_common");
    if (exec_difference) out.emplace_back("exec_difference");
    return out;
}

PathProfile profile(const PathProgram& program) {
    PathProfile p;
    for (const auto& step : program.steps) {
        std::visit(Overloaded{
                       [&](const TypeSeed&) { ++p.length; },
                       [&](const Traverse&) { ++p.length; },
                       [&](const Filter&) { p.operators.filter = true; },
                       [&](const Select&) { p.operators.select = true; },
                       [&](const ExecCommon&) { p.operators.exec_common = true; },
                       [&](const ExecDifference&) { p.operators.exec_difference = true; },
                   },
                   step);
    }
    if (p.length >= 4) {
        p.bucket = LengthBucket::L4Plus;
    } else if (p.length == 3) {
        p.bucket = LengthBucket::L3;
    } else if (p.length == 2) {
        p.bucket = LengthBucket::L2;
    } else {
        p.bucket = LengthBucket::L1;
    }
    return p;
}

}  // namespace titan::pathlang
