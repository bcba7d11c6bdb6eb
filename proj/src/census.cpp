#include "titan/census.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "titan/error.hpp"

namespace titan::kg {

namespace {

std::string row(std::string_view label, std::size_t observed, std::optional<std::size_t> expected, double tolerance,
                bool* ok) {
    char buf[128];
    if (!expected) {
        std::snprintf(buf, sizeof buf, "%-18s %8zu\n", std::string(label).c_str(), observed);
        return buf;
    }
    const double e = static_cast<double>(*expected);
    const double delta = e == 0 ? 0.0 : (static_cast<double>(observed) - e) / e;
    const char* verdict = "";
    if (ok != nullptr) {
        const bool within = std::abs(static_cast<double>(observed) - e) <= tolerance * e;
        verdict = within ? "ok" : "OUTSIDE";
        *ok = *ok && within;
    }
    std::snprintf(buf, sizeof buf, "%-18s %8zu %8zu %+7.1f%% %s\n", std::string(label).c_str(), observed, *expected,
                  100.0 * delta, verdict);
    return buf;
}

}  // namespace

ExpectedCensus parse_expected_census(std::string_view document) {
    ExpectedCensus out;
    std::istringstream in{std::string(document)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        const auto where = "census line " + std::to_string(line_no);
        if (tab == std::string::npos) throw RecordFormatError(where + ": expected kind<TAB>count");
        const auto key = line.substr(0, tab);
        std::size_t value = 0;
        try {
            std::size_t used = 0;
            value = std::stoull(line.substr(tab + 1), &used);
            if (used != line.size() - tab - 1) throw std::invalid_argument("trailing text");
        } catch (const std::exception&) {
            throw RecordFormatError(where + ": bad count");
        }
        if (key == "total_nodes") {
            out.nodes = value;
        } else if (key == "total_edges") {
            out.edges = value;
        } else if (auto kind = ontology::parse_kind(key)) {
            out.per_kind[ontology::index_of(*kind)] = value;
        } else {
            throw RecordFormatError(where + ": unknown kind '" + key + "'");
        }
    }
    return out;
}

ExpectedCensus read_expected_census_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_expected_census(buffer.str());
}

CensusComparison compare_census(const Census& observed, const ExpectedCensus& expected, double tolerance) {
    CensusComparison out;
    char header[128];
    std::snprintf(header, sizeof header, "%-18s %8s %8s %8s\n", "kind", "observed", "expected", "delta");
    out.table = header;
    for (auto kind : ontology::kAllKinds) {
        const auto i = ontology::index_of(kind);
        out.table += row(ontology::kind_token(kind), observed.per_kind[i], expected.per_kind[i], tolerance,
                         &out.within_tolerance);
    }
    std::size_t expected_sum = 0;
    bool have_all = true;
    for (const auto& e : expected.per_kind) {
        if (e) expected_sum += *e;
        have_all = have_all && e.has_value();
    }
    if (have_all) out.table += row("sum_of_kinds", observed.nodes, expected_sum, tolerance, nullptr);
    out.table += row("total_nodes", observed.nodes, expected.nodes, tolerance, nullptr);
    out.table += row("total_edges", observed.edges, expected.edges, tolerance, nullptr);
    out.table += std::string("per-kind tolerance ") + std::to_string(static_cast<int>(std::lround(tolerance * 100))) +
                 "%: " + (out.within_tolerance ? "within" : "OUTSIDE") + "\n";
    return out;
}

std::string format_census(const Census& census) {
    std::string out;
    for (auto kind : ontology::kAllKinds) {
        out += row(ontology::kind_token(kind), census.per_kind[ontology::index_of(kind)], std::nullopt, 0, nullptr);
    }
    out += row("total_nodes", census.nodes, std::nullopt, 0, nullptr);
    out += row("total_edges", census.edges, std::nullopt, 0, nullptr);
    return out;
}

}  // namespace titan::kg
