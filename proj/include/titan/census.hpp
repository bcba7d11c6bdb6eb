#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "titan/graph.hpp"

namespace titan::kg {

struct ExpectedCensus {
    std::array<std::optional<std::size_t>, ontology::kEntityKindCount> per_kind{};
    std::optional<std::size_t> nodes;
    std::optional<std::size_t> edges;
};

/// Tab-separated `kind<TAB>count` rows plus optional `total_nodes` and
/// `total_edges`; `#` comments and blank lines are skipped. Throws
/// RecordFormatError.
ExpectedCensus parse_expected_census(std::string_view document);
ExpectedCensus read_expected_census_file(const std::string& path);

struct CensusComparison {
    std::string table;
    bool within_tolerance = true;  // every kind with an expectation
};

/// Side-by-side table of observed and expected counts. A kind is within
/// tolerance when |observed - expected| <= tolerance * expected.
CensusComparison compare_census(const Census& observed, const ExpectedCensus& expected, double tolerance);

/// Observed counts only.
std::string format_census(const Census& census);

}  // namespace titan::kg
