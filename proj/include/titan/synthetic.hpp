#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "titan/ontology.hpp"

namespace titan::synth {

/// Seeded generator of ATT&CK-shaped STIX bundles for scale tests when no
/// real bundle is at hand. Names look like "Malware S0042"; every name is
/// unique across the bundle.
struct SyntheticOptions {
    std::uint64_t seed = 1;
    /// Node counts per kind in ontology order. Assets come from platform
    /// names on attack patterns, so the asset entry caps the platform list.
    std::array<std::size_t, ontology::kEntityKindCount> counts = {883, 318, 732, 89, 31,
                                                                  168, 122, 43, 14};
};

/// Returns a STIX 2.1 bundle document (pretty-printed JSON).
std::string generate_bundle(const SyntheticOptions& options = {});

}  // namespace titan::synth
