#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace titan::text {

/// Lowercases ASCII, deletes punctuation other than `_`, splits on
/// whitespace. Non-ASCII bytes are kept as word characters.
std::vector<std::string> tokenize(std::string_view text);

/// |A ∩ B| / |A ∪ B| over the token sets of `a` and `b`; 0 when both are empty.
double jaccard(std::string_view a, std::string_view b);

}  // namespace titan::text
