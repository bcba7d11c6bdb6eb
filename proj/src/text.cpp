#include "titan/text.hpp"

#include <algorithm>
#include <cctype>
#include <iterator>

namespace titan::text {

std::vector<std::string> tokenize(std::string_view input) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : input) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else if (c >= 0x80 || std::isalnum(c) || c == '_') {
            current += static_cast<char>(std::tolower(c));
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

double jaccard(std::string_view a, std::string_view b) {
    auto ta = tokenize(a);
    auto tb = tokenize(b);
    std::sort(ta.begin(), ta.end());
    ta.erase(std::unique(ta.begin(), ta.end()), ta.end());
    std::sort(tb.begin(), tb.end());
    tb.erase(std::unique(tb.begin(), tb.end()), tb.end());
    if (ta.empty() && tb.empty()) return 0.0;
    std::vector<std::string> common;
    std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(common));
    const auto unions = ta.size() + tb.size() - common.size();
    return static_cast<double>(common.size()) / static_cast<double>(unions);
}

}  // namespace titan::text
