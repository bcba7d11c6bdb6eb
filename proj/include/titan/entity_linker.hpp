#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "titan/graph.hpp"

namespace titan::kg {

struct EntityMention {
    NodeIndex node;
    std::string span;    // matched text as it appears in the question
    std::size_t offset;  // byte offset of the span

    friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

/// Dictionary linker over node names and aliases. Words are maximal runs of
/// alphanumerics plus `_ . - / & +` (and any non-ASCII byte); leading and
/// trailing punctuation is trimmed from each word, matching is case-insensitive.
class EntityLinker {
public:
    explicit EntityLinker(const KnowledgeGraph& graph);

    /// Longest matches win; shorter matches overlapping a longer one are
    /// dropped. Results are ordered by span start, then node order.
    std::vector<EntityMention> link(std::string_view question) const;

private:
    std::map<std::string, NodeSet, std::less<>> phrases_;
    std::size_t max_words_ = 0;
};

std::vector<EntityMention> link_entities(std::string_view question, const KnowledgeGraph& graph);

}  // namespace titan::kg
