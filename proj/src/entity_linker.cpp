#include "titan/entity_linker.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace titan::kg {

namespace {

struct Word {
    std::string text;  // lowercased
    std::size_t begin;
    std::size_t end;
};

bool is_word_byte(unsigned char c) {
    return std::isalnum(c) || c >= 0x80 || c == '_' || c == '.' || c == '-' || c == '/' ||
           c == '&' || c == '+';
}

bool is_trimmable(char c) { return c == '.' || c == '-' || c == '/' || c == '&' || c == '+'; }

std::vector<Word> split_words(std::string_view text) {
    std::vector<Word> words;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t begin = i;
        while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t end = i;
        while (begin < end && is_trimmable(text[begin])) ++begin;
        while (end > begin && is_trimmable(text[end - 1])) --end;
        if (begin == end) continue;
        std::string lowered(text.substr(begin, end - begin));
        for (auto& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        words.push_back(Word{std::move(lowered), begin, end});
    }
    return words;
}

std::string join_words(const std::vector<Word>& words, std::size_t from, std::size_t count) {
    std::string out;
    for (std::size_t i = from; i < from + count; ++i) {
        if (i > from) out += ' ';
        out += words[i].text;
    }
    return out;
}

}  // namespace

EntityLinker::EntityLinker(const KnowledgeGraph& graph) {
    for (std::uint32_t i = 0; i < graph.node_count(); ++i) {
        const Node& node = graph.node(NodeIndex{i});
        std::set<std::string> keys;
        auto add = [&](std::string_view text) {
            auto words = split_words(text);
            if (words.empty()) return;
            keys.insert(join_words(words, 0, words.size()));
            max_words_ = std::max(max_words_, words.size());
        };
        add(node.name);
        for (const auto& alias : node.aliases) add(alias);
        for (const auto& key : keys) phrases_[key].push_back(NodeIndex{i});
    }
}

std::vector<EntityMention> EntityLinker::link(std::string_view question) const {
    const auto words = split_words(question);

    struct Candidate {
        std::size_t first;
        std::size_t count;
        const NodeSet* nodes;
    };
    std::vector<Candidate> candidates;
    for (std::size_t first = 0; first < words.size(); ++first) {
        const auto limit = std::min(max_words_, words.size() - first);
        for (std::size_t count = 1; count <= limit; ++count) {
            auto it = phrases_.find(join_words(words, first, count));
            if (it != phrases_.end()) candidates.push_back(Candidate{first, count, &it->second});
        }
    }
    // Longest first; among equals, leftmost first.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                         if (a.count != b.count) return a.count > b.count;
                         return a.first < b.first;
                     });

    std::vector<bool> taken(words.size(), false);
    std::vector<Candidate> accepted;
    for (const auto& c : candidates) {
        bool free = std::none_of(taken.begin() + static_cast<std::ptrdiff_t>(c.first),
                                 taken.begin() + static_cast<std::ptrdiff_t>(c.first + c.count),
                                 [](bool t) { return t; });
        if (!free) continue;
        std::fill(taken.begin() + static_cast<std::ptrdiff_t>(c.first),
                  taken.begin() + static_cast<std::ptrdiff_t>(c.first + c.count), true);
        accepted.push_back(c);
    }
    std::sort(accepted.begin(), accepted.end(),
              [](const Candidate& a, const Candidate& b) { return a.first < b.first; });

    std::vector<EntityMention> out;
    for (const auto& c : accepted) {
        const auto begin = words[c.first].begin;
        const auto end = words[c.first + c.count - 1].end;
        for (NodeIndex node : *c.nodes) {
            out.push_back(EntityMention{node, std::string(question.substr(begin, end - begin)), begin});
        }
    }
    return out;
}

std::vector<EntityMention> link_entities(std::string_view question, const KnowledgeGraph& graph) {
    return EntityLinker(graph).link(question);
}

}  // namespace titan::kg
