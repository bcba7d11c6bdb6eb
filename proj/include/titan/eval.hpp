#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "titan/datagen.hpp"
#include "titan/pathlang.hpp"

namespace titan::eval {

/// Token-level LCS F1. Tokens come from text::tokenize.
double rouge_l(std::string_view candidate, std::string_view reference);
/// Unigram F1 with clipped counts.
double rouge_1(std::string_view candidate, std::string_view reference);
/// Single-reference BLEU: geometric mean of clipped n-gram precisions times
/// the brevity penalty. Orders longer than the candidate are left out of the
/// mean; a zero precision is replaced by 1e-9.
double bleu(std::string_view candidate, std::string_view reference, int max_n = 4);

/// Canonical token-form rendering used by exact_match: relations normalized
/// (contextual aliases resolved when `start_kind` or a seed allows it),
/// filter keywords and select names lowercased with whitespace collapsed.
std::string canonical_form(const pathlang::PathProgram& program, const ontology::RelationRegistry& registry,
                           std::optional<ontology::EntityKind> start_kind = std::nullopt);

int exact_match(const pathlang::PathProgram& predicted, const pathlang::PathProgram& reference,
                const ontology::RelationRegistry& registry,
                std::optional<ontology::EntityKind> start_kind = std::nullopt);

/// Byte equality of the trimmed path strings.
int raw_exact_match(std::string_view predicted, std::string_view reference);

struct TextScores {
    double rouge_l = 0;
    double rouge_1 = 0;
    double bleu = 0;
};

struct Prediction {
    std::string question;
    std::string path;  // as produced; may be unparseable
    std::string cot;   // empty for NoCoT
    std::vector<std::string> start_entities;
};

std::string prediction_to_json(const Prediction& p);
/// Throws RecordFormatError with the 1-based line number.
std::vector<Prediction> read_predictions(std::string_view document);
std::vector<Prediction> read_predictions_file(const std::string& path);
std::string predictions_to_jsonl(const std::vector<Prediction>& predictions);

struct EvalRecord {
    std::string question;
    std::string template_id;
    std::string predicted;  // canonical form, empty if unparseable
    std::string reference;  // canonical form
    int em = 0;
    int raw_em = 0;
    std::optional<TextScores> text;  // present when both sides carry CoT
    pathlang::PathProfile bucket;    // of the reference
};

/// Pairs predictions with samples by line; questions must agree.
/// Throws RecordFormatError on a count or question mismatch.
std::vector<EvalRecord> score(const std::vector<datagen::Sample>& samples,
                              const std::vector<Prediction>& predictions,
                              const ontology::RelationRegistry& registry);

struct Stat {
    std::size_t n = 0;
    double em = 0;  // sums; means via mean()
    double raw_em = 0;
    std::size_t text_n = 0;
    double rouge_l = 0;
    double rouge_1 = 0;
    double bleu = 0;

    void add(const EvalRecord& r);
    void merge(const Stat& other);
    double mean_em() const { return n ? em / static_cast<double>(n) : 0.0; }
    double mean_raw_em() const { return n ? raw_em / static_cast<double>(n) : 0.0; }
    double mean_rouge_l() const { return text_n ? rouge_l / static_cast<double>(text_n) : 0.0; }
    double mean_rouge_1() const { return text_n ? rouge_1 / static_cast<double>(text_n) : 0.0; }
    double mean_bleu() const { return text_n ? bleu / static_cast<double>(text_n) : 0.0; }
};

struct BucketReport {
    std::array<Stat, 4> by_length;    // L1, L2, L3, L4+
    std::array<Stat, 4> by_operator;  // filter, select, exec_common, exec_difference
    Stat no_operator;
    Stat global;  // merge of by_length, so the recombination identity is exact
};

inline constexpr std::array<const char*, 4> kOperatorNames = {"filter", "select", "exec_common",
                                                              "exec_difference"};

BucketReport aggregate_report(const std::vector<EvalRecord>& records);

/// Plain-text table; BERTScore is reported as n/a.
std::string format_report(const BucketReport& report);
std::string records_to_jsonl(const std::vector<EvalRecord>& records);

/// Replaces exactly round(fraction * n) predictions (seeded choice) with a
/// corrupted path: one traverse step swapped for a different relation, or
/// the seed kind changed when the path has no traverse. Returns the indices.
std::vector<std::size_t> corrupt_predictions(std::vector<Prediction>& predictions, double fraction,
                                             std::uint64_t seed, const ontology::RelationRegistry& registry);

}  // namespace titan::eval
