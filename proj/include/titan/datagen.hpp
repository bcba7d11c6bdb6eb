#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "titan/executor.hpp"
#include "titan/graph.hpp"
#include "titan/pathlang.hpp"

namespace titan::datagen {

using kg::KnowledgeGraph;
using ontology::EntityKind;

/// A question with typed `[kind]` placeholders and a path whose start slot
/// and select names carry the same placeholders, in the same order.
struct QuestionTemplate {
    std::string id;
    std::string text;
    std::optional<EntityKind> start_kind;  // nullopt: the path is seeded
    EntityKind answer_kind = EntityKind::AttackPattern;
    pathlang::PathProgram path;            // select slots hold "[kind]" names
    std::vector<EntityKind> slots;         // placeholder kinds in text order
};

/// Tab-separated, one template per line:
///   id  start  answer_kind  question  path
/// `start` is `[kind]` or `-` for seeded paths; blank lines and `#` comments
/// are skipped. Throws TemplateSchemaError naming the template and reason.
std::vector<QuestionTemplate> load_templates(std::string_view document,
                                             const ontology::RelationRegistry& registry);
std::vector<QuestionTemplate> read_templates_file(const std::string& path,
                                                  const ontology::RelationRegistry& registry);

struct Sample {
    std::string question;
    std::string cot;
    std::string path;  // canonical token form
    std::vector<std::string> start_entities;
    std::vector<std::string> answers;
    std::string template_id;
    pathlang::PathProfile bucket;

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct InstantiateOptions {
    std::size_t max_per_template = 50;
    bool keep_empty = false;
    /// Upper bound on bindings examined per template, as a multiple of
    /// max_per_template, so sparse templates terminate on large graphs.
    std::size_t scan_factor = 40;
};

/// Bindings are visited in a seeded random order; each is substituted,
/// executed, and kept if its answers are non-empty (unless keep_empty).
std::vector<Sample> instantiate_template(const QuestionTemplate& tmpl, const KnowledgeGraph& graph,
                                         std::uint64_t seed, const InstantiateOptions& options = {});

/// Goal sentence, one "Step i:" line per step, and a closing line ending in
/// the token-form path.
std::string synthesize_cot(std::string_view question, const std::vector<std::string>& start_entities,
                           const pathlang::TypedProgram& program);

struct DatasetConfig {
    std::uint64_t seed = 1;
    double test_fraction = 0.16;
    InstantiateOptions instantiate;
    unsigned threads = 0;  // 0: hardware concurrency
};

struct DatasetSplit {
    std::vector<Sample> train;
    std::vector<Sample> test;
    std::vector<std::string> insufficient_templates;  // went wholly to train
};

/// Deterministic for a given seed regardless of thread count. Every emitted
/// sample is re-executed before returning.
DatasetSplit generate_dataset(const std::vector<QuestionTemplate>& templates,
                              const KnowledgeGraph& graph, const DatasetConfig& config);

/// Re-runs the sample's path and compares answers.
bool sample_reproduces(const Sample& sample, const KnowledgeGraph& graph);

/// Counts per length bucket and per operator, for train, test and both.
std::string profile_table(const DatasetSplit& split);

/// JSON Lines with field order question, cot, path, start_entities, answers,
/// template_id, bucket.
std::string sample_to_json(const Sample& sample);
Sample sample_from_json(std::string_view line);
std::string samples_to_jsonl(const std::vector<Sample>& samples);
/// Throws RecordFormatError with the 1-based line number.
std::vector<Sample> read_jsonl(std::string_view document);
std::vector<Sample> read_jsonl_file(const std::string& path);

/// Writes train.jsonl, test.jsonl and profile.txt into `dir`.
void write_dataset(const DatasetSplit& split, const std::string& dir);

/// Optional question rewriter.
class ParaphraseClient {
public:
    virtual ~ParaphraseClient() = default;
    /// Throws RemoteUnavailable on failure.
    virtual std::string paraphrase(std::string_view question) = 0;
};

/// Identity without a client; on RemoteUnavailable returns the sample
/// unchanged and appends a warning.
Sample paraphrase_hook(const Sample& sample, ParaphraseClient* client,
                       std::vector<std::string>* warnings = nullptr);

}  // namespace titan::datagen
