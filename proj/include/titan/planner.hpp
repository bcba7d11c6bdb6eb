#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "titan/datagen.hpp"
#include "titan/executor.hpp"
#include "titan/pathlang.hpp"

namespace titan::planner {

enum class Mode { CoT, NoCoT };

std::string_view mode_name(Mode mode);
std::optional<Mode> parse_mode(std::string_view name);

struct PlannerRequest {
    std::string question;
    Mode mode = Mode::CoT;
};

struct PlannerResponse {
    std::string raw_text;
    std::optional<std::string> cot;
    pathlang::PathProgram path;  // empty only for a guess from an empty mock index
    std::vector<std::string> start_entities;
    bool guessed = false;
};

struct ParsedOutput {
    std::string cot;  // text before the first <PATH>
    pathlang::PathProgram path;
    std::vector<std::string> start_entities;
};

/// First well-formed <PATH>…</PATH> block wins. Start entities come from an
/// optional `<ENTITY> a <SEP> b </ENTITY>` block. Throws UnparseablePlan.
ParsedOutput parse_planner_output(std::string_view raw, const ontology::RelationRegistry& registry);

/// Every planner is safe to call from several threads at once.
class Planner {
public:
    virtual ~Planner() = default;
    /// Throws PlannerUnavailable or UnparseablePlan.
    virtual PlannerResponse plan(const PlannerRequest& request) = 0;
};

/// Looks questions up in a generated dataset. Unknown questions get the path
/// of the sample with the highest token Jaccard similarity (earliest wins
/// ties), flagged guessed=true and without start entities.
class MockPlanner : public Planner {
public:
    MockPlanner(std::vector<datagen::Sample> index, std::shared_ptr<const ontology::RelationRegistry> registry);

    PlannerResponse plan(const PlannerRequest& request) override;

    /// Raw text the mock "generates" for a sample in the given mode.
    static std::string render_output(const datagen::Sample& sample, Mode mode);

private:
    std::vector<datagen::Sample> index_;
    std::map<std::string, std::size_t, std::less<>> by_question_;
    std::shared_ptr<const ontology::RelationRegistry> registry_;
};

struct RemoteConfig {
    std::string base_url;  // e.g. http://127.0.0.1:8000/v1
    std::string api_key;
    std::string model;
    std::chrono::milliseconds timeout{30000};
    int max_retries = 2;
    std::chrono::milliseconds backoff{500};  // doubled after each failed attempt
    std::string prompt_template;             // file path
    unsigned max_in_flight = 4;
};

/// Reads an optional JSON config file (keys: base_url, api_key, model,
/// timeout_ms, max_retries, backoff_ms, prompt_template, max_in_flight), then
/// applies TITAN_LLM_BASE_URL, TITAN_LLM_API_KEY and TITAN_LLM_MODEL.
RemoteConfig load_remote_config(const std::optional<std::string>& path);

/// Fills `{{relations}}` with the registry vocabulary and `{{format}}` with
/// the mode-specific output instruction.
std::string build_system_prompt(std::string_view prompt_template, const ontology::RelationRegistry& registry,
                                Mode mode);

/// Chat-completion client: POST {base_url}/chat/completions with model,
/// messages and temperature 0. Network errors, 429 and 5xx are retried.
class RemotePlanner : public Planner {
public:
    RemotePlanner(RemoteConfig config, std::string prompt_template,
                  std::shared_ptr<const ontology::RelationRegistry> registry);

    PlannerResponse plan(const PlannerRequest& request) override;

    const RemoteConfig& config() const { return config_; }

private:
    std::string complete(const std::string& system, const std::string& user) const;

    RemoteConfig config_;
    std::string prompt_template_;
    std::shared_ptr<const ontology::RelationRegistry> registry_;
};

struct PlanOutcome {
    std::optional<PlannerResponse> response;
    std::string error_class;  // empty on success
    std::string message;
};

/// Runs requests with at most `max_in_flight` concurrent calls; results keep
/// the request order.
std::vector<PlanOutcome> plan_all(Planner& planner, const std::vector<PlannerRequest>& requests,
                                  unsigned max_in_flight);

struct PlanExecution {
    pathlang::TypedProgram program;
    std::vector<std::string> start_entities;  // as resolved
    exec::ExecutionResult result;
};

/// Validates and executes a response. Seeded paths need no start; otherwise
/// the response's start entities are used, or, when absent, entities linked
/// from the question, taking the first mentioned kind the path validates for.
/// Throws UnparseablePlan for an empty path, MissingStartKind when no kind fits.
PlanExecution execute_plan(const kg::KnowledgeGraph& graph, const PlannerResponse& response,
                           std::string_view question);

}  // namespace titan::planner
