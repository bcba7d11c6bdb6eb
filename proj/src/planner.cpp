#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "titan/planner.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "titan/entity_linker.hpp"
#include "titan/error.hpp"
#include "titan/text.hpp"

namespace titan::planner {

namespace {

constexpr std::string_view kPathOpen = "<PATH>";
constexpr std::string_view kPathClose = "</PATH>";
constexpr std::string_view kEntityOpen = "<ENTITY>";
constexpr std::string_view kEntityClose = "</ENTITY>";
constexpr std::string_view kSep = "<SEP>";

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::vector<std::string> parse_entity_block(std::string_view raw) {
    auto open = raw.find(kEntityOpen);
    if (open == std::string_view::npos) return {};
    auto body_start = open + kEntityOpen.size();
    auto close = raw.find(kEntityClose, body_start);
    if (close == std::string_view::npos) return {};
    auto body = raw.substr(body_start, close - body_start);
    std::vector<std::string> names;
    std::size_t pos = 0;
    while (true) {
        auto sep = body.find(kSep, pos);
        auto name = trim(body.substr(pos, sep == std::string_view::npos ? std::string_view::npos : sep - pos));
        if (!name.empty()) names.push_back(std::move(name));
        if (sep == std::string_view::npos) break;
        pos = sep + kSep.size();
    }
    return names;
}

std::string entity_block(const std::vector<std::string>& names) {
    std::string out(kEntityOpen);
    for (std::size_t i = 0; i < names.size(); ++i) {
        out += i == 0 ? " " : " <SEP> ";
        out += names[i];
    }
    return out + " " + std::string(kEntityClose);
}

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path prefix without trailing slash
};

Endpoint split_base_url(const std::string& base_url) {
    auto scheme = base_url.find("://");
    if (scheme == std::string::npos) throw PlannerUnavailable("base URL needs a scheme: " + base_url);
    auto slash = base_url.find('/', scheme + 3);
    Endpoint e;
    e.origin = base_url.substr(0, slash);
    e.prefix = slash == std::string::npos ? "" : base_url.substr(slash);
    while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
    return e;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void replace_all(std::string& text, std::string_view from, std::string_view to) {
    for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
        text.replace(pos, from.size(), to);
    }
}

}  // namespace

std::string_view mode_name(Mode mode) { return mode == Mode::CoT ? "cot" : "nocot"; }

std::optional<Mode> parse_mode(std::string_view name) {
    if (name == "cot") return Mode::CoT;
    if (name == "nocot") return Mode::NoCoT;
    return std::nullopt;
}

ParsedOutput parse_planner_output(std::string_view raw, const ontology::RelationRegistry& registry) {
    const auto first = raw.find(kPathOpen);
    if (first == std::string_view::npos) throw UnparseablePlan("no <PATH> block in planner output");

    ParsedOutput out;
    out.cot = std::string(raw.substr(0, first));
    std::string last_error = "no </PATH> after <PATH>";
    for (auto open = first; open != std::string_view::npos; open = raw.find(kPathOpen, open + 1)) {
        auto close = raw.find(kPathClose, open + kPathOpen.size());
        if (close == std::string_view::npos) break;
        try {
            out.path = pathlang::parse_path(raw.substr(open, close + kPathClose.size() - open), registry);
            out.start_entities = parse_entity_block(raw);
            return out;
        } catch (const Error& e) {
            last_error = e.what();
        }
    }
    throw UnparseablePlan(last_error);
}

MockPlanner::MockPlanner(std::vector<datagen::Sample> index,
                         std::shared_ptr<const ontology::RelationRegistry> registry)
    : index_(std::move(index)), registry_(std::move(registry)) {
    for (std::size_t i = 0; i < index_.size(); ++i) by_question_.emplace(index_[i].question, i);
}

std::string MockPlanner::render_output(const datagen::Sample& sample, Mode mode) {
    if (mode == Mode::NoCoT) return sample.path;
    std::string out = sample.cot;
    if (!sample.start_entities.empty()) out += "\n" + entity_block(sample.start_entities);
    return out;
}

PlannerResponse MockPlanner::plan(const PlannerRequest& request) {
    PlannerResponse response;
    const datagen::Sample* match = nullptr;
    if (auto it = by_question_.find(request.question); it != by_question_.end()) {
        match = &index_[it->second];
    } else {
        response.guessed = true;
        double best = -1.0;
        for (const auto& s : index_) {
            const double score = text::jaccard(request.question, s.question);
            if (score > best) {
                best = score;
                match = &s;
            }
        }
        if (match == nullptr) return response;
    }
    response.raw_text = render_output(*match, request.mode);
    auto parsed = parse_planner_output(response.raw_text, *registry_);
    response.path = std::move(parsed.path);
    if (request.mode == Mode::CoT) response.cot = std::move(parsed.cot);
    if (!response.guessed) response.start_entities = std::move(parsed.start_entities);
    return response;
}

RemoteConfig load_remote_config(const std::optional<std::string>& path) {
    RemoteConfig config;
    if (path) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_text_file(*path));
        } catch (const nlohmann::json::exception& e) {
            throw IoError("bad planner config " + *path + ": " + e.what());
        }
        config.base_url = j.value("base_url", config.base_url);
        config.api_key = j.value("api_key", config.api_key);
        config.model = j.value("model", config.model);
        config.timeout = std::chrono::milliseconds(j.value("timeout_ms", config.timeout.count()));
        config.max_retries = j.value("max_retries", config.max_retries);
        config.backoff = std::chrono::milliseconds(j.value("backoff_ms", config.backoff.count()));
        config.prompt_template = j.value("prompt_template", config.prompt_template);
        config.max_in_flight = j.value("max_in_flight", config.max_in_flight);
    }
    if (const char* v = std::getenv("TITAN_LLM_BASE_URL")) config.base_url = v;
    if (const char* v = std::getenv("TITAN_LLM_API_KEY")) config.api_key = v;
    if (const char* v = std::getenv("TITAN_LLM_MODEL")) config.model = v;
    return config;
}

std::string build_system_prompt(std::string_view prompt_template, const ontology::RelationRegistry& registry,
                                Mode mode) {
    std::string relations;
    for (const auto& sig : registry.signatures()) {
        relations += "- " + std::string(ontology::kind_token(sig.source_kind)) + " " + sig.name + " " +
                     std::string(ontology::kind_token(sig.target_kind)) + "\n";
    }
    for (auto kind : ontology::kAllKinds) {
        relations += "- " + ontology::type_seed_relation(kind) + " (all " +
                     ontology::kind_display_name(kind) + " nodes)\n";
    }
    const std::string format =
        mode == Mode::CoT
            ? "Reason step by step first, writing one line per step, then end with the path block and the "
              "entity block."
            : "Answer with the path block and the entity block only, without any reasoning text.";
    std::string out(prompt_template);
    replace_all(out, "{{relations}}", relations);
    replace_all(out, "{{format}}", format);
    return out;
}

RemotePlanner::RemotePlanner(RemoteConfig config, std::string prompt_template,
                             std::shared_ptr<const ontology::RelationRegistry> registry)
    : config_(std::move(config)), prompt_template_(std::move(prompt_template)), registry_(std::move(registry)) {
    if (config_.base_url.empty()) throw PlannerUnavailable("no planner base URL configured");
}

std::string RemotePlanner::complete(const std::string& system, const std::string& user) const {
    const auto endpoint = split_base_url(config_.base_url);
    nlohmann::ordered_json body;
    body["model"] = config_.model;
    body["messages"] = nlohmann::ordered_json::array(
        {{{"role", "system"}, {"content", system}}, {{"role", "user"}, {"content", user}}});
    body["temperature"] = 0;
    const auto payload = body.dump();

    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto delay = config_.backoff;
    std::string failure;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            spdlog::warn("planner request failed ({}); retry {} in {} ms", failure, attempt, delay.count());
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
        httplib::Client client(endpoint.origin);
        client.set_connection_timeout(config_.timeout);
        client.set_read_timeout(config_.timeout);
        client.set_write_timeout(config_.timeout);
        auto res = client.Post(endpoint.prefix + "/chat/completions", headers, payload, "application/json");
        if (!res) {
            failure = "network error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            failure = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw PlannerUnavailable("HTTP " + std::to_string(res->status) + " from planner endpoint");
        }
        try {
            auto reply = nlohmann::json::parse(res->body);
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw PlannerUnavailable(std::string("malformed chat completion response: ") + e.what());
        }
    }
    throw PlannerUnavailable(failure + " after " + std::to_string(config_.max_retries + 1) + " attempts");
}

PlannerResponse RemotePlanner::plan(const PlannerRequest& request) {
    if (trim(request.question).empty()) throw UnparseablePlan("empty question");
    PlannerResponse response;
    response.raw_text = complete(build_system_prompt(prompt_template_, *registry_, request.mode), request.question);
    auto parsed = parse_planner_output(response.raw_text, *registry_);
    response.path = std::move(parsed.path);
    response.start_entities = std::move(parsed.start_entities);
    if (request.mode == Mode::CoT) response.cot = std::move(parsed.cot);
    return response;
}

std::vector<PlanOutcome> plan_all(Planner& planner, const std::vector<PlannerRequest>& requests,
                                  unsigned max_in_flight) {
    std::vector<PlanOutcome> out(requests.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (auto i = next++; i < requests.size(); i = next++) {
            try {
                out[i].response = planner.plan(requests[i]);
            } catch (const Error& e) {
                out[i].error_class = e.error_class();
                out[i].message = e.what();
            }
        }
    };
    const auto threads = std::clamp<std::size_t>(max_in_flight, 1, std::max<std::size_t>(1, requests.size()));
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return out;
}

PlanExecution execute_plan(const kg::KnowledgeGraph& graph, const PlannerResponse& response,
                           std::string_view question) {
    if (response.path.steps.empty()) throw UnparseablePlan("planner returned no path");
    const auto& registry = graph.registry();
    PlanExecution run;

    if (pathlang::is_seeded(response.path)) {
        run.program = pathlang::validate_program(response.path, registry);
        run.result = exec::execute(graph, run.program);
        return run;
    }
    if (!response.start_entities.empty()) {
        auto start = exec::resolve_start_names(graph, response.start_entities);
        run.program = pathlang::validate_program(response.path, registry, graph.node(start.front()).kind);
        run.start_entities = response.start_entities;
        run.result = exec::execute(graph, run.program, start);
        return run;
    }

    // Lexical linking: try mentioned kinds in order of first mention.
    const auto mentions = kg::link_entities(question, graph);
    std::vector<ontology::EntityKind> kinds;
    for (const auto& m : mentions) {
        auto k = graph.node(m.node).kind;
        if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
    }
    for (auto kind : kinds) {
        try {
            run.program = pathlang::validate_program(response.path, registry, kind);
        } catch (const TypeFlowError&) {
            continue;
        }
        kg::NodeSet start;
        for (const auto& m : mentions) {
            if (graph.node(m.node).kind != kind) continue;
            start.push_back(m.node);
            run.start_entities.push_back(graph.node(m.node).name);
        }
        std::sort(start.begin(), start.end());
        start.erase(std::unique(start.begin(), start.end()), start.end());
        run.result = exec::execute(graph, run.program, start);
        return run;
    }
    throw MissingStartKind("no entity linked from the question fits the path's start");
}

}  // namespace titan::planner
