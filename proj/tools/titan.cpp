#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "titan/census.hpp"
#include "titan/datagen.hpp"
#include "titan/error.hpp"
#include "titan/eval.hpp"
#include "titan/executor.hpp"
#include "titan/ingest.hpp"
#include "titan/planner.hpp"
#include "titan/stix.hpp"
#include "titan/synthetic.hpp"

using namespace titan;

namespace {

constexpr int kExitModuleError = 2;
constexpr int kExitUsage = 64;
constexpr int kExitInternal = 70;

void require_file(const std::string& path) {
    if (!std::filesystem::is_regular_file(path)) throw IoError("no such file: " + path);
}

std::string read_text(const std::string& path) {
    require_file(path);
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text(const std::string& path, const std::string& text) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
}

kg::KnowledgeGraph load_snapshot(const std::string& path) {
    require_file(path);
    return kg::read_snapshot_file(path);
}

std::vector<datagen::Sample> load_samples(const std::vector<std::string>& paths) {
    std::vector<datagen::Sample> out;
    for (const auto& p : paths) {
        require_file(p);
        auto part = datagen::read_jsonl_file(p);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

struct PlannerOptions {
    std::string kind = "mock";
    std::string mode = "cot";
    std::vector<std::string> index;  // mock lookup datasets
    std::string config;              // remote JSON config
    std::string prompt;              // remote prompt template override

    void add_to(CLI::App* cmd) {
        cmd->add_option("--planner", kind, "Planner backend")->check(CLI::IsMember({"mock", "remote"}));
        cmd->add_option("--mode", mode, "Planner output mode")->check(CLI::IsMember({"cot", "nocot"}));
        cmd->add_option("--dataset,--index", index, "Dataset JSONL files the mock planner looks questions up in");
        cmd->add_option("--config", config, "Remote planner JSON config");
        cmd->add_option("--prompt", prompt, "Remote planner prompt template");
    }

    planner::Mode parsed_mode() const { return *planner::parse_mode(mode); }

    std::unique_ptr<planner::Planner> build(std::shared_ptr<const ontology::RelationRegistry> registry,
                                            unsigned* max_in_flight = nullptr) const {
        if (kind == "mock") {
            if (index.empty()) throw IoError("the mock planner needs --dataset files to look questions up in");
            return std::make_unique<planner::MockPlanner>(load_samples(index), std::move(registry));
        }
        auto cfg = planner::load_remote_config(config.empty() ? std::nullopt : std::optional<std::string>(config));
        if (max_in_flight) *max_in_flight = cfg.max_in_flight;
        std::string template_path = prompt;
        if (template_path.empty()) template_path = cfg.prompt_template;
        if (template_path.empty()) template_path = std::string(TITAN_PROMPT_DIR) + "/planner_v1.txt";
        return std::make_unique<planner::RemotePlanner>(cfg, read_text(template_path), std::move(registry));
    }
};

int cmd_ingest(const std::vector<std::string>& bundles, const std::string& out, bool lenient, bool no_assets) {
    std::vector<kg::StixObject> objects;
    for (const auto& b : bundles) {
        require_file(b);
        auto part = kg::read_stix_bundle_file(b);
        objects.insert(objects.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    kg::BuildOptions options;
    options.lenient = lenient;
    options.synthesize_assets = !no_assets;
    kg::BuildReport report;
    auto graph = kg::build_graph(objects, options, &report);
    auto audit = kg::audit_graph(graph);
    std::cout << kg::format_census(kg::node_census(graph));
    std::cout << "dropped_objects " << report.dropped_objects << "\n"
              << "ignored_objects " << report.ignored_objects << "\n"
              << "dangling_relationships " << report.dangling_relationships << "\n"
              << "skipped_relationships " << report.skipped.size() << "\n"
              << "untyped_edges " << audit.untyped << "\n"
              << "unpaired_edges " << audit.unpaired << "\n";
    for (const auto& s : report.skipped) spdlog::warn("skipped: {}", s);
    kg::write_snapshot_file(graph, out);
    return 0;
}

int cmd_census(const std::string& snapshot, const std::string& expected, double tolerance, bool strict) {
    auto graph = load_snapshot(snapshot);
    const auto census = kg::node_census(graph);
    if (expected.empty()) {
        std::cout << kg::format_census(census);
        return 0;
    }
    require_file(expected);
    auto cmp = kg::compare_census(census, kg::read_expected_census_file(expected), tolerance);
    std::cout << cmp.table;
    return strict && !cmp.within_tolerance ? 1 : 0;
}

int cmd_exec(const std::string& snapshot, const std::string& path, const std::vector<std::string>& start, bool json) {
    auto graph = load_snapshot(snapshot);
    const auto& registry = graph.registry();
    std::optional<ontology::EntityKind> kind;
    std::optional<kg::NodeSet> start_nodes;
    if (!start.empty()) {
        start_nodes = exec::resolve_start_names(graph, start);
        kind = graph.node(start_nodes->front()).kind;
    }
    auto program = pathlang::compile_path(path, registry, kind);
    auto result = exec::execute(graph, program, start_nodes);
    std::cout << (json ? exec::format_result_json(graph, program, result) + "\n"
                       : exec::format_result(graph, program, result));
    return 0;
}

int cmd_ask(const std::string& snapshot, const std::string& question, const PlannerOptions& popts, bool json) {
    auto graph = load_snapshot(snapshot);
    auto planner = popts.build(graph.registry_ptr());
    auto response = planner->plan({question, popts.parsed_mode()});
    auto run = planner::execute_plan(graph, response, question);
    if (json) {
        std::cout << exec::format_result_json(graph, run.program, run.result) << "\n";
        return 0;
    }
    std::cout << "question: " << question << "\n"
              << "planner: " << popts.kind << " mode=" << popts.mode << (response.guessed ? " (guessed)" : "") << "\n";
    if (response.cot) std::cout << "reasoning:\n" << *response.cot << "\n";
    std::cout << "path: " << pathlang::render_path(response.path) << "\n"
              << "start: " << join(run.start_entities, " | ") << "\n"
              << exec::format_result(graph, run.program, run.result);
    return 0;
}

int cmd_gen(const std::string& snapshot, const std::string& templates, std::uint64_t seed, const std::string& out,
            std::size_t max_per_template, double test_fraction, unsigned threads) {
    auto graph = load_snapshot(snapshot);
    require_file(templates);
    auto tmpl = datagen::read_templates_file(templates, graph.registry());
    datagen::DatasetConfig config;
    config.seed = seed;
    config.test_fraction = test_fraction;
    config.instantiate.max_per_template = max_per_template;
    config.threads = threads;
    auto split = datagen::generate_dataset(tmpl, graph, config);
    datagen::write_dataset(split, out);
    std::cout << datagen::profile_table(split);
    for (const auto& id : split.insufficient_templates) {
        spdlog::warn("InsufficientBindings: template {} has fewer than two samples; all went to train", id);
    }
    return 0;
}

int cmd_predict(const std::string& dataset, const std::string& snapshot, const PlannerOptions& popts,
                const std::string& out, double corrupt, std::uint64_t seed) {
    auto samples = load_samples({dataset});
    std::shared_ptr<const ontology::RelationRegistry> registry =
        snapshot.empty() ? std::make_shared<const ontology::RelationRegistry>(ontology::build_default_registry())
                         : load_snapshot(snapshot).registry_ptr();
    unsigned in_flight = 1;
    auto planner = popts.build(registry, &in_flight);
    std::vector<planner::PlannerRequest> requests;
    for (const auto& s : samples) requests.push_back({s.question, popts.parsed_mode()});
    auto outcomes = planner::plan_all(*planner, requests, popts.kind == "mock" ? 1 : in_flight);

    std::vector<eval::Prediction> predictions;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        eval::Prediction p{samples[i].question, "", "", {}};
        if (const auto& r = outcomes[i].response) {
            p.path = pathlang::render_path(r->path);
            if (r->cot) p.cot = *r->cot + p.path;
            p.start_entities = r->start_entities;
        } else {
            ++failed;
            spdlog::warn("{} on record {}: {}", outcomes[i].error_class, i + 1, outcomes[i].message);
        }
        predictions.push_back(std::move(p));
    }
    if (corrupt > 0) {
        auto changed = eval::corrupt_predictions(predictions, corrupt, seed, *registry);
        spdlog::info("corrupted {} of {} predictions", changed.size(), predictions.size());
    }
    write_text(out, eval::predictions_to_jsonl(predictions));
    std::cout << "predictions " << predictions.size() << " failed " << failed << "\n";
    return 0;
}

int cmd_eval(const std::string& dataset, const std::string& predictions, const std::string& out) {
    auto samples = load_samples({dataset});
    require_file(predictions);
    auto preds = eval::read_predictions_file(predictions);
    const auto registry = ontology::build_default_registry();
    auto records = eval::score(samples, preds, registry);
    const auto table = eval::format_report(eval::aggregate_report(records));
    std::cout << table;
    if (!out.empty()) {
        write_text(out + "/report.txt", table);
        write_text(out + "/records.jsonl", eval::records_to_jsonl(records));
    }
    return 0;
}

int cmd_synth(std::uint64_t seed, const std::string& out) {
    synth::SyntheticOptions options;
    options.seed = seed;
    write_text(out, synth::generate_bundle(options));
    return 0;
}

std::string one_line(std::string text) {
    for (auto& c : text) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Typed threat-intelligence graph: ingest, query, generate and evaluate"};
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

    std::vector<std::string> bundles;
    std::string out, snapshot, expected, path, question, templates, dataset, predictions;
    std::vector<std::string> start;
    bool lenient = false, no_assets = false, json = false, strict = false;
    double tolerance = 0.15, test_fraction = 0.16, corrupt = 0.0;
    std::uint64_t seed = 1;
    std::size_t max_per_template = 50;
    unsigned threads = 0;
    PlannerOptions ask_planner, predict_planner;

    auto* ingest = app.add_subcommand("ingest", "Build the graph from STIX bundles and write a snapshot");
    ingest->add_option("bundles", bundles, "STIX 2.1 bundle files")->required();
    ingest->add_option("--out", out, "Snapshot output file")->required();
    ingest->add_flag("--lenient", lenient, "Report relationships with no signature instead of failing");
    ingest->add_flag("--no-assets", no_assets, "Do not derive asset nodes from platforms");

    auto* census = app.add_subcommand("census", "Per-kind node counts, optionally against an expected table");
    census->add_option("--snapshot", snapshot)->required();
    census->add_option("--expected", expected, "Expected counts (kind<TAB>count)");
    census->add_option("--tolerance", tolerance, "Relative per-kind tolerance");
    census->add_flag("--strict", strict, "Exit 1 when a kind is outside the tolerance");

    auto* exec_cmd = app.add_subcommand("exec", "Execute a literal path");
    exec_cmd->add_option("--snapshot", snapshot)->required();
    exec_cmd->add_option("--path", path, "Path in token or display form")->required();
    exec_cmd->add_option("--start", start, "Start entity names");
    exec_cmd->add_flag("--json", json, "Print the result as JSON");

    auto* ask = app.add_subcommand("ask", "Plan, link, validate and execute a question");
    ask->add_option("--snapshot", snapshot)->required();
    ask->add_option("--question", question)->required();
    ask->add_flag("--json", json, "Print the result as JSON");
    ask_planner.add_to(ask);

    auto* gen = app.add_subcommand("gen", "Generate a question/path dataset from templates");
    gen->add_option("--snapshot", snapshot)->required();
    gen->add_option("--templates", templates)->required();
    gen->add_option("--seed", seed);
    gen->add_option("--out", out, "Output directory")->required();
    gen->add_option("--max-per-template", max_per_template);
    gen->add_option("--test-fraction", test_fraction)->check(CLI::Range(0.0, 1.0));
    gen->add_option("--threads", threads, "0 uses every core");

    auto* predict = app.add_subcommand("predict", "Run a planner over a dataset and write predictions");
    predict->add_option("--input", dataset, "Dataset JSONL to predict for")->required();
    predict->add_option("--snapshot", snapshot, "Snapshot whose registry the planner uses");
    predict->add_option("--out", out, "Predictions JSONL output")->required();
    predict->add_option("--corrupt", corrupt, "Fraction of paths to corrupt")->check(CLI::Range(0.0, 1.0));
    predict->add_option("--seed", seed, "Seed for --corrupt");
    predict_planner.add_to(predict);

    auto* eval_cmd = app.add_subcommand("eval", "Score predictions against a dataset");
    eval_cmd->add_option("--dataset", dataset)->required();
    eval_cmd->add_option("--predictions", predictions)->required();
    eval_cmd->add_option("--out", out, "Directory for report.txt and records.jsonl");

    auto* synth = app.add_subcommand("synth", "Write a seeded synthetic STIX bundle");
    synth->add_option("--seed", seed);
    synth->add_option("--out", out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "ERROR UsageError: " << one_line(e.what()) << "\n";
        return kExitUsage;
    }

    spdlog::set_level(spdlog::level::from_str(log_level));
    spdlog::set_pattern("%l: %v");
    try {
        if (*ingest) return cmd_ingest(bundles, out, lenient, no_assets);
        if (*census) return cmd_census(snapshot, expected, tolerance, strict);
        if (*exec_cmd) return cmd_exec(snapshot, path, start, json);
        if (*ask) return cmd_ask(snapshot, question, ask_planner, json);
        if (*gen) return cmd_gen(snapshot, templates, seed, out, max_per_template, test_fraction, threads);
        if (*predict) return cmd_predict(dataset, snapshot, predict_planner, out, corrupt, seed);
        if (*eval_cmd) return cmd_eval(dataset, predictions, out);
        if (*synth) return cmd_synth(seed, out);
    } catch (const Error& e) {
        std::cerr << "ERROR " << e.error_class() << ": " << one_line(e.what()) << "\n";
        return kExitModuleError;
    } catch (const std::exception& e) {
        std::cerr << "ERROR Internal: " << one_line(e.what()) << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}
