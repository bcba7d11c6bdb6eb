#include "titan/datagen.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "titan/error.hpp"

namespace titan::datagen {

namespace {

using kg::NodeIndex;
using kg::NodeSet;
using nlohmann::ordered_json;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<std::string> split_tabs(std::string_view line) {
    std::vector<std::string> fields(1);
    for (char c : line) {
        if (c == '\t') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// "[malware]" -> malware; anything else -> nullopt.
std::optional<EntityKind> slot_kind(std::string_view text) {
    if (text.size() < 3 || text.front() != '[' || text.back() != ']') return std::nullopt;
    return ontology::parse_kind(text.substr(1, text.size() - 2));
}

struct Placeholder {
    std::size_t pos;
    std::size_t len;
    EntityKind kind;
};

std::vector<Placeholder> find_placeholders(const std::string& text, const std::string& id) {
    std::vector<Placeholder> out;
    std::size_t pos = 0;
    while ((pos = text.find('[', pos)) != std::string::npos) {
        auto close = text.find(']', pos);
        if (close == std::string::npos) {
            throw TemplateSchemaError(id + ": unclosed placeholder in question");
        }
        auto token = std::string_view(text).substr(pos, close - pos + 1);
        auto kind = slot_kind(token);
        if (!kind) {
            throw TemplateSchemaError(id + ": unknown placeholder " + std::string(token));
        }
        out.push_back(Placeholder{pos, token.size(), *kind});
        pos = close + 1;
    }
    return out;
}

std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out += i + 1 == names.size() ? " and " : ", ";
        out += names[i];
    }
    return out;
}

std::mt19937_64 seeded_rng(std::uint64_t seed, std::string_view salt) {
    std::vector<std::uint32_t> material{static_cast<std::uint32_t>(seed),
                                        static_cast<std::uint32_t>(seed >> 32)};
    for (char c : salt) material.push_back(static_cast<unsigned char>(c));
    std::seed_seq seq(material.begin(), material.end());
    return std::mt19937_64(seq);
}

// Nodes of `kind` whose name resolves back to exactly that node.
std::vector<NodeIndex> bindable_nodes(const KnowledgeGraph& graph, EntityKind kind) {
    std::vector<NodeIndex> out;
    for (NodeIndex n : graph.nodes_of_kind(kind)) {
        auto hits = graph.resolve_name(graph.node(n).name);
        if (hits.size() == 1 && hits.front() == n) out.push_back(n);
    }
    return out;
}

// Binding indices (mixed radix over the slot pools) in seeded random order.
std::vector<std::uint64_t> binding_order(std::uint64_t total, std::size_t wanted, std::mt19937_64& rng) {
    std::vector<std::uint64_t> order;
    if (total <= 4 * static_cast<std::uint64_t>(wanted)) {
        order.resize(total);
        for (std::uint64_t i = 0; i < total; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        if (order.size() > wanted) order.resize(wanted);
        return order;
    }
    std::set<std::uint64_t> seen;
    std::uniform_int_distribution<std::uint64_t> dist(0, total - 1);
    while (order.size() < wanted) {
        auto i = dist(rng);
        if (seen.insert(i).second) order.push_back(i);
    }
    return order;
}

ordered_json profile_json(const pathlang::PathProfile& p) {
    return ordered_json{{"length", p.length},
                        {"level", std::string(pathlang::bucket_name(p.bucket))},
                        {"operators", p.operators.names()}};
}

pathlang::PathProfile profile_from_json(const nlohmann::json& j) {
    pathlang::PathProfile p;
    p.length = j.at("length").get<std::size_t>();
    auto bucket = pathlang::parse_bucket(j.at("level").get<std::string>());
    if (!bucket) throw RecordFormatError("unknown bucket level");
    p.bucket = *bucket;
    for (const auto& op : j.at("operators")) {
        const auto name = op.get<std::string>();
        if (name == "filter") p.operators.filter = true;
        else if (name == "select") p.operators.select = true;
        else if (name == "exec_common") p.operators.exec_common = true;
        else if (name == "exec_difference") p.operators.exec_difference = true;
        else throw RecordFormatError("unknown operator '" + name + "'");
    }
    return p;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::vector<QuestionTemplate> load_templates(std::string_view document,
                                             const ontology::RelationRegistry& registry) {
    std::vector<QuestionTemplate> out;
    std::set<std::string> ids;
    std::istringstream in{std::string(document)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || trim(line).front() == '#') continue;
        auto f = split_tabs(line);
        const std::string where = "line " + std::to_string(line_no);
        if (f.size() != 5) {
            throw TemplateSchemaError(where + ": expected 5 tab-separated fields, got " +
                                      std::to_string(f.size()));
        }
        QuestionTemplate t;
        t.id = std::string(trim(f[0]));
        if (t.id.empty()) throw TemplateSchemaError(where + ": empty template id");
        if (!ids.insert(t.id).second) throw TemplateSchemaError(t.id + ": duplicate template id");

        const auto start = trim(f[1]);
        if (start != "-") {
            t.start_kind = slot_kind(start);
            if (!t.start_kind) throw TemplateSchemaError(t.id + ": bad start slot '" + std::string(start) + "'");
        }
        auto answer = ontology::parse_kind(trim(f[2]));
        if (!answer) throw TemplateSchemaError(t.id + ": bad answer kind '" + f[2] + "'");
        t.answer_kind = *answer;
        t.text = std::string(trim(f[3]));

        try {
            t.path = pathlang::parse_path(trim(f[4]), registry);
        } catch (const Error& e) {
            throw TemplateSchemaError(t.id + ": path: " + e.what());
        }
        const bool seeded = pathlang::is_seeded(t.path);
        if (seeded == t.start_kind.has_value()) {
            throw TemplateSchemaError(t.id + (seeded ? ": seeded path must use start '-'"
                                                     : ": unseeded path needs a [kind] start slot"));
        }

        std::vector<EntityKind> path_slots;
        if (t.start_kind) path_slots.push_back(*t.start_kind);
        for (const auto& step : t.path.steps) {
            if (const auto* sel = std::get_if<pathlang::Select>(&step)) {
                for (const auto& name : sel->names) {
                    if (auto k = slot_kind(name)) path_slots.push_back(*k);
                }
            }
        }
        for (const auto& p : find_placeholders(t.text, t.id)) t.slots.push_back(p.kind);
        if (t.slots != path_slots) {
            throw TemplateSchemaError(t.id + ": question placeholders do not match the path slots");
        }

        pathlang::TypedProgram typed;
        try {
            typed = pathlang::validate_program(t.path, registry, t.start_kind);
        } catch (const Error& e) {
            throw TemplateSchemaError(t.id + ": " + e.what());
        }
        for (std::size_t i = 0; i < typed.program.steps.size(); ++i) {
            const auto* sel = std::get_if<pathlang::Select>(&typed.program.steps[i]);
            if (sel == nullptr) continue;
            for (const auto& name : sel->names) {
                if (auto k = slot_kind(name); k && *k != typed.kinds[i]) {
                    throw TemplateSchemaError(t.id + ": select slot " + name + " applied to " +
                                              std::string(ontology::kind_token(typed.kinds[i])) +
                                              " entities");
                }
            }
        }
        if (typed.answer_kind() != t.answer_kind) {
            throw TemplateSchemaError(t.id + ": path answers " +
                                      std::string(ontology::kind_token(typed.answer_kind())) +
                                      ", template declares " +
                                      std::string(ontology::kind_token(t.answer_kind)));
        }
        t.path = typed.program;
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<QuestionTemplate> read_templates_file(const std::string& path,
                                                  const ontology::RelationRegistry& registry) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_templates(buffer.str(), registry);
}

std::string synthesize_cot(std::string_view question, const std::vector<std::string>& start_entities,
                           const pathlang::TypedProgram& program) {
    using ontology::kind_display_name;
    std::ostringstream out;
    out << "The question \"" << question << "\" asks for " << kind_display_name(program.answer_kind())
        << " entities, ";
    if (pathlang::is_seeded(program.program) || start_entities.empty()) {
        out << "starting from every " << kind_display_name(program.start_kind) << " node.\n";
    } else {
        out << "starting from the " << kind_display_name(program.start_kind) << ' '
            << join_names(start_entities) << ".\n";
    }
    const auto& steps = program.program.steps;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto from = i == 0 ? program.start_kind : program.kinds[i - 1];
        out << "Step " << i + 1 << ": ";
        std::visit(Overloaded{
                       [&](const pathlang::TypeSeed& s) {
                           out << "Retrieve all entities of type " << kind_display_name(s.kind) << '.';
                       },
                       [&](const pathlang::Traverse& s) {
                           out << "Follow the " << s.relation << " relation from the "
                               << kind_display_name(from) << " to the "
                               << kind_display_name(program.kinds[i]) << '.';
                       },
                       [&](const pathlang::Filter& s) {
                           out << "Keep only entities matching '" << s.keyword << "'.";
                       },
                       [&](const pathlang::Select& s) {
                           out << "Branch the reasoning for " << join_names(s.names) << '.';
                       },
                       [&](const pathlang::ExecCommon&) {
                           out << "Take the common results across branches.";
                       },
                       [&](const pathlang::ExecDifference&) {
                           out << "Take the different results across branches.";
                       },
                   },
                   steps[i]);
        out << '\n';
    }
    out << "Path: " << pathlang::render_path(program.program);
    return out.str();
}

std::vector<Sample> instantiate_template(const QuestionTemplate& tmpl, const KnowledgeGraph& graph,
                                         std::uint64_t seed, const InstantiateOptions& options) {
    const auto typed_template = pathlang::validate_program(tmpl.path, graph.registry(), tmpl.start_kind);
    const auto placeholders = find_placeholders(tmpl.text, tmpl.id);

    std::vector<std::vector<NodeIndex>> pools;
    std::uint64_t total = 1;
    for (auto kind : tmpl.slots) {
        pools.push_back(bindable_nodes(graph, kind));
        total *= pools.back().size();
    }
    if (total == 0) return {};

    auto rng = seeded_rng(seed, tmpl.id);
    const auto scan = std::max<std::size_t>(1, options.max_per_template * options.scan_factor);
    const auto order = binding_order(total, scan, rng);

    std::vector<Sample> out;
    for (auto index : order) {
        if (out.size() >= options.max_per_template) break;
        std::vector<NodeIndex> binding;
        for (const auto& pool : pools) {
            binding.push_back(pool[index % pool.size()]);
            index /= pool.size();
        }
        auto sorted = binding;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) continue;

        std::vector<std::string> names;
        for (auto n : binding) names.push_back(graph.node(n).name);

        std::string question;
        std::size_t last = 0;
        for (std::size_t i = 0; i < placeholders.size(); ++i) {
            question += tmpl.text.substr(last, placeholders[i].pos - last);
            question += names[i];
            last = placeholders[i].pos + placeholders[i].len;
        }
        question += tmpl.text.substr(last);

        auto typed = typed_template;
        std::size_t next = 0;
        std::vector<std::string> start_entities;
        std::optional<NodeSet> start;
        if (tmpl.start_kind) {
            start_entities.push_back(names[0]);
            start = NodeSet{binding[0]};
            next = 1;
        }
        for (auto& step : typed.program.steps) {
            if (auto* sel = std::get_if<pathlang::Select>(&step)) {
                for (auto& name : sel->names) {
                    if (slot_kind(name)) name = names[next++];
                }
            }
        }

        exec::ExecutionResult result;
        try {
            result = exec::execute(graph, typed, start);
        } catch (const Error& e) {
            spdlog::debug("template {}: binding dropped: {}", tmpl.id, e.what());
            continue;
        }
        if (result.answers.empty() && !options.keep_empty) continue;

        Sample s;
        s.question = question;
        s.path = pathlang::render_path(typed.program);
        s.start_entities = start_entities;
        s.answers = exec::answer_names(graph, result);
        s.template_id = tmpl.id;
        s.bucket = pathlang::profile(typed.program);
        s.cot = synthesize_cot(question, start_entities, typed);
        out.push_back(std::move(s));
    }
    return out;
}

bool sample_reproduces(const Sample& sample, const KnowledgeGraph& graph) {
    try {
        auto result = exec::run_path(graph, sample.path, sample.start_entities);
        return exec::answer_names(graph, result) == sample.answers;
    } catch (const Error&) {
        return false;
    }
}

DatasetSplit generate_dataset(const std::vector<QuestionTemplate>& templates,
                              const KnowledgeGraph& graph, const DatasetConfig& config) {
    std::vector<const QuestionTemplate*> ordered;
    for (const auto& t : templates) ordered.push_back(&t);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto* a, const auto* b) { return a->id < b->id; });

    std::vector<std::vector<Sample>> per_template(ordered.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (auto i = next++; i < ordered.size(); i = next++) {
            per_template[i] = instantiate_template(*ordered[i], graph, config.seed, config.instantiate);
        }
    };
    unsigned threads = config.threads != 0 ? config.threads : std::thread::hardware_concurrency();
    threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::max<std::size_t>(1, ordered.size())));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    DatasetSplit split;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        auto& samples = per_template[i];
        const auto n = samples.size();
        std::size_t n_test = 0;
        if (n < 2) {
            spdlog::warn("InsufficientBindings: template {} has {} sample(s); all go to train",
                         ordered[i]->id, n);
            split.insufficient_templates.push_back(ordered[i]->id);
        } else {
            n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * config.test_fraction));
            n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
        }
        for (std::size_t k = 0; k < n; ++k) {
            auto& target = k < n - n_test ? split.train : split.test;
            target.push_back(std::move(samples[k]));
        }
    }

    for (const auto* part : {&split.train, &split.test}) {
        for (const auto& s : *part) {
            if (!sample_reproduces(s, graph)) {
                throw Error("InternalError", "generated sample does not reproduce: " + s.question);
            }
        }
    }
    return split;
}

std::string profile_table(const DatasetSplit& split) {
    const std::vector<std::string> rows = {"L1", "L2", "L3", "L4+", "filter", "select",
                                           "exec_common", "exec_difference"};
    auto count = [](const std::vector<Sample>& samples, const std::string& row) {
        std::size_t c = 0;
        for (const auto& s : samples) {
            if (pathlang::bucket_name(s.bucket.bucket) == row) ++c;
            const auto ops = s.bucket.operators.names();
            if (std::find(ops.begin(), ops.end(), row) != ops.end()) ++c;
        }
        return c;
    };
    std::ostringstream out;
    auto line = [&](const std::string& label, std::size_t a, std::size_t b) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%-16s %8zu %8zu %8zu\n", label.c_str(), a, b, a + b);
        out << buf;
    };
    char header[96];
    std::snprintf(header, sizeof header, "%-16s %8s %8s %8s\n", "bucket", "train", "test", "all");
    out << header;
    for (const auto& row : rows) line(row, count(split.train, row), count(split.test, row));
    line("total", split.train.size(), split.test.size());
    return out.str();
}

std::string sample_to_json(const Sample& s) {
    ordered_json j;
    j["question"] = s.question;
    j["cot"] = s.cot;
    j["path"] = s.path;
    j["start_entities"] = s.start_entities;
    j["answers"] = s.answers;
    j["template_id"] = s.template_id;
    j["bucket"] = profile_json(s.bucket);
    return j.dump();
}

Sample sample_from_json(std::string_view line) {
    try {
        auto j = nlohmann::json::parse(line);
        Sample s;
        s.question = j.at("question").get<std::string>();
        s.cot = j.value("cot", std::string());
        s.path = j.at("path").get<std::string>();
        s.start_entities = j.value("start_entities", std::vector<std::string>{});
        s.answers = j.value("answers", std::vector<std::string>{});
        s.template_id = j.value("template_id", std::string());
        if (j.contains("bucket")) {
            s.bucket = profile_from_json(j.at("bucket"));
        } else {
            s.bucket = pathlang::profile(pathlang::parse_path(s.path));
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw RecordFormatError(e.what());
    }
}

std::string samples_to_jsonl(const std::vector<Sample>& samples) {
    std::string out;
    for (const auto& s : samples) out += sample_to_json(s) + "\n";
    return out;
}

std::vector<Sample> read_jsonl(std::string_view document) {
    std::vector<Sample> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < document.size()) {
        auto end = document.find('\n', start);
        if (end == std::string_view::npos) end = document.size();
        ++line_no;
        auto line = trim(document.substr(start, end - start));
        start = end + 1;
        if (line.empty()) continue;
        try {
            out.push_back(sample_from_json(line));
        } catch (const Error& e) {
            throw RecordFormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<Sample> read_jsonl_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return read_jsonl(buffer.str());
}

void write_dataset(const DatasetSplit& split, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
    const std::filesystem::path root(dir);
    write_text(root / "train.jsonl", samples_to_jsonl(split.train));
    write_text(root / "test.jsonl", samples_to_jsonl(split.test));
    write_text(root / "profile.txt", profile_table(split));
}

Sample paraphrase_hook(const Sample& sample, ParaphraseClient* client,
                       std::vector<std::string>* warnings) {
    if (client == nullptr) return sample;
    try {
        Sample out = sample;
        out.question = client->paraphrase(sample.question);
        return out;
    } catch (const RemoteUnavailable& e) {
        const std::string msg = std::string("paraphrase unavailable, keeping original question: ") + e.what();
        spdlog::warn("{}", msg);
        if (warnings != nullptr) warnings->push_back(msg);
        return sample;
    }
}

}  // namespace titan::datagen
