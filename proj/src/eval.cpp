#include "titan/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "titan/error.hpp"
#include "titan/text.hpp"

namespace titan::eval {

namespace {

using Tokens = std::vector<std::string>;

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double f1(double matches, std::size_t cand, std::size_t ref) {
    if (cand == 0 || ref == 0 || matches == 0) return 0.0;
    const double p = matches / static_cast<double>(cand);
    const double r = matches / static_cast<double>(ref);
    return 2 * p * r / (p + r);
}

std::map<Tokens, std::size_t> ngram_counts(const Tokens& tokens, std::size_t n) {
    std::map<Tokens, std::size_t> counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                        tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

std::size_t clipped_overlap(const std::map<Tokens, std::size_t>& cand, const std::map<Tokens, std::size_t>& ref) {
    std::size_t total = 0;
    for (const auto& [gram, c] : cand) {
        auto it = ref.find(gram);
        if (it != ref.end()) total += std::min(c, it->second);
    }
    return total;
}

std::string fold(std::string_view text) {
    auto s = kg::normalize_name(text);
    return s;
}

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::string fmt_row(const std::string& label, const Stat& s) {
    char buf[160];
    if (s.n == 0) {
        std::snprintf(buf, sizeof buf, "%-16s %6zu %7s %7s %7s %7s %7s %10s\n", label.c_str(), s.n, "-", "-", "-",
                      "-", "-", "n/a");
    } else if (s.text_n == 0) {
        std::snprintf(buf, sizeof buf, "%-16s %6zu %7.3f %7.3f %7s %7s %7s %10s\n", label.c_str(), s.n,
                      s.mean_em(), s.mean_raw_em(), "-", "-", "-", "n/a");
    } else {
        std::snprintf(buf, sizeof buf, "%-16s %6zu %7.3f %7.3f %7.3f %7.3f %7.3f %10s\n", label.c_str(), s.n,
                      s.mean_em(), s.mean_raw_em(), s.mean_rouge_l(), s.mean_rouge_1(), s.mean_bleu(), "n/a");
    }
    return buf;
}

}  // namespace

double rouge_l(std::string_view candidate, std::string_view reference) {
    const auto c = text::tokenize(candidate);
    const auto r = text::tokenize(reference);
    return f1(static_cast<double>(lcs_length(c, r)), c.size(), r.size());
}

double rouge_1(std::string_view candidate, std::string_view reference) {
    const auto c = text::tokenize(candidate);
    const auto r = text::tokenize(reference);
    return f1(static_cast<double>(clipped_overlap(ngram_counts(c, 1), ngram_counts(r, 1))), c.size(), r.size());
}

double bleu(std::string_view candidate, std::string_view reference, int max_n) {
    const auto c = text::tokenize(candidate);
    const auto r = text::tokenize(reference);
    if (c.empty() || r.empty()) return 0.0;
    double log_sum = 0;
    int orders = 0;
    for (int n = 1; n <= max_n; ++n) {
        const auto nn = static_cast<std::size_t>(n);
        if (c.size() < nn) break;
        const auto total = c.size() - nn + 1;
        const auto matches = clipped_overlap(ngram_counts(c, nn), ngram_counts(r, nn));
        const double p = matches == 0 ? 1e-9 : static_cast<double>(matches) / static_cast<double>(total);
        log_sum += std::log(p);
        ++orders;
    }
    const double bp = c.size() < r.size()
                          ? std::exp(1.0 - static_cast<double>(r.size()) / static_cast<double>(c.size()))
                          : 1.0;
    return std::clamp(bp * std::exp(log_sum / orders), 0.0, 1.0);
}

std::string canonical_form(const pathlang::PathProgram& program, const ontology::RelationRegistry& registry,
                           std::optional<ontology::EntityKind> start_kind) {
    pathlang::PathProgram p = program;
    try {
        p = pathlang::validate_program(program, registry, start_kind).program;
    } catch (const Error&) {
        // Keep relations as parsed; the comparison still works structurally.
    }
    for (auto& step : p.steps) {
        if (auto* f = std::get_if<pathlang::Filter>(&step)) f->keyword = fold(f->keyword);
        if (auto* s = std::get_if<pathlang::Select>(&step)) {
            for (auto& name : s->names) name = fold(name);
        }
    }
    return pathlang::render_path(p);
}

int exact_match(const pathlang::PathProgram& predicted, const pathlang::PathProgram& reference,
                const ontology::RelationRegistry& registry, std::optional<ontology::EntityKind> start_kind) {
    return canonical_form(predicted, registry, start_kind) == canonical_form(reference, registry, start_kind) ? 1
                                                                                                              : 0;
}

int raw_exact_match(std::string_view predicted, std::string_view reference) {
    return trim(predicted) == trim(reference) ? 1 : 0;
}

std::string prediction_to_json(const Prediction& p) {
    nlohmann::ordered_json j;
    j["question"] = p.question;
    j["path"] = p.path;
    j["cot"] = p.cot;
    j["start_entities"] = p.start_entities;
    return j.dump();
}

std::vector<Prediction> read_predictions(std::string_view document) {
    std::vector<Prediction> out;
    std::istringstream in{std::string(document)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            Prediction p;
            p.question = j.at("question").get<std::string>();
            p.path = j.at("path").get<std::string>();
            p.cot = j.value("cot", std::string());
            p.start_entities = j.value("start_entities", std::vector<std::string>{});
            out.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            throw RecordFormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<Prediction> read_predictions_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return read_predictions(buffer.str());
}

std::string predictions_to_jsonl(const std::vector<Prediction>& predictions) {
    std::string out;
    for (const auto& p : predictions) out += prediction_to_json(p) + "\n";
    return out;
}

std::vector<EvalRecord> score(const std::vector<datagen::Sample>& samples,
                              const std::vector<Prediction>& predictions,
                              const ontology::RelationRegistry& registry) {
    if (samples.size() != predictions.size()) {
        throw RecordFormatError("dataset has " + std::to_string(samples.size()) + " records, predictions have " +
                                std::to_string(predictions.size()));
    }
    std::vector<EvalRecord> out;
    out.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const auto& p = predictions[i];
        if (s.question != p.question) {
            throw RecordFormatError("line " + std::to_string(i + 1) + ": prediction question does not match dataset");
        }
        const auto ref = pathlang::parse_path(s.path, registry);
        std::optional<ontology::EntityKind> start_kind;
        try {
            start_kind = pathlang::compile_path(s.path, registry, std::nullopt).start_kind;
        } catch (const MissingStartKind&) {
            // Unseeded reference: infer its start kind from the first relation.
            for (auto kind : ontology::kAllKinds) {
                try {
                    pathlang::validate_program(ref, registry, kind);
                    start_kind = kind;
                    break;
                } catch (const Error&) {
                }
            }
        }

        EvalRecord r;
        r.question = s.question;
        r.template_id = s.template_id;
        r.reference = canonical_form(ref, registry, start_kind);
        r.bucket = pathlang::profile(ref);
        r.raw_em = raw_exact_match(p.path, s.path);
        try {
            r.predicted = canonical_form(pathlang::parse_path(p.path, registry), registry, start_kind);
            r.em = r.predicted == r.reference ? 1 : 0;
        } catch (const Error&) {
            r.predicted.clear();
            r.em = 0;
        }
        if (!p.cot.empty() && !s.cot.empty()) {
            r.text = TextScores{rouge_l(p.cot, s.cot), rouge_1(p.cot, s.cot), bleu(p.cot, s.cot)};
        }
        out.push_back(std::move(r));
    }
    return out;
}

void Stat::add(const EvalRecord& r) {
    ++n;
    em += r.em;
    raw_em += r.raw_em;
    if (r.text) {
        ++text_n;
        rouge_l += r.text->rouge_l;
        rouge_1 += r.text->rouge_1;
        bleu += r.text->bleu;
    }
}

void Stat::merge(const Stat& o) {
    n += o.n;
    em += o.em;
    raw_em += o.raw_em;
    text_n += o.text_n;
    rouge_l += o.rouge_l;
    rouge_1 += o.rouge_1;
    bleu += o.bleu;
}

BucketReport aggregate_report(const std::vector<EvalRecord>& records) {
    BucketReport report;
    for (const auto& r : records) {
        report.by_length[static_cast<std::size_t>(r.bucket.bucket)].add(r);
        const auto& ops = r.bucket.operators;
        const bool flags[4] = {ops.filter, ops.select, ops.exec_common, ops.exec_difference};
        for (std::size_t i = 0; i < 4; ++i) {
            if (flags[i]) report.by_operator[i].add(r);
        }
        if (!ops.any()) report.no_operator.add(r);
    }
    for (const auto& s : report.by_length) report.global.merge(s);
    return report;
}

std::string format_report(const BucketReport& report) {
    std::string out;
    char header[160];
    std::snprintf(header, sizeof header, "%-16s %6s %7s %7s %7s %7s %7s %10s\n", "bucket", "n", "EM", "rawEM", "R-L",
                  "R-1", "BLEU", "BERTScore");
    out += header;
    const char* lengths[4] = {"L1", "L2", "L3", "L4+"};
    for (std::size_t i = 0; i < 4; ++i) out += fmt_row(lengths[i], report.by_length[i]);
    for (std::size_t i = 0; i < 4; ++i) out += fmt_row(kOperatorNames[i], report.by_operator[i]);
    out += fmt_row("no_operator", report.no_operator);
    out += fmt_row("all", report.global);
    out += "BERTScore: not computed\n";
    return out;
}

std::string records_to_jsonl(const std::vector<EvalRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["question"] = r.question;
        j["template_id"] = r.template_id;
        j["predicted"] = r.predicted;
        j["reference"] = r.reference;
        j["em"] = r.em;
        j["raw_em"] = r.raw_em;
        if (r.text) {
            j["rouge_l"] = r.text->rouge_l;
            j["rouge_1"] = r.text->rouge_1;
            j["bleu"] = r.text->bleu;
        } else {
            j["rouge_l"] = nullptr;
            j["rouge_1"] = nullptr;
            j["bleu"] = nullptr;
        }
        j["bertscore"] = nullptr;
        j["level"] = std::string(pathlang::bucket_name(r.bucket.bucket));
        j["operators"] = r.bucket.operators.names();
        out += j.dump() + "\n";
    }
    return out;
}

std::vector<std::size_t> corrupt_predictions(std::vector<Prediction>& predictions, double fraction,
                                             std::uint64_t seed, const ontology::RelationRegistry& registry) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(predictions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(predictions.size())));
    order.resize(std::min(k, order.size()));
    std::sort(order.begin(), order.end());

    const auto relations = registry.relation_names();
    for (auto i : order) {
        auto program = pathlang::parse_path(predictions[i].path, registry);
        std::vector<std::size_t> traverses;
        for (std::size_t s = 0; s < program.steps.size(); ++s) {
            if (std::holds_alternative<pathlang::Traverse>(program.steps[s])) traverses.push_back(s);
        }
        if (!traverses.empty()) {
            auto& t = std::get<pathlang::Traverse>(
                program.steps[traverses[std::uniform_int_distribution<std::size_t>(0, traverses.size() - 1)(rng)]]);
            std::string replacement;
            do {
                replacement = relations[std::uniform_int_distribution<std::size_t>(0, relations.size() - 1)(rng)];
            } while (replacement == t.relation);
            t.relation = replacement;
        } else if (auto* seed_step = std::get_if<pathlang::TypeSeed>(&program.steps.front())) {
            auto kind = seed_step->kind;
            do {
                kind = ontology::kAllKinds[std::uniform_int_distribution<std::size_t>(0, ontology::kAllKinds.size() - 1)(
                    rng)];
            } while (kind == seed_step->kind);
            seed_step->kind = kind;
        }
        predictions[i].path = pathlang::render_path(program);
    }
    return order;
}

}  // namespace titan::eval
