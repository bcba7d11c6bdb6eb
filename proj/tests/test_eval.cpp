#include <doctest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "support/fixture.hpp"
#include "titan/datagen.hpp"
#include "titan/error.hpp"
#include "titan/eval.hpp"
#include "titan/planner.hpp"

using namespace titan;
using namespace titan::eval;
using testing::fixture_graph;

namespace {

const datagen::DatasetSplit& fixture_dataset() {
    static const auto split = [] {
        const auto& g = fixture_graph();
        auto templates = datagen::read_templates_file(testing::data_path("templates.tsv"), g.registry());
        datagen::DatasetConfig config;
        config.seed = 11;
        return datagen::generate_dataset(templates, g, config);
    }();
    return split;
}

std::vector<Prediction> mock_predictions(const std::vector<datagen::Sample>& samples, planner::Mode mode) {
    planner::MockPlanner mock(samples, fixture_graph().registry_ptr());
    std::vector<Prediction> out;
    for (const auto& s : samples) {
        auto r = mock.plan({s.question, mode});
        out.push_back({s.question, pathlang::render_path(r.path), r.cot ? *r.cot + pathlang::render_path(r.path) : "",
                       r.start_entities});
    }
    return out;
}

pathlang::PathProgram parse(const std::string& text) { return pathlang::parse_path(text, fixture_graph().registry()); }

}  // namespace

TEST_CASE("text metrics on hand-computed pairs") {
    // LCS 3 of 4 candidate tokens and 3 reference tokens: P=3/4, R=1.
    CHECK(rouge_l("a b c d", "a b c") == doctest::Approx(6.0 / 7.0));
    CHECK(rouge_l("a b c d", "a b c") == doctest::Approx(0.857).epsilon(0.001));
    CHECK(rouge_l("a b c d", "a c d") == doctest::Approx(0.857).epsilon(0.001));
    CHECK(rouge_1("a b x", "a b y") == doctest::Approx(2.0 / 3.0));
    CHECK(rouge_1("a a b", "a b b") == doctest::Approx(0.667).epsilon(0.001));
    // LCS picks an order-preserving subsequence, unigram overlap does not.
    CHECK(rouge_l("c b a", "a b c") == doctest::Approx(1.0 / 3.0));
    CHECK(rouge_1("c b a", "a b c") == doctest::Approx(1.0));
    // Clipped counts.
    CHECK(rouge_1("the the the", "the cat") == doctest::Approx(2 * (1.0 / 3) * 0.5 / (1.0 / 3 + 0.5)));

    // p1=3/4, p2=2/3, p3=1/2, p4=0 -> 1e-9; no brevity penalty.
    const double expected = std::pow(0.75 * (2.0 / 3.0) * 0.5 * 1e-9, 0.25);
    CHECK(bleu("the cat sat down", "the cat sat") == doctest::Approx(expected).epsilon(1e-9));
    CHECK(bleu("the cat sat down", "the cat sat") == doctest::Approx(0.003976).epsilon(0.001));
    // Brevity penalty: candidate of 2 against reference of 4.
    CHECK(bleu("a b", "a b c d") == doctest::Approx(std::exp(1.0 - 2.0)));

    for (const char* t : {"x", "a b", "a b c", "Step 1: go to the node.\nPath: <PATH> uses_malware </PATH>"}) {
        CHECK(bleu(t, t) == doctest::Approx(1.0));
        CHECK(rouge_l(t, t) == doctest::Approx(1.0));
        CHECK(rouge_1(t, t) == doctest::Approx(1.0));
    }
    CHECK(bleu("", "a") == 0.0);
    CHECK(rouge_l("", "a") == 0.0);
    CHECK(rouge_1("a", "") == 0.0);
    CHECK(rouge_l("", "") == 0.0);
}

TEST_CASE("text metrics stay in range and ignore surrounding whitespace") {
    std::mt19937_64 rng(5);
    const std::vector<std::string> vocab = {"a", "b", "c", "the", "path", "<SEP>", "Step", "1:", "é", "x_y"};
    auto random_text = [&] {
        std::string s;
        auto len = std::uniform_int_distribution<int>(0, 12)(rng);
        for (int i = 0; i < len; ++i) {
            s += vocab[std::uniform_int_distribution<std::size_t>(0, vocab.size() - 1)(rng)];
            s += std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? "\n" : " ";
        }
        return s;
    };
    for (int i = 0; i < 1000; ++i) {
        const auto c = random_text();
        const auto r = random_text();
        for (double v : {rouge_l(c, r), rouge_1(c, r), bleu(c, r)}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        CHECK(rouge_l(c, r) == doctest::Approx(rouge_l(r, c)));
        CHECK(rouge_1(c, r) == doctest::Approx(rouge_1(r, c)));
        CHECK(rouge_l(c + "  \n\t", "\n" + r) == rouge_l(c, r));
        CHECK(bleu("  " + c + "\n", r + " ") == bleu(c, r));
        CHECK(rouge_1(c, r) >= rouge_l(c, r) - 1e-12);
    }
}

TEST_CASE("exact match compares canonical forms") {
    const auto& reg = fixture_graph().registry();
    const auto ref = parse("<PATH> uses_attack_pattern <SEP> mitigated_by_course_of_action </PATH>");
    CHECK(exact_match(parse("uses_attack_pattern → mitigated_by"), ref, reg) == 1);
    CHECK(exact_match(parse("<PATH> uses_attack_pattern </PATH>"), ref, reg) == 0);
    CHECK(exact_match(parse("<PATH> uses_attack_pattern <SEP> targets </PATH>"), ref, reg) == 0);

    const auto filtered = parse("<PATH> is_intrusion_set_type <SEP> filter russia </PATH>");
    CHECK(exact_match(parse("<PATH> is_intrusion_set_type <SEP> filter Russia </PATH>"), filtered, reg) == 1);
    CHECK(exact_match(parse("<PATH> is_intrusion_set_type <SEP> filter china </PATH>"), filtered, reg) == 0);

    CHECK(raw_exact_match("<PATH> a </PATH>\n", "  <PATH> a </PATH>") == 1);
    CHECK(raw_exact_match("<PATH> A </PATH>", "<PATH> a </PATH>") == 0);
}

TEST_CASE("mock predictions score perfectly") {
    const auto& reg = fixture_graph().registry();
    const auto& test = fixture_dataset().test;
    REQUIRE(test.size() >= 10);

    auto records = score(test, mock_predictions(test, planner::Mode::CoT), reg);
    auto report = aggregate_report(records);
    CHECK(report.global.n == test.size());
    CHECK(report.global.mean_em() == 1.0);
    CHECK(report.global.mean_raw_em() == 1.0);
    CHECK(report.global.text_n == test.size());
    CHECK(report.global.mean_bleu() == doctest::Approx(1.0));
    CHECK(report.global.mean_rouge_l() == doctest::Approx(1.0));

    auto nocot = aggregate_report(score(test, mock_predictions(test, planner::Mode::NoCoT), reg));
    CHECK(nocot.global.mean_em() == 1.0);
    CHECK(nocot.global.text_n == 0);

    const auto table = format_report(report);
    for (const char* row : {"L1", "L2", "L3", "L4+", "filter", "select", "exec_common", "exec_difference", "all"}) {
        CHECK(table.find(std::string("\n") + row + " ") != std::string::npos);
    }
    CHECK(table.find("n/a") != std::string::npos);

    const auto jsonl = records_to_jsonl(records);
    auto first = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
    CHECK(first["em"] == 1);
    CHECK(first["bertscore"].is_null());
    CHECK(first["reference"] == first["predicted"]);
}

TEST_CASE("bucket means recombine to the global mean") {
    const auto& reg = fixture_graph().registry();
    auto samples = fixture_dataset().train;
    auto predictions = mock_predictions(samples, planner::Mode::CoT);
    corrupt_predictions(predictions, 0.37, 3, reg);
    // Degrade some reasoning text too so text metrics vary.
    for (std::size_t i = 0; i < predictions.size(); i += 3) predictions[i].cot = "unrelated words only";

    auto report = aggregate_report(score(samples, predictions, reg));
    std::size_t n = 0;
    double em = 0, rl = 0, bl = 0;
    std::size_t text_n = 0;
    for (const auto& s : report.by_length) {
        n += s.n;
        em += static_cast<double>(s.n) * s.mean_em();
        text_n += s.text_n;
        rl += static_cast<double>(s.text_n) * s.mean_rouge_l();
        bl += static_cast<double>(s.text_n) * s.mean_bleu();
    }
    CHECK(n == report.global.n);
    CHECK(em / static_cast<double>(n) == doctest::Approx(report.global.mean_em()).epsilon(1e-12));
    CHECK(rl / static_cast<double>(text_n) == doctest::Approx(report.global.mean_rouge_l()).epsilon(1e-12));
    CHECK(bl / static_cast<double>(text_n) == doctest::Approx(report.global.mean_bleu()).epsilon(1e-12));
    CHECK(report.global.mean_em() < 1.0);

    // Operator buckets count exactly the records carrying each flag.
    std::array<std::size_t, 4> flags{};
    std::size_t plain = 0;
    for (const auto& s : samples) {
        const auto& o = s.bucket.operators;
        flags[0] += o.filter;
        flags[1] += o.select;
        flags[2] += o.exec_common;
        flags[3] += o.exec_difference;
        plain += !o.any();
    }
    for (std::size_t i = 0; i < 4; ++i) CHECK(report.by_operator[i].n == flags[i]);
    CHECK(report.no_operator.n == plain);
}

TEST_CASE("corrupting a fifth of perfect predictions gives EM 0.8") {
    const auto& reg = fixture_graph().registry();
    auto samples = fixture_dataset().train;
    samples.resize(samples.size() - samples.size() % 5);
    auto predictions = mock_predictions(samples, planner::Mode::NoCoT);
    auto changed = corrupt_predictions(predictions, 0.2, 99, reg);
    CHECK(changed.size() == samples.size() / 5);
    auto report = aggregate_report(score(samples, predictions, reg));
    CHECK(report.global.mean_em() == doctest::Approx(0.8).epsilon(1e-12));
    for (auto i : changed) CHECK(predictions[i].path != samples[i].path);
}

TEST_CASE("prediction files") {
    const auto& reg = fixture_graph().registry();
    const auto& test = fixture_dataset().test;
    auto preds = mock_predictions(test, planner::Mode::CoT);
    auto back = read_predictions(predictions_to_jsonl(preds));
    REQUIRE(back.size() == preds.size());
    CHECK(back.front().path == preds.front().path);
    CHECK(back.front().cot == preds.front().cot);

    auto minimal = read_predictions("{\"question\": \"q\", \"path\": \"<PATH> bogus\"}\n\n");
    REQUIRE(minimal.size() == 1);
    CHECK(minimal[0].cot.empty());

    try {
        read_predictions("{\"question\": \"q\", \"path\": \"p\"}\n{\"question\": 3}\n");
        FAIL("expected RecordFormatError");
    } catch (const RecordFormatError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    std::vector<datagen::Sample> one(test.begin(), test.begin() + 1);
    CHECK_THROWS_AS(score(one, {}, reg), RecordFormatError);
    CHECK_THROWS_AS(score(one, {{"other question", one[0].path, "", {}}}, reg), RecordFormatError);

    // Unparseable predictions score zero but keep their place.
    auto records = score(one, {{one[0].question, "<PATH> uses_malware", "", {}}}, reg);
    CHECK(records[0].em == 0);
    CHECK(records[0].predicted.empty());
}
