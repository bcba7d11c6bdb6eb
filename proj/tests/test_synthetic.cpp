#include <doctest.h>

#include <chrono>

#include "support/fixture.hpp"
#include "titan/datagen.hpp"
#include "titan/ingest.hpp"
#include "titan/synthetic.hpp"

using namespace titan;
using ontology::EntityKind;

TEST_CASE("synthetic bundle is seed-deterministic") {
    synth::SyntheticOptions small;
    small.counts = {60, 20, 40, 8, 4, 12, 10, 5, 6};
    const auto a = synth::generate_bundle(small);
    CHECK(a == synth::generate_bundle(small));
    small.seed = 2;
    CHECK(a != synth::generate_bundle(small));
}

TEST_CASE("synthetic bundle ingests with the requested census") {
    synth::SyntheticOptions small;
    small.counts = {60, 20, 40, 8, 4, 12, 10, 5, 6};
    kg::BuildReport report;
    auto graph = kg::build_graph(kg::parse_stix_bundle(synth::generate_bundle(small)), kg::BuildOptions{}, &report);
    auto census = kg::node_census(graph);
    for (auto kind : ontology::kAllKinds) {
        CAPTURE(ontology::kind_token(kind));
        CHECK(census.per_kind[ontology::index_of(kind)] == small.counts[ontology::index_of(kind)]);
    }
    CHECK(report.dangling_relationships == 0);
    CHECK(report.skipped.empty());
    for (const auto& e : graph.edges()) {
        const auto* sig = graph.registry().find(graph.node(e.src).kind, e.relation);
        REQUIRE(sig != nullptr);
        CHECK(sig->target_kind == graph.node(e.dst).kind);
    }
    // Every name is unique, so every node is bindable by name.
    for (std::uint32_t i = 0; i < graph.node_count(); ++i) {
        CHECK(graph.resolve_name(graph.node(kg::NodeIndex{i}).name).size() == 1);
    }
}

TEST_CASE("full-size synthetic graph feeds the template corpus") {
    const auto start = std::chrono::steady_clock::now();
    auto graph = kg::build_graph(kg::parse_stix_bundle(synth::generate_bundle()));
    auto census = kg::node_census(graph);
    CHECK(census.nodes == 2400);
    auto templates = datagen::read_templates_file(testing::data_path("templates.tsv"), graph.registry());
    datagen::DatasetConfig config;
    config.instantiate.max_per_template = 40;
    auto split = datagen::generate_dataset(templates, graph, config);
    const auto seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    MESSAGE("edges=" << census.edges << " train=" << split.train.size() << " test=" << split.test.size()
                     << " seconds=" << seconds);
    CHECK(split.train.size() + split.test.size() >= 1000);
}
