#include "titan/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>
#include <vector>

#include <json.hpp>

namespace titan::synth {

namespace {

using nlohmann::ordered_json;
using ontology::EntityKind;

constexpr std::array<const char*, 14> kPlatforms = {
    "Windows", "Linux",  "macOS",   "Network",       "Containers",        "IaaS",     "SaaS",
    "Office Suite", "Identity Provider", "Android", "iOS", "PRE", "ESXi", "Google Workspace",
};
// Relative frequency of each platform on a technique.
constexpr std::array<double, 14> kPlatformWeight = {0.85, 0.5, 0.45, 0.12, 0.06, 0.1, 0.08,
                                                    0.07, 0.06, 0.05, 0.04, 0.03, 0.03, 0.03};

constexpr std::array<const char*, 8> kNations = {"Russian", "Chinese", "Iranian", "North Korean",
                                                 "Vietnamese", "Pakistani", "Turkish", "Lebanese"};

class Builder {
public:
    explicit Builder(std::uint64_t seed) : rng_(seed) {}

    std::string make_id(const std::string& type) {
        char buf[48];
        const auto a = rng_();
        const auto b = rng_();
        std::snprintf(buf, sizeof buf, "%08x-%04x-4%03x-8%03x-%012llx", static_cast<unsigned>(a >> 32),
                      static_cast<unsigned>((a >> 16) & 0xffff), static_cast<unsigned>(a & 0xfff),
                      static_cast<unsigned>((b >> 48) & 0xfff),
                      static_cast<unsigned long long>(b & 0xffffffffffffULL));
        return type + "--" + buf;
    }

    std::size_t uniform(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
    }
    bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

    std::vector<std::size_t> sample(std::size_t population, std::size_t k) {
        k = std::min(k, population);
        std::set<std::size_t> picked;
        while (picked.size() < k) picked.insert(uniform(0, population - 1));
        return {picked.begin(), picked.end()};
    }

    ordered_json object(const std::string& type, const std::string& name, const std::string& external_id,
                        const std::string& description) {
        ordered_json o;
        o["type"] = type;
        o["spec_version"] = "2.1";
        o["id"] = make_id(type);
        o["created"] = "2024-01-01T00:00:00.000Z";
        o["modified"] = "2024-01-01T00:00:00.000Z";
        o["name"] = name;
        o["description"] = description;
        if (!external_id.empty()) {
            o["external_references"] =
                ordered_json::array({{{"source_name", "mitre-attack"}, {"external_id", external_id}}});
        }
        return o;
    }

    void relate(ordered_json& objects, const std::string& verb, const std::string& src, const std::string& dst) {
        ordered_json r;
        r["type"] = "relationship";
        r["spec_version"] = "2.1";
        r["id"] = make_id("relationship");
        r["relationship_type"] = verb;
        r["source_ref"] = src;
        r["target_ref"] = dst;
        objects.push_back(std::move(r));
    }

    std::mt19937_64& rng() { return rng_; }

private:
    std::mt19937_64 rng_;
};

std::string numbered(const char* prefix, std::size_t n, int width) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, n);
    return buf;
}

}  // namespace

std::string generate_bundle(const SyntheticOptions& options) {
    Builder b(options.seed);
    auto count = [&](EntityKind k) { return options.counts[ontology::index_of(k)]; };
    ordered_json objects = ordered_json::array();

    const std::size_t n_platforms = std::min(count(EntityKind::Asset), kPlatforms.size());

    // Attack patterns: roughly 40% are sub-techniques of an earlier parent.
    std::vector<std::string> ap;
    std::size_t parents = 0;
    std::vector<std::size_t> sub_counter;
    std::vector<std::string> parent_ids;
    for (std::size_t i = 0; i < count(EntityKind::AttackPattern); ++i) {
        const bool sub = parents > 0 && b.chance(0.4);
        std::string ext;
        std::size_t parent = 0;
        if (sub) {
            parent = b.uniform(0, parents - 1);
            ext = numbered("T", 1001 + parent, 4) + numbered(".", ++sub_counter[parent], 3);
        } else {
            ext = numbered("T", 1001 + parents, 4);
            ++parents;
            sub_counter.push_back(0);
        }
        auto o = b.object("attack-pattern", "Technique " + ext, ext, "Synthetic technique " + ext + ".");
        ordered_json platforms = ordered_json::array();
        for (std::size_t p = 0; p < n_platforms; ++p) {
            if (b.chance(kPlatformWeight[p])) platforms.push_back(kPlatforms[p]);
        }
        if (platforms.empty() && n_platforms > 0) platforms.push_back(kPlatforms[b.uniform(0, n_platforms - 1)]);
        o["x_mitre_platforms"] = platforms;
        ap.push_back(o["id"]);
        objects.push_back(std::move(o));
        if (sub) {
            b.relate(objects, "subtechnique-of", ap.back(), parent_ids[parent]);
        } else {
            parent_ids.push_back(ap.back());
        }
    }

    auto add_kind = [&](const char* type, const char* label, const char* prefix, std::size_t n,
                        std::size_t first_number, const auto& decorate) {
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < n; ++i) {
            const auto ext = numbered(prefix, first_number + i, 4);
            auto o = b.object(type, std::string(label) + " " + ext, ext,
                              std::string("Synthetic ") + label + " " + ext + ".");
            decorate(o);
            ids.push_back(o["id"]);
            objects.push_back(std::move(o));
        }
        return ids;
    };
    auto plain = [](ordered_json&) {};

    auto coa = add_kind("course-of-action", "Mitigation", "M", count(EntityKind::CourseOfAction), 1001, plain);
    auto malware = add_kind("malware", "Malware", "S", count(EntityKind::Malware), 1, [&](ordered_json& o) {
        o["is_family"] = true;
        if (b.chance(0.2)) o["labels"] = ordered_json::array({"rat"});
    });
    auto tools = add_kind("tool", "Tool", "S", count(EntityKind::Tool), 5001, plain);
    auto groups = add_kind("intrusion-set", "Group", "G", count(EntityKind::IntrusionSet), 1, [&](ordered_json& o) {
        if (b.chance(0.45)) {
            const char* nation = kNations[b.uniform(0, kNations.size() - 1)];
            o["description"] = o["description"].get<std::string>() + " A suspected " + nation +
                               " state-sponsored threat group.";
        }
    });
    auto campaigns = add_kind("campaign", "Campaign", "C", count(EntityKind::Campaign), 1, plain);
    auto sources = add_kind("x-mitre-data-source", "Source", "DS", count(EntityKind::DataSource), 1, plain);
    std::size_t next_source = 0;
    auto components =
        add_kind("x-mitre-data-component", "Component", "DC", count(EntityKind::DataComponent), 1, [&](ordered_json& o) {
            if (sources.empty()) return;
            // Round-robin first so every source provides something.
            const auto s = next_source < sources.size() ? next_source++ : b.uniform(0, sources.size() - 1);
            o["x_mitre_data_source_ref"] = sources[s];
        });

    auto link_many = [&](const std::vector<std::string>& from, const char* verb, const std::vector<std::string>& to,
                         std::size_t lo, std::size_t hi) {
        if (to.empty()) return;
        for (const auto& src : from) {
            for (auto j : b.sample(to.size(), b.uniform(lo, hi))) b.relate(objects, verb, src, to[j]);
        }
    };
    link_many(coa, "mitigates", ap, 1, 12);
    link_many(malware, "uses", ap, 3, 25);
    link_many(tools, "uses", ap, 2, 15);
    link_many(groups, "uses", malware, 1, 8);
    link_many(groups, "uses", tools, 0, 5);
    link_many(groups, "uses", ap, 5, 40);
    link_many(campaigns, "uses", malware, 1, 4);
    link_many(campaigns, "uses", tools, 0, 3);
    link_many(campaigns, "uses", ap, 3, 20);
    link_many(components, "detects", ap, 5, 60);
    if (!groups.empty()) {
        for (const auto& c : campaigns) {
            if (b.chance(0.8)) b.relate(objects, "attributed-to", c, groups[b.uniform(0, groups.size() - 1)]);
        }
    }

    ordered_json bundle;
    bundle["type"] = "bundle";
    bundle["id"] = b.make_id("bundle");
    bundle["objects"] = std::move(objects);
    return bundle.dump(1) + "\n";
}

}  // namespace titan::synth
