#include "titan/stix.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "titan/error.hpp"

namespace titan::kg {

namespace {

using nlohmann::json;

std::string string_field(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) return {};
    return it->get<std::string>();
}

bool bool_field(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it != obj.end() && it->is_boolean() && it->get<bool>();
}

void append_strings(const json& obj, const char* key, std::vector<std::string>& out) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_array()) return;
    for (const auto& item : *it) {
        if (item.is_string()) out.push_back(item.get<std::string>());
    }
}

std::string attack_external_id(const json& obj) {
    auto it = obj.find("external_references");
    if (it == obj.end() || !it->is_array()) return {};
    for (const auto& ref : *it) {
        if (!ref.is_object()) continue;
        auto source = string_field(ref, "source_name");
        if (source == "mitre-attack" || source == "mitre-ics-attack" ||
            source == "mitre-mobile-attack") {
            return string_field(ref, "external_id");
        }
    }
    return {};
}

StixObject convert(const json& obj, std::size_t index) {
    if (!obj.is_object()) {
        throw MalformedBundle("object #" + std::to_string(index) + " is not a JSON object");
    }
    StixObject out;
    out.type = string_field(obj, "type");
    out.id = string_field(obj, "id");
    if (out.type.empty() || out.id.empty()) {
        throw MalformedBundle("object #" + std::to_string(index) + " lacks type or id");
    }
    out.name = string_field(obj, "name");
    append_strings(obj, "aliases", out.aliases);
    append_strings(obj, "x_mitre_aliases", out.aliases);
    out.description = string_field(obj, "description");
    append_strings(obj, "labels", out.labels);
    append_strings(obj, "x_mitre_platforms", out.platforms);
    out.external_id = attack_external_id(obj);
    out.revoked = bool_field(obj, "revoked");
    out.deprecated = bool_field(obj, "x_mitre_deprecated");
    out.relationship_type = string_field(obj, "relationship_type");
    out.source_ref = string_field(obj, "source_ref");
    out.target_ref = string_field(obj, "target_ref");
    out.data_source_ref = string_field(obj, "x_mitre_data_source_ref");
    return out;
}

}  // namespace

std::vector<StixObject> parse_stix_bundle(std::string_view document) {
    json root;
    try {
        root = json::parse(document.begin(), document.end());
    } catch (const json::parse_error& e) {
        throw MalformedBundle("unparseable bundle at byte " + std::to_string(e.byte) + ": " +
                              e.what());
    }

    const json* objects = nullptr;
    if (root.is_array()) {
        objects = &root;
    } else if (root.is_object()) {
        auto it = root.find("objects");
        if (it == root.end() || !it->is_array()) {
            throw MalformedBundle("bundle has no 'objects' array");
        }
        objects = &*it;
    } else {
        throw MalformedBundle("bundle root must be an object or an array");
    }

    std::vector<StixObject> out;
    out.reserve(objects->size());
    for (std::size_t i = 0; i < objects->size(); ++i) out.push_back(convert((*objects)[i], i));
    return out;
}

std::vector<StixObject> read_stix_bundle_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open bundle: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_stix_bundle(buffer.str());
}

}  // namespace titan::kg
