#include "sinbad/manifest.hpp"

#include "sinbad/io.hpp"

#include <json.hpp>

#include <set>
#include <utility>

namespace sinbad {

using nlohmann::json;

const char* to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "?";
}

const char* to_string(Label label) {
    switch (label) {
        case Label::normal: return "normal";
        case Label::anomalous: return "anomalous";
        case Label::unknown: return "unknown";
    }
    return "?";
}

Split parse_split(std::string_view text) {
    if (text == "train") return Split::train;
    if (text == "validation") return Split::validation;
    if (text == "test") return Split::test;
    throw DataError("unknown split '" + std::string(text) + "'");
}

Label resolve_label(const LabelMap& map, std::string_view name) {
    if (auto it = map.find(name); it != map.end()) {
        return it->second;
    }
    if (name == "normal") return Label::normal;
    if (name == "anomalous") return Label::anomalous;
    if (name == "unknown") return Label::unknown;
    throw DataError("label '" + std::string(name) + "' has no mapping in the dataset config");
}

void validate_manifest(const DatasetManifest& manifest) {
    if (manifest.format_version != kManifestFormatVersion) {
        throw DataError("unsupported manifest format_version " +
                        std::to_string(manifest.format_version));
    }
    std::set<std::pair<std::string, GroupKeys>> seen;
    for (const auto& entry : manifest.entries) {
        if (manifest.split == Split::train && entry.label != Label::normal) {
            throw DataError("training entry '" + entry.sample_id + "' is labeled " +
                            to_string(entry.label) + "; training data must be normal");
        }
        if (!seen.emplace(entry.sample_id, entry.group_keys).second) {
            throw DataError("duplicate manifest entry for sample '" + entry.sample_id + "'");
        }
    }
}

DatasetManifest load_manifest(const std::filesystem::path& path, const LabelMap& labels) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw DataError("malformed manifest " + path.string() + ": " + e.what());
    }
    DatasetManifest manifest;
    manifest.base_dir = path.parent_path();
    try {
        manifest.format_version = doc.at("format_version").get<int>();
        manifest.split = parse_split(doc.at("split").get<std::string>());
        for (const auto& item : doc.at("entries")) {
            ManifestEntry entry;
            entry.sample_id = item.at("sample_id").get<std::string>();
            entry.label_name = item.value("label", std::string("unknown"));
            entry.label = resolve_label(labels, entry.label_name);
            if (auto keys = item.find("group_keys"); keys != item.end()) {
                entry.group_keys = keys->get<GroupKeys>();
            }
            entry.path = item.at("path").get<std::string>();
            manifest.entries.push_back(std::move(entry));
        }
    } catch (const json::exception& e) {
        throw DataError("malformed manifest " + path.string() + ": " + e.what());
    }
    validate_manifest(manifest);
    return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    validate_manifest(manifest);
    json doc;
    doc["format_version"] = manifest.format_version;
    doc["split"] = to_string(manifest.split);
    doc["entries"] = json::array();
    for (const auto& entry : manifest.entries) {
        doc["entries"].push_back({
            {"sample_id", entry.sample_id},
            {"label", entry.label_name.empty() ? to_string(entry.label) : entry.label_name},
            {"group_keys", entry.group_keys},
            {"path", entry.path.generic_string()},
        });
    }
    atomic_write_text(path, doc.dump(2) + "\n");
}

}  // namespace sinbad
