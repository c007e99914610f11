#pragma once

#include "sinbad/element_set.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sinbad {

enum class Split { train, validation, test };
enum class Label { normal, anomalous, unknown };

const char* to_string(Split split);
const char* to_string(Label label);
Split parse_split(std::string_view text);

/// Maps dataset-specific label strings ("good", "logical_anomalies", ...) onto
/// the binary normal/anomalous labels. The canonical names always map to
/// themselves.
using LabelMap = std::map<std::string, Label, std::less<>>;

Label resolve_label(const LabelMap& map, std::string_view name);

struct ManifestEntry {
    std::string sample_id;
    Label label = Label::unknown;
    std::string label_name;  // original string, kept for per-subtype reporting
    GroupKeys group_keys;
    std::filesystem::path path;  // relative to the manifest directory
};

inline constexpr int kManifestFormatVersion = 1;

struct DatasetManifest {
    int format_version = kManifestFormatVersion;
    Split split = Split::train;
    std::vector<ManifestEntry> entries;
    std::filesystem::path base_dir;  // directory holding manifest.json; not serialized
};

/// Training entries must all be normal; (sample_id, group_keys) must be unique.
void validate_manifest(const DatasetManifest& manifest);

DatasetManifest load_manifest(const std::filesystem::path& path, const LabelMap& labels = {});
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace sinbad
