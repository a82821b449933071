#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "reprog/data.hpp"
#include "reprog/eval.hpp"
#include "reprog/foundation.hpp"
#include "reprog/refurbish.hpp"
#include "reprog/template_mapping.hpp"

// Text artifacts shared by every pipeline stage:
//
//   <magic> 1
//   meta <single-line JSON>
//   <body lines>
//   checksum <sha256 of every preceding byte>
//
// Numbers are printed with 17 significant digits, so files are lossless for
// doubles and byte-stable for identical content.
namespace reprog {

struct Artifact {
    std::string magic;
    nlohmann::json meta;
    std::vector<std::string> lines;
};

std::string render(const Artifact& artifact);
Artifact parse_artifact(const std::string& text, const std::string& magic, const std::string& source);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& content);

// --------------------------------------------------------------- checkpoints

struct LoadedFoundation {
    FoundationModel model;  // frozen
    NormalizationStats norm;
    nlohmann::json meta;
};

Artifact foundation_checkpoint(const FoundationModel& model, const NormalizationStats& norm,
                               const nlohmann::json& extra_meta);
LoadedFoundation foundation_from_checkpoint(const Artifact& artifact);

Artifact refurbish_checkpoint(const RefurbishModel& model, const std::string& foundation_checksum,
                              const nlohmann::json& extra_meta);
RefurbishModel refurbish_from_checkpoint(const Artifact& artifact, std::string* foundation_checksum);

// ------------------------------------------------------- index and templates

Artifact index_artifact(const AbleBodiedIndex& index, const nlohmann::json& extra_meta);
AbleBodiedIndex index_from_artifact(const Artifact& artifact);

Artifact templates_artifact(const CorrectionSet& set, const std::string& index_checksum,
                            const std::string& model_checksum, const nlohmann::json& extra_meta);
CorrectionSet templates_from_artifact(const Artifact& artifact, std::size_t channels, std::size_t steps, TaskId task);

}  // namespace reprog
