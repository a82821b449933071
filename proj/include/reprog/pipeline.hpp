#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "reprog/config.hpp"
#include "reprog/data.hpp"
#include "reprog/eval.hpp"
#include "reprog/foundation.hpp"

namespace reprog {

/// Raw (unnormalized) streams: every able subject x task, every amputee on the amputee task.
struct Dataset {
    std::vector<GaitStream> able;
    std::vector<GaitStream> amputee;

    const GaitStream& able_stream(const std::string& subject, TaskId task) const;
    std::vector<SubjectMeta> able_subjects() const;
};

Dataset synthesize(const ExperimentConfig& cfg);
void write_dataset(const Dataset& data, const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
Dataset load_dataset(const std::filesystem::path& data_dir);

struct FoundationFit {
    FoundationModel model;  // frozen
    NormalizationStats norm;
    std::map<TaskId, double> heldout_r2;
    std::vector<double> loss_history;
};

/// Temporal split of every able stream, normalizer fitted on the training parts,
/// multi-task training, then freeze.
FoundationFit fit_foundation(const Dataset& data, const ExperimentConfig& cfg);

/// Index over the anthropometrically matched able subject's stream for the amputee task.
AbleBodiedIndex build_amputee_index(const FoundationModel& model, const NormalizationStats& norm, const Dataset& data,
                                    const GaitStream& amputee, const ExperimentConfig& cfg,
                                    std::string* matched_id = nullptr);

/// Normalized amputee windows with desired outputs as targets, plus the index.
AmputeeCase make_case(const FoundationModel& model, const NormalizationStats& norm, const Dataset& data,
                      const GaitStream& amputee, const ExperimentConfig& cfg);
AmputeeCase make_case(const NormalizationStats& norm, const Dataset& data, const GaitStream& amputee,
                      const ExperimentConfig& cfg, AbleBodiedIndex index, const std::string& matched_id);

std::vector<AmputeeCase> prepare_cases(const FoundationModel& model, const NormalizationStats& norm,
                                       const Dataset& data, const ExperimentConfig& cfg);

// ------------------------------------------------------------ CLI commands
//
// Each command reads prior-stage artifacts by path and writes its own; the
// returned structs are for reporting only.

void cmd_synth(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct TrainFoundationSummary {
    std::map<TaskId, double> heldout_r2;
    std::string model_checksum;
};
TrainFoundationSummary cmd_train_foundation(const std::filesystem::path& data_dir, const ExperimentConfig& cfg,
                                            const std::filesystem::path& out_checkpoint);

/// Writes <out_dir>/<amputee>.idx for every amputee.
void cmd_build_index(const std::filesystem::path& checkpoint, const std::filesystem::path& data_dir,
                     const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct MapTemplatesSummary {
    std::map<std::string, std::size_t> templates;
    std::map<std::string, std::size_t> skipped;
};
/// Templates for the leading `cfg.stage_ratio` share of each amputee's samples.
MapTemplatesSummary cmd_map_templates(const std::filesystem::path& checkpoint, const std::filesystem::path& index_dir,
                                      const std::filesystem::path& data_dir, const ExperimentConfig& cfg,
                                      const std::filesystem::path& out_dir);

/// Writes <out_dir>/<amputee>.ckpt refurbish checkpoints trained on the stored templates.
void cmd_train_refurbish(const std::filesystem::path& checkpoint, const std::filesystem::path& templates_dir,
                         const std::filesystem::path& data_dir, const ExperimentConfig& cfg,
                         const std::filesystem::path& out_dir);

SweepReport cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& index_dir,
                     const std::filesystem::path& data_dir, const ExperimentConfig& cfg,
                     const std::vector<Strategy>& strategies, const std::vector<double>& ratios,
                     const std::filesystem::path& out_dir);

/// Re-emits summary and chart from a results CSV.
SweepReport cmd_report(const std::filesystem::path& results_csv, const std::filesystem::path& out_dir);

}  // namespace reprog
