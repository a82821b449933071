#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "reprog/data.hpp"
#include "reprog/foundation.hpp"
#include "reprog/refurbish.hpp"
#include "reprog/template_mapping.hpp"

namespace reprog {

/// Coefficient of determination over a list of output vectors.
double r2(const std::vector<Tensor>& pred, const std::vector<Tensor>& target);

/// R^2 of model predictions against the samples' targets.
double evaluate_r2(const FoundationModel& model, const std::vector<LabeledSample>& samples);

enum class Strategy { cross, direct, refurbished };

const char* to_string(Strategy s) noexcept;
Strategy parse_strategy(const std::string& name);

/// Everything the strategies need about one amputee: normalized windows whose
/// targets are the desired outputs, and the index over the matched able subject.
struct AmputeeCase {
    SubjectMeta subject;
    std::string matched_able_id;
    std::vector<LabeledSample> samples;
    AbleBodiedIndex index;
};

struct StrategyResult {
    Strategy strategy = Strategy::cross;
    double train_ratio = 1.0;  // cross-mapping trains nothing and scores the full stream
    std::vector<std::string> amputee_ids;
    std::vector<double> r2;
    double mean = 0.0;
    double std = 0.0;  // population
    std::uint64_t seed = 0;
    std::string config;  // JSON snapshot of the settings used

    void summarize();
};

struct SweepReport {
    std::vector<StrategyResult> results;
    std::map<std::string, std::string> provenance;

    const StrategyResult* find(Strategy s, double ratio) const;
};

struct EvalSettings {
    FoundationArchitecture direct_arch;
    TrainConfig direct_train;
    TemplateConfig templates;
    RefurbishArchitecture refurbish_arch;
    RefurbishTrainConfig refurbish_train;
    bool pooled_refurbish = false;

    std::string snapshot() const;
};

/// Number of leading samples used for training at `ratio`.
std::size_t train_count(std::size_t total, double ratio);

StrategyResult run_cross_mapping(const FoundationModel& g_frozen, const std::vector<AmputeeCase>& cases);

StrategyResult run_direct_mapping(const std::vector<AmputeeCase>& cases, double ratio, const EvalSettings& settings,
                                  std::uint64_t seed);

/// Triples for the training split only; templates never see held-out samples.
std::vector<AmputeeTrainingTriple> training_triples(const AmputeeCase& c, std::size_t n_train,
                                                    const TemplateConfig& cfg);

struct RefurbishedRun {
    StrategyResult result;
    std::vector<RefurbishModel> models;  // one per case (shared instance copied when pooled)
};

RefurbishedRun run_refurbished_detailed(const FoundationModel& g_frozen, const std::vector<AmputeeCase>& cases,
                                        double ratio, const EvalSettings& settings, std::uint64_t seed);

StrategyResult run_refurbished(const FoundationModel& g_frozen, const std::vector<AmputeeCase>& cases, double ratio,
                               const EvalSettings& settings, std::uint64_t seed);

/// Per-channel RMSE between two window lists, averaged over channels.
double mean_channel_rmse(const std::vector<Tensor>& a, const std::vector<Tensor>& b);

/// Cartesian product of ratios x {direct, refurbished} (as requested) plus one
/// cross baseline; per-amputee R^2 is averaged over `seeds`.
SweepReport sweep(const FoundationModel& g_frozen, const std::vector<AmputeeCase>& cases,
                  const std::vector<double>& ratios, const std::vector<Strategy>& strategies,
                  const std::vector<std::uint64_t>& seeds, const EvalSettings& settings);

// ------------------------------------------------------------------ report

/// CSV `strategy,train_ratio,amputee_id,r2,seed`.
std::string results_csv(const SweepReport& report);
SweepReport parse_results_csv(const std::string& text);
std::string summary_json(const SweepReport& report);
std::string chart_svg(const SweepReport& report);

/// Writes results.csv, summary.json and r2_vs_ratio.svg into `out_dir`.
void emit_report(const SweepReport& report, const std::filesystem::path& out_dir);

}  // namespace reprog
