#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "reprog/data.hpp"
#include "reprog/eval.hpp"
#include "reprog/foundation.hpp"
#include "reprog/refurbish.hpp"
#include "reprog/template_mapping.hpp"

namespace reprog {

/// One document drives the whole pipeline. Sub-seeds for every phase are
/// derived from `seed`.
struct ExperimentConfig {
    SynthConfig synth;
    std::size_t window = 16;
    std::size_t stride = 1;             // amputee and index windows
    std::size_t foundation_stride = 2;  // able training windows
    double holdout_fraction = 0.2;      // tail of each able stream held out

    FoundationArchitecture foundation;
    TrainConfig foundation_train;
    TrainConfig direct_train;  // direct mapping reuses the foundation architecture
    TemplateConfig templates;
    RefurbishArchitecture refurbish;
    RefurbishTrainConfig refurbish_train;
    bool pooled_refurbish = false;

    TaskId amputee_task = 0;
    std::vector<double> ratios{0.05, 0.1, 0.2, 0.4};
    double stage_ratio = 0.1;  // split used by the map-templates / train-refurbish stages
    std::vector<std::uint64_t> eval_seeds;  // empty: just `seed`
    std::uint64_t seed = 7;

    static ExperimentConfig defaults();

    /// Sets the master seed, which the synthetic generator shares.
    void set_seed(std::uint64_t value);

    void validate() const;
    EvalSettings eval_settings() const;
    TrainConfig foundation_train_seeded() const;
    std::vector<std::uint64_t> sweep_seeds() const;

    std::string to_json() const;
    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);
};

}  // namespace reprog
