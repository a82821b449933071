#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "reprog/data.hpp"
#include "reprog/foundation.hpp"

namespace reprog {

struct IndexEntry {
    TimeWindow input;
    Tensor output;
};

/// Able-bodied (input, frozen-model output) pairs in source-stream order.
struct AbleBodiedIndex {
    std::vector<IndexEntry> entries;
    TaskId task = 0;
    std::string model_checksum;

    std::size_t size() const noexcept { return entries.size(); }
    std::string checksum() const;
};

enum class Weighting { linear, exponential };

const char* to_string(Weighting w) noexcept;
Weighting parse_weighting(const std::string& name);

struct TemplateConfig {
    std::size_t m = 0;  // half-length of the matched output sequence (2m+1 values)
    std::size_t n = 5;  // neighbours averaged
    double epsilon = 1.0;
    Weighting weighting = Weighting::linear;

    void validate() const;
};

struct CorrectionTemplate {
    std::size_t sample = 0;  // position k in the amputee sample stream
    TimeWindow corrected;
    std::size_t matched_center = 0;
    std::vector<std::size_t> neighbors;
    std::vector<double> weights;
};

struct CorrectionSet {
    std::vector<CorrectionTemplate> templates;  // ordered by sample position
    std::vector<std::size_t> skipped;           // boundary positions without a full sequence
};

/// Requires a frozen model; all windows must share one task.
AbleBodiedIndex build_index(const FoundationModel& model, const std::vector<TimeWindow>& able_stream);

/// argmin_i sum_{j=-m..m} || f(X_ab^{i-j}) - y^{k-j} ||_2 over centers with a full
/// window inside the index; `desired` holds y^{k-m} .. y^{k+m}. Ties go to the smallest i.
std::size_t sequence_match(const AbleBodiedIndex& index, std::span<const Tensor> desired);

/// Weighted average of the n nearest inputs within epsilon of the matched center.
CorrectionTemplate neighborhood_average(const AbleBodiedIndex& index, std::size_t center, const TemplateConfig& cfg);

/// One template per amputee sample with a full 2m+1 window of desired outputs.
CorrectionSet compute_corrections(const AbleBodiedIndex& index, std::span<const Tensor> desired,
                                  const TemplateConfig& cfg);

}  // namespace reprog
