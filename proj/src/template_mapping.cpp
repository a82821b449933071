#include "reprog/template_mapping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "reprog/checksum.hpp"
#include "reprog/error.hpp"

namespace reprog {

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace

const char* to_string(Weighting w) noexcept { return w == Weighting::linear ? "linear" : "exponential"; }

Weighting parse_weighting(const std::string& name) {
    if (name == "linear") return Weighting::linear;
    if (name == "exponential") return Weighting::exponential;
    fail(ErrorKind::config, "template.weighting must be \"linear\" or \"exponential\", got \"" + name + "\"");
}

void TemplateConfig::validate() const {
    if (n < 1) fail(ErrorKind::config, "template.n must be >= 1");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail(ErrorKind::config, "template.epsilon must be > 0");
}

std::string AbleBodiedIndex::checksum() const {
    std::string text = "task " + std::to_string(task) + "\nmodel " + model_checksum + "\n";
    for (const auto& e : entries) {
        text += std::to_string(e.input.time_index);
        for (double v : e.input.values.values()) text += " " + format_double(v);
        text += " |";
        for (double v : e.output.values()) text += " " + format_double(v);
        text += "\n";
    }
    return sha256_hex(text);
}

AbleBodiedIndex build_index(const FoundationModel& model, const std::vector<TimeWindow>& able_stream) {
    if (!model.frozen()) fail(ErrorKind::usage, "index must be built from a frozen foundation model");
    AbleBodiedIndex index;
    index.model_checksum = model.checksum();
    if (!able_stream.empty()) index.task = able_stream.front().task;
    for (const auto& w : able_stream) {
        if (w.task != index.task) fail(ErrorKind::usage, "index windows must share one task");
        index.entries.push_back({w, model.predict(w)});
    }
    return index;
}

std::size_t sequence_match(const AbleBodiedIndex& index, std::span<const Tensor> desired) {
    if (desired.size() % 2 == 0) fail(ErrorKind::usage, "desired output sequence must have odd length 2m+1");
    const std::size_t m = desired.size() / 2;
    const std::size_t n = index.size();
    if (n < desired.size())
        fail(ErrorKind::insufficient_data, "index of " + std::to_string(n) + " entries is shorter than the " +
                                               std::to_string(desired.size()) + "-long matching sequence");
    std::size_t best = m;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = m; i + m < n; ++i) {
        double score = 0.0;
        // j runs from -m to m; f(X^{i-j}) is compared with y^{k-j}.
        for (std::size_t jj = 0; jj < desired.size(); ++jj) {
            const std::size_t pos = i + m - jj;
            const Tensor& y = desired[m + m - jj];
            require_same_shape(index.entries[pos].output, y, "sequence_match output");
            score += distance(index.entries[pos].output.values(), y.values());
        }
        if (score < best_score) {
            best_score = score;
            best = i;
        }
    }
    return best;
}

CorrectionTemplate neighborhood_average(const AbleBodiedIndex& index, std::size_t center, const TemplateConfig& cfg) {
    cfg.validate();
    if (center >= index.size()) fail(ErrorKind::usage, "center " + std::to_string(center) + " outside the index");
    const auto& origin = index.entries[center].input.values;
    std::vector<std::pair<double, std::size_t>> candidates;
    for (std::size_t j = 0; j < index.size(); ++j) {
        const double d = j == center ? 0.0 : distance(index.entries[j].input.values.values(), origin.values());
        if (d <= cfg.epsilon) candidates.emplace_back(d, j);
    }
    std::sort(candidates.begin(), candidates.end());
    if (candidates.size() > cfg.n) candidates.resize(cfg.n);

    CorrectionTemplate out;
    out.matched_center = center;
    double total = 0.0;
    for (const auto& [d, j] : candidates) {
        const double w = cfg.weighting == Weighting::linear ? 1.0 - d / cfg.epsilon : std::exp(-d / (cfg.epsilon / 3.0));
        out.neighbors.push_back(j);
        out.weights.push_back(w);
        total += w;
    }
    for (auto& w : out.weights) w /= total;

    Tensor corrected(origin.shape());
    Tensor lo = index.entries[out.neighbors.front()].input.values;
    Tensor hi = lo;
    for (std::size_t a = 0; a < out.neighbors.size(); ++a) {
        const auto& x = index.entries[out.neighbors[a]].input.values;
        for (std::size_t i = 0; i < x.size(); ++i) {
            corrected[i] += out.weights[a] * x[i];
            lo[i] = std::min(lo[i], x[i]);
            hi[i] = std::max(hi[i], x[i]);
        }
    }
    // Rounding in the weighted sum can step a hair outside the neighbours' hull.
    for (std::size_t i = 0; i < corrected.size(); ++i) corrected[i] = std::clamp(corrected[i], lo[i], hi[i]);
    out.corrected = {std::move(corrected), index.task, index.entries[center].input.time_index};
    return out;
}

CorrectionSet compute_corrections(const AbleBodiedIndex& index, std::span<const Tensor> desired,
                                  const TemplateConfig& cfg) {
    cfg.validate();
    if (desired.empty()) fail(ErrorKind::insufficient_data, "no desired outputs to map");
    const std::size_t m = cfg.m, span_len = 2 * m + 1;
    if (index.size() < span_len)
        fail(ErrorKind::insufficient_data, "index admits no center for 2m+1 = " + std::to_string(span_len));
    CorrectionSet out;
    for (std::size_t k = 0; k < desired.size(); ++k) {
        if (k < m || k + m >= desired.size()) {
            out.skipped.push_back(k);
            continue;
        }
        const std::size_t center = sequence_match(index, desired.subspan(k - m, span_len));
        CorrectionTemplate t = neighborhood_average(index, center, cfg);
        t.sample = k;
        t.corrected.time_index = k;
        out.templates.push_back(std::move(t));
    }
    return out;
}

}  // namespace reprog
