#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "reprog/data.hpp"
#include "reprog/error.hpp"

namespace reprog {

SubjectMeta match_anthropometry(const SubjectMeta& amputee, const std::vector<SubjectMeta>& able_pool) {
    if (able_pool.empty()) fail(ErrorKind::config, "anthropometry match needs a nonempty able-bodied pool");
    auto features = [](const SubjectMeta& s) { return std::array<double, 3>{s.height, s.mass, s.age}; };
    std::array<double, 3> mean{}, sd{};
    for (const auto& s : able_pool) {
        const auto f = features(s);
        for (int i = 0; i < 3; ++i) mean[i] += f[i];
    }
    const double n = static_cast<double>(able_pool.size());
    for (auto& m : mean) m /= n;
    for (const auto& s : able_pool) {
        const auto f = features(s);
        for (int i = 0; i < 3; ++i) sd[i] += (f[i] - mean[i]) * (f[i] - mean[i]);
    }
    // A feature with no spread in the pool cannot discriminate; leave it unscaled.
    for (auto& v : sd) v = v > 0.0 ? std::sqrt(v / n) : 1.0;

    const auto target = features(amputee);
    const SubjectMeta* best = nullptr;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& s : able_pool) {
        const auto f = features(s);
        double d = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double z = (f[i] - target[i]) / sd[i];
            d += z * z;
        }
        d = std::sqrt(d);
        if (d < best_dist || (d == best_dist && s.id < best->id)) {
            best = &s;
            best_dist = d;
        }
    }
    return *best;
}

std::vector<std::size_t> cycle_starts(const std::vector<double>& phase) {
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < phase.size(); ++i)
        if (i == 0 || phase[i] < phase[i - 1]) starts.push_back(i);
    return starts;
}

DesiredOutputSeries derive_desired_outputs(const GaitStream& amputee, const GaitStream& matched_able) {
    if (amputee.phase.empty() || matched_able.phase.empty())
        fail(ErrorKind::format, "desired-output derivation requires the phase column");
    if (amputee.task != matched_able.task)
        fail(ErrorKind::config, "amputee task " + std::to_string(amputee.task) + " differs from matched able task " +
                                    std::to_string(matched_able.task));
    const auto able_starts = cycle_starts(matched_able.phase);
    const auto amp_starts = cycle_starts(amputee.phase);
    const std::size_t able_len = matched_able.length();

    DesiredOutputSeries out;
    std::size_t amp_cycle = 0;
    for (std::size_t k = 0; k < amputee.length(); ++k) {
        while (amp_cycle + 1 < amp_starts.size() && amp_starts[amp_cycle + 1] <= k) ++amp_cycle;
        const std::size_t c = amp_cycle % able_starts.size();
        const std::size_t begin = able_starts[c];
        const std::size_t end = c + 1 < able_starts.size() ? able_starts[c + 1] : able_len;
        const double phi = amputee.phase[k];

        // Knots: the cycle's samples, closed by the next cycle's first sample at phase + 1
        // (or this cycle's first sample when it is the last cycle).
        auto knot_phase = [&](std::size_t j) {
            if (begin + j < end) return matched_able.phase[begin + j];
            const std::size_t wrap = end < able_len ? end : begin;
            return matched_able.phase[wrap] + 1.0;
        };
        auto knot_value = [&](std::size_t j) {
            if (begin + j < end) return matched_able.target[begin + j];
            return matched_able.target[end < able_len ? end : begin];
        };
        const std::size_t knots = end - begin + 1;
        double value;
        if (phi <= knot_phase(0)) {
            value = knot_value(0);
        } else {
            std::size_t j = 0;
            while (j + 1 < knots && knot_phase(j + 1) <= phi) ++j;
            if (j + 1 >= knots || knot_phase(j) == phi) {
                value = knot_value(j);
            } else {
                const double w = (phi - knot_phase(j)) / (knot_phase(j + 1) - knot_phase(j));
                value = knot_value(j) + w * (knot_value(j + 1) - knot_value(j));
            }
        }
        out.values.push_back(Tensor({1}, {value}));
        out.phase.push_back(phi);
    }
    return out;
}

std::vector<LabeledSample> make_windows(const GaitStream& stream, std::size_t window, std::size_t stride) {
    if (window < 1 || stride < 1) fail(ErrorKind::config, "window length and stride must be >= 1");
    const std::size_t length = stream.length();
    if (length < window + 1)
        fail(ErrorKind::insufficient_data, "stream of length " + std::to_string(length) +
                                               " is too short for windows of " + std::to_string(window) +
                                               " plus a next-step target");
    const std::size_t channels = stream.channels.dim(0);
    std::vector<LabeledSample> out;
    for (std::size_t k = window - 1; k + 1 < length; k += stride) {
        Tensor values({channels, window});
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t s = 0; s < window; ++s) values[c * window + s] = stream.channels[c * length + k + 1 - window + s];
        out.push_back({{std::move(values), stream.task, k}, Tensor({1}, {stream.target[k + 1]})});
    }
    return out;
}

NormalizationStats fit_normalizer(const std::vector<GaitStream>& streams) {
    if (streams.empty()) fail(ErrorKind::insufficient_data, "normalizer needs at least one stream");
    const std::size_t channels = streams.front().channels.dim(0);
    NormalizationStats stats{std::vector<double>(channels, 0.0), std::vector<double>(channels, 0.0)};
    double count = 0.0;
    for (const auto& s : streams) {
        if (s.channels.dim(0) != channels) fail(ErrorKind::dimension, "normalizer channel axis differs across streams");
        const std::size_t len = s.length();
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t t = 0; t < len; ++t) stats.mean[c] += s.channels[c * len + t];
        count += static_cast<double>(len);
    }
    for (auto& m : stats.mean) m /= count;
    for (const auto& s : streams) {
        const std::size_t len = s.length();
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t t = 0; t < len; ++t) {
                const double d = s.channels[c * len + t] - stats.mean[c];
                stats.std[c] += d * d;
            }
    }
    for (std::size_t c = 0; c < channels; ++c) {
        stats.std[c] = std::sqrt(stats.std[c] / count);
        if (!(stats.std[c] > 1e-12 * std::max(1.0, std::abs(stats.mean[c]))))
            fail(ErrorKind::data, "constant channel " + std::to_string(c) + " (" +
                                      streams.front().channel_names.at(c) + ") cannot be normalized");
    }
    return stats;
}

namespace {
GaitStream map_channels(const NormalizationStats& stats, const GaitStream& stream, bool forward) {
    if (stats.mean.size() != stream.channels.dim(0))
        fail(ErrorKind::dimension, "normalizer has " + std::to_string(stats.mean.size()) + " channels, stream has " +
                                       std::to_string(stream.channels.dim(0)));
    GaitStream out = stream;
    const std::size_t len = stream.length();
    for (std::size_t c = 0; c < stats.mean.size(); ++c)
        for (std::size_t t = 0; t < len; ++t) {
            double& v = out.channels[c * len + t];
            v = forward ? (v - stats.mean[c]) / stats.std[c] : v * stats.std[c] + stats.mean[c];
        }
    return out;
}

GaitStream slice(const GaitStream& stream, std::size_t begin, std::size_t end) {
    if (begin >= end || end > stream.length()) fail(ErrorKind::insufficient_data, "empty or out-of-range stream slice");
    GaitStream out = stream;
    const std::size_t len = stream.length(), channels = stream.channels.dim(0);
    out.phase.assign(stream.phase.begin() + begin, stream.phase.begin() + end);
    out.target.assign(stream.target.begin() + begin, stream.target.begin() + end);
    std::vector<double> flat;
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t t = begin; t < end; ++t) flat.push_back(stream.channels[c * len + t]);
    out.channels = Tensor({channels, end - begin}, std::move(flat));
    return out;
}
}  // namespace

GaitStream apply_normalizer(const NormalizationStats& stats, const GaitStream& stream) {
    return map_channels(stats, stream, true);
}

GaitStream invert_normalizer(const NormalizationStats& stats, const GaitStream& stream) {
    return map_channels(stats, stream, false);
}

GaitStream head(const GaitStream& stream, std::size_t length) { return slice(stream, 0, length); }

GaitStream tail(const GaitStream& stream, std::size_t start) { return slice(stream, start, stream.length()); }

}  // namespace reprog
