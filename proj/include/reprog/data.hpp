#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "reprog/tensor.hpp"

namespace reprog {

using TaskId = int;

enum class SubjectKind { able, amputee };

struct SubjectMeta {
    std::string id;
    double height = 1.75;  // m
    double mass = 70.0;    // kg
    double age = 30.0;     // years
    SubjectKind kind = SubjectKind::able;

    friend bool operator==(const SubjectMeta&, const SubjectMeta&) = default;
};

/// One model input X_{t,k}: `values` is [channels x steps] ending at `time_index`.
struct TimeWindow {
    Tensor values;
    TaskId task = 0;
    std::size_t time_index = 0;
};

struct LabeledSample {
    TimeWindow window;
    Tensor target;  // motion variable one step after the window end
};

/// A recorded (or synthesized) multichannel gait series with a gait-phase column.
/// The target series is one scalar per timestep.
struct GaitStream {
    SubjectMeta subject;
    TaskId task = 0;
    std::vector<std::string> channel_names;
    Tensor channels;  // [C x L]
    std::vector<double> phase;
    std::vector<double> target;

    std::size_t length() const { return phase.size(); }
    std::size_t channel_count() const { return channel_names.size(); }

    friend bool operator==(const GaitStream&, const GaitStream&) = default;
};

// ---------------------------------------------------------------- synthesis

struct Harmonic {
    double cos = 0.0;
    double sin = 0.0;
};

/// dc + sum_h (cos_h cos(2 pi h phase) + sin_h sin(2 pi h phase)), h starting at 1.
struct FourierSeries {
    double dc = 0.0;
    std::vector<Harmonic> harmonics;

    double eval(double phase) const;
};

struct TaskSpec {
    std::string name;
    double cycle_samples = 40.0;          // nominal samples per gait cycle
    std::vector<FourierSeries> channels;  // one per channel
    FourierSeries target;
};

struct AmputeeDistortion {
    std::vector<std::size_t> dropout;  // channels zeroed (missing-limb sensors)
    double phase_lag = 0.0;            // cycle fraction; surviving channels read phase - lag
    double asymmetry = 1.0;            // gain on the first half of each cycle
    double compensation_amplitude = 0.0;
    int compensation_harmonic = 2;

    bool is_identity() const;
};

struct AmputeeSpec {
    SubjectMeta subject;
    AmputeeDistortion distortion;
};

struct SynthConfig {
    std::vector<std::string> channel_names;
    std::vector<TaskSpec> tasks;
    double noise_std = 0.02;
    double cadence_jitter = 0.08;     // relative, uniform +-
    double amplitude_jitter = 0.05;   // relative, gaussian per cycle
    // Slow walking-speed change across a session: one sinusoidal period per
    // stream with a seeded phase. Faster cycles are shorter and swing wider.
    double speed_drift = 0.25;
    double subject_variation = 0.08;  // relative per-subject coefficient spread
    std::vector<SubjectMeta> able_subjects;
    std::vector<AmputeeSpec> amputees;
    std::size_t able_cycles = 60;
    std::size_t amputee_cycles = 30;
    std::uint64_t seed = 7;

    static SynthConfig defaults();
    void validate() const;
    const TaskSpec& task(TaskId id) const;
    const AmputeeSpec* find_amputee(const std::string& id) const;
};

GaitStream synth_able(const SynthConfig& cfg, const SubjectMeta& subject, TaskId task, std::size_t cycles);

/// Able pattern of `subject` passed through `distortion`. The target series
/// stays the undistorted able target.
GaitStream synth_amputee(const SynthConfig& cfg, const SubjectMeta& subject, TaskId task, std::size_t cycles,
                         const AmputeeDistortion& distortion);

/// Uses the distortion registered for `subject.id` in `cfg.amputees`.
GaitStream synth_amputee(const SynthConfig& cfg, const SubjectMeta& subject, TaskId task, std::size_t cycles);

// ------------------------------------------------------------- preparation

/// Nearest able subject in z-scored (height, mass, age); ties toward the smaller id.
SubjectMeta match_anthropometry(const SubjectMeta& amputee, const std::vector<SubjectMeta>& able_pool);

/// Desired amputee outputs y_amp^k: the matched able target at the amputee's gait phase.
struct DesiredOutputSeries {
    std::vector<Tensor> values;
    std::vector<double> phase;

    std::size_t size() const { return values.size(); }
};

DesiredOutputSeries derive_desired_outputs(const GaitStream& amputee, const GaitStream& matched_able);

/// Index of the first sample of every gait cycle (phase wraps).
std::vector<std::size_t> cycle_starts(const std::vector<double>& phase);

std::vector<LabeledSample> make_windows(const GaitStream& stream, std::size_t window, std::size_t stride);

struct NormalizationStats {
    std::vector<double> mean;
    std::vector<double> std;
};

NormalizationStats fit_normalizer(const std::vector<GaitStream>& streams);
GaitStream apply_normalizer(const NormalizationStats& stats, const GaitStream& stream);
GaitStream invert_normalizer(const NormalizationStats& stats, const GaitStream& stream);

/// First `length` timesteps / timesteps from `start` on, for temporal splits.
GaitStream head(const GaitStream& stream, std::size_t length);
GaitStream tail(const GaitStream& stream, std::size_t start);

// ---------------------------------------------------------------------- CSV

/// Schema: header `time,phase,target,<channel names...>`, one row per timestep,
/// numbers printed with 17 significant digits.
void write_csv(const GaitStream& stream, const std::filesystem::path& path);
std::string to_csv(const GaitStream& stream);
GaitStream load_csv(const std::filesystem::path& path);
GaitStream parse_csv(const std::string& text, const std::string& source = "<memory>");

std::string format_double(double v);

}  // namespace reprog
