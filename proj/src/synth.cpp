#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "reprog/data.hpp"
#include "reprog/error.hpp"

namespace reprog {

namespace {

using Rng = std::mt19937_64;

constexpr double two_pi = 2.0 * std::numbers::pi;

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t subject_seed(std::uint64_t seed, const std::string& id) { return splitmix(seed ^ fnv1a(id)); }

std::uint64_t stream_seed(std::uint64_t seed, const std::string& id, TaskId task) {
    return splitmix(subject_seed(seed, id) + static_cast<std::uint64_t>(task) * 0x632be59bd9b4e019ULL);
}

// Task pattern scaled for one subject: taller subjects swing wider and
// heavier subjects carry a small posture offset, plus a seeded per-subject
// spread on every harmonic.
struct SubjectPattern {
    std::vector<FourierSeries> channels;
    FourierSeries target;
    double cycle_samples = 0.0;
};

FourierSeries personalize(const FourierSeries& base, double amp, double dc_shift, double spread, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    FourierSeries s = base;
    s.dc += dc_shift;
    for (auto& h : s.harmonics) {
        h.cos *= amp * (1.0 + spread * normal(rng));
        h.sin *= amp * (1.0 + spread * normal(rng));
    }
    return s;
}

SubjectPattern pattern_for(const SynthConfig& cfg, const SubjectMeta& subject, TaskId task) {
    const TaskSpec& spec = cfg.task(task);
    Rng rng(subject_seed(cfg.seed, subject.id) + static_cast<std::uint64_t>(task));
    const double amp = subject.height / 1.75;
    const double dc_shift = 0.002 * (subject.mass - 70.0);
    SubjectPattern p;
    for (const auto& ch : spec.channels) p.channels.push_back(personalize(ch, amp, dc_shift, cfg.subject_variation, rng));
    // The target keeps only the deterministic anthropometric scaling so that
    // subjects with similar body measures share similar target curves.
    p.target = personalize(spec.target, amp, 0.0, 0.0, rng);
    p.cycle_samples = spec.cycle_samples * std::sqrt(subject.height / 1.75);
    return p;
}

GaitStream generate(const SynthConfig& cfg, const SubjectMeta& subject, TaskId task, std::size_t cycles,
                    const AmputeeDistortion* distortion) {
    if (cycles < 1) fail(ErrorKind::config, "cycles must be >= 1");
    const SubjectPattern pattern = pattern_for(cfg, subject, task);
    const std::size_t n_channels = cfg.channel_names.size();
    Rng rng(stream_seed(cfg.seed, subject.id, task));
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<bool> dropped(n_channels, false);
    if (distortion)
        for (auto c : distortion->dropout) dropped.at(c) = true;

    std::vector<std::vector<double>> rows(n_channels);
    GaitStream out;
    out.subject = subject;
    out.task = task;
    out.channel_names = cfg.channel_names;
    const double drift_phase = two_pi * 0.5 * (uniform(rng) + 1.0);
    for (std::size_t cycle = 0; cycle < cycles; ++cycle) {
        const double speed =
            cfg.speed_drift *
            std::sin(two_pi * static_cast<double>(cycle) / static_cast<double>(cycles) + drift_phase);
        const double jitter = cfg.cadence_jitter * uniform(rng);
        const auto len = static_cast<std::size_t>(
            std::max(4.0, std::round(pattern.cycle_samples * (1.0 - speed) * (1.0 + jitter))));
        const double amp = (1.0 + 0.5 * speed) * (1.0 + cfg.amplitude_jitter * normal(rng));
        for (std::size_t j = 0; j < len; ++j) {
            const double phase = static_cast<double>(j) / static_cast<double>(len);
            out.phase.push_back(phase);
            out.target.push_back(pattern.target.eval(phase));
            for (std::size_t c = 0; c < n_channels; ++c) {
                const double noise = cfg.noise_std * normal(rng);
                const FourierSeries& series = pattern.channels[c];
                if (!distortion) {
                    rows[c].push_back(series.dc + amp * (series.eval(phase) - series.dc) + noise);
                    continue;
                }
                if (dropped[c]) {
                    rows[c].push_back(0.0);
                    continue;
                }
                const double lagged = phase - distortion->phase_lag;
                const double clean = series.dc + amp * (series.eval(lagged) - series.dc);
                const double gain = phase < 0.5 ? distortion->asymmetry : 1.0;
                const double comp = distortion->compensation_amplitude *
                                    std::sin(two_pi * distortion->compensation_harmonic * phase);
                rows[c].push_back(gain * (clean + noise) + comp);
            }
        }
    }
    const std::size_t length = out.phase.size();
    std::vector<double> flat;
    flat.reserve(n_channels * length);
    for (const auto& row : rows) flat.insert(flat.end(), row.begin(), row.end());
    out.channels = Tensor({n_channels, length}, std::move(flat));
    return out;
}

}  // namespace

double FourierSeries::eval(double phase) const {
    double v = dc;
    for (std::size_t h = 0; h < harmonics.size(); ++h) {
        const double angle = two_pi * static_cast<double>(h + 1) * phase;
        v += harmonics[h].cos * std::cos(angle) + harmonics[h].sin * std::sin(angle);
    }
    return v;
}

bool AmputeeDistortion::is_identity() const {
    return dropout.empty() && phase_lag == 0.0 && asymmetry == 1.0 && compensation_amplitude == 0.0;
}

const TaskSpec& SynthConfig::task(TaskId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tasks.size())
        fail(ErrorKind::config, "unknown task id " + std::to_string(id));
    return tasks[static_cast<std::size_t>(id)];
}

const AmputeeSpec* SynthConfig::find_amputee(const std::string& id) const {
    for (const auto& a : amputees)
        if (a.subject.id == id) return &a;
    return nullptr;
}

void SynthConfig::validate() const {
    auto need = [](bool ok, const std::string& field, const std::string& rule) {
        if (!ok) fail(ErrorKind::config, "synth." + field + " " + rule);
    };
    need(!channel_names.empty(), "channel_names", "must not be empty");
    need(!tasks.empty(), "tasks", "must not be empty");
    need(noise_std >= 0.0, "noise_std", "must be >= 0");
    need(cadence_jitter >= 0.0 && cadence_jitter < 1.0, "cadence_jitter", "must be in [0, 1)");
    need(amplitude_jitter >= 0.0, "amplitude_jitter", "must be >= 0");
    need(speed_drift >= 0.0 && speed_drift < 0.5, "speed_drift", "must be in [0, 0.5)");
    need(subject_variation >= 0.0, "subject_variation", "must be >= 0");
    need(able_cycles >= 1, "able_cycles", "must be >= 1");
    need(amputee_cycles >= 1, "amputee_cycles", "must be >= 1");
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const std::string prefix = "tasks[" + std::to_string(t) + "].";
        need(tasks[t].channels.size() == channel_names.size(), prefix + "channels",
             "must have one series per channel");
        need(tasks[t].cycle_samples >= 4.0, prefix + "cycle_samples", "must be >= 4");
    }
    std::set<std::string> ids;
    auto check_subject = [&](const SubjectMeta& s, const std::string& where) {
        need(!s.id.empty(), where + ".id", "must not be empty");
        need(ids.insert(s.id).second, where + ".id", "'" + s.id + "' is duplicated");
        need(s.height > 0.0 && s.mass > 0.0 && s.age > 0.0, where, "anthropometrics must be positive");
    };
    for (std::size_t i = 0; i < able_subjects.size(); ++i)
        check_subject(able_subjects[i], "able_subjects[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < amputees.size(); ++i) {
        const std::string where = "amputees[" + std::to_string(i) + "]";
        check_subject(amputees[i].subject, where);
        const auto& d = amputees[i].distortion;
        need(d.asymmetry > 0.0, where + ".asymmetry", "must be > 0");
        for (auto c : d.dropout) need(c < channel_names.size(), where + ".dropout", "channel index out of range");
    }
}

GaitStream synth_able(const SynthConfig& cfg, const SubjectMeta& subject, TaskId task, std::size_t cycles) {
    return generate(cfg, subject, task, cycles, nullptr);
}

GaitStream synth_amputee(const SynthConfig& cfg, const SubjectMeta& subject, TaskId task, std::size_t cycles,
                         const AmputeeDistortion& distortion) {
    for (auto c : distortion.dropout)
        if (c >= cfg.channel_names.size()) fail(ErrorKind::config, "dropout channel out of range");
    if (!(distortion.asymmetry > 0.0)) fail(ErrorKind::config, "asymmetry must be > 0");
    // Identity distortion takes the same arithmetic path as the able generator.
    if (distortion.is_identity()) return generate(cfg, subject, task, cycles, nullptr);
    return generate(cfg, subject, task, cycles, &distortion);
}

GaitStream synth_amputee(const SynthConfig& cfg, const SubjectMeta& subject, TaskId task, std::size_t cycles) {
    const AmputeeSpec* spec = cfg.find_amputee(subject.id);
    if (!spec) fail(ErrorKind::config, "no distortion registered for amputee '" + subject.id + "'");
    return synth_amputee(cfg, subject, task, cycles, spec->distortion);
}

namespace {

FourierSeries series(double dc, std::vector<Harmonic> h) { return {dc, std::move(h)}; }

// Contralateral limb: the same pattern half a cycle later.
FourierSeries half_cycle_shift(FourierSeries s) {
    for (std::size_t h = 0; h < s.harmonics.size(); ++h)
        if (h % 2 == 0) s.harmonics[h] = {-s.harmonics[h].cos, -s.harmonics[h].sin};
    return s;
}

FourierSeries scaled(FourierSeries s, double gain, double dc_shift) {
    s.dc += dc_shift;
    for (auto& h : s.harmonics) h = {h.cos * gain, h.sin * gain};
    return s;
}

}  // namespace

SynthConfig SynthConfig::defaults() {
    SynthConfig cfg;
    cfg.channel_names = {"thigh_l", "knee_l", "shank_l", "thigh_r", "knee_r", "shank_r"};

    const FourierSeries thigh = series(0.15, {{0.45, 0.10}, {0.04, 0.02}, {0.01, -0.01}});
    const FourierSeries knee = series(0.55, {{-0.25, 0.35}, {0.22, -0.10}, {0.05, 0.03}});
    const FourierSeries shank = series(-0.05, {{0.20, 0.45}, {-0.10, 0.12}, {0.02, -0.03}});
    const FourierSeries ankle = series(0.05, {{0.12, -0.22}, {0.18, 0.09}, {-0.05, 0.06}});

    struct Variant {
        const char* name;
        double cycle_samples, gain, thigh_dc, knee_dc, shank_dc, target_dc;
    };
    const Variant variants[] = {
        {"walk_slow", 44.0, 0.9, 0.0, 0.0, 0.0, 0.0},
        {"walk_fast", 36.0, 1.2, 0.03, 0.05, 0.0, -0.03},
        {"ramp", 40.0, 1.0, 0.20, 0.10, 0.05, 0.10},
    };
    for (const auto& v : variants) {
        TaskSpec t;
        t.name = v.name;
        t.cycle_samples = v.cycle_samples;
        const FourierSeries left[] = {scaled(thigh, v.gain, v.thigh_dc), scaled(knee, v.gain, v.knee_dc),
                                      scaled(shank, v.gain, v.shank_dc)};
        for (const auto& s : left) t.channels.push_back(s);
        for (const auto& s : left) t.channels.push_back(half_cycle_shift(s));
        t.target = half_cycle_shift(scaled(ankle, v.gain, v.target_dc));
        cfg.tasks.push_back(std::move(t));
    }

    const double heights[] = {1.62, 1.68, 1.71, 1.74, 1.76, 1.78, 1.80, 1.83, 1.86, 1.90};
    const double masses[] = {55, 62, 68, 72, 70, 78, 82, 85, 90, 95};
    const double ages[] = {24, 31, 45, 28, 36, 52, 29, 41, 33, 26};
    for (int i = 0; i < 10; ++i) {
        char id[8];
        std::snprintf(id, sizeof id, "AB%02d", i + 1);
        cfg.able_subjects.push_back({id, heights[i], masses[i], ages[i], SubjectKind::able});
    }
    // Transtibial amputees on the right side: the right shank sensor is gone.
    cfg.amputees = {
        {{"TT01", 1.73, 74, 38, SubjectKind::amputee}, {{5}, 0.04, 1.15, 0.10, 2}},
        {{"TT02", 1.81, 84, 47, SubjectKind::amputee}, {{5}, 0.07, 1.25, 0.15, 2}},
        {{"TT03", 1.69, 66, 55, SubjectKind::amputee}, {{5}, 0.05, 0.85, 0.12, 3}},
    };
    return cfg;
}

}  // namespace reprog
