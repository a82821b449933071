#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>

#include "reprog/data.hpp"
#include "reprog/error.hpp"
#include "support.hpp"

using namespace reprog;

namespace {

SynthConfig quiet_config() {
    SynthConfig cfg = SynthConfig::defaults();
    cfg.noise_std = 0.0;
    cfg.cadence_jitter = 0.0;
    cfg.amplitude_jitter = 0.0;
    cfg.speed_drift = 0.0;
    return cfg;
}

const SubjectMeta& ab01(const SynthConfig& cfg) { return cfg.able_subjects.front(); }

ErrorKind kind_of(const std::function<void()>& f, std::string* message = nullptr) {
    try {
        f();
    } catch (const Error& e) {
        if (message) *message = e.what();
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::numeric;
}

// Linear interpolation over sorted knots (xs, ys) via upper_bound.
double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
    const std::size_t lo = hi - 1;
    if (xs[lo] == x) return ys[lo];
    return ys[lo] + (x - xs[lo]) / (xs[hi] - xs[lo]) * (ys[hi] - ys[lo]);
}

GaitStream tiny_stream(const std::vector<double>& phase, const std::vector<double>& target, std::size_t channels = 2) {
    GaitStream s;
    s.subject = {"S", 1.7, 70, 30, SubjectKind::able};
    for (std::size_t c = 0; c < channels; ++c) s.channel_names.push_back("c" + std::to_string(c));
    std::vector<double> flat;
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t k = 0; k < phase.size(); ++k) flat.push_back(static_cast<double>(c * 100 + k));
    s.channels = Tensor({channels, phase.size()}, flat);
    s.phase = phase;
    s.target = target;
    return s;
}

}  // namespace

// ------------------------------------------------------------------ synthesis

TEST(Synth, NoiselessCyclesRepeat) {
    const SynthConfig cfg = quiet_config();
    const GaitStream s = synth_able(cfg, ab01(cfg), 0, 2);
    const auto starts = cycle_starts(s.phase);
    ASSERT_EQ(starts.size(), 2u);
    const std::size_t len = starts[1];
    ASSERT_EQ(s.length(), 2 * len);
    for (std::size_t k = 0; k < len; ++k) {
        EXPECT_EQ(s.phase[k], s.phase[k + len]);
        EXPECT_EQ(s.target[k], s.target[k + len]);
        for (std::size_t c = 0; c < s.channel_count(); ++c) EXPECT_EQ(s.channels.at(c, k), s.channels.at(c, k + len));
    }
}

TEST(Synth, SameSeedSameStream) {
    const SynthConfig cfg = SynthConfig::defaults();
    EXPECT_EQ(synth_able(cfg, ab01(cfg), 1, 5), synth_able(cfg, ab01(cfg), 1, 5));
    SynthConfig other = cfg;
    other.seed += 1;
    EXPECT_NE(synth_able(cfg, ab01(cfg), 1, 5).channels, synth_able(other, ab01(cfg), 1, 5).channels);
}

TEST(Synth, PhaseWrapsWithinUnitInterval) {
    const SynthConfig cfg = SynthConfig::defaults();
    const GaitStream s = synth_able(cfg, ab01(cfg), 2, 6);
    EXPECT_EQ(cycle_starts(s.phase).size(), 6u);
    for (double p : s.phase) {
        EXPECT_GE(p, 0.0);
        EXPECT_LT(p, 1.0);
    }
}

TEST(Synth, DcOnlyChannelsAreRejectedAtNormalization) {
    SynthConfig cfg = quiet_config();
    for (auto& t : cfg.tasks)
        for (auto& ch : t.channels) ch.harmonics.clear();
    const GaitStream s = synth_able(cfg, ab01(cfg), 0, 2);
    std::string msg;
    EXPECT_EQ(kind_of([&] { fit_normalizer({s}); }, &msg), ErrorKind::data);
    EXPECT_NE(msg.find("constant channel"), std::string::npos);
}

TEST(Synth, IdentityDistortionEqualsAbleStream) {
    const SynthConfig cfg = SynthConfig::defaults();
    SubjectMeta subject = ab01(cfg);
    GaitStream amp = synth_amputee(cfg, subject, 0, 4, AmputeeDistortion{});
    GaitStream able = synth_able(cfg, subject, 0, 4);
    EXPECT_EQ(amp.channels, able.channels);
    EXPECT_EQ(amp.target, able.target);
}

TEST(Synth, DropoutZeroesChannel) {
    const SynthConfig cfg = SynthConfig::defaults();
    AmputeeDistortion d;
    d.dropout = {3};
    const GaitStream s = synth_amputee(cfg, ab01(cfg), 0, 3, d);
    for (std::size_t k = 0; k < s.length(); ++k) EXPECT_EQ(s.channels.at(3, k), 0.0);
}

TEST(Synth, AsymmetryScalesFirstHalfCycle) {
    const SynthConfig cfg = SynthConfig::defaults();
    AmputeeDistortion d;
    d.asymmetry = 1.2;
    const GaitStream amp = synth_amputee(cfg, ab01(cfg), 0, 3, d);
    const GaitStream able = synth_able(cfg, ab01(cfg), 0, 3);
    ASSERT_EQ(amp.phase, able.phase);
    for (std::size_t k = 0; k < amp.length(); ++k) {
        const double gain = amp.phase[k] < 0.5 ? 1.2 : 1.0;
        for (std::size_t c = 0; c < amp.channel_count(); ++c)
            EXPECT_DOUBLE_EQ(amp.channels.at(c, k), gain * able.channels.at(c, k));
    }
    EXPECT_EQ(amp.target, able.target);
}

TEST(Synth, DistortedTargetStaysAble) {
    const SynthConfig cfg = SynthConfig::defaults();
    const auto& spec = cfg.amputees.front();
    const GaitStream amp = synth_amputee(cfg, spec.subject, 0, 3);
    const GaitStream able = synth_amputee(cfg, spec.subject, 0, 3, AmputeeDistortion{});
    EXPECT_EQ(amp.target, able.target);
    EXPECT_NE(amp.channels, able.channels);
}

TEST(Synth, ConfigValidationNamesField) {
    SynthConfig cfg = SynthConfig::defaults();
    cfg.noise_std = -1.0;
    std::string msg;
    EXPECT_EQ(kind_of([&] { cfg.validate(); }, &msg), ErrorKind::config);
    EXPECT_NE(msg.find("noise_std"), std::string::npos);
    cfg = SynthConfig::defaults();
    cfg.amputees[0].distortion.asymmetry = 0.0;
    EXPECT_EQ(kind_of([&] { cfg.validate(); }, &msg), ErrorKind::config);
    EXPECT_NE(msg.find("asymmetry"), std::string::npos);
}

// --------------------------------------------------------------- anthropometry

TEST(Anthropometry, TwinAndSingletonPools) {
    std::vector<SubjectMeta> pool{{"A", 1.60, 55, 25, SubjectKind::able},
                                  {"B", 1.80, 80, 40, SubjectKind::able},
                                  {"C", 1.72, 68, 33, SubjectKind::able}};
    EXPECT_EQ(match_anthropometry({"X", 1.80, 80, 40, SubjectKind::amputee}, pool).id, "B");
    EXPECT_EQ(match_anthropometry({"X", 2.10, 120, 70, SubjectKind::amputee}, {pool[0]}).id, "A");
    EXPECT_EQ(kind_of([&] { match_anthropometry(pool[0], {}); }), ErrorKind::config);
}

TEST(Anthropometry, HandComputedZScores) {
    // heights 1.6/1.7/1.8: mean 1.7, pop std sqrt(2/3)*0.1; masses 60/70/90: mean 73.33, pop std 12.47;
    // ages 20/40/30: mean 30, pop std 8.165.
    std::vector<SubjectMeta> pool{{"P", 1.6, 60, 20, SubjectKind::able},
                                  {"Q", 1.7, 70, 40, SubjectKind::able},
                                  {"R", 1.8, 90, 30, SubjectKind::able}};
    const SubjectMeta amp{"T", 1.75, 72, 22, SubjectKind::amputee};
    const double sh = std::sqrt(2.0 / 3.0) * 0.1, sm = std::sqrt((13.3333333333 * 13.3333333333 + 3.3333333333 * 3.3333333333 + 16.6666666667 * 16.6666666667) / 3.0), sa = std::sqrt(200.0 / 3.0);
    auto d = [&](const SubjectMeta& s) {
        const double a = (s.height - amp.height) / sh, b = (s.mass - amp.mass) / sm, c = (s.age - amp.age) / sa;
        return a * a + b * b + c * c;
    };
    // P: (-1.84, -0.96, -0.24) -> 4.36; Q: (-0.61, -0.16, 2.20) -> 5.26; R: (0.61, 1.44, 0.98) -> 3.42
    EXPECT_NEAR(d(pool[0]), 4.36, 0.01);
    EXPECT_NEAR(d(pool[1]), 5.26, 0.01);
    EXPECT_NEAR(d(pool[2]), 3.42, 0.01);
    EXPECT_EQ(match_anthropometry(amp, pool).id, "R");
}

TEST(Anthropometry, TiesGoToSmallerId) {
    // equidistant in exactly representable values
    std::vector<SubjectMeta> pool{{"B", 1.5, 60, 30, SubjectKind::able}, {"A", 2.0, 80, 30, SubjectKind::able}};
    EXPECT_EQ(match_anthropometry({"X", 1.75, 70, 30, SubjectKind::amputee}, pool).id, "A");
}

// ------------------------------------------------------------ desired outputs

TEST(DesiredOutputs, IdenticalGridGivesAbleTarget) {
    const SynthConfig cfg = SynthConfig::defaults();
    const GaitStream able = synth_able(cfg, ab01(cfg), 0, 4);
    GaitStream amp = able;
    amp.subject.kind = SubjectKind::amputee;
    const auto desired = derive_desired_outputs(amp, able);
    ASSERT_EQ(desired.size(), able.length());
    for (std::size_t k = 0; k < able.length(); ++k) EXPECT_EQ(desired.values[k][0], able.target[k]);
}

TEST(DesiredOutputs, MidwayPhaseGivesMidpoint) {
    const GaitStream able = tiny_stream({0.0, 0.25, 0.5, 0.75}, {1.0, 3.0, 2.0, 0.0});
    const GaitStream amp = tiny_stream({0.125, 0.625}, {0, 0});
    const auto desired = derive_desired_outputs(amp, able);
    EXPECT_DOUBLE_EQ(desired.values[0][0], 2.0);
    EXPECT_DOUBLE_EQ(desired.values[1][0], 1.0);
}

TEST(DesiredOutputs, MatchesIndependentInterpolator) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        // able: 3 cycles of random sorted phases starting at 0
        std::vector<double> ap, at;
        std::vector<std::size_t> starts;
        for (int c = 0; c < 3; ++c) {
            starts.push_back(ap.size());
            std::vector<double> ph{0.0};
            for (int j = 0; j < 7; ++j) ph.push_back(u(rng) * 0.999);
            std::sort(ph.begin(), ph.end());
            for (double p : ph) {
                ap.push_back(p);
                at.push_back(u(rng));
            }
        }
        std::vector<double> mp, mt;
        for (int c = 0; c < 4; ++c) {
            std::vector<double> ph{0.0};
            for (int j = 0; j < 5; ++j) ph.push_back(u(rng) * 0.999);
            std::sort(ph.begin(), ph.end());
            for (double p : ph) {
                mp.push_back(p);
                mt.push_back(0.0);
            }
        }
        const auto desired = derive_desired_outputs(tiny_stream(mp, mt), tiny_stream(ap, at));
        std::size_t k = 0;
        for (int c = 0; c < 4; ++c) {
            const std::size_t ac = static_cast<std::size_t>(c) % 3;
            const std::size_t b = starts[ac], e = ac + 1 < 3 ? starts[ac + 1] : ap.size();
            std::vector<double> xs(ap.begin() + b, ap.begin() + e), ys(at.begin() + b, at.begin() + e);
            const std::size_t closing = e < ap.size() ? e : b;
            xs.push_back(ap[closing] + 1.0);
            ys.push_back(at[closing]);
            for (int j = 0; j < 6; ++j, ++k)
                EXPECT_NEAR(desired.values[k][0], interp(xs, ys, mp[k]), 1e-14) << "trial " << trial << " k " << k;
        }
    }
}

TEST(DesiredOutputs, MissingPhaseIsFormatError) {
    GaitStream amp = tiny_stream({0.1, 0.2}, {0, 0});
    amp.phase.clear();
    EXPECT_EQ(kind_of([&] { derive_desired_outputs(amp, tiny_stream({0.0, 0.5}, {1, 2})); }), ErrorKind::format);
}

// ------------------------------------------------------------------ windows

TEST(Windows, BoundaryCounts) {
    const std::size_t T = 4;
    auto stream = [&](std::size_t L) {
        std::vector<double> ph(L), tg(L);
        for (std::size_t k = 0; k < L; ++k) {
            ph[k] = static_cast<double>(k % 10) / 10.0;
            tg[k] = static_cast<double>(k);
        }
        return tiny_stream(ph, tg);
    };
    EXPECT_EQ(make_windows(stream(T + 1), T, 1).size(), 1u);
    EXPECT_EQ(make_windows(stream(T + 3), T, 1).size(), 3u);
    for (std::size_t L = T + 1; L < T + 12; ++L)
        for (std::size_t stride = 1; stride <= 4; ++stride) {
            std::size_t enumerated = 0;
            for (std::size_t k = T - 1; k + 2 <= L; k += stride) ++enumerated;
            EXPECT_EQ(make_windows(stream(L), T, stride).size(), enumerated);
            EXPECT_EQ(enumerated, (L - T + stride - 1) / stride);
        }
    EXPECT_EQ(kind_of([&] { make_windows(stream(T), T, 1); }), ErrorKind::insufficient_data);
}

TEST(Windows, ContentAndNextStepTarget) {
    std::vector<double> ph, tg;
    for (int k = 0; k < 9; ++k) {
        ph.push_back(k / 10.0);
        tg.push_back(10.0 + k);
    }
    const auto w = make_windows(tiny_stream(ph, tg), 3, 2);
    ASSERT_EQ(w.size(), 3u);
    EXPECT_EQ(w[1].window.time_index, 4u);
    EXPECT_EQ(w[1].target[0], 15.0);
    EXPECT_EQ(w[1].window.values.at(1, 0), 102.0);
    EXPECT_EQ(w[1].window.values.at(1, 2), 104.0);
}

// ------------------------------------------------------------ normalization

TEST(Normalizer, RoundTripAndUnitMoments) {
    const SynthConfig cfg = SynthConfig::defaults();
    const GaitStream a = synth_able(cfg, cfg.able_subjects[0], 0, 5), b = synth_able(cfg, cfg.able_subjects[1], 0, 5);
    const auto stats = fit_normalizer({a, b});
    const GaitStream na = apply_normalizer(stats, a), nb = apply_normalizer(stats, b);
    for (std::size_t c = 0; c < a.channel_count(); ++c) {
        double sum = 0.0, sq = 0.0;
        std::size_t n = 0;
        for (const GaitStream* s : {&na, &nb})
            for (std::size_t k = 0; k < s->length(); ++k, ++n) {
                sum += s->channels.at(c, k);
                sq += s->channels.at(c, k) * s->channels.at(c, k);
            }
        const double mean = sum / static_cast<double>(n);
        EXPECT_NEAR(mean, 0.0, 1e-9);
        EXPECT_NEAR(sq / static_cast<double>(n) - mean * mean, 1.0, 1e-9);
    }
    const GaitStream back = invert_normalizer(stats, na);
    for (std::size_t i = 0; i < a.channels.size(); ++i) EXPECT_NEAR(back.channels[i], a.channels[i], 1e-12);
}

TEST(Normalizer, StatsComeFromTrainingSplitOnly) {
    const SynthConfig cfg = SynthConfig::defaults();
    const GaitStream s = synth_able(cfg, ab01(cfg), 0, 20);
    const GaitStream train = head(s, s.length() / 2), rest = tail(s, s.length() / 2);
    const auto fit_a = fit_normalizer({train}), fit_b = fit_normalizer({rest});
    EXPECT_NE(fit_a.mean, fit_b.mean);
    const GaitStream applied = apply_normalizer(fit_a, rest);
    EXPECT_NE(fit_normalizer({applied}).mean, std::vector<double>(s.channel_count(), 0.0));
}

// ------------------------------------------------------------------------ CSV

TEST(Csv, RoundTripIsExact) {
    const SynthConfig cfg = SynthConfig::defaults();
    const GaitStream s = synth_able(cfg, ab01(cfg), 1, 3);
    const auto dir = testing_support::temp_dir("csv");
    write_csv(s, dir / "s.csv");
    const GaitStream back = load_csv(dir / "s.csv");
    EXPECT_EQ(back.channels, s.channels);
    EXPECT_EQ(back.phase, s.phase);
    EXPECT_EQ(back.target, s.target);
    EXPECT_EQ(back.channel_names, s.channel_names);
}

TEST(Csv, MissingPhaseColumnNamed) {
    std::string msg;
    EXPECT_EQ(kind_of([&] { parse_csv("time,target,a,b\n0,1,2,3\n"); }, &msg), ErrorKind::format);
    EXPECT_NE(msg.find("phase"), std::string::npos) << msg;
}

TEST(Csv, NonFiniteCellCitesLine) {
    std::string text = "time,phase,target,a\n";
    for (int k = 0; k < 20; ++k) text += std::to_string(k) + ",0.5,1," + (k == 15 ? "nan" : "2") + "\n";
    std::string msg;
    EXPECT_EQ(kind_of([&] { parse_csv(text); }, &msg), ErrorKind::data);
    EXPECT_NE(msg.find("line 17"), std::string::npos) << msg;
}

TEST(Csv, SchemaViolations) {
    std::string msg;
    EXPECT_EQ(kind_of([&] { parse_csv("time,phase,target,a\n0,0.5,1\n"); }, &msg), ErrorKind::format);
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    EXPECT_EQ(kind_of([&] { parse_csv("time,phase,target,a\n0,0.5,1,x\n"); }, &msg), ErrorKind::format);
    EXPECT_EQ(kind_of([&] { parse_csv("time,phase,target,a\n0,1.5,1,2\n"); }, &msg), ErrorKind::data);
    EXPECT_EQ(kind_of([&] { parse_csv("time,phase,target,a\n0,0.5,inf,2\n"); }, &msg), ErrorKind::data);
    EXPECT_EQ(kind_of([&] { parse_csv(""); }), ErrorKind::format);
    EXPECT_EQ(kind_of([&] { load_csv("/nonexistent/dir/x.csv"); }), ErrorKind::io);
}
