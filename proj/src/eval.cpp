#include "reprog/eval.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "reprog/error.hpp"

namespace reprog {

double r2(const std::vector<Tensor>& pred, const std::vector<Tensor>& target) {
    if (pred.size() != target.size() || pred.empty())
        fail(ErrorKind::usage, "r2 needs equal, nonempty prediction and target lists");
    Tensor mean = Tensor::zeros_like(target.front());
    for (const auto& y : target) {
        require_same_shape(y, mean, "r2 target");
        for (std::size_t i = 0; i < y.size(); ++i) mean[i] += y[i];
    }
    for (auto& v : mean.values()) v /= static_cast<double>(target.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t s = 0; s < target.size(); ++s) {
        require_same_shape(pred[s], target[s], "r2 prediction");
        for (std::size_t i = 0; i < target[s].size(); ++i) {
            const double r = target[s][i] - pred[s][i];
            const double d = target[s][i] - mean[i];
            ss_res += r * r;
            ss_tot += d * d;
        }
    }
    if (ss_tot == 0.0) fail(ErrorKind::undefined_metric, "r2 is undefined for a constant target");
    return 1.0 - ss_res / ss_tot;
}

double evaluate_r2(const FoundationModel& model, const std::vector<LabeledSample>& samples) {
    std::vector<Tensor> pred, target;
    for (const auto& s : samples) {
        pred.push_back(model.predict(s.window));
        target.push_back(s.target);
    }
    return r2(pred, target);
}

const char* to_string(Strategy s) noexcept {
    switch (s) {
        case Strategy::cross: return "cross";
        case Strategy::direct: return "direct";
        case Strategy::refurbished: return "refurbished";
    }
    return "unknown";
}

Strategy parse_strategy(const std::string& name) {
    if (name == "cross") return Strategy::cross;
    if (name == "direct") return Strategy::direct;
    if (name == "refurbished") return Strategy::refurbished;
    fail(ErrorKind::config, "strategy must be cross, direct or refurbished, got \"" + name + "\"");
}

void StrategyResult::summarize() {
    if (r2.empty()) {
        mean = std = 0.0;
        return;
    }
    double sum = 0.0;
    for (double v : r2) sum += v;
    mean = sum / static_cast<double>(r2.size());
    double var = 0.0;
    for (double v : r2) var += (v - mean) * (v - mean);
    std = std::sqrt(var / static_cast<double>(r2.size()));
}

const StrategyResult* SweepReport::find(Strategy s, double ratio) const {
    for (const auto& r : results)
        if (r.strategy == s && (s == Strategy::cross || r.train_ratio == ratio)) return &r;
    return nullptr;
}

namespace {

nlohmann::json conv_specs(const std::vector<ConvSpec>& layers) {
    auto out = nlohmann::json::array();
    for (const auto& l : layers)
        out.push_back({{"out_channels", l.out_channels}, {"kernel_size", l.kernel_size}, {"dilation", l.dilation}});
    return out;
}

std::uint64_t run_seed(std::uint64_t seed, std::size_t case_index, std::uint64_t salt) {
    return seed * 1000003ULL + case_index * 7919ULL + salt;
}

void check_ratio(double ratio) {
    if (!(ratio > 0.0 && ratio < 1.0)) fail(ErrorKind::config, "train ratio must lie in (0, 1)");
}

}  // namespace

std::string EvalSettings::snapshot() const {
    nlohmann::json j;
    j["direct"] = {{"layers", conv_specs(direct_arch.layers)},
                   {"head_hidden", direct_arch.head_hidden},
                   {"epochs", direct_train.epochs},
                   {"batch_size", direct_train.batch_size},
                   {"learning_rate", direct_train.learning_rate}};
    j["template"] = {{"m", templates.m},
                     {"n", templates.n},
                     {"epsilon", templates.epsilon},
                     {"weighting", to_string(templates.weighting)}};
    j["refurbish"] = {{"layers", conv_specs(refurbish_arch.layers)},
                      {"output_kernel", refurbish_arch.output_kernel},
                      {"alpha", refurbish_train.alpha},
                      {"beta", refurbish_train.beta},
                      {"epochs", refurbish_train.epochs},
                      {"batch_size", refurbish_train.batch_size},
                      {"learning_rate", refurbish_train.learning_rate},
                      {"pooled", pooled_refurbish}};
    return j.dump();
}

std::size_t train_count(std::size_t total, double ratio) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(total) + 1e-9));
}

StrategyResult run_cross_mapping(const FoundationModel& g_frozen, const std::vector<AmputeeCase>& cases) {
    if (!g_frozen.frozen()) fail(ErrorKind::usage, "cross-mapping expects the frozen foundation model");
    StrategyResult result;
    result.strategy = Strategy::cross;
    result.train_ratio = 1.0;
    for (const auto& c : cases) {
        result.amputee_ids.push_back(c.subject.id);
        result.r2.push_back(evaluate_r2(g_frozen, c.samples));
    }
    result.summarize();
    result.config = "{}";
    return result;
}

StrategyResult run_direct_mapping(const std::vector<AmputeeCase>& cases, double ratio, const EvalSettings& settings,
                                  std::uint64_t seed) {
    check_ratio(ratio);
    StrategyResult result;
    result.strategy = Strategy::direct;
    result.train_ratio = ratio;
    result.seed = seed;
    result.config = settings.snapshot();
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& c = cases[i];
        const std::size_t n_train = train_count(c.samples.size(), ratio);
        if (n_train < settings.direct_train.batch_size || n_train >= c.samples.size())
            fail(ErrorKind::config, "direct mapping for " + c.subject.id + " gets " + std::to_string(n_train) +
                                        " training samples, fewer than one batch of " +
                                        std::to_string(settings.direct_train.batch_size));
        const std::vector<LabeledSample> train(c.samples.begin(), c.samples.begin() + static_cast<long>(n_train));
        const std::vector<LabeledSample> held(c.samples.begin() + static_cast<long>(n_train), c.samples.end());
        const TaskId task = c.samples.front().window.task;
        const Geometry geometry{c.samples.front().window.values.dim(0), c.samples.front().window.values.dim(1)};
        TrainConfig tc = settings.direct_train;
        tc.seed = run_seed(seed, i, 101);
        auto trained = train_foundation(train, {task}, geometry, c.samples.front().target.size(),
                                        settings.direct_arch, tc);
        result.amputee_ids.push_back(c.subject.id);
        result.r2.push_back(evaluate_r2(trained.model, held));
    }
    result.summarize();
    return result;
}

std::vector<AmputeeTrainingTriple> training_triples(const AmputeeCase& c, std::size_t n_train,
                                                    const TemplateConfig& cfg) {
    std::vector<Tensor> desired;
    for (std::size_t k = 0; k < n_train; ++k) desired.push_back(c.samples[k].target);
    const CorrectionSet corrections = compute_corrections(c.index, desired, cfg);
    std::vector<AmputeeTrainingTriple> triples;
    for (const auto& t : corrections.templates) {
        const auto& s = c.samples[t.sample];
        TimeWindow corrected = t.corrected;
        corrected.task = s.window.task;
        triples.push_back({s.window, std::move(corrected), s.target});
    }
    return triples;
}

RefurbishedRun run_refurbished_detailed(const FoundationModel& g_frozen, const std::vector<AmputeeCase>& cases,
                                        double ratio, const EvalSettings& settings, std::uint64_t seed) {
    check_ratio(ratio);
    if (!g_frozen.frozen()) fail(ErrorKind::usage, "refurbishing expects the frozen foundation model");
    RefurbishedRun run;
    run.result.strategy = Strategy::refurbished;
    run.result.train_ratio = ratio;
    run.result.seed = seed;
    run.result.config = settings.snapshot();

    std::vector<std::vector<AmputeeTrainingTriple>> triples;
    for (const auto& c : cases) {
        const std::size_t n_train = train_count(c.samples.size(), ratio);
        if (n_train < 1 || n_train >= c.samples.size())
            fail(ErrorKind::config, "refurbishing for " + c.subject.id + " has no usable training split");
        triples.push_back(training_triples(c, n_train, settings.templates));
    }
    if (settings.pooled_refurbish) {
        std::vector<AmputeeTrainingTriple> pooled;
        for (const auto& t : triples) pooled.insert(pooled.end(), t.begin(), t.end());
        RefurbishTrainConfig rc = settings.refurbish_train;
        rc.seed = run_seed(seed, 0, 202);
        const auto trained = train_refurbish(pooled, g_frozen, settings.refurbish_arch, rc);
        run.models.assign(cases.size(), trained.model);
    } else {
        for (std::size_t i = 0; i < cases.size(); ++i) {
            RefurbishTrainConfig rc = settings.refurbish_train;
            rc.seed = run_seed(seed, i, 202);
            run.models.push_back(train_refurbish(triples[i], g_frozen, settings.refurbish_arch, rc).model);
        }
    }
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& c = cases[i];
        const std::size_t n_train = train_count(c.samples.size(), ratio);
        std::vector<Tensor> pred, target;
        for (std::size_t k = n_train; k < c.samples.size(); ++k) {
            pred.push_back(g_frozen.predict(run.models[i].forward(c.samples[k].window)));
            target.push_back(c.samples[k].target);
        }
        run.result.amputee_ids.push_back(c.subject.id);
        run.result.r2.push_back(r2(pred, target));
    }
    run.result.summarize();
    return run;
}

StrategyResult run_refurbished(const FoundationModel& g_frozen, const std::vector<AmputeeCase>& cases, double ratio,
                               const EvalSettings& settings, std::uint64_t seed) {
    return run_refurbished_detailed(g_frozen, cases, ratio, settings, seed).result;
}

double mean_channel_rmse(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
    if (a.size() != b.size() || a.empty()) fail(ErrorKind::usage, "rmse needs equal, nonempty window lists");
    const std::size_t channels = a.front().dim(0), steps = a.front().dim(1);
    double total = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (std::size_t s = 0; s < a.size(); ++s) {
            require_same_shape(a[s], b[s], "rmse window");
            for (std::size_t t = 0; t < steps; ++t) {
                const double d = a[s][c * steps + t] - b[s][c * steps + t];
                acc += d * d;
            }
        }
        total += std::sqrt(acc / static_cast<double>(a.size() * steps));
    }
    return total / static_cast<double>(channels);
}

SweepReport sweep(const FoundationModel& g_frozen, const std::vector<AmputeeCase>& cases,
                  const std::vector<double>& ratios, const std::vector<Strategy>& strategies,
                  const std::vector<std::uint64_t>& seeds, const EvalSettings& settings) {
    if (seeds.empty()) fail(ErrorKind::config, "sweep needs at least one seed");
    if (cases.empty()) fail(ErrorKind::config, "sweep needs at least one amputee");
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        check_ratio(ratios[i]);
        if (i > 0 && !(ratios[i] > ratios[i - 1])) fail(ErrorKind::config, "ratios must be strictly ascending");
    }
    auto wants = [&](Strategy s) { return std::find(strategies.begin(), strategies.end(), s) != strategies.end(); };

    SweepReport report;
    report.provenance["foundation_checksum"] = g_frozen.checksum();
    for (const auto& c : cases) report.provenance["index." + c.subject.id] = c.index.checksum();
    report.provenance["aggregation"] = "mean and population std over amputees; per-amputee R2 averaged over seeds";

    auto average_over_seeds = [&](auto&& run_one) {
        StrategyResult acc = run_one(seeds.front());
        for (std::size_t s = 1; s < seeds.size(); ++s) {
            const StrategyResult next = run_one(seeds[s]);
            for (std::size_t i = 0; i < acc.r2.size(); ++i) acc.r2[i] += next.r2[i];
        }
        for (auto& v : acc.r2) v /= static_cast<double>(seeds.size());
        acc.summarize();
        return acc;
    };

    if (wants(Strategy::cross)) {
        StrategyResult cross = run_cross_mapping(g_frozen, cases);
        cross.seed = seeds.front();
        report.results.push_back(std::move(cross));
    }
    if (wants(Strategy::direct))
        for (double ratio : ratios)
            report.results.push_back(
                average_over_seeds([&](std::uint64_t s) { return run_direct_mapping(cases, ratio, settings, s); }));
    if (wants(Strategy::refurbished))
        for (double ratio : ratios)
            report.results.push_back(average_over_seeds(
                [&](std::uint64_t s) { return run_refurbished(g_frozen, cases, ratio, settings, s); }));
    return report;
}

}  // namespace reprog
