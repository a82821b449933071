#include "reprog/pipeline.hpp"

#include <json.hpp>

#include "reprog/artifact.hpp"
#include "reprog/checksum.hpp"
#include "reprog/error.hpp"

namespace reprog {

using nlohmann::json;
namespace fs = std::filesystem;

const GaitStream& Dataset::able_stream(const std::string& subject, TaskId task) const {
    for (const auto& s : able)
        if (s.subject.id == subject && s.task == task) return s;
    fail(ErrorKind::insufficient_data, "no able-bodied stream for " + subject + " on task " + std::to_string(task));
}

std::vector<SubjectMeta> Dataset::able_subjects() const {
    std::vector<SubjectMeta> out;
    for (const auto& s : able)
        if (std::none_of(out.begin(), out.end(), [&](const SubjectMeta& m) { return m.id == s.subject.id; }))
            out.push_back(s.subject);
    return out;
}

Dataset synthesize(const ExperimentConfig& cfg) {
    Dataset d;
    const auto& synth = cfg.synth;
    for (const auto& subject : synth.able_subjects)
        for (std::size_t t = 0; t < synth.tasks.size(); ++t)
            d.able.push_back(synth_able(synth, subject, static_cast<TaskId>(t), synth.able_cycles));
    for (const auto& amp : synth.amputees)
        d.amputee.push_back(synth_amputee(synth, amp.subject, cfg.amputee_task, synth.amputee_cycles, amp.distortion));
    return d;
}

namespace {

std::string stream_file(const GaitStream& s, const std::vector<TaskSpec>& tasks, const char* dir) {
    return std::string(dir) + "/" + s.subject.id + "_" + tasks.at(static_cast<std::size_t>(s.task)).name + ".csv";
}

json stream_entry(const GaitStream& s, const std::string& file) {
    return {{"id", s.subject.id}, {"height", s.subject.height}, {"mass", s.subject.mass},
            {"age", s.subject.age}, {"task", s.task},           {"file", file}};
}

std::string config_digest(const ExperimentConfig& cfg) { return sha256_hex(cfg.to_json()); }

}  // namespace

void write_dataset(const Dataset& data, const ExperimentConfig& cfg, const fs::path& out_dir) {
    json manifest;
    manifest["channel_names"] = cfg.synth.channel_names;
    json tasks = json::array();
    for (const auto& t : cfg.synth.tasks) tasks.push_back(t.name);
    manifest["tasks"] = tasks;
    manifest["amputee_task"] = cfg.amputee_task;
    manifest["seed"] = cfg.seed;
    json able = json::array(), amps = json::array();
    for (const auto& s : data.able) {
        const std::string file = stream_file(s, cfg.synth.tasks, "able");
        write_text(out_dir / file, to_csv(s));
        able.push_back(stream_entry(s, file));
    }
    for (const auto& s : data.amputee) {
        const std::string file = stream_file(s, cfg.synth.tasks, "amputee");
        write_text(out_dir / file, to_csv(s));
        amps.push_back(stream_entry(s, file));
    }
    manifest["able"] = able;
    manifest["amputee"] = amps;
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& data_dir) {
    const fs::path manifest_path = data_dir / "manifest.json";
    if (!fs::exists(manifest_path)) fail(ErrorKind::io, "missing dataset manifest " + manifest_path.string());
    json manifest;
    try {
        manifest = json::parse(read_text(manifest_path));
    } catch (const json::parse_error& e) {
        fail(ErrorKind::format, manifest_path.string() + ": " + e.what());
    }
    Dataset d;
    auto load_group = [&](const char* key, SubjectKind kind, std::vector<GaitStream>& out) {
        try {
            for (const auto& e : manifest.at(key)) {
                GaitStream s = load_csv(data_dir / e.at("file").get<std::string>());
                s.subject = {e.at("id").get<std::string>(), e.at("height").get<double>(), e.at("mass").get<double>(),
                             e.at("age").get<double>(), kind};
                s.task = e.at("task").get<TaskId>();
                out.push_back(std::move(s));
            }
        } catch (const json::exception& e) {
            fail(ErrorKind::format, manifest_path.string() + ": " + e.what());
        }
    };
    load_group("able", SubjectKind::able, d.able);
    load_group("amputee", SubjectKind::amputee, d.amputee);
    return d;
}

FoundationFit fit_foundation(const Dataset& data, const ExperimentConfig& cfg) {
    const std::size_t n_tasks = cfg.synth.tasks.size();
    std::vector<GaitStream> train_parts, held_parts;
    for (const auto& s : data.able) {
        if (s.task < 0 || static_cast<std::size_t>(s.task) >= n_tasks)
            fail(ErrorKind::config, "able stream " + s.subject.id + " uses task " + std::to_string(s.task) +
                                        ", which the config does not declare");
        const auto cut = static_cast<std::size_t>((1.0 - cfg.holdout_fraction) * static_cast<double>(s.length()));
        train_parts.push_back(head(s, cut));
        held_parts.push_back(tail(s, cut));
    }
    if (train_parts.empty()) fail(ErrorKind::insufficient_data, "no able-bodied streams to train on");

    FoundationFit fit;
    fit.norm = fit_normalizer(train_parts);
    std::vector<LabeledSample> train;
    std::map<TaskId, std::vector<LabeledSample>> held;
    for (const auto& s : train_parts)
        for (auto& w : make_windows(apply_normalizer(fit.norm, s), cfg.window, cfg.foundation_stride))
            train.push_back(std::move(w));
    for (const auto& s : held_parts)
        for (auto& w : make_windows(apply_normalizer(fit.norm, s), cfg.window, cfg.stride))
            held[s.task].push_back(std::move(w));

    std::vector<TaskId> tasks;
    for (std::size_t t = 0; t < n_tasks; ++t) tasks.push_back(static_cast<TaskId>(t));
    const Geometry geometry{train.front().window.values.dim(0), cfg.window};
    auto trained = train_foundation(train, tasks, geometry, 1, cfg.foundation, cfg.foundation_train_seeded());
    fit.model = freeze(std::move(trained.model));
    fit.loss_history = std::move(trained.loss_history);
    for (const auto& [task, samples] : held) fit.heldout_r2[task] = evaluate_r2(fit.model, samples);
    return fit;
}

AbleBodiedIndex build_amputee_index(const FoundationModel& model, const NormalizationStats& norm, const Dataset& data,
                                    const GaitStream& amputee, const ExperimentConfig& cfg, std::string* matched_id) {
    const SubjectMeta match = match_anthropometry(amputee.subject, data.able_subjects());
    if (matched_id) *matched_id = match.id;
    const GaitStream able = apply_normalizer(norm, data.able_stream(match.id, amputee.task));
    std::vector<TimeWindow> windows;
    for (auto& s : make_windows(able, cfg.window, cfg.stride)) windows.push_back(std::move(s.window));
    return build_index(model, windows);
}

AmputeeCase make_case(const NormalizationStats& norm, const Dataset& data, const GaitStream& amputee,
                      const ExperimentConfig& cfg, AbleBodiedIndex index, const std::string& matched_id) {
    const DesiredOutputSeries desired = derive_desired_outputs(amputee, data.able_stream(matched_id, amputee.task));
    GaitStream stream = apply_normalizer(norm, amputee);
    for (std::size_t k = 0; k < stream.length(); ++k) stream.target[k] = desired.values[k][0];
    AmputeeCase c;
    c.subject = amputee.subject;
    c.matched_able_id = matched_id;
    c.samples = make_windows(stream, cfg.window, cfg.stride);
    c.index = std::move(index);
    return c;
}

AmputeeCase make_case(const FoundationModel& model, const NormalizationStats& norm, const Dataset& data,
                      const GaitStream& amputee, const ExperimentConfig& cfg) {
    std::string matched;
    AbleBodiedIndex index = build_amputee_index(model, norm, data, amputee, cfg, &matched);
    return make_case(norm, data, amputee, cfg, std::move(index), matched);
}

std::vector<AmputeeCase> prepare_cases(const FoundationModel& model, const NormalizationStats& norm,
                                       const Dataset& data, const ExperimentConfig& cfg) {
    std::vector<AmputeeCase> cases;
    for (const auto& amp : data.amputee) cases.push_back(make_case(model, norm, data, amp, cfg));
    return cases;
}

// ------------------------------------------------------------------ commands

void cmd_synth(const ExperimentConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    write_dataset(synthesize(cfg), cfg, out_dir);
}

namespace {

void check_tasks(const Dataset& data, const ExperimentConfig& cfg, const fs::path& data_dir) {
    const json manifest = json::parse(read_text(data_dir / "manifest.json"));
    std::vector<std::string> names;
    for (const auto& t : cfg.synth.tasks) names.push_back(t.name);
    if (manifest.value("tasks", json::array()) != json(names))
        fail(ErrorKind::config, "dataset task list " + manifest.value("tasks", json::array()).dump() +
                                    " does not match the configured tasks " + json(names).dump());
    for (const auto& s : data.able)
        if (s.task < 0 || static_cast<std::size_t>(s.task) >= names.size())
            fail(ErrorKind::config, "dataset stream for " + s.subject.id + " uses unknown task " + std::to_string(s.task));
    for (const auto& s : data.amputee)
        if (s.task != cfg.amputee_task)
            fail(ErrorKind::config, "amputee " + s.subject.id + " walks task " + std::to_string(s.task) +
                                        " but amputee_task is " + std::to_string(cfg.amputee_task));
}

LoadedFoundation load_foundation(const fs::path& checkpoint) {
    return foundation_from_checkpoint(parse_artifact(read_text(checkpoint), "reprog-checkpoint", checkpoint.string()));
}

AbleBodiedIndex load_index(const fs::path& path, const FoundationModel& model, std::string* matched) {
    const Artifact a = parse_artifact(read_text(path), "reprog-index", path.string());
    AbleBodiedIndex index = index_from_artifact(a);
    if (index.model_checksum != model.checksum())
        fail(ErrorKind::provenance, path.string() + " was built from foundation " + index.model_checksum.substr(0, 12) +
                                        "..., not the loaded checkpoint " + model.checksum().substr(0, 12) + "...");
    if (matched) *matched = a.meta.value("matched_able", "");
    return index;
}

}  // namespace

TrainFoundationSummary cmd_train_foundation(const fs::path& data_dir, const ExperimentConfig& cfg,
                                            const fs::path& out_checkpoint) {
    cfg.validate();
    const Dataset data = load_dataset(data_dir);
    check_tasks(data, cfg, data_dir);
    FoundationFit fit = fit_foundation(data, cfg);
    json meta;
    meta["config_sha256"] = config_digest(cfg);
    json r2s = json::object();
    for (const auto& [task, v] : fit.heldout_r2) r2s[cfg.synth.tasks[static_cast<std::size_t>(task)].name] = v;
    meta["heldout_r2"] = r2s;
    meta["loss_history"] = fit.loss_history;
    write_text(out_checkpoint, render(foundation_checkpoint(fit.model, fit.norm, meta)));
    return {fit.heldout_r2, fit.model.checksum()};
}

void cmd_build_index(const fs::path& checkpoint, const fs::path& data_dir, const ExperimentConfig& cfg,
                     const fs::path& out_dir) {
    cfg.validate();
    const LoadedFoundation g = load_foundation(checkpoint);
    const Dataset data = load_dataset(data_dir);
    check_tasks(data, cfg, data_dir);
    for (const auto& amp : data.amputee) {
        std::string matched;
        const AbleBodiedIndex index = build_amputee_index(g.model, g.norm, data, amp, cfg, &matched);
        write_text(out_dir / (amp.subject.id + ".idx"),
                   render(index_artifact(index, {{"amputee", amp.subject.id}, {"matched_able", matched}})));
    }
}

MapTemplatesSummary cmd_map_templates(const fs::path& checkpoint, const fs::path& index_dir, const fs::path& data_dir,
                                      const ExperimentConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    const LoadedFoundation g = load_foundation(checkpoint);
    const Dataset data = load_dataset(data_dir);
    check_tasks(data, cfg, data_dir);
    MapTemplatesSummary summary;
    for (const auto& amp : data.amputee) {
        std::string matched;
        AbleBodiedIndex index = load_index(index_dir / (amp.subject.id + ".idx"), g.model, &matched);
        const std::string index_sum = index.checksum();
        const AmputeeCase c = make_case(g.norm, data, amp, cfg, std::move(index), matched);
        const std::size_t n_train = train_count(c.samples.size(), cfg.stage_ratio);
        std::vector<Tensor> desired;
        for (std::size_t k = 0; k < n_train; ++k) desired.push_back(c.samples[k].target);
        const CorrectionSet set = compute_corrections(c.index, desired, cfg.templates);
        summary.templates[amp.subject.id] = set.templates.size();
        summary.skipped[amp.subject.id] = set.skipped.size();
        const json meta = {{"amputee", amp.subject.id},
                           {"train_count", n_train},
                           {"m", cfg.templates.m},
                           {"n", cfg.templates.n},
                           {"epsilon", cfg.templates.epsilon},
                           {"weighting", to_string(cfg.templates.weighting)}};
        write_text(out_dir / (amp.subject.id + ".tpl"),
                   render(templates_artifact(set, index_sum, g.model.checksum(), meta)));
    }
    return summary;
}

void cmd_train_refurbish(const fs::path& checkpoint, const fs::path& templates_dir, const fs::path& data_dir,
                         const ExperimentConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    const LoadedFoundation g = load_foundation(checkpoint);
    const Dataset data = load_dataset(data_dir);
    check_tasks(data, cfg, data_dir);
    for (std::size_t i = 0; i < data.amputee.size(); ++i) {
        const auto& amp = data.amputee[i];
        const fs::path path = templates_dir / (amp.subject.id + ".tpl");
        const Artifact a = parse_artifact(read_text(path), "reprog-templates", path.string());
        if (a.meta.value("model_checksum", "") != g.model.checksum())
            fail(ErrorKind::provenance, path.string() + " was mapped against a different foundation checkpoint");
        const std::string matched = match_anthropometry(amp.subject, data.able_subjects()).id;
        const AmputeeCase c = make_case(g.norm, data, amp, cfg, AbleBodiedIndex{}, matched);
        const CorrectionSet set = templates_from_artifact(a, g.model.geometry().channels, g.model.geometry().steps,
                                                          cfg.amputee_task);
        std::vector<AmputeeTrainingTriple> triples;
        for (const auto& t : set.templates) {
            if (t.sample >= c.samples.size()) fail(ErrorKind::format, path.string() + ": template beyond the sample stream");
            const auto& s = c.samples[t.sample];
            triples.push_back({s.window, t.corrected, s.target});
        }
        RefurbishTrainConfig rc = cfg.refurbish_train;
        rc.seed = cfg.seed * 1000003ULL + i * 7919ULL + 202;
        const auto trained = train_refurbish(triples, g.model, cfg.refurbish, rc);
        const json meta = {{"amputee", amp.subject.id},
                           {"templates_checksum", sha256_hex(read_text(path))},
                           {"loss_history", trained.loss_history},
                           {"alpha", rc.alpha},
                           {"beta", rc.beta}};
        write_text(out_dir / (amp.subject.id + ".ckpt"),
                   render(refurbish_checkpoint(trained.model, g.model.checksum(), meta)));
    }
}

SweepReport cmd_eval(const fs::path& checkpoint, const fs::path& index_dir, const fs::path& data_dir,
                     const ExperimentConfig& cfg, const std::vector<Strategy>& strategies,
                     const std::vector<double>& ratios, const fs::path& out_dir) {
    cfg.validate();
    const LoadedFoundation g = load_foundation(checkpoint);
    const Dataset data = load_dataset(data_dir);
    check_tasks(data, cfg, data_dir);
    std::vector<AmputeeCase> cases;
    for (const auto& amp : data.amputee) {
        std::string matched;
        AbleBodiedIndex index = load_index(index_dir / (amp.subject.id + ".idx"), g.model, &matched);
        cases.push_back(make_case(g.norm, data, amp, cfg, std::move(index), matched));
    }
    SweepReport report = sweep(g.model, cases, ratios, strategies, cfg.sweep_seeds(), cfg.eval_settings());
    report.provenance["config_sha256"] = config_digest(cfg);
    emit_report(report, out_dir);
    return report;
}

SweepReport cmd_report(const fs::path& results_csv, const fs::path& out_dir) {
    SweepReport report = parse_results_csv(read_text(results_csv));
    emit_report(report, out_dir);
    return report;
}

}  // namespace reprog
