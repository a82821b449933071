#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <sys/wait.h>

#include "reprog/artifact.hpp"
#include "reprog/error.hpp"
#include "reprog/pipeline.hpp"
#include "small_suite.hpp"
#include "support.hpp"

using namespace reprog;
namespace fs = std::filesystem;

namespace {

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

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_text(e.path());
    return out;
}

// synth -> train-foundation -> build-index on the small config, shared by the tests below.
struct Staged {
    fs::path root;
    ExperimentConfig cfg;
    fs::path data, ckpt, idx;
};

const Staged& staged() {
    static const Staged s = [] {
        Staged st;
        st.root = testing_support::temp_dir("pipeline");
        st.cfg = testing_support::small_config();
        st.data = st.root / "data";
        st.ckpt = st.root / "foundation.ckpt";
        st.idx = st.root / "idx";
        cmd_synth(st.cfg, st.data);
        cmd_train_foundation(st.data, st.cfg, st.ckpt);
        cmd_build_index(st.ckpt, st.data, st.cfg, st.idx);
        return st;
    }();
    return s;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(REPROG_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Pipeline, SynthWritesEveryStreamDeterministically) {
    const auto cfg = ExperimentConfig::defaults();
    const auto a = testing_support::temp_dir("synth_a"), b = testing_support::temp_dir("synth_b");
    cmd_synth(cfg, a);
    cmd_synth(cfg, b);
    std::size_t able = 0, amputee = 0;
    for (const auto& e : fs::directory_iterator(a / "able")) able += e.path().extension() == ".csv";
    for (const auto& e : fs::directory_iterator(a / "amputee")) amputee += e.path().extension() == ".csv";
    EXPECT_EQ(able, 30u);
    EXPECT_EQ(amputee, 3u);
    EXPECT_EQ(tree_bytes(a), tree_bytes(b));
}

TEST(Pipeline, SynthIntoUnwritablePathIsIoError) {
    const auto dir = testing_support::temp_dir("synth_blocked");
    write_text(dir / "file", "x");
    EXPECT_EQ(kind_of([&] { cmd_synth(testing_support::small_config(), dir / "file"); }), ErrorKind::io);
}

TEST(Pipeline, DatasetRoundTripsThroughFiles) {
    const auto& s = staged();
    const Dataset loaded = load_dataset(s.data);
    const Dataset fresh = synthesize(s.cfg);
    ASSERT_EQ(loaded.able.size(), fresh.able.size());
    for (std::size_t i = 0; i < fresh.able.size(); ++i) EXPECT_EQ(loaded.able[i], fresh.able[i]);
    for (std::size_t i = 0; i < fresh.amputee.size(); ++i) EXPECT_EQ(loaded.amputee[i], fresh.amputee[i]);
}

TEST(Pipeline, CheckpointReproducesTrainedModel) {
    const auto& s = staged();
    const auto loaded = foundation_from_checkpoint(parse_artifact(read_text(s.ckpt), "reprog-checkpoint", "ckpt"));
    const FoundationFit fit = fit_foundation(load_dataset(s.data), s.cfg);
    EXPECT_EQ(loaded.model.checksum(), fit.model.checksum());
    EXPECT_EQ(loaded.norm.mean, fit.norm.mean);
    const auto cases = prepare_cases(fit.model, fit.norm, load_dataset(s.data), s.cfg);
    for (const auto& sample : cases[0].samples) EXPECT_EQ(loaded.model.predict(sample.window), fit.model.predict(sample.window));
}

TEST(Pipeline, MissingDataIsIoError) {
    const auto out = testing_support::temp_dir("nodata");
    EXPECT_EQ(kind_of([&] { cmd_train_foundation(out / "absent", testing_support::small_config(), out / "c"); }),
              ErrorKind::io);
}

TEST(Pipeline, TaskMismatchIsConfigError) {
    const auto& s = staged();
    ExperimentConfig other = s.cfg;
    other.synth.tasks[1].name = "stairs";
    std::string msg;
    EXPECT_EQ(kind_of([&] { cmd_train_foundation(s.data, other, s.root / "x.ckpt"); }, &msg), ErrorKind::config);
    EXPECT_NE(msg.find("stairs"), std::string::npos);
}

TEST(Pipeline, MapTemplatesBoundarySkips) {
    const auto& s = staged();
    ExperimentConfig cfg = s.cfg;
    cfg.templates.m = 1;
    // pick a stage ratio whose floor gives exactly five training samples per amputee
    const auto cases = prepare_cases(
        foundation_from_checkpoint(parse_artifact(read_text(s.ckpt), "reprog-checkpoint", "c")).model,
        foundation_from_checkpoint(parse_artifact(read_text(s.ckpt), "reprog-checkpoint", "c")).norm,
        load_dataset(s.data), cfg);
    std::size_t shortest = cases[0].samples.size();
    for (const auto& c : cases) shortest = std::min(shortest, c.samples.size());
    cfg.stage_ratio = 5.5 / static_cast<double>(shortest);
    for (const auto& c : cases) ASSERT_EQ(train_count(c.samples.size(), cfg.stage_ratio), 5u) << c.subject.id;
    const auto summary = cmd_map_templates(s.ckpt, s.idx, s.data, cfg, s.root / "tpl_m1");
    for (const auto& [id, skipped] : summary.skipped) {
        EXPECT_EQ(skipped, 2u) << id;
        EXPECT_EQ(summary.templates.at(id), 3u) << id;
    }
}

TEST(Pipeline, TemplatesAndRefurbishStages) {
    const auto& s = staged();
    const auto tpl = s.root / "tpl", ref = s.root / "refurb";
    const auto summary = cmd_map_templates(s.ckpt, s.idx, s.data, s.cfg, tpl);
    EXPECT_EQ(summary.templates.size(), 3u);
    cmd_train_refurbish(s.ckpt, tpl, s.data, s.cfg, ref);
    for (const auto& amp : s.cfg.synth.amputees) {
        std::string foundation_sum;
        refurbish_from_checkpoint(
            parse_artifact(read_text(ref / (amp.subject.id + ".ckpt")), "reprog-checkpoint", "r"), &foundation_sum);
        EXPECT_EQ(foundation_sum,
                  foundation_from_checkpoint(parse_artifact(read_text(s.ckpt), "reprog-checkpoint", "c")).model.checksum());
    }
}

TEST(Pipeline, StageChecksumMismatchIsProvenanceError) {
    const auto& s = staged();
    ExperimentConfig reseeded = s.cfg;
    reseeded.foundation_train.epochs = 1;
    const auto other = s.root / "other.ckpt";
    cmd_train_foundation(s.data, reseeded, other);
    std::string msg;
    EXPECT_EQ(kind_of([&] { cmd_eval(other, s.idx, s.data, s.cfg, {Strategy::cross}, {0.2}, s.root / "rep"); }, &msg),
              ErrorKind::provenance);
    EXPECT_EQ(kind_of([&] { cmd_map_templates(other, s.idx, s.data, s.cfg, s.root / "t2"); }), ErrorKind::provenance);
    const auto tpl = s.root / "tpl_prov";
    cmd_map_templates(s.ckpt, s.idx, s.data, s.cfg, tpl);
    EXPECT_EQ(kind_of([&] { cmd_train_refurbish(other, tpl, s.data, s.cfg, s.root / "r2"); }), ErrorKind::provenance);
}

TEST(Pipeline, EvalThenReportReproduceFiles) {
    const auto& s = staged();
    ExperimentConfig cfg = s.cfg;
    cfg.direct_train.epochs = 2;
    cfg.refurbish_train.epochs = 2;
    const std::vector<Strategy> all{Strategy::cross, Strategy::direct, Strategy::refurbished};
    const auto rep = cmd_eval(s.ckpt, s.idx, s.data, cfg, all, {0.3, 0.6}, s.root / "eval");
    EXPECT_EQ(rep.results.size(), 5u);
    EXPECT_EQ(rep.provenance.count("foundation_checksum"), 1u);
    cmd_report(s.root / "eval" / "results.csv", s.root / "report");
    EXPECT_EQ(read_text(s.root / "report" / "results.csv"), read_text(s.root / "eval" / "results.csv"));
}

TEST(Cli, ExitCodesByErrorClass) {
    const auto& s = staged();
    const auto dir = testing_support::temp_dir("cli");
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli("synth"), 2);  // --out missing
    EXPECT_EQ(run_cli("bogus"), 2);

    auto j = nlohmann::json::parse(s.cfg.to_json());
    j["template"]["n"] = 0;
    write_text(dir / "bad.json", j.dump());
    EXPECT_EQ(run_cli("synth --config " + (dir / "bad.json").string() + " --out " + (dir / "d").string()), 3);
    EXPECT_EQ(run_cli("train-foundation --data " + (dir / "absent").string() + " --out " + (dir / "c").string()), 4);

    write_text(dir / "small.json", s.cfg.to_json());
    ExperimentConfig quick = s.cfg;
    quick.foundation_train.epochs = 1;
    write_text(dir / "quick.json", quick.to_json());
    ASSERT_EQ(run_cli("train-foundation --config " + (dir / "quick.json").string() + " --data " + s.data.string() +
                      " --out " + (dir / "quick.ckpt").string()),
              0);
    EXPECT_EQ(run_cli("eval --config " + (dir / "small.json").string() + " --checkpoint " +
                      (dir / "quick.ckpt").string() + " --index " + s.idx.string() + " --data " + s.data.string() +
                      " --strategy cross --ratios 0.2 --out " + (dir / "rep").string()),
              6);

    std::string csv = read_text(s.data / "amputee" / "TT01_walk_slow.csv");
    csv.replace(csv.rfind('\n', csv.size() - 2) + 1, 1, "x");
    fs::copy(s.data, dir / "broken", fs::copy_options::recursive);
    write_text(dir / "broken" / "amputee" / "TT01_walk_slow.csv", csv);
    EXPECT_EQ(run_cli("build-index --config " + (dir / "small.json").string() + " --checkpoint " + s.ckpt.string() +
                      " --data " + (dir / "broken").string() + " --out " + (dir / "i").string()),
              5);
}
