// Command-line driver: one subcommand per pipeline stage, communicating only through files.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include "reprog/config.hpp"
#include "reprog/error.hpp"
#include "reprog/pipeline.hpp"

namespace {

using namespace reprog;

enum ExitCode : int {
    exit_ok = 0,
    exit_internal = 1,
    exit_usage = 2,
    exit_validation = 3,
    exit_io = 4,
    exit_input = 5,
    exit_provenance = 6,
    exit_numeric = 7,
};

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::usage: return exit_usage;
        case ErrorKind::io: return exit_io;
        case ErrorKind::format:
        case ErrorKind::data: return exit_input;
        case ErrorKind::provenance: return exit_provenance;
        case ErrorKind::numeric: return exit_numeric;
        default: return exit_validation;
    }
}

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;

    ExperimentConfig load() const {
        ExperimentConfig cfg = config.empty() ? ExperimentConfig::defaults() : ExperimentConfig::load(config);
        if (seed) cfg.set_seed(*seed);
        cfg.validate();
        return cfg;
    }
};

void add_common(CLI::App* app, Common& c, const char* out_help) {
    app->add_option("--config", c.config, "experiment config (JSON); defaults when omitted");
    app->add_option("--seed", c.seed, "override the config seed");
    app->add_option("--out", c.out, out_help)->required();
}

void print_ratio_table(const SweepReport& report) {
    std::map<double, std::map<std::string, std::pair<double, double>>> rows;
    for (const auto& r : report.results) {
        rows[r.train_ratio][to_string(r.strategy)] = {r.mean, r.std};
    }
    for (const auto& [ratio, cells] : rows) {
        std::printf("ratio %.3g:", ratio);
        for (const auto& [name, ms] : cells) std::printf("  %s %.4f +/- %.4f", name.c_str(), ms.first, ms.second);
        std::printf("\n");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reprogrammed gait prediction pipeline"};
    app.require_subcommand(1);

    Common synth_c, found_c, index_c, map_c, refurb_c, eval_c;
    std::string data_dir, checkpoint, index_dir, templates_dir, results_csv;
    std::vector<std::string> strategies{"cross", "direct", "refurbished"};
    std::vector<double> ratios;

    auto* synth = app.add_subcommand("synth", "generate the synthetic able-bodied and amputee dataset");
    add_common(synth, synth_c, "dataset directory");

    auto* found = app.add_subcommand("train-foundation", "train and freeze the multi-task foundation model");
    add_common(found, found_c, "checkpoint file");
    found->add_option("--data", data_dir, "dataset directory")->required();

    auto* index = app.add_subcommand("build-index", "build able-bodied indexes for every amputee");
    add_common(index, index_c, "index directory");
    index->add_option("--checkpoint", checkpoint, "foundation checkpoint")->required();
    index->add_option("--data", data_dir, "dataset directory")->required();

    auto* map = app.add_subcommand("map-templates", "compute correction templates");
    add_common(map, map_c, "templates directory");
    map->add_option("--checkpoint", checkpoint, "foundation checkpoint")->required();
    map->add_option("--index", index_dir, "index directory")->required();
    map->add_option("--data", data_dir, "dataset directory")->required();

    auto* refurb = app.add_subcommand("train-refurbish", "train refurbish modules on stored templates");
    add_common(refurb, refurb_c, "refurbish checkpoint directory");
    refurb->add_option("--checkpoint", checkpoint, "foundation checkpoint")->required();
    refurb->add_option("--templates", templates_dir, "templates directory")->required();
    refurb->add_option("--data", data_dir, "dataset directory")->required();

    auto* eval = app.add_subcommand("eval", "run the strategy x ratio sweep and write the report");
    add_common(eval, eval_c, "report directory");
    eval->add_option("--checkpoint", checkpoint, "foundation checkpoint")->required();
    eval->add_option("--index", index_dir, "index directory")->required();
    eval->add_option("--data", data_dir, "dataset directory")->required();
    eval->add_option("--strategy", strategies, "cross|direct|refurbished (repeatable)")->delimiter(',');
    eval->add_option("--ratios", ratios, "train ratios; config list when omitted")->delimiter(',');

    Common report_c;
    auto* report = app.add_subcommand("report", "re-emit summary and chart from a results CSV");
    report->add_option("--results", results_csv, "results.csv")->required();
    report->add_option("--out", report_c.out, "report directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }

    try {
        if (synth->parsed()) {
            cmd_synth(synth_c.load(), synth_c.out);
        } else if (found->parsed()) {
            const auto s = cmd_train_foundation(data_dir, found_c.load(), found_c.out);
            for (const auto& [task, r2] : s.heldout_r2) std::printf("task %d held-out R2 %.4f\n", task, r2);
            std::printf("model checksum %s\n", s.model_checksum.c_str());
        } else if (index->parsed()) {
            cmd_build_index(checkpoint, data_dir, index_c.load(), index_c.out);
        } else if (map->parsed()) {
            const auto s = cmd_map_templates(checkpoint, index_dir, data_dir, map_c.load(), map_c.out);
            for (const auto& [id, count] : s.templates)
                std::printf("%s: %zu templates, %zu skipped\n", id.c_str(), count, s.skipped.at(id));
        } else if (refurb->parsed()) {
            cmd_train_refurbish(checkpoint, templates_dir, data_dir, refurb_c.load(), refurb_c.out);
        } else if (eval->parsed()) {
            const ExperimentConfig cfg = eval_c.load();
            std::vector<Strategy> parsed;
            for (const auto& s : strategies) parsed.push_back(parse_strategy(s));
            const auto r = cmd_eval(checkpoint, index_dir, data_dir, cfg, parsed, ratios.empty() ? cfg.ratios : ratios,
                                    eval_c.out);
            print_ratio_table(r);
        } else if (report->parsed()) {
            print_ratio_table(cmd_report(results_csv, report_c.out));
        }
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_internal;
    }
    return exit_ok;
}
