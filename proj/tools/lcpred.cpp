#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "lcpred/pipeline.hpp"

using namespace lcpred;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string input;
    std::string output;
    std::string classifier;
    bool save_models = false;
};

void add_common(CLI::App* cmd, Overrides& o, bool needs_input) {
    cmd->add_option("-c,--config", o.config, "config file (json)")->required();
    cmd->add_option("--seed", o.seed, "override the config seed");
    if (needs_input) cmd->add_option("-i,--input", o.input, "override input_dir");
    cmd->add_option("-o,--out", o.output, "override output_dir");
}

PipelineConfig resolve(const Overrides& o) {
    auto c = load_config(o.config);
    if (o.seed) {
        c.seed = *o.seed;
        c.seed_set = true;
    }
    if (!o.input.empty()) c.input_dir = o.input;
    if (!o.output.empty()) c.output_dir = o.output;
    if (!o.classifier.empty()) c.classifier.kind = parse_classifier(o.classifier);
    if (o.save_models) c.save_models = true;
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lane-change prediction pipeline"};
    app.require_subcommand(1);

    Overrides o;
    std::string run_dir;

    auto* synth = app.add_subcommand("synth", "write a synthetic recording corpus to input_dir");
    add_common(synth, o, true);
    auto* extract = app.add_subcommand("extract", "extract lane-change decision samples");
    add_common(extract, o, true);
    auto* cluster = app.add_subcommand("cluster", "cluster lane changes into driving styles");
    add_common(cluster, o, false);
    auto* build = app.add_subcommand("build-datasets", "export Dataset-1/2/3 tables");
    add_common(build, o, false);
    auto* train = app.add_subcommand("train", "train one classifier on one dataset variant");
    add_common(train, o, false);
    train->add_option("--classifier", o.classifier, "rf or cnn_lstm");
    auto* sweep = app.add_subcommand("sweep", "evaluate baselines and the fuzzy grid");
    add_common(sweep, o, false);
    sweep->add_option("--classifier", o.classifier, "rf or cnn_lstm");
    sweep->add_flag("--save-models", o.save_models, "also write fitted models per run");
    auto* report = app.add_subcommand("report", "consolidate a sweep directory into summary.json/csv");
    report->add_option("run_dir", run_dir, "sweep output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (report->parsed()) {
            cmd_report(run_dir, std::cout);
            return 0;
        }
        const auto c = resolve(o);
        if (synth->parsed()) cmd_synth(c, std::cout);
        else if (extract->parsed()) cmd_extract(c, std::cout);
        else if (cluster->parsed()) cmd_cluster(c, std::cout);
        else if (build->parsed()) cmd_build_datasets(c, std::cout);
        else if (train->parsed()) cmd_train(c, std::cout);
        else if (sweep->parsed()) cmd_sweep(c, std::cout);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
