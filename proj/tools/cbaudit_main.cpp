// cbaudit: community language classifier training and bias auditing.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "cbaudit/pipeline.hpp"

namespace {

struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<double> tau;
    std::optional<std::string> out;
    std::optional<std::string> timestamp;
};

cbaudit::RunConfig load(const GlobalOptions& g) {
    auto cfg = cbaudit::load_run_config(g.config);
    if (g.seed) cfg.seed = g.seed;
    if (g.tau) cfg.tau = g.tau;
    if (g.out) cfg.output_dir = *g.out;
    if (g.timestamp) cfg.timestamp = g.timestamp;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Train community language classifiers and audit taboo classifiers and datasets for community bias"};
    app.set_version_flag("--version", std::string(cbaudit::kToolVersion));
    app.require_subcommand(1);

    GlobalOptions g;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", g.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", g.seed, "Override the master seed");
        sub->add_option("--tau", g.tau, "Override the high-alignment threshold")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--out", g.out, "Override the output directory");
    };

    auto* train = app.add_subcommand("train", "Split corpora by month, build 1:1 training sets and train one CLC per community");
    auto* calibrate = app.add_subcommand("calibrate", "Compute validation CCDFs and select tau (unless tau is fixed)");
    auto* validate = app.add_subcommand("validate", "Cross-community validation matrix");
    auto* audit_clf = app.add_subcommand("audit-classifier", "Correlate taboo classifier confidence with alignment");
    auto* audit_ds = app.add_subcommand("audit-dataset", "High-alignment proportions over taboo datasets, plus reset flags");
    auto* report = app.add_subcommand("report", "Consolidated Markdown report of every completed stage");
    for (auto* sub : {train, calibrate, validate, audit_clf, audit_ds, report}) add_common(sub);
    report->add_option("--timestamp", g.timestamp, "Fixed report time (unix seconds or YYYY-MM-DDTHH:MM:SSZ)");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = load(g);
        auto& log = std::cout;
        if (train->parsed()) {
            for (const auto& t : cbaudit::cmd_train(cfg, log))
                fmt::print(log, "model {} sha256 {}\n", cbaudit::outputs::model(cfg, t.tag).string(), t.model_sha256);
        } else if (calibrate->parsed()) {
            const auto out = cbaudit::cmd_calibrate(cfg, log);
            fmt::print(log, "tau={}\n", out.tau);
        } else if (validate->parsed()) {
            cbaudit::cmd_validate(cfg, log);
        } else if (audit_clf->parsed()) {
            cbaudit::cmd_audit_classifier(cfg, log);
        } else if (audit_ds->parsed()) {
            cbaudit::cmd_audit_dataset(cfg, log);
        } else if (report->parsed()) {
            cbaudit::cmd_report(cfg, cbaudit::report_clock(cfg), log);
        }
    } catch (const std::exception& e) {
        fmt::print(std::cerr, "cbaudit: {}\n", e.what());
        return EXIT_FAILURE;
    }
    return EXIT_SUCCESS;
}
