#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cbaudit/bias.hpp"
#include "cbaudit/calibrate.hpp"
#include "cbaudit/clc.hpp"
#include "cbaudit/corpus.hpp"
#include "cbaudit/report.hpp"
#include "cbaudit/taboo.hpp"

namespace cbaudit {

struct CommunitySpec {
    std::string tag;
    std::vector<std::filesystem::path> corpus;
    std::set<YearMonth> train_months;
    std::set<YearMonth> val_months;
};

struct DatasetSpec {
    std::string key;  // "<name> <label>" unless given
    std::string name;
    std::string label;
    std::filesystem::path path;
    DatasetSchema schema;
};

struct ClassifierSpec {
    std::string tag;
    std::string dataset;                        // DatasetSpec key
    std::optional<std::filesystem::path> scores;  // id,classifier_tag,score
    bool fetch = false;                         // query the toxicity API instead
};

struct ToxicitySpec {
    ToxicityClientConfig client;
    std::string api_key_env = "TOXICITY_API_KEY";
};

/// Everything a run needs. Relative paths in the config file resolve against
/// the directory holding it.
struct RunConfig {
    std::filesystem::path config_path;
    std::filesystem::path output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> tau;  // nullopt: calibrate
    double target_coverage = 0.52;
    double grid_step = 0.05;
    std::vector<double> grid;  // explicit thresholds; overrides grid_step when set
    double decision_threshold = 0.5;
    bool restrict_to_declared = true;
    int bootstrap_replicates = 10000;
    unsigned threads = 0;
    std::optional<std::string> timestamp;  // fixed report clock
    FeatureConfig features;
    Hyperparameters training;
    std::vector<CommunitySpec> communities;
    std::vector<std::filesystem::path> alignment_scores;
    std::vector<DatasetSpec> datasets;
    std::vector<ClassifierSpec> classifiers;
    ToxicitySpec toxicity;

    std::uint64_t master_seed() const;  // throws FatalInputError when unset
    std::vector<double> threshold_grid() const;
    void validate() const;
};

RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir);

// Output layout under RunConfig::output_dir.
namespace outputs {
std::filesystem::path model(const RunConfig& cfg, std::string_view tag);
inline constexpr std::string_view kTau = "tau.json";
inline constexpr std::string_view kCcdf = "ccdf.csv";
inline constexpr std::string_view kValidationTsv = "validation_matrix.tsv";
inline constexpr std::string_view kValidationMd = "validation_matrix.md";
inline constexpr std::string_view kValidationJson = "validation_matrix.json";
inline constexpr std::string_view kCorrelationsCsv = "correlations.csv";
inline constexpr std::string_view kCorrelationsJson = "correlations.json";
inline constexpr std::string_view kProportionTsv = "proportion_matrix.tsv";
inline constexpr std::string_view kProportionMd = "proportion_matrix.md";
inline constexpr std::string_view kProportionJson = "proportion_matrix.json";
inline constexpr std::string_view kResetFlagsCsv = "reset_flags.csv";
inline constexpr std::string_view kResetFlagsJson = "reset_flags.json";
inline constexpr std::string_view kReportMd = "report.md";
}  // namespace outputs

struct CommunitySplit {
    std::string tag;
    ParseStats parse;
    MonthSplit split;
};

/// Loads each community's corpus and applies its month split.
std::vector<CommunitySplit> load_splits(const RunConfig& cfg, std::ostream& log);

struct TrainedCommunity {
    std::string tag;
    std::size_t train_positives = 0;
    std::size_t train_total = 0;  // positives + negatives
    std::size_t validation = 0;
    std::string model_sha256;
};

std::vector<TrainedCommunity> cmd_train(const RunConfig& cfg, std::ostream& log);

/// Models found in the output directory plus any imported alignment scores.
AlignmentSource load_alignment_source(const RunConfig& cfg);

struct CalibrationOutcome {
    double tau = 0.0;
    bool calibrated = false;
    std::vector<CcdfCurve> curves;
};

/// Fixed tau: echoed and written. Otherwise CCDFs of every community's own-CLC
/// validation scores are written and tau is selected from them.
CalibrationOutcome cmd_calibrate(const RunConfig& cfg, std::ostream& log);

/// Tau from the config (or --tau), else from a previous calibrate run.
double resolve_tau(const RunConfig& cfg);

ValidationMatrix cmd_validate(const RunConfig& cfg, std::ostream& log);

std::vector<CorrelationResult> cmd_audit_classifier(const RunConfig& cfg, std::ostream& log);

struct DatasetAudit {
    ProportionMatrix matrix;
    std::vector<ResetFlag> reset_flags;
};

DatasetAudit cmd_audit_dataset(const RunConfig& cfg, std::ostream& log);

/// Reads the artefacts of earlier stages that exist and writes report.md.
BuiltReport cmd_report(const RunConfig& cfg, const ReportClock& clock, std::ostream& log);

/// Clock for reports: the fixed timestamp when configured, else the system clock.
ReportClock report_clock(const RunConfig& cfg);

}  // namespace cbaudit
