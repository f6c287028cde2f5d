#include "cbaudit/pipeline.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "cbaudit/serialization.hpp"

namespace cbaudit {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

namespace {

std::optional<NgramRange> read_range(const json& j, const char* key, std::optional<NgramRange> fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    if (!v.is_array() || v.size() != 2) throw FatalInputError(fmt::format("config: {} must be [low, high] or null", key));
    return NgramRange{v.at(0).get<int>(), v.at(1).get<int>()};
}

std::set<YearMonth> read_months(const json& j, const char* key, const std::string& tag) {
    std::set<YearMonth> out;
    if (!j.contains(key)) throw FatalInputError(fmt::format("config: community '{}' lacks {}", tag, key));
    for (const auto& item : j.at(key)) {
        auto part = parse_months(item.get<std::string>());
        out.insert(part.begin(), part.end());
    }
    return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

std::uint64_t RunConfig::master_seed() const {
    if (!seed) throw FatalInputError("the master seed must be set explicitly (config \"seed\" or --seed)");
    return *seed;
}

void RunConfig::validate() const {
    features.validate();
    std::set<std::string> tags;
    for (const auto& c : communities) {
        if (c.tag.empty()) throw FatalInputError("config: community tag is empty");
        if (!tags.insert(c.tag).second) throw FatalInputError("config: duplicate community tag '" + c.tag + "'");
    }
    if (tau && !(*tau > 0.0 && *tau < 1.0)) throw FatalInputError("config: tau must be in (0,1)");
    if (!(target_coverage > 0.0 && target_coverage < 1.0))
        throw FatalInputError("config: target_coverage must be in (0,1)");
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (!(grid[i] >= 0.0 && grid[i] <= 1.0) || (i && grid[i] <= grid[i - 1]))
            throw FatalInputError("config: grid must be strictly ascending within [0,1]");
    if (bootstrap_replicates < 1) throw FatalInputError("config: bootstrap_replicates must be >= 1");
    std::set<std::string> keys;
    for (const auto& d : datasets)
        if (!keys.insert(d.key).second) throw FatalInputError("config: duplicate dataset key '" + d.key + "'");
    for (const auto& c : classifiers) {
        if (!keys.count(c.dataset))
            throw FatalInputError(fmt::format("config: classifier '{}' refers to unknown dataset '{}'", c.tag, c.dataset));
        if (!c.scores && !c.fetch)
            throw FatalInputError(fmt::format("config: classifier '{}' needs \"scores\" or \"fetch\": true", c.tag));
    }
}

std::vector<double> RunConfig::threshold_grid() const { return grid.empty() ? make_grid(grid_step) : grid; }

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw FatalInputError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    try {
        cfg.output_dir = resolve(base_dir, j.value("output_dir", std::string("out")));
        if (j.contains("seed") && !j.at("seed").is_null()) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("tau") && j.at("tau").is_number()) cfg.tau = j.at("tau").get<double>();
        cfg.target_coverage = j.value("target_coverage", cfg.target_coverage);
        cfg.grid_step = j.value("grid_step", cfg.grid_step);
        cfg.grid = j.value("grid", cfg.grid);
        cfg.decision_threshold = j.value("decision_threshold", cfg.decision_threshold);
        cfg.restrict_to_declared = j.value("restrict_to_declared", cfg.restrict_to_declared);
        cfg.bootstrap_replicates = j.value("bootstrap_replicates", cfg.bootstrap_replicates);
        cfg.threads = j.value("threads", cfg.threads);
        if (j.contains("timestamp")) cfg.timestamp = j.at("timestamp").is_string()
                                                          ? j.at("timestamp").get<std::string>()
                                                          : std::to_string(j.at("timestamp").get<std::int64_t>());

        if (j.contains("features")) {
            const auto& f = j.at("features");
            cfg.features.word_ngrams = read_range(f, "word_ngrams", cfg.features.word_ngrams);
            cfg.features.char_ngrams = read_range(f, "char_ngrams", cfg.features.char_ngrams);
            if (f.contains("hash_bits")) cfg.features.hash_dim = 1u << f.at("hash_bits").get<unsigned>();
            cfg.features.hash_seed = f.value("hash_seed", cfg.features.hash_seed);
        }
        if (j.contains("training")) {
            const auto& t = j.at("training");
            cfg.training.epochs = t.value("epochs", cfg.training.epochs);
            cfg.training.learning_rate = t.value("learning_rate", cfg.training.learning_rate);
            cfg.training.l2 = t.value("l2", cfg.training.l2);
        }
        for (const auto& c : j.value("communities", json::array())) {
            CommunitySpec spec;
            spec.tag = c.at("tag").get<std::string>();
            // Communities scored only through alignment_scores need no corpus.
            const auto corpus = c.value("corpus", json::array());
            if (corpus.is_string())
                spec.corpus.push_back(resolve(base_dir, corpus.get<std::string>()));
            else
                for (const auto& p : corpus) spec.corpus.push_back(resolve(base_dir, p.get<std::string>()));
            if (!spec.corpus.empty()) {
                spec.train_months = read_months(c, "train_months", spec.tag);
                spec.val_months = read_months(c, "val_months", spec.tag);
            }
            cfg.communities.push_back(std::move(spec));
        }
        for (const auto& p : j.value("alignment_scores", json::array()))
            cfg.alignment_scores.push_back(resolve(base_dir, p.get<std::string>()));
        for (const auto& d : j.value("datasets", json::array())) {
            DatasetSpec spec;
            spec.name = d.at("name").get<std::string>();
            spec.label = d.at("label").get<std::string>();
            spec.key = d.value("key", spec.name + " " + spec.label);
            spec.path = resolve(base_dir, d.at("path").get<std::string>());
            spec.schema.text_column = d.at("text_column").get<std::string>();
            spec.schema.label_column = d.at("label_column").get<std::string>();
            if (d.contains("id_column")) spec.schema.id_column = d.at("id_column").get<std::string>();
            cfg.datasets.push_back(std::move(spec));
        }
        for (const auto& c : j.value("classifiers", json::array())) {
            ClassifierSpec spec;
            spec.tag = c.at("tag").get<std::string>();
            spec.dataset = c.at("dataset").get<std::string>();
            if (c.contains("scores")) spec.scores = resolve(base_dir, c.at("scores").get<std::string>());
            spec.fetch = c.value("fetch", false);
            cfg.classifiers.push_back(std::move(spec));
        }
        if (j.contains("toxicity")) {
            const auto& t = j.at("toxicity");
            auto& cl = cfg.toxicity.client;
            cl.endpoint = t.value("endpoint", cl.endpoint);
            cl.api_key = t.value("api_key", std::string());
            cl.requests_per_second = t.value("requests_per_second", cl.requests_per_second);
            cl.max_retries = t.value("max_retries", cl.max_retries);
            cl.timeout = std::chrono::milliseconds(t.value("timeout_ms", cl.timeout.count()));
            cl.initial_backoff = std::chrono::milliseconds(t.value("initial_backoff_ms", cl.initial_backoff.count()));
            cfg.toxicity.api_key_env = t.value("api_key_env", cfg.toxicity.api_key_env);
        }
    } catch (const json::exception& e) {
        throw FatalInputError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FatalInputError(std::string("config: ") + e.what());
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& path) {
    RunConfig cfg = parse_run_config(read_file(path), path.parent_path());
    cfg.config_path = path;
    return cfg;
}

fs::path outputs::model(const RunConfig& cfg, std::string_view tag) {
    return cfg.output_dir / "models" / (std::string(tag) + ".clc");
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t derived_seed(std::uint64_t master, std::string_view purpose, std::string_view tag) {
    return master ^ mix64(stable_hash(std::string(purpose) + "/" + std::string(tag), 0));
}

double read_tau_file(const RunConfig& cfg) {
    const auto path = cfg.output_dir / outputs::kTau;
    if (!fs::exists(path)) throw FatalInputError("tau is not configured and no calibration result exists; run calibrate");
    return json::parse(read_file(path)).at("tau").get<double>();
}

template <class T>
void write_json(const fs::path& path, const T& value) {
    write_file(path, json(value).dump(2) + "\n");
}

std::string display_name(const RunConfig& cfg, const fs::path& p) {
    const auto base = cfg.config_path.empty() ? fs::current_path() : cfg.config_path.parent_path();
    auto rel = p.lexically_relative(base.empty() ? fs::path(".") : base);
    return rel.empty() ? p.string() : rel.generic_string();
}

std::vector<TabooDataset> load_datasets(const RunConfig& cfg, std::ostream& log) {
    std::vector<TabooDataset> out;
    for (const auto& d : cfg.datasets) {
        auto ds = load_taboo_dataset(d.path, d.name, d.schema, d.label);
        fmt::print(log, "dataset {}: kept {} of {} rows labelled '{}'\n", d.key, ds.instances.size(), ds.total_rows,
                   d.label);
        out.push_back(std::move(ds));
    }
    return out;
}

}  // namespace

std::vector<CommunitySplit> load_splits(const RunConfig& cfg, std::ostream& log) {
    for (const auto& c : cfg.communities)
        if (c.corpus.empty()) throw FatalInputError(fmt::format("config: community '{}' has no corpus", c.tag));
    std::vector<std::future<CommunitySplit>> pending;
    for (const auto& c : cfg.communities) {
        pending.push_back(std::async(std::launch::async, [&c] {
            auto parsed = load_corpus_files(c.corpus, c.tag);
            return CommunitySplit{c.tag, parsed.stats, split_by_month(parsed.corpus, c.train_months, c.val_months)};
        }));
    }
    std::vector<CommunitySplit> out;
    for (auto& f : pending) out.push_back(f.get());
    for (const auto& s : out) {
        if (s.parse.malformed) fmt::print(log, "warning: {}: skipped {} malformed records\n", s.tag, s.parse.malformed);
        if (s.split.dropped_unknown)
            fmt::print(log, "warning: {}: dropped {} records with unknown timestamp\n", s.tag, s.split.dropped_unknown);
    }
    return out;
}

std::vector<TrainedCommunity> cmd_train(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const std::uint64_t master = cfg.master_seed();
    if (cfg.communities.size() < 2) throw FatalInputError("training needs at least two communities");
    const auto splits = load_splits(cfg, log);

    std::vector<std::future<TrainedCommunity>> pending;
    for (std::size_t i = 0; i < splits.size(); ++i) {
        pending.push_back(std::async(std::launch::async, [&, i] {
            std::vector<CommunityCorpus> others;
            for (std::size_t k = 0; k < splits.size(); ++k)
                if (k != i) others.push_back(splits[k].split.train);
            const auto& tag = splits[i].tag;
            const auto ts = build_training_set(splits[i].split.train, others, derived_seed(master, "negatives", tag));
            const auto model = train_clc(ts, cfg.features, cfg.training, derived_seed(master, "train", tag));
            const std::string blob = save_model(model);
            write_file(outputs::model(cfg, tag), blob);
            return TrainedCommunity{tag, ts.positives.size(), ts.positives.size() + ts.negatives.size(),
                                    splits[i].split.val.size(), sha256_hex(blob)};
        }));
    }
    std::vector<TrainedCommunity> out;
    for (auto& f : pending) out.push_back(f.get());

    fmt::print(log, "{:<12} {:>12} {:>12} {:>12}\n", "community", "train(pos)", "train(all)", "validation");
    for (const auto& t : out)
        fmt::print(log, "{:<12} {:>12} {:>12} {:>12}\n", t.tag, t.train_positives, t.train_total, t.validation);
    return out;
}

AlignmentSource load_alignment_source(const RunConfig& cfg) {
    AlignmentSource source;
    for (const auto& p : cfg.alignment_scores) source.add_scores(import_score_file(p).table);
    for (const auto& c : cfg.communities) {
        const auto path = outputs::model(cfg, c.tag);
        if (fs::exists(path)) source.add_model(load_model_file(path));
    }
    for (const auto& c : cfg.communities)
        if (!source.has_community(c.tag))
            throw FatalInputError(fmt::format("no model ({}) or alignment scores for community '{}'",
                                              outputs::model(cfg, c.tag).string(), c.tag));
    return source;
}

double resolve_tau(const RunConfig& cfg) { return cfg.tau ? *cfg.tau : read_tau_file(cfg); }

CalibrationOutcome cmd_calibrate(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    CalibrationOutcome out;
    if (cfg.tau) {
        out.tau = *cfg.tau;
        fmt::print(log, "tau fixed at {}; calibration skipped\n", out.tau);
        write_file(cfg.output_dir / outputs::kTau, json{{"tau", out.tau}, {"mode", "fixed"}}.dump(2) + "\n");
        return out;
    }
    const auto source = load_alignment_source(cfg);
    const auto splits = load_splits(cfg, log);
    const auto grid = cfg.threshold_grid();
    for (const auto& s : splits) out.curves.push_back(compute_ccdf(s.tag, self_scores(source, s.split.val), grid));
    write_file(cfg.output_dir / outputs::kCcdf, emit_ccdf_csv(out.curves));
    out.tau = select_threshold(out.curves, cfg.target_coverage);  // throws CoverageUnattainable
    out.calibrated = true;
    write_file(cfg.output_dir / outputs::kTau,
               json{{"tau", out.tau}, {"mode", "calibrated"}, {"target_coverage", cfg.target_coverage}}.dump(2) +
                   "\n");
    fmt::print(log, "selected tau {} (coverage floor {:.0f}%)\n", out.tau, 100 * cfg.target_coverage);
    for (const auto& c : out.curves) fmt::print(log, "  {}: {:.1f}% highly aligned\n", c.community_id, 100 * c.at(out.tau));
    return out;
}

ValidationMatrix cmd_validate(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const double tau = resolve_tau(cfg);
    const auto source = load_alignment_source(cfg);
    const auto splits = load_splits(cfg, log);
    std::vector<std::string> tags;
    std::vector<CommunityCorpus> vals;
    for (const auto& s : splits) {
        tags.push_back(s.tag);
        vals.push_back(s.split.val);
    }
    auto m = validation_matrix(source, tags, vals, tau);
    write_file(cfg.output_dir / outputs::kValidationTsv, render_matrix(m, MatrixFormat::tsv));
    write_file(cfg.output_dir / outputs::kValidationMd, render_matrix(m, MatrixFormat::markdown));
    write_json(cfg.output_dir / outputs::kValidationJson, m);
    fmt::print(log, "{}", render_matrix(m, MatrixFormat::tsv));
    return m;
}

std::vector<CorrelationResult> cmd_audit_classifier(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const std::uint64_t master = cfg.master_seed();
    const auto source = load_alignment_source(cfg);
    std::map<std::string, const DatasetSpec*> by_key;
    for (const auto& d : cfg.datasets) by_key[d.key] = &d;

    std::vector<CorrelationResult> results;
    for (const auto& clf : cfg.classifiers) {
        const auto& spec = *by_key.at(clf.dataset);
        auto ds = load_taboo_dataset(spec.path, spec.name, spec.schema, spec.label);

        std::string score_csv;
        if (clf.fetch) {
            auto client = cfg.toxicity.client;
            if (client.api_key.empty())
                if (const char* env = std::getenv(cfg.toxicity.api_key_env.c_str())) client.api_key = env;
            std::vector<std::pair<std::string, std::string>> texts;
            for (const auto& inst : ds.instances) texts.emplace_back(inst.id, inst.norm_text);
            const auto fetched = fetch_toxicity(client, texts);
            for (const auto& [id, reason] : fetched.errors)
                fmt::print(log, "warning: toxicity request for '{}' failed: {}\n", id, reason);
            ScoreTable table;
            for (const auto& [id, v] : fetched.scores) table.entries[id].insert_or_assign(clf.tag, AlignmentScore(v));
            score_csv = emit_score_csv(table);
            write_file(cfg.output_dir / "taboo_scores" / (clf.tag + ".csv"), score_csv);
        } else {
            score_csv = read_file(*clf.scores);
        }
        std::istringstream scores(score_csv);
        auto imported = import_taboo_scores(std::move(ds), scores, cfg.decision_threshold, clf.tag);
        if (!imported.missing_ids.empty())
            fmt::print(log, "warning: {}: {} instances have no {} score\n", clf.dataset, imported.missing_ids.size(),
                       clf.tag);
        if (imported.rejected) fmt::print(log, "warning: {}: rejected {} score records\n", clf.tag, imported.rejected);

        std::vector<const TabooInstance*> scored;
        std::vector<TabooJudgement> judgements;
        for (const auto& inst : imported.dataset.instances) {
            if (!inst.taboo_score) continue;
            scored.push_back(&inst);
            judgements.push_back({*inst.taboo_score, *inst.taboo_decision});
        }
        for (const auto& community : cfg.communities) {
            CorrelationResult row;
            row.classifier_tag = clf.tag;
            row.community_tag = community.tag;
            try {
                std::vector<double> alignment;
                alignment.reserve(scored.size());
                for (const auto* inst : scored) alignment.push_back(source.alignment(community.tag, inst->id, inst->norm_text));
                BootstrapOptions opt;
                opt.replicates = cfg.bootstrap_replicates;
                opt.seed = derived_seed(master, "bootstrap/" + clf.tag, community.tag);
                opt.threads = cfg.threads;
                opt.restrict_to_declared = cfg.restrict_to_declared;
                row = classifier_bias(judgements, alignment, opt, clf.tag, community.tag);
            } catch (const Error& e) {
                row.error = e.what();
                fmt::print(log, "error: {} x {}: {}\n", clf.tag, community.tag, e.what());
            }
            results.push_back(std::move(row));
        }
    }
    write_file(cfg.output_dir / outputs::kCorrelationsCsv, emit_correlations_csv(results));
    write_json(cfg.output_dir / outputs::kCorrelationsJson, results);
    fmt::print(log, "{}", emit_correlations_csv(results));
    return results;
}

DatasetAudit cmd_audit_dataset(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const double tau = resolve_tau(cfg);
    const auto source = load_alignment_source(cfg);
    std::vector<std::string> communities;
    for (const auto& c : cfg.communities) communities.push_back(c.tag);
    if (communities.size() < 2)
        throw FatalInputError(fmt::format("dataset audit needs at least 2 communities (got {})", communities.size()));
    if (cfg.datasets.empty()) throw FatalInputError("dataset audit needs at least one dataset");

    const auto datasets = load_datasets(cfg, log);
    std::vector<ProportionColumnInput> columns;
    std::vector<ResetFlag> flags;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        const auto& ds = datasets[d];
        ProportionColumnInput col{{ds.name, ds.label}, std::vector<std::vector<double>>(communities.size())};
        std::vector<std::map<std::string, double>> per_instance(ds.instances.size());
        for (std::size_t r = 0; r < communities.size(); ++r) {
            for (std::size_t i = 0; i < ds.instances.size(); ++i) {
                const auto& inst = ds.instances[i];
                const double a = source.alignment(communities[r], inst.id, inst.norm_text);
                col.community_scores[r].push_back(a);
                per_instance[i][communities[r]] = a;
            }
        }
        auto ds_flags = flag_for_reset(ds.instances, per_instance, tau);
        flags.insert(flags.end(), ds_flags.begin(), ds_flags.end());
        columns.push_back(std::move(col));
    }
    DatasetAudit audit{dataset_bias_matrix(communities, columns, tau), std::move(flags)};
    write_file(cfg.output_dir / outputs::kProportionTsv, render_matrix(audit.matrix, MatrixFormat::tsv));
    write_file(cfg.output_dir / outputs::kProportionMd, render_matrix(audit.matrix, MatrixFormat::markdown));
    write_json(cfg.output_dir / outputs::kProportionJson, audit.matrix);
    write_file(cfg.output_dir / outputs::kResetFlagsCsv, emit_reset_flags_csv(audit.reset_flags));
    write_json(cfg.output_dir / outputs::kResetFlagsJson, audit.reset_flags);
    fmt::print(log, "{}", render_matrix(audit.matrix, MatrixFormat::tsv));
    fmt::print(log, "{} reset flags\n", audit.reset_flags.size());
    return audit;
}

ReportClock report_clock(const RunConfig& cfg) {
    if (!cfg.timestamp) return [] { return std::chrono::system_clock::now(); };
    const std::string& ts = *cfg.timestamp;
    std::chrono::system_clock::time_point t;
    std::int64_t epoch = 0;
    int y, mo, d, h, mi, s;
    if (auto [p, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), epoch);
        ec == std::errc() && p == ts.data() + ts.size()) {
        t = std::chrono::system_clock::time_point(std::chrono::seconds(epoch));
    } else if (std::sscanf(ts.c_str(), "%d-%d-%dT%d:%d:%dZ", &y, &mo, &d, &h, &mi, &s) == 6) {
        using namespace std::chrono;
        t = sys_days{year{y} / month{static_cast<unsigned>(mo)} / day{static_cast<unsigned>(d)}} + hours{h} +
            minutes{mi} + seconds{s};
    } else {
        throw FatalInputError("timestamp must be unix seconds or YYYY-MM-DDTHH:MM:SSZ: " + ts);
    }
    return [t] { return t; };
}

BuiltReport cmd_report(const RunConfig& cfg, const ReportClock& clock, std::ostream& log) {
    cfg.validate();
    AuditReport parts;
    auto& meta = parts.metadata;
    meta.seed = cfg.master_seed();
    meta.decision_threshold = cfg.decision_threshold;
    meta.bootstrap_replicates = cfg.bootstrap_replicates;
    meta.tau = resolve_tau(cfg);

    const auto& dir = cfg.output_dir;
    if (!cfg.tau) parts.selected_tau = meta.tau;
    if (fs::exists(dir / outputs::kCcdf)) parts.ccdf = parse_ccdf_csv(read_file(dir / outputs::kCcdf));
    if (fs::exists(dir / outputs::kValidationJson))
        parts.validation = json::parse(read_file(dir / outputs::kValidationJson)).get<ValidationMatrix>();
    if (fs::exists(dir / outputs::kCorrelationsJson))
        parts.correlations = json::parse(read_file(dir / outputs::kCorrelationsJson)).get<std::vector<CorrelationResult>>();
    if (fs::exists(dir / outputs::kProportionJson))
        parts.proportions = json::parse(read_file(dir / outputs::kProportionJson)).get<ProportionMatrix>();
    if (fs::exists(dir / outputs::kResetFlagsJson))
        parts.reset_flags = json::parse(read_file(dir / outputs::kResetFlagsJson)).get<std::vector<ResetFlag>>();

    auto digest = [&](std::string name, const fs::path& p) {
        if (fs::exists(p)) meta.inputs.push_back({std::move(name), sha256_file(p)});
    };
    if (!cfg.config_path.empty()) digest(cfg.config_path.filename().string(), cfg.config_path);
    for (const auto& c : cfg.communities) {
        for (const auto& p : c.corpus) digest(display_name(cfg, p), p);
        digest("model:" + c.tag, outputs::model(cfg, c.tag));
    }
    for (const auto& p : cfg.alignment_scores) digest(display_name(cfg, p), p);
    for (const auto& d : cfg.datasets) digest(display_name(cfg, d.path), d.path);
    for (const auto& c : cfg.classifiers)
        if (c.scores) digest(display_name(cfg, *c.scores), *c.scores);

    auto built = build_report(std::move(parts), clock);
    write_file(dir / outputs::kReportMd, built.document);
    fmt::print(log, "wrote {}\n", (dir / outputs::kReportMd).string());
    return built;
}

}  // namespace cbaudit
