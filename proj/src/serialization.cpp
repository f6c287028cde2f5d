#include "cbaudit/serialization.hpp"

namespace cbaudit {

void to_json(nlohmann::json& j, const CcdfCurve& c) {
    j = {{"community", c.community_id}, {"grid", c.grid}, {"survival", c.survival}};
}

void from_json(const nlohmann::json& j, CcdfCurve& c) {
    j.at("community").get_to(c.community_id);
    j.at("grid").get_to(c.grid);
    j.at("survival").get_to(c.survival);
}

void to_json(nlohmann::json& j, const ValidationMatrix& m) {
    j = {{"rows", m.rows}, {"columns", m.columns}, {"cells", m.cells}, {"tau", m.tau}};
}

void from_json(const nlohmann::json& j, ValidationMatrix& m) {
    j.at("rows").get_to(m.rows);
    j.at("columns").get_to(m.columns);
    j.at("cells").get_to(m.cells);
    j.at("tau").get_to(m.tau);
}

void to_json(nlohmann::json& j, const CorrelationResult& r) {
    j = {{"classifier", r.classifier_tag}, {"community", r.community_tag}};
    if (r.error) {
        j["error"] = *r.error;
        return;
    }
    j["r"] = r.r;
    j["ci_low"] = r.ci_low;
    j["ci_high"] = r.ci_high;
    j["bootstrap_median"] = r.bootstrap_median;
    j["n_pairs"] = r.n_pairs;
    j["n_replicates"] = r.n_replicates;
    j["seed"] = r.seed;
    j["redraws"] = r.redraws;
}

void from_json(const nlohmann::json& j, CorrelationResult& r) {
    r = CorrelationResult{};
    j.at("classifier").get_to(r.classifier_tag);
    j.at("community").get_to(r.community_tag);
    if (j.contains("error")) {
        r.error = j.at("error").get<std::string>();
        return;
    }
    j.at("r").get_to(r.r);
    j.at("ci_low").get_to(r.ci_low);
    j.at("ci_high").get_to(r.ci_high);
    j.at("bootstrap_median").get_to(r.bootstrap_median);
    j.at("n_pairs").get_to(r.n_pairs);
    j.at("n_replicates").get_to(r.n_replicates);
    j.at("seed").get_to(r.seed);
    j.at("redraws").get_to(r.redraws);
}

void to_json(nlohmann::json& j, const DatasetColumn& c) { j = {{"dataset", c.dataset}, {"label", c.label}}; }

void from_json(const nlohmann::json& j, DatasetColumn& c) {
    j.at("dataset").get_to(c.dataset);
    j.at("label").get_to(c.label);
}

void to_json(nlohmann::json& j, const ProportionMatrix& m) {
    nlohmann::json flags = nlohmann::json::array();
    for (const auto& [r, c] : m.flags) flags.push_back({r, c});
    j = {{"communities", m.communities}, {"columns", m.columns}, {"cells", m.cells},   {"mean", m.mean},
         {"sample_sd", m.sample_sd},     {"flags", flags},       {"tau", m.tau}};
}

void from_json(const nlohmann::json& j, ProportionMatrix& m) {
    j.at("communities").get_to(m.communities);
    j.at("columns").get_to(m.columns);
    j.at("cells").get_to(m.cells);
    j.at("mean").get_to(m.mean);
    j.at("sample_sd").get_to(m.sample_sd);
    j.at("tau").get_to(m.tau);
    m.flags.clear();
    for (const auto& f : j.at("flags")) m.flags.insert({f.at(0).get<std::size_t>(), f.at(1).get<std::size_t>()});
}

void to_json(nlohmann::json& j, const ResetFlag& f) {
    j = {{"id", f.instance_id}, {"community", f.community_tag}, {"alignment", f.alignment}};
}

void from_json(const nlohmann::json& j, ResetFlag& f) {
    j.at("id").get_to(f.instance_id);
    j.at("community").get_to(f.community_tag);
    j.at("alignment").get_to(f.alignment);
}

}  // namespace cbaudit
