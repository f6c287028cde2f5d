#include "cbaudit/taboo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "cbaudit/clc.hpp"
#include "cbaudit/corpus.hpp"

namespace cbaudit {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
        s.remove_suffix(1);
    return s;
}

}  // namespace

LabelNotFound::LabelNotFound(std::string_view wanted, const std::vector<std::string>& observed)
    : Error(fmt::format("label not found: '{}' (observed labels: {})", wanted, fmt::join(observed, ", "))),
      observed_(observed) {}

bool read_delimited_record(std::istream& in, char delim, std::vector<std::string>& fields) {
    fields.clear();
    std::string line;
    if (!std::getline(in, line)) return false;
    if (delim != ',') {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t pos = 0;
        while (true) {
            auto next = line.find(delim, pos);
            fields.emplace_back(line.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
            if (next == std::string::npos) break;
            pos = next + 1;
        }
        return true;
    }

    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (;;) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            char c = line[i];
            if (quoted) {
                if (c == '"') {
                    if (i + 1 < line.size() && line[i + 1] == '"') {
                        field.push_back('"');
                        ++i;
                    } else {
                        quoted = false;
                    }
                } else {
                    field.push_back(c);
                }
            } else if (c == '"' && field.empty() && !was_quoted) {
                quoted = was_quoted = true;
            } else if (c == ',') {
                fields.push_back(std::move(field));
                field.clear();
                was_quoted = false;
            } else if (c == '\r' && i + 1 == line.size()) {
                // CRLF
            } else {
                field.push_back(c);
            }
        }
        if (!quoted) break;
        field.push_back('\n');
        if (!std::getline(in, line)) break;  // unterminated quote: keep what we have
    }
    fields.push_back(std::move(field));
    return true;
}

TabooDataset parse_taboo_dataset(std::istream& in, std::string name, const DatasetSchema& schema,
                                 std::string_view keep_label) {
    std::string header_line;
    if (!std::getline(in, header_line)) throw FatalInputError("dataset '" + name + "' has no header row");
    const char delim = header_line.find('\t') != std::string::npos ? '\t' : ',';
    std::vector<std::string> header;
    {
        std::istringstream hs(header_line);
        read_delimited_record(hs, delim, header);
    }
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

    auto column = [&](const std::string& wanted) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == wanted) return i;
        throw FatalInputError(fmt::format("dataset '{}' is missing declared column '{}'", name, wanted));
    };
    const std::size_t text_col = column(schema.text_column);
    const std::size_t label_col = column(schema.label_column);
    const std::optional<std::size_t> id_col =
        schema.id_column ? std::optional<std::size_t>(column(*schema.id_column)) : std::nullopt;
    const std::size_t needed = std::max({text_col, label_col, id_col.value_or(0)}) + 1;

    const std::string_view wanted = trim(keep_label);
    TabooDataset ds;
    ds.name = std::move(name);
    ds.label = std::string(wanted);
    std::set<std::string> observed;
    std::vector<std::string> fields;
    std::size_t row = 0;
    while (read_delimited_record(in, delim, fields)) {
        if (fields.size() == 1 && trim(fields[0]).empty()) continue;
        ++row;
        ++ds.total_rows;
        if (fields.size() < needed) continue;
        const auto label = trim(fields[label_col]);
        observed.emplace(label);
        if (label != wanted) continue;
        TabooInstance inst;
        inst.id = id_col ? std::string(trim(fields[*id_col])) : fmt::format("{}:{}", ds.name, row);
        inst.norm_text = normalize(fields[text_col]);
        inst.label = std::string(label);
        ds.instances.push_back(std::move(inst));
    }
    if (in.bad()) throw FatalInputError("I/O failure while reading dataset '" + ds.name + "'");
    if (ds.instances.empty()) throw LabelNotFound(wanted, {observed.begin(), observed.end()});
    return ds;
}

TabooDataset load_taboo_dataset(const std::filesystem::path& path, std::string name, const DatasetSchema& schema,
                                std::string_view keep_label) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FatalInputError("cannot open dataset file " + path.string());
    return parse_taboo_dataset(in, std::move(name), schema, keep_label);
}

TabooScoreImport import_taboo_scores(TabooDataset dataset, std::istream& scores, double decision_threshold,
                                     std::optional<std::string_view> classifier_tag) {
    auto imported = import_scores(scores);
    TabooScoreImport result;
    result.rejected = imported.stats.rejected_parse + imported.stats.rejected_range;
    result.duplicates = imported.stats.duplicates;

    std::unordered_map<std::string, double> by_id;
    for (const auto& [id, per_tag] : imported.table.entries) {
        for (const auto& [tag, s] : per_tag) {
            if (classifier_tag && tag != *classifier_tag) continue;
            by_id.insert_or_assign(id, s.value());
        }
    }
    for (auto& inst : dataset.instances) {
        auto it = by_id.find(inst.id);
        if (it == by_id.end()) {
            result.missing_ids.push_back(inst.id);
            continue;
        }
        inst.taboo_score = it->second;
        inst.taboo_decision = it->second >= decision_threshold;
        ++result.attached;
    }
    std::set<std::string_view> dataset_ids;
    for (const auto& inst : dataset.instances) dataset_ids.insert(inst.id);
    for (const auto& [id, v] : by_id) result.unknown_ids += dataset_ids.count(id) == 0;
    result.dataset = std::move(dataset);
    return result;
}

// ---------------------------------------------------------------------------

void ToxicityClientConfig::validate() const {
    if (!(requests_per_second > 0)) throw std::invalid_argument("requests_per_second must be > 0");
    if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
    if (endpoint.empty()) throw std::invalid_argument("toxicity endpoint is empty");
}

RateLimiter::RateLimiter(double per_second)
    : interval_(std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / per_second))) {
    if (!(per_second > 0)) throw std::invalid_argument("rate cap must be > 0");
}

void RateLimiter::acquire() {
    if (last_) {
        const auto next = *last_ + interval_;
        if (Clock::now() < next) std::this_thread::sleep_until(next);
    }
    last_ = Clock::now();
}

std::string toxicity_request_body(std::string_view text) {
    nlohmann::json body = {
        {"comment", {{"text", std::string(text)}}},
        {"requestedAttributes", {{"TOXICITY", nlohmann::json::object()}}},
    };
    return body.dump();
}

std::optional<double> parse_toxicity_response(std::string_view body) {
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    const auto ptr = nlohmann::json::json_pointer("/attributeScores/TOXICITY/summaryScore/value");
    if (!j.contains(ptr) || !j.at(ptr).is_number()) return std::nullopt;
    const double v = j.at(ptr).get<double>();
    if (!(v >= 0.0 && v <= 1.0)) return std::nullopt;
    return v;
}

namespace {

std::string percent_encode(std::string_view s) {
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~')
            out.push_back(static_cast<char>(c));
        else
            out += fmt::format("%{:02X}", c);
    }
    return out;
}

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;    // includes query
};

Endpoint split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint must be an absolute URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

ToxicityResult fetch_toxicity(const ToxicityClientConfig& cfg,
                              std::span<const std::pair<std::string, std::string>> texts) {
    cfg.validate();
    auto [origin, path] = split_endpoint(cfg.endpoint);
    if (!cfg.api_key.empty())
        path += (path.find('?') == std::string::npos ? "?key=" : "&key=") + percent_encode(cfg.api_key);

    httplib::Client client(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    RateLimiter limiter(cfg.requests_per_second);
    ToxicityResult result;
    for (const auto& [id, text] : texts) {
        const std::string body = toxicity_request_body(text);
        auto backoff = std::chrono::duration<double, std::milli>(cfg.initial_backoff);
        std::string failure;
        std::optional<double> value;
        for (int attempt = 0;; ++attempt) {
            limiter.acquire();
            auto res = client.Post(path, body, "application/json");
            bool retryable = false;
            if (!res) {
                failure = "transport error: " + httplib::to_string(res.error());
                retryable = true;
            } else if (res->status == 200) {
                value = parse_toxicity_response(res->body);
                if (!value) failure = "response lacks a toxicity summary score in [0,1]";
            } else if (res->status == 401 || res->status == 403) {
                throw AuthFailure(fmt::format("toxicity API rejected credentials (HTTP {})", res->status));
            } else {
                failure = fmt::format("HTTP {}", res->status);
                retryable = res->status == 429 || res->status >= 500;
            }
            if (!retryable || attempt >= cfg.max_retries) break;
            ++result.retries;
            std::this_thread::sleep_for(backoff);
            backoff *= cfg.backoff_multiplier;
        }
        if (value)
            result.scores.emplace_back(id, *value);
        else
            result.errors.emplace_back(id, failure);
    }
    return result;
}

}  // namespace cbaudit
