#include "cbaudit/clc.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <set>

#include <fmt/format.h>

namespace cbaudit {

AlignmentScore::AlignmentScore(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0))
        throw std::out_of_range(fmt::format("alignment score {} outside [0,1]", value));
}

// ---------------------------------------------------------------------------

void FeatureConfig::validate() const {
    if (hash_dim < (1u << 10) || !std::has_single_bit(hash_dim))
        throw std::invalid_argument(fmt::format("hash_dim {} must be a power of two >= 1024", hash_dim));
    auto check = [](const std::optional<NgramRange>& r, const char* what) {
        if (r && (r->low < 1 || r->high < r->low))
            throw std::invalid_argument(fmt::format("{} range {}..{} is empty or invalid", what, r->low, r->high));
    };
    check(word_ngrams, "word_ngrams");
    check(char_ngrams, "char_ngrams");
    if (!word_ngrams && !char_ngrams) throw std::invalid_argument("both word and char n-grams are disabled");
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

struct Fnv1a {
    std::uint64_t h = kFnvOffset;

    explicit Fnv1a(std::uint64_t seed) noexcept {
        for (int i = 0; i < 8; ++i) byte(static_cast<unsigned char>(seed >> (8 * i)));
    }
    void byte(unsigned char b) noexcept {
        h ^= b;
        h *= kFnvPrime;
    }
    void bytes(std::string_view s) noexcept {
        for (char c : s) byte(static_cast<unsigned char>(c));
    }
};

constexpr unsigned char kWordNamespace = 'w';
constexpr unsigned char kCharNamespace = 'c';
constexpr unsigned char kUnitSeparator = 0x1F;

std::vector<std::string_view> split_tokens(std::string_view text) {
    std::vector<std::string_view> tokens;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto next = text.find(' ', pos);
        if (next == std::string_view::npos) next = text.size();
        if (next > pos) tokens.push_back(text.substr(pos, next - pos));
        pos = next + 1;
    }
    return tokens;
}

// Byte offsets of every code point start in a UTF-8 token, plus the end offset.
std::vector<std::size_t> code_point_offsets(std::string_view token) {
    std::vector<std::size_t> offs;
    for (std::size_t i = 0; i < token.size(); ++i)
        if ((static_cast<unsigned char>(token[i]) & 0xC0) != 0x80) offs.push_back(i);
    offs.push_back(token.size());
    return offs;
}

}  // namespace

std::uint64_t stable_hash(std::string_view bytes, std::uint64_t seed) noexcept {
    Fnv1a h(seed);
    h.bytes(bytes);
    return h.h;
}

SparseVector extract_features(std::string_view norm_text, const FeatureConfig& cfg) {
    std::vector<std::uint32_t> raw;
    const auto tokens = split_tokens(norm_text);
    const std::uint64_t mask = cfg.hash_dim - 1;

    if (cfg.word_ngrams) {
        for (int n = cfg.word_ngrams->low; n <= cfg.word_ngrams->high; ++n) {
            for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
                Fnv1a h(cfg.hash_seed);
                h.byte(kWordNamespace);
                h.byte(kUnitSeparator);
                for (int k = 0; k < n; ++k) {
                    if (k) h.byte(' ');
                    h.bytes(tokens[i + k]);
                }
                raw.push_back(static_cast<std::uint32_t>(h.h & mask));
            }
        }
    }
    if (cfg.char_ngrams) {
        for (auto token : tokens) {
            const auto offs = code_point_offsets(token);
            const std::size_t len = offs.size() - 1;
            for (int n = cfg.char_ngrams->low; n <= cfg.char_ngrams->high; ++n) {
                for (std::size_t i = 0; i + n <= len; ++i) {
                    Fnv1a h(cfg.hash_seed);
                    h.byte(kCharNamespace);
                    h.byte(kUnitSeparator);
                    h.bytes(token.substr(offs[i], offs[i + n] - offs[i]));
                    raw.push_back(static_cast<std::uint32_t>(h.h & mask));
                }
            }
        }
    }

    std::sort(raw.begin(), raw.end());
    SparseVector out;
    for (std::size_t i = 0; i < raw.size();) {
        std::size_t j = i;
        while (j < raw.size() && raw[j] == raw[i]) ++j;
        out.push_back({raw[i], static_cast<double>(j - i)});
        i = j;
    }
    return out;
}

// ---------------------------------------------------------------------------

ClcModel ClcModel::zero(std::string community_id, FeatureConfig cfg) {
    cfg.validate();
    ClcModel m;
    m.community_id = std::move(community_id);
    m.weights.assign(cfg.hash_dim, 0.0);
    m.feature_config = cfg;
    return m;
}

TrainingDiverged::TrainingDiverged(int epoch)
    : Error(fmt::format("training diverged in epoch {}", epoch)), epoch_(epoch) {}

double sigmoid(double z) noexcept {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

double dot(const std::vector<double>& w, const SparseVector& x) noexcept {
    double s = 0.0;
    for (const auto& f : x) s += w[f.index] * f.count;
    return s;
}

// -log p(y | z) computed without overflow.
double log_loss(double z, double y) noexcept {
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    return softplus - y * z;
}

constexpr double kMinScale = 1e-9;

}  // namespace

ClcModel train_clc(const TrainingSet& ts, const FeatureConfig& cfg, const Hyperparameters& hyper,
                   std::uint64_t seed) {
    cfg.validate();
    if (ts.positives.empty()) throw std::invalid_argument("training set has no positives");
    if (ts.positives.size() != ts.negatives.size())
        throw std::invalid_argument(fmt::format("training set is not 1:1 balanced ({} positives, {} negatives)",
                                                ts.positives.size(), ts.negatives.size()));
    if (hyper.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (!(hyper.learning_rate > 0) || !(hyper.l2 >= 0))
        throw std::invalid_argument("learning_rate must be > 0 and l2 >= 0");

    struct Example {
        SparseVector x;
        double y;
    };
    std::vector<Example> examples;
    examples.reserve(ts.positives.size() * 2);
    for (const auto& u : ts.positives) examples.push_back({extract_features(u.norm_text, cfg), 1.0});
    for (const auto& n : ts.negatives) examples.push_back({extract_features(n.utterance.norm_text, cfg), 0.0});

    ClcModel model = ClcModel::zero(ts.community_id, cfg);
    model.train_meta = {seed, hyper.epochs, hyper.learning_rate, hyper.l2, examples.size()};

    // weights = scale * v
    std::vector<double>& v = model.weights;
    double scale = 1.0;
    double& bias = model.bias;

    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(uniform_below(rng, i))]);

        const double lr = hyper.learning_rate / std::sqrt(static_cast<double>(epoch + 1));
        const double decay = 1.0 - lr * hyper.l2;
        double loss = 0.0;
        for (std::size_t idx : order) {
            const Example& ex = examples[idx];
            const double z = scale * dot(v, ex.x) + bias;
            loss += log_loss(z, ex.y);
            const double g = sigmoid(z) - ex.y;

            scale *= decay;
            const double step = lr * g / scale;
            for (const auto& f : ex.x) v[f.index] -= step * f.count;
            bias -= lr * g;

            if (scale < kMinScale) {
                for (double& w : v) w *= scale;
                scale = 1.0;
            }
        }
        if (!std::isfinite(loss) || !std::isfinite(bias)) throw TrainingDiverged(epoch + 1);
    }
    if (scale != 1.0)
        for (double& w : v) w *= scale;
    for (double w : v)
        if (!std::isfinite(w)) throw TrainingDiverged(hyper.epochs);
    return model;
}

AlignmentScore score(const ClcModel& model, const SparseVector& features) {
    return AlignmentScore(sigmoid(dot(model.weights, features) + model.bias));
}

AlignmentScore score(const ClcModel& model, std::string_view norm_text) {
    return score(model, extract_features(norm_text, model.feature_config));
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr std::string_view kMagic = "CBCLCMDL";

class BlobWriter {
public:
    void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
    void u8(std::uint8_t v) { raw(&v, 1); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    void range(const std::optional<NgramRange>& r) {
        u8(r ? 1 : 0);
        i32(r ? r->low : 0);
        i32(r ? r->high : 0);
    }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class BlobReader {
public:
    explicit BlobReader(std::string_view blob) : blob_(blob) {}

    void need(std::size_t n) const {
        if (blob_.size() - pos_ < n) throw UnreadableModel("unreadable model: truncated blob");
    }
    std::string_view raw(std::size_t n) {
        need(n);
        auto s = blob_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(raw(1)[0]); }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(u8()) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(u8()) << (8 * i);
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() { return std::string(raw(u32())); }
    std::optional<NgramRange> range() {
        const bool on = u8() != 0;
        NgramRange r{i32(), i32()};
        return on ? std::optional<NgramRange>(r) : std::nullopt;
    }
    bool at_end() const noexcept { return pos_ == blob_.size(); }

private:
    std::string_view blob_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string save_model(const ClcModel& model) {
    BlobWriter w;
    w.raw(kMagic.data(), kMagic.size());
    w.u32(kModelFormatVersion);
    w.str(model.community_id);
    const auto& cfg = model.feature_config;
    w.range(cfg.word_ngrams);
    w.range(cfg.char_ngrams);
    w.u32(cfg.hash_dim);
    w.u64(cfg.hash_seed);
    const auto& meta = model.train_meta;
    w.u64(meta.seed);
    w.i32(meta.epochs);
    w.f64(meta.learning_rate);
    w.f64(meta.l2);
    w.u64(meta.train_size);
    w.f64(model.bias);

    std::uint32_t nnz = 0;
    for (double x : model.weights) nnz += (x != 0.0);
    w.u32(nnz);
    for (std::uint32_t i = 0; i < model.weights.size(); ++i) {
        if (model.weights[i] == 0.0) continue;
        w.u32(i);
        w.f64(model.weights[i]);
    }
    return w.take();
}

ClcModel load_model(std::string_view blob) {
    BlobReader r(blob);
    if (r.raw(kMagic.size()) != kMagic) throw UnreadableModel("unreadable model: bad magic");
    const std::uint32_t version = r.u32();
    if (version != kModelFormatVersion)
        throw UnreadableModel(fmt::format("unreadable model: unsupported format version {} (expected {})", version,
                                          kModelFormatVersion));
    ClcModel m;
    m.community_id = r.str();
    FeatureConfig cfg;
    cfg.word_ngrams = r.range();
    cfg.char_ngrams = r.range();
    cfg.hash_dim = r.u32();
    cfg.hash_seed = r.u64();
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UnreadableModel(std::string("unreadable model: ") + e.what());
    }
    m.feature_config = cfg;
    m.train_meta.seed = r.u64();
    m.train_meta.epochs = r.i32();
    m.train_meta.learning_rate = r.f64();
    m.train_meta.l2 = r.f64();
    m.train_meta.train_size = r.u64();
    m.bias = r.f64();
    m.weights.assign(cfg.hash_dim, 0.0);
    const std::uint32_t nnz = r.u32();
    if (nnz > cfg.hash_dim) throw UnreadableModel("unreadable model: weight count exceeds hash_dim");
    for (std::uint32_t k = 0; k < nnz; ++k) {
        const std::uint32_t i = r.u32();
        const double v = r.f64();
        if (i >= cfg.hash_dim || !std::isfinite(v))
            throw UnreadableModel("unreadable model: corrupt weight entry");
        m.weights[i] = v;
    }
    if (!std::isfinite(m.bias)) throw UnreadableModel("unreadable model: non-finite bias");
    if (!r.at_end()) throw UnreadableModel("unreadable model: trailing bytes");
    return m;
}

void save_model_file(const ClcModel& model, const std::filesystem::path& path) {
    write_file(path, save_model(model));
}

ClcModel load_model_file(const std::filesystem::path& path) { return load_model(read_file(path)); }

// ---------------------------------------------------------------------------
// Score tables

std::optional<double> ScoreTable::find(std::string_view id, std::string_view tag) const {
    auto it = entries.find(std::string(id));
    if (it == entries.end()) return std::nullopt;
    auto jt = it->second.find(std::string(tag));
    if (jt == it->second.end()) return std::nullopt;
    return jt->second.value();
}

std::vector<std::string> ScoreTable::tags() const {
    std::set<std::string> s;
    for (const auto& [id, per_tag] : entries)
        for (const auto& [tag, v] : per_tag) s.insert(tag);
    return {s.begin(), s.end()};
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

ImportedScores import_scores(std::istream& in) {
    ImportedScores result;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view sv = trim(line);
        if (sv.empty()) continue;
        ++result.stats.lines;
        const auto c2 = sv.rfind(',');
        const auto c1 = c2 == std::string_view::npos || c2 == 0 ? std::string_view::npos : sv.rfind(',', c2 - 1);
        if (c1 == std::string_view::npos) {
            ++result.stats.rejected_parse;
            continue;
        }
        const auto id = trim(sv.substr(0, c1));
        const auto tag = trim(sv.substr(c1 + 1, c2 - c1 - 1));
        const auto num = trim(sv.substr(c2 + 1));
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
        if (id.empty() || tag.empty() || ec != std::errc() || ptr != num.data() + num.size()) {
            ++result.stats.rejected_parse;
            continue;
        }
        if (!(value >= 0.0 && value <= 1.0)) {
            ++result.stats.rejected_range;
            continue;
        }
        auto& per_tag = result.table.entries[std::string(id)];
        auto [it, inserted] = per_tag.insert_or_assign(std::string(tag), AlignmentScore(value));
        if (!inserted) ++result.stats.duplicates;
        ++result.stats.accepted;
    }
    if (in.bad()) throw FatalInputError("I/O failure while reading score file");
    return result;
}

ImportedScores import_score_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FatalInputError("cannot open score file " + path.string());
    return import_scores(in);
}

std::string emit_score_csv(const ScoreTable& table) {
    std::string out;
    for (const auto& [id, per_tag] : table.entries)
        for (const auto& [tag, s] : per_tag) out += fmt::format("{},{},{:.6f}\n", id, tag, s.value());
    return out;
}

// ---------------------------------------------------------------------------

void AlignmentSource::add_model(ClcModel model) {
    auto tag = model.community_id;
    models_.insert_or_assign(std::move(tag), std::move(model));
}

void AlignmentSource::add_scores(const ScoreTable& table) {
    for (const auto& [id, per_tag] : table.entries)
        for (const auto& [tag, s] : per_tag) imported_[tag].insert_or_assign(id, s.value());
}

bool AlignmentSource::has_community(std::string_view tag) const {
    return models_.count(tag) > 0 || imported_.count(tag) > 0;
}

std::vector<std::string> AlignmentSource::communities() const {
    std::set<std::string> s;
    for (const auto& [tag, m] : models_) s.insert(tag);
    for (const auto& [tag, m] : imported_) s.insert(tag);
    return {s.begin(), s.end()};
}

double AlignmentSource::alignment(std::string_view tag, std::string_view id, std::string_view norm_text) const {
    if (auto it = models_.find(tag); it != models_.end()) return score(it->second, norm_text).value();
    if (auto it = imported_.find(tag); it != imported_.end()) {
        if (auto jt = it->second.find(id); jt != it->second.end()) return jt->second;
        throw Error(fmt::format("no imported alignment score for id '{}' and community '{}'", id, tag));
    }
    throw Error(fmt::format("no model or score file for community '{}'", tag));
}

}  // namespace cbaudit
