#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cbaudit/common.hpp"
#include "cbaudit/corpus.hpp"

namespace cbaudit {

/// A classifier confidence in [0,1]. Construction outside the range throws.
class AlignmentScore {
public:
    constexpr AlignmentScore() = default;
    explicit AlignmentScore(double value);

    constexpr double value() const noexcept { return value_; }
    constexpr operator double() const noexcept { return value_; }

private:
    double value_ = 0.5;
};

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

struct NgramRange {
    int low = 1;
    int high = 1;

    bool operator==(const NgramRange&) const = default;
};

struct FeatureConfig {
    std::optional<NgramRange> word_ngrams = NgramRange{1, 2};  // nullopt: word n-grams off
    std::optional<NgramRange> char_ngrams = NgramRange{3, 5};  // nullopt: char n-grams off
    std::uint32_t hash_dim = 1u << 20;
    std::uint64_t hash_seed = 0;

    /// Throws std::invalid_argument unless hash_dim is a power of two >= 2^10
    /// and every enabled range has 1 <= low <= high.
    void validate() const;

    bool operator==(const FeatureConfig&) const = default;
};

struct Feature {
    std::uint32_t index;
    double count;

    bool operator==(const Feature&) const = default;
};

/// Sorted by index, one entry per distinct index.
using SparseVector = std::vector<Feature>;

/// 64-bit FNV-1a over the eight little-endian seed bytes followed by `bytes`.
std::uint64_t stable_hash(std::string_view bytes, std::uint64_t seed) noexcept;

/// Word n-grams over the space-separated tokens and character n-grams (by code
/// point) inside each token, hashed into hash_dim buckets. Word and character
/// n-grams live in separate hash namespaces.
SparseVector extract_features(std::string_view norm_text, const FeatureConfig& cfg);

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct Hyperparameters {
    int epochs = 5;
    double learning_rate = 0.1;  // decays as lr / sqrt(epoch + 1)
    double l2 = 1e-6;
};

struct TrainMeta {
    std::uint64_t seed = 0;
    int epochs = 0;
    double learning_rate = 0.0;
    double l2 = 0.0;
    std::uint64_t train_size = 0;

    bool operator==(const TrainMeta&) const = default;
};

struct ClcModel {
    std::string community_id;
    FeatureConfig feature_config;
    std::vector<double> weights;  // hash_dim entries
    double bias = 0.0;
    TrainMeta train_meta;

    /// A model with all-zero weights: every score is 0.5.
    static ClcModel zero(std::string community_id, FeatureConfig cfg);
};

class TrainingDiverged : public Error {
public:
    explicit TrainingDiverged(int epoch);
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

/// Logistic regression by per-example SGD, positives labelled 1. Each epoch
/// visits the examples in a shuffled order drawn from `seed`. The L2 term
/// shrinks the whole weight vector on every update; it is applied through a
/// shared scale factor so an update costs O(nnz) instead of O(hash_dim).
ClcModel train_clc(const TrainingSet& ts, const FeatureConfig& cfg, const Hyperparameters& hyper,
                   std::uint64_t seed);

double sigmoid(double z) noexcept;

/// sigma(w . x + b) for the features of `norm_text`.
AlignmentScore score(const ClcModel& model, std::string_view norm_text);
AlignmentScore score(const ClcModel& model, const SparseVector& features);

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kModelFormatVersion = 1;

class UnreadableModel : public Error {
public:
    using Error::Error;
};

/// Little-endian binary blob: magic "CBCLCMDL", format version, community id,
/// feature config, training metadata, bias and the nonzero weights.
std::string save_model(const ClcModel& model);
ClcModel load_model(std::string_view blob);

void save_model_file(const ClcModel& model, const std::filesystem::path& path);
ClcModel load_model_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Imported scores
// ---------------------------------------------------------------------------

/// id -> (tag -> score). Tags are community tags for alignment files and
/// classifier tags for taboo score files.
struct ScoreTable {
    std::map<std::string, std::map<std::string, AlignmentScore>> entries;

    std::optional<double> find(std::string_view id, std::string_view tag) const;
    std::vector<std::string> tags() const;
};

struct ScoreImportStats {
    std::size_t lines = 0;
    std::size_t accepted = 0;
    std::size_t rejected_range = 0;
    std::size_t rejected_parse = 0;
    std::size_t duplicates = 0;  // later record replaced an earlier one
};

struct ImportedScores {
    ScoreTable table;
    ScoreImportStats stats;
};

/// Reads header-less `id,tag,score` lines. The last two commas delimit the
/// fields, so ids may themselves contain commas.
ImportedScores import_scores(std::istream& in);
ImportedScores import_score_file(const std::filesystem::path& path);

/// Writes `id,tag,score` lines with 6-decimal scores.
std::string emit_score_csv(const ScoreTable& table);

// ---------------------------------------------------------------------------
// Alignment lookup
// ---------------------------------------------------------------------------

/// Resolves the alignment of a text with a community, from a trained model
/// when one is loaded for the tag and otherwise from imported scores.
class AlignmentSource {
public:
    void add_model(ClcModel model);
    void add_scores(const ScoreTable& table);

    bool has_community(std::string_view tag) const;
    std::vector<std::string> communities() const;

    /// Throws Error when neither a model nor an imported score covers (tag, id).
    double alignment(std::string_view tag, std::string_view id, std::string_view norm_text) const;

private:
    std::map<std::string, ClcModel, std::less<>> models_;
    std::map<std::string, std::map<std::string, double, std::less<>>, std::less<>> imported_;  // tag -> id -> score
};

}  // namespace cbaudit
