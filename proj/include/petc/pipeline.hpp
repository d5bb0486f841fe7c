#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "petc/cipher.hpp"
#include "petc/concentration.hpp"
#include "petc/core_model.hpp"
#include "petc/json_types.hpp"
#include "petc/leakage.hpp"
#include "petc/rd_codec.hpp"

namespace petc {

inline constexpr int kConfigVersion = 1;

struct ConcentrationSpec {
    EnsembleKind kind = EnsembleKind::mutual;
    std::vector<std::uint32_t> type;  // counts; must sum to n
    std::size_t bin_size = 1;
    std::uint64_t key_space_size = 1;
    double threshold = 1.0;
    double deviation = 0.5;
    std::size_t trials = 100;
};

/// Parsed experiment configuration. The seed is not part of it; commands
/// take it separately.
struct ExperimentConfig {
    std::vector<double> source_pmf;
    std::size_t n = 0;
    std::string distortion_kind = "hamming";  // "hamming" or "table"
    std::vector<std::vector<double>> distortion_table;
    std::uint64_t codebook_size = 1;   // M
    std::uint64_t key_space_size = 1;  // N
    CipherKind cipher = CipherKind::type1;
    std::size_t trials = 100;
    /// Codebook drawn from the curve point at this distortion; at rate (1/n) ln M otherwise.
    std::optional<double> design_distortion;

    bool run_leakage = false;
    bool run_concentration = false;
    bool run_rd_sweep = false;

    std::optional<double> leakage_threshold;
    double leakage_deviation = kDefaultDeviation;
    std::size_t leakage_cipher_trials = 20;
    std::vector<std::vector<std::uint32_t>> leakage_types;
    /// Extra key-space sizes for the conditional-leakage trend in compare.
    std::vector<std::uint64_t> compare_key_space_sizes;

    std::vector<ConcentrationSpec> concentration;
    std::vector<double> rd_slopes;

    std::uint64_t enumeration_budget = kDefaultEnumerationBudget;
    std::uint64_t pair_evaluation_budget = 100'000'000;
    std::uint64_t max_codewords = kMaxCodewords;

    SourceModel source() const;
    DistortionMeasure distortion() const;
    LeakageBudget leakage_budget() const;
    LeakageOptions leakage_options() const;

    double rate_nats() const;      // (1/n) ln M
    double key_rate_nats() const;  // (1/n) ln N
};

/// Throws ConfigError for schema violations and unknown fields.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Resolved form with every default filled in.
Json to_json(const ExperimentConfig& cfg);

/// ConfigError unless N > M, i.e. R_s > R. Checked by every reversed-system leakage analysis.
void require_key_rate_margin(const ExperimentConfig& cfg);

/// Seeds of every stochastic stage, derived from the master seed by role.
struct DerivedSeeds {
    std::uint64_t master = 0;
    std::uint64_t cipher = 0;
    std::uint64_t codebook = 0;
    std::uint64_t trials = 0;
    std::uint64_t leakage = 0;
    std::uint64_t concentration = 0;
};

DerivedSeeds derive_seeds(std::uint64_t master);
Json to_json(const DerivedSeeds& s);

/// 16 hex digits of FNV-1a over the compact JSON dump.
std::string fingerprint(const Json& j);

/// Curve point the codebook is drawn from.
RDPoint design_point(const ExperimentConfig& cfg);
Codebook build_experiment_codebook(const ExperimentConfig& cfg, std::uint64_t seed);
PermutationCipher build_experiment_cipher(const ExperimentConfig& cfg, std::uint64_t seed);

/// Exact I(X^n; C) of compress-then-pad over the whole block space.
InfoValue conventional_exact_leakage(const Codebook& cb, const DistortionMeasure& d, const SourceModel& source,
                                     std::uint64_t key_space_size, std::uint64_t enumeration_budget);

/// x -> pi_K(x) -> g -> reconstruct -> pi_K^{-1}, plus the analyses the config asks for.
Json run_reversed_pipeline(const ExperimentConfig& cfg, std::uint64_t seed);
Json run_reversed_pipeline(const ExperimentConfig& cfg, std::uint64_t seed, const PermutationCipher& cipher,
                           const Codebook& cb);

/// x -> g -> (j + K) mod M -> (c - K) mod M -> reconstruct. Needs M | N.
Json run_conventional_pipeline(const ExperimentConfig& cfg, std::uint64_t seed);
Json run_conventional_pipeline(const ExperimentConfig& cfg, std::uint64_t seed, const Codebook& cb);

/// Both systems side by side.
Json compare_systems(const ExperimentConfig& cfg, std::uint64_t seed);

struct LeakageAnalysis {
    Json report;
    LeakageReport fixed_cipher;
    /// Decomposition inequality and every per-type ensemble check hold.
    bool bounds_hold = false;
};

/// Leakage analysis of the reversed system alone, with per-type ensemble checks.
LeakageAnalysis leakage_analysis(const ExperimentConfig& cfg, std::uint64_t seed);

/// Concentration experiments from the config.
struct ConcentrationRun {
    std::vector<DeviationExperiment> experiments;
    std::vector<TailEstimate> estimates;
};
ConcentrationRun run_concentration(const ExperimentConfig& cfg, std::uint64_t seed);
Json to_json(const ConcentrationRun& run);

/// Rate/distortion summary as two-column CSV.
std::string pipeline_to_csv(const Json& report);
std::string compare_to_csv(const Json& report);

}  // namespace petc
