#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "petc/cipher.hpp"
#include "petc/core_model.hpp"
#include "petc/json_types.hpp"
#include "petc/rd_codec.hpp"
#include "petc/types_method.hpp"

namespace petc {

struct LeakageBudget {
    std::uint64_t enumeration = kDefaultEnumerationBudget;
    /// |T_P^n| * N (or |X|^n * N) evaluations of g allowed per computation.
    std::uint64_t pair_evaluations = 100'000'000;
};

/// The preimages g_P^{-1}(j) of every index j restricted to one type class.
struct BinPartition {
    TypeComposition type;
    std::uint64_t index_count = 0;               // M
    std::vector<std::uint64_t> bin_of;           // per member of the class, lexicographic order
    std::vector<std::vector<std::uint32_t>> bins;  // member positions for each j < M

    std::uint64_t type_size() const { return bin_of.size(); }
    std::size_t bin_size(std::uint64_t j) const { return bins.at(j).size(); }
};

BinPartition partition_type_by_bins(const CompressionMap& g, const TypeComposition& type,
                                    std::uint64_t enumeration_budget = kDefaultEnumerationBudget);

/// Bins with |g_P^{-1}(j)| / |T_P^n| >= 1/threshold are "normal"; eta is the
/// mass of the remaining (small) bins and never exceeds M / threshold.
struct SmallSetReport {
    double threshold = 0.0;
    std::vector<std::uint64_t> normal_bins;
    std::uint64_t normal_count = 0;  // |E(g,P,threshold)|
    std::uint64_t type_size = 0;
    double eta = 0.0;
    double eta_bound = 0.0;  // M / threshold
};

SmallSetReport small_set_report(const BinPartition& bp, double threshold);

/// Integer joint counts c(x, j) = #{k : g(pi_k(x)) = j} for x in T_P^n.
struct JointCounts {
    std::uint64_t type_size = 0;
    std::uint64_t key_count = 0;
    std::uint64_t index_count = 0;
    std::vector<std::uint32_t> counts;  // row-major, type_size x index_count

    std::uint32_t operator()(std::size_t x, std::size_t j) const { return counts[x * index_count + j]; }
};

/// I(X; J) for X uniform on the class and K uniform, from integer counts.
InfoValue leakage_from_counts(const JointCounts& jc);

/// Precomputes the bin structure of one type class so that many cipher
/// realizations can be evaluated against the same g.
class TypeLeakageEvaluator {
public:
    TypeLeakageEvaluator(const CompressionMap& g, TypeComposition type, const LeakageBudget& budget = {});

    const TypeComposition& type() const { return index_.type(); }
    const TypeClassIndex& index() const { return index_; }
    const BinPartition& partition() const { return partition_; }
    std::uint64_t type_size() const { return index_.size(); }

    JointCounts joint_counts(std::span<const Permutation> resolved) const;
    InfoValue leakage(std::span<const Permutation> resolved) const;

private:
    TypeClassIndex index_;
    BinPartition partition_;
    LeakageBudget budget_;
};

/// Exact I(X^n; g(pi_K(X^n)) | X^n in T_P^n) for a fixed cipher.
InfoValue exact_leakage_given_type(const PermutationCipher& cipher, const CompressionMap& g,
                                   const TypeComposition& type, const LeakageBudget& budget = {});

/// Parameters of the three-term bound on the ensemble leakage given a type.
struct TypeBoundParameters {
    std::uint64_t index_count = 1;  // M
    double key_space_size = 1;      // N
    double threshold = 1;           // Delta
    double deviation = 0.5;         // delta
    double type_size = 1;           // |T_P^n|
};

struct LeakageBoundTerms {
    TypeBoundParameters params;
    CipherKind kind = CipherKind::type1;
    double t1 = 0.0;
    double t2 = 0.0;
    double t3 = 0.0;
    std::vector<std::string> warnings;

    double total() const { return t1 + t2 + t3; }
};

/// T1 = (M/Delta) ln|T|, T2 per cipher kind, T3 = delta.
LeakageBoundTerms type_leakage_bound(const TypeBoundParameters& params, CipherKind kind);

/// Default small-set threshold when none is configured: 4M.
double default_threshold(std::uint64_t index_count);
inline constexpr double kDefaultDeviation = 0.5;

struct AsymptoticSettings {
    double threshold = 0.0;       // Delta = M exp(n eps / 2)
    double key_space_size = 0.0;  // N = Delta exp(n eps / 2)
    double deviation = 0.0;       // delta = exp(-n eps / 6)
    double consistency_error = 0.0;  // |(1/n) ln(N/M) - eps|
    std::vector<std::string> warnings;
};

AsymptoticSettings asymptotic_settings(std::size_t n, double epsilon_nats, std::uint64_t index_count,
                                       double desk_scale_keys = 1 << 20);

struct TypeLeakageRow {
    TypeComposition type;
    std::uint64_t type_size = 0;
    double probability = 0.0;
    InfoValue leakage;
    SmallSetReport small_sets;
    LeakageBoundTerms bound;
};

struct DecompositionCheck {
    InfoValue lhs;            // I(X^n; J)
    InfoValue type_entropy;   // H(P_{X^n})
    InfoValue conditional;    // I(X^n; J | P_{X^n})
    InfoValue rhs;            // type_entropy + conditional
    double slack = 0.0;       // rhs - lhs
    bool holds = false;
};

struct LeakageOptions {
    std::optional<double> threshold;  // Delta; default 4M
    double deviation = kDefaultDeviation;
    LeakageBudget budget;
    /// Restrict to these types; all types of positive probability otherwise.
    std::vector<TypeComposition> types;
};

struct LeakageReport {
    CipherKind kind = CipherKind::type1;
    std::uint64_t key_space_size = 0;
    std::uint64_t index_count = 0;
    std::size_t n = 0;
    double threshold = 0.0;
    double deviation = 0.0;
    std::vector<TypeLeakageRow> per_type;
    InfoValue conditional;          // sum_P Pr(P) I(X^n; J | P)
    double weight_total = 0.0;      // sum of Pr(P) over the reported types
    InfoValue type_entropy;         // H(P_{X^n})
    InfoValue type_entropy_bound;   // |X| ln(n+1)
    InfoValue decomposition_upper;  // type_entropy + conditional
};

LeakageReport leakage_given_type_marginal(const PermutationCipher& cipher, const CompressionMap& g,
                                          const SourceModel& source, std::size_t n,
                                          const LeakageOptions& options = {});

/// Exact I(X^n;J) over the whole block space against H(P_{X^n}) + I(X^n;J|P_{X^n}).
DecompositionCheck total_leakage_decomposition_check(const PermutationCipher& cipher, const CompressionMap& g,
                                                     const SourceModel& source, std::size_t n,
                                                     const LeakageBudget& budget = {});

struct EnsembleStats {
    std::vector<double> values;  // nats, one per cipher draw
    double mean = 0.0;
    double standard_error = 0.0;
    double min = 0.0;
    std::size_t argmin = 0;
};

EnsembleStats summarize(std::vector<double> values);

/// Exact leakage given one type for `trials` independently drawn ciphers.
EnsembleStats ensemble_leakage_given_type(CipherKind kind, std::uint64_t key_space_size, const CompressionMap& g,
                                          const TypeComposition& type, std::size_t trials, std::uint64_t seed,
                                          const LeakageBudget& budget = {});

/// Ensemble mean + 3 standard errors against T1 + T2 + T3.
struct EnsembleBoundCheck {
    EnsembleStats ensemble;
    LeakageBoundTerms bound;
    double upper_estimate = 0.0;  // mean + 3 se
    bool holds = false;
};

EnsembleBoundCheck ensemble_bound_check(CipherKind kind, std::uint64_t key_space_size, const CompressionMap& g,
                                  const TypeComposition& type, double threshold, double deviation,
                                  std::size_t trials, std::uint64_t seed, const LeakageBudget& budget = {});

struct KeyRateSearchResult {
    CipherKind kind = CipherKind::type1;
    std::uint64_t key_space_size = 0;
    std::uint64_t index_count = 0;
    EnsembleStats conditional;                 // sum_P Pr(P) I(.|P) per draw
    std::vector<TypeComposition> types;
    std::vector<EnsembleStats> per_type;       // parallel to types
    std::vector<double> type_weights;
    std::vector<LeakageBoundTerms> per_type_bound;
    double averaged_bound = 0.0;               // sum_P Pr(P) (T1+T2+T3)
    std::uint64_t best_seed = 0;
    std::optional<PermutationCipher> best_cipher;
    double best_leakage = 0.0;
};

/// Draws `trials` ciphers with rate R_s = (1/n) ln N > R = (1/n) ln M and keeps the
/// one with the smallest conditional leakage.
KeyRateSearchResult key_rate_search(CipherKind kind, std::uint64_t key_space_size, const CompressionMap& g,
                               const SourceModel& source, std::size_t n, std::size_t trials, std::uint64_t seed,
                               const LeakageOptions& options = {});

Json to_json(const LeakageBoundTerms& b);
Json to_json(const SmallSetReport& s);
Json to_json(const LeakageReport& r);
Json to_json(const DecompositionCheck& d);
Json to_json(const EnsembleStats& e);
Json to_json(const KeyRateSearchResult& t);

/// One row per type: counts, |T|, leakage nats/bits, T1, T2, T3, bound, eta, Delta, delta, N, M, seed.
std::string leakage_to_csv(const LeakageReport& r, std::uint64_t seed);

}  // namespace petc
