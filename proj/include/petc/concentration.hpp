#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "petc/cipher.hpp"
#include "petc/json_types.hpp"
#include "petc/types_method.hpp"

namespace petc {

/// mutual: N independent uniform permutations (Type I).
/// pairwise: the N key-resolved permutations of a Type II cipher.
enum class EnsembleKind { mutual, pairwise };

std::string to_string(EnsembleKind kind);
EnsembleKind ensemble_kind_from_string(const std::string& s);

/// (1 / (N |bin|)) #{i : pi_i(x) in bin}.
double conditional_prob_statistic(std::span<const Permutation> ensemble, std::span<const Symbol> x,
                                  std::span<const Sequence> bin, const TypeComposition& type);

struct DeviationExperiment {
    TypeComposition type;
    std::vector<Sequence> bin;
    Sequence probe;
    std::uint64_t key_space_size = 0;  // N
    double threshold = 1.0;            // Delta
    double deviation = 0.5;            // delta
    EnsembleKind kind = EnsembleKind::mutual;
    std::size_t trials = 1;
    std::uint64_t type_size = 0;

    /// |bin| / |T|
    double bin_fraction() const;
};

/// Throws ValidationError unless the experiment is in the governed regime.
void validate(const DeviationExperiment& exp);

/// Bin = the first bin_size members of the class in lexicographic order,
/// probe = the last member.
DeviationExperiment make_deviation_experiment(const TypeComposition& type, std::size_t bin_size,
                                              std::uint64_t key_space_size, double threshold, double deviation,
                                              EnsembleKind kind, std::size_t trials,
                                              std::uint64_t enumeration_budget = kDefaultEnumerationBudget);

struct TailEstimate {
    std::size_t trials = 0;
    std::size_t events = 0;
    double empirical = 0.0;
    double half_width = 0.0;  // 95% normal interval
    double bound = 1.0;
    bool holds = true;        // empirical - half_width <= bound
    std::string verdict;      // "consistent" or "violated"
};

/// Violations need at least this many observed events.
inline constexpr std::size_t kMinEventsForViolation = 10;

/// Redraws the ensemble `trials` times and counts |stat - 1/|T|| > delta/|T|.
TailEstimate deviation_tail_estimate(const DeviationExperiment& exp, std::uint64_t seed);

/// 2 exp(-delta^2 / (2 (2 + delta)) N / Delta), at most 1.
double chernoff_bound(double deviation, double key_space_size, double threshold);

/// (delta^2 N / Delta)^{-1}, at most 1.
double chebyshev_bound(double deviation, double key_space_size, double threshold);

/// Bound matching the ensemble kind.
double tail_bound(EnsembleKind kind, double deviation, double key_space_size, double threshold);

/// Ratio N/Delta beyond which the exponential bound is the tighter one.
double bound_crossover_ratio(double deviation);

Json to_json(const DeviationExperiment& exp, const TailEstimate& est);

/// One row per experiment: kind, q, N, Delta, delta, trials, empirical, CI, bound, verdict.
std::string concentration_to_csv(std::span<const DeviationExperiment> exps, std::span<const TailEstimate> ests);

}  // namespace petc
