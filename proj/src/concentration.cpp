#include "petc/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "petc/errors.hpp"
#include "petc/parallel.hpp"
#include "petc/report_format.hpp"

namespace petc {

std::string to_string(EnsembleKind kind) { return kind == EnsembleKind::mutual ? "mutual" : "pairwise"; }

EnsembleKind ensemble_kind_from_string(const std::string& s) {
    if (s == "mutual") return EnsembleKind::mutual;
    if (s == "pairwise") return EnsembleKind::pairwise;
    throw ValidationError("unknown ensemble kind '" + s + "' (expected mutual or pairwise)");
}

namespace {

void require_member(std::span<const Symbol> x, const TypeComposition& type, const char* what) {
    if (x.size() != type.length() || type_of(x, type.alphabet_size()) != type)
        throw ValidationError(std::string(what) + " is not in the type class " + type.label());
}

}  // namespace

double conditional_prob_statistic(std::span<const Permutation> ensemble, std::span<const Symbol> x,
                                  std::span<const Sequence> bin, const TypeComposition& type) {
    if (bin.empty()) throw ValidationError("bin must be non-empty");
    if (ensemble.empty()) throw ValidationError("ensemble must be non-empty");
    require_member(x, type, "probe sequence");
    for (const auto& b : bin) require_member(b, type, "bin member");
    const std::set<Sequence> members(bin.begin(), bin.end());
    std::size_t hits = 0;
    for (const auto& pi : ensemble) hits += members.contains(pi.apply(x));
    return static_cast<double>(hits) / (static_cast<double>(ensemble.size()) * static_cast<double>(members.size()));
}

double DeviationExperiment::bin_fraction() const {
    return static_cast<double>(bin.size()) / static_cast<double>(type_size);
}

void validate(const DeviationExperiment& exp) {
    if (exp.bin.empty()) throw ValidationError("bin must be non-empty");
    if (exp.trials < 1) throw ValidationError("trials must be >= 1");
    if (exp.key_space_size < 1) throw ValidationError("N must be >= 1");
    if (!(exp.deviation > 0.0)) throw ValidationError("deviation must be > 0");
    if (!(exp.threshold > 0.0)) throw ValidationError("threshold must be > 0");
    require_member(exp.probe, exp.type, "probe sequence");
    for (const auto& b : exp.bin) require_member(b, exp.type, "bin member");
    if (exp.type_size != checked_type_class_size(exp.type, ~std::uint64_t{0}))
        throw ValidationError("type_size does not match the type class");
    // q >= 1/Delta, cross-multiplied
    if (static_cast<double>(exp.bin.size()) * exp.threshold < static_cast<double>(exp.type_size))
        throw ValidationError("bin fraction " + csv_number(exp.bin_fraction()) + " is below 1/Delta = " +
                              csv_number(1.0 / exp.threshold));
}

DeviationExperiment make_deviation_experiment(const TypeComposition& type, std::size_t bin_size,
                                              std::uint64_t key_space_size, double threshold, double deviation,
                                              EnsembleKind kind, std::size_t trials,
                                              std::uint64_t enumeration_budget) {
    auto members = enumerate_type_class(type, enumeration_budget);
    if (bin_size < 1 || bin_size > members.size())
        throw ValidationError("bin size must lie in [1, " + std::to_string(members.size()) + "]");
    DeviationExperiment exp;
    exp.type = type;
    exp.type_size = members.size();
    exp.probe = members.back();
    members.resize(bin_size);
    exp.bin = std::move(members);
    exp.key_space_size = key_space_size;
    exp.threshold = threshold;
    exp.deviation = deviation;
    exp.kind = kind;
    exp.trials = trials;
    validate(exp);
    return exp;
}

TailEstimate deviation_tail_estimate(const DeviationExperiment& exp, std::uint64_t seed) {
    validate(exp);
    const std::size_t n = exp.type.length();
    const SequencePacker packer(exp.type.alphabet_size(), n);
    std::set<Sequence> bin_set(exp.bin.begin(), exp.bin.end());
    std::unordered_set<std::uint64_t> bin_keys;
    if (packer.fits())
        for (const auto& b : exp.bin) bin_keys.insert(packer.pack(b));
    auto in_bin = [&](const Permutation& pi) {
        if (packer.fits()) return bin_keys.contains(packer.pack_moved(exp.probe, pi.mapping()));
        return bin_set.contains(pi.apply(exp.probe));
    };

    const double nb = static_cast<double>(exp.key_space_size) * static_cast<double>(bin_set.size());
    const double t = static_cast<double>(exp.type_size);
    std::vector<char> event(exp.trials, 0);
    parallel_for(exp.trials, [&](std::size_t trial) {
        Rng rng(substream_seed(seed, trial));
        std::uint64_t hits = 0;
        if (exp.kind == EnsembleKind::mutual) {
            for (std::uint64_t i = 0; i < exp.key_space_size; ++i) hits += in_bin(sample_uniform_permutation(n, rng));
        } else {
            const PermutationCipher cipher = build_type2(n, exp.key_space_size, rng);
            for (const auto& pi : resolve_all(cipher)) hits += in_bin(pi);
        }
        // |hits / (N b) - 1/T| > delta / T, scaled by N b T
        event[trial] = std::abs(static_cast<double>(hits) * t - nb) > exp.deviation * nb;
    });

    TailEstimate est;
    est.trials = exp.trials;
    est.events = static_cast<std::size_t>(std::count(event.begin(), event.end(), 1));
    est.empirical = static_cast<double>(est.events) / static_cast<double>(est.trials);
    est.half_width = 1.96 * std::sqrt(est.empirical * (1.0 - est.empirical) / static_cast<double>(est.trials));
    est.bound = tail_bound(exp.kind, exp.deviation, static_cast<double>(exp.key_space_size), exp.threshold);
    est.holds = est.empirical - est.half_width <= est.bound;
    est.verdict = !est.holds && est.events >= kMinEventsForViolation ? "violated" : "consistent";
    return est;
}

double chernoff_bound(double deviation, double key_space_size, double threshold) {
    if (!(deviation > 0) || !(key_space_size > 0) || !(threshold > 0))
        throw ValidationError("chernoff_bound: arguments must be > 0");
    const double rate = deviation * deviation / (2.0 * (2.0 + deviation));
    return std::min(1.0, 2.0 * std::exp(-rate * key_space_size / threshold));
}

double chebyshev_bound(double deviation, double key_space_size, double threshold) {
    if (!(deviation > 0) || !(key_space_size > 0) || !(threshold > 0))
        throw ValidationError("chebyshev_bound: arguments must be > 0");
    return std::min(1.0, threshold / (deviation * deviation * key_space_size));
}

double tail_bound(EnsembleKind kind, double deviation, double key_space_size, double threshold) {
    return kind == EnsembleKind::mutual ? chernoff_bound(deviation, key_space_size, threshold)
                                        : chebyshev_bound(deviation, key_space_size, threshold);
}

double bound_crossover_ratio(double deviation) {
    if (!(deviation > 0)) throw ValidationError("deviation must be > 0");
    const double a = deviation * deviation / (2.0 * (2.0 + deviation));
    // log(chernoff / chebyshev) = ln 2 - a r + ln(delta^2 r): concave in r,
    // positive at its peak r = 1/a, so the larger root is the crossover.
    auto gap = [&](double r) { return std::log(2.0) - a * r + std::log(deviation * deviation * r); };
    double lo = 1.0 / a;
    double hi = 2.0 * lo;
    while (gap(hi) > 0) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) > 0 ? lo : hi) = mid;
    }
    return hi;
}

Json to_json(const DeviationExperiment& exp, const TailEstimate& est) {
    Json j;
    j["kind"] = to_string(exp.kind);
    j["type"] = std::vector<std::uint32_t>(exp.type.counts().begin(), exp.type.counts().end());
    j["type_size"] = exp.type_size;
    j["bin_size"] = exp.bin.size();
    j["q"] = exp.bin_fraction();
    j["probe"] = exp.probe;
    j["N"] = exp.key_space_size;
    j["Delta"] = exp.threshold;
    j["delta"] = exp.deviation;
    j["trials"] = est.trials;
    j["events"] = est.events;
    j["empirical"] = est.empirical;
    j["ci_half_width"] = est.half_width;
    j["bound"] = est.bound;
    j["holds"] = est.holds;
    j["verdict"] = est.verdict;
    j["crossover_ratio"] = bound_crossover_ratio(exp.deviation);
    return j;
}

std::string concentration_to_csv(std::span<const DeviationExperiment> exps, std::span<const TailEstimate> ests) {
    if (exps.size() != ests.size()) throw ValidationError("experiments and estimates differ in length");
    CsvWriter csv({"kind", "q", "N", "Delta", "delta", "trials", "empirical", "ci_half_width", "bound", "verdict"});
    for (std::size_t i = 0; i < exps.size(); ++i)
        csv.row({to_string(exps[i].kind), csv_number(exps[i].bin_fraction()), std::to_string(exps[i].key_space_size),
                 csv_number(exps[i].threshold), csv_number(exps[i].deviation), std::to_string(ests[i].trials),
                 csv_number(ests[i].empirical), csv_number(ests[i].half_width), csv_number(ests[i].bound),
                 ests[i].verdict});
    return csv.str();
}

}  // namespace petc
