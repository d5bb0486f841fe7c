#include "petc/leakage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "petc/errors.hpp"
#include "petc/parallel.hpp"
#include "petc/report_format.hpp"

namespace petc {

namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) comp_ += (sum_ - t) + v;
        else comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) return std::numeric_limits<std::uint64_t>::max();
    return a * b;
}

void check_pairs(std::uint64_t sequences, std::uint64_t keys, const LeakageBudget& budget, const std::string& what) {
    const auto pairs = saturating_mul(sequences, keys);
    if (pairs > budget.pair_evaluations) throw BudgetExceeded(what, pairs, budget.pair_evaluations);
}

}  // namespace

BinPartition partition_type_by_bins(const CompressionMap& g, const TypeComposition& type,
                                    std::uint64_t enumeration_budget) {
    if (g.index_count < 1) throw ValidationError("compression map needs at least one index");
    BinPartition bp{type, g.index_count, {}, std::vector<std::vector<std::uint32_t>>(g.index_count)};
    TypeClassStream stream(type, enumeration_budget);
    bp.bin_of.reserve(stream.size());
    Sequence x;
    std::uint32_t pos = 0;
    while (stream.next(x)) {
        const auto j = g(x);
        if (j >= g.index_count)
            throw ValidationError("compression map returned index " + std::to_string(j) + " >= M");
        bp.bin_of.push_back(j);
        bp.bins[j].push_back(pos++);
    }
    return bp;
}

SmallSetReport small_set_report(const BinPartition& bp, double threshold) {
    if (!(threshold > 0.0)) throw ValidationError("small-set threshold must be > 0");
    SmallSetReport r;
    r.threshold = threshold;
    r.type_size = bp.type_size();
    for (std::uint64_t j = 0; j < bp.index_count; ++j) {
        const auto size = static_cast<double>(bp.bin_size(j));
        // |bin| / |T| >= 1/threshold, cross-multiplied
        if (size > 0 && size * threshold >= static_cast<double>(r.type_size)) {
            r.normal_bins.push_back(j);
            r.normal_count += bp.bin_size(j);
        }
    }
    r.eta = 1.0 - static_cast<double>(r.normal_count) / static_cast<double>(r.type_size);
    r.eta_bound = static_cast<double>(bp.index_count) / threshold;
    if (r.eta > r.eta_bound + 1e-12) throw std::logic_error("small-set mass exceeds M / threshold");
    return r;
}

InfoValue leakage_from_counts(const JointCounts& jc) {
    std::vector<std::uint64_t> column(jc.index_count, 0);
    for (std::uint64_t x = 0; x < jc.type_size; ++x)
        for (std::uint64_t j = 0; j < jc.index_count; ++j) column[j] += jc(x, j);
    const double total = static_cast<double>(jc.type_size) * static_cast<double>(jc.key_count);
    const double t = static_cast<double>(jc.type_size);
    CompensatedSum mi;
    for (std::uint64_t x = 0; x < jc.type_size; ++x)
        for (std::uint64_t j = 0; j < jc.index_count; ++j) {
            const auto c = jc(x, j);
            if (c == 0) continue;
            // p(x,j) = c/(T N), p(x) = 1/T, p(j) = C_j/(T N)
            mi.add(static_cast<double>(c) / total * std::log(static_cast<double>(c) * t / static_cast<double>(column[j])));
        }
    return InfoValue::from_nats(std::clamp(mi.value(), 0.0, std::log(t)));
}

TypeLeakageEvaluator::TypeLeakageEvaluator(const CompressionMap& g, TypeComposition type,
                                           const LeakageBudget& budget)
    : index_(std::move(type), budget.enumeration), budget_(budget) {
    if (g.index_count < 1) throw ValidationError("compression map needs at least one index");
    partition_ = BinPartition{index_.type(), g.index_count, {}, std::vector<std::vector<std::uint32_t>>(g.index_count)};
    partition_.bin_of.reserve(index_.size());
    for (std::uint32_t pos = 0; pos < index_.size(); ++pos) {
        const auto j = g(index_.members()[pos]);
        if (j >= g.index_count)
            throw ValidationError("compression map returned index " + std::to_string(j) + " >= M");
        partition_.bin_of.push_back(j);
        partition_.bins[j].push_back(pos);
    }
}

JointCounts TypeLeakageEvaluator::joint_counts(std::span<const Permutation> resolved) const {
    const std::uint64_t t = index_.size();
    const std::uint64_t m = partition_.index_count;
    check_pairs(t, resolved.size(), budget_, "exact leakage for type " + type().label());
    check_pairs(t, m, budget_, "joint table for type " + type().label());
    JointCounts jc{t, resolved.size(), m, std::vector<std::uint32_t>(t * m, 0)};
    const auto& members = index_.members();
    const auto& packer = index_.packer();
    for (const auto& pi : resolved) {
        if (pi.size() != type().length()) throw ValidationError("permutation length != block length");
        for (std::uint64_t x = 0; x < t; ++x) {
            std::uint32_t pos;
            if (packer.fits()) {
                pos = index_.position_of_packed(packer.pack_moved(members[x], pi.mapping()));
            } else {
                pos = *index_.find(pi.apply(members[x]));
            }
            ++jc.counts[x * m + partition_.bin_of[pos]];
        }
    }
    return jc;
}

InfoValue TypeLeakageEvaluator::leakage(std::span<const Permutation> resolved) const {
    return leakage_from_counts(joint_counts(resolved));
}

InfoValue exact_leakage_given_type(const PermutationCipher& cipher, const CompressionMap& g,
                                   const TypeComposition& type, const LeakageBudget& budget) {
    if (type.length() != block_length(cipher)) throw ValidationError("type length != cipher block length");
    const TypeLeakageEvaluator eval(g, type, budget);
    check_pairs(eval.type_size(), key_space_size(cipher), budget, "exact leakage for type " + type.label());
    return eval.leakage(resolve_all(cipher));
}

LeakageBoundTerms type_leakage_bound(const TypeBoundParameters& params, CipherKind kind) {
    if (params.index_count < 1 || !(params.key_space_size > 0) || !(params.threshold > 0) ||
        !(params.deviation > 0) || !(params.type_size >= 1))
        throw ValidationError("type_leakage_bound: parameters must be positive");
    LeakageBoundTerms b;
    b.params = params;
    b.kind = kind;
    const double log_t = std::log(params.type_size);
    const double m = static_cast<double>(params.index_count);
    const double ratio = params.key_space_size / params.threshold;
    const double dev = params.deviation;
    b.t1 = m / params.threshold * log_t;
    if (kind == CipherKind::type1) b.t2 = log_t * 2.0 * std::exp(-dev * dev / (2.0 * (2.0 + dev)) * ratio);
    else b.t2 = log_t / (dev * dev * ratio);
    b.t3 = dev;
    if (dev >= 1.0) b.warnings.push_back("deviation >= 1: outside the small-deviation regime");
    if (params.threshold < m) b.warnings.push_back("threshold < M: small-set term exceeds ln|T|");
    return b;
}

double default_threshold(std::uint64_t index_count) { return 4.0 * static_cast<double>(index_count); }

AsymptoticSettings asymptotic_settings(std::size_t n, double epsilon_nats, std::uint64_t index_count,
                                       double desk_scale_keys) {
    if (!(epsilon_nats > 0.0)) throw ValidationError("epsilon must be > 0");
    if (n < 1 || index_count < 1) throw ValidationError("n and M must be >= 1");
    AsymptoticSettings s;
    const double half = std::exp(0.5 * static_cast<double>(n) * epsilon_nats);
    s.threshold = static_cast<double>(index_count) * half;
    s.key_space_size = s.threshold * half;
    s.deviation = std::exp(-static_cast<double>(n) * epsilon_nats / 6.0);
    s.consistency_error = std::abs(std::log(s.key_space_size / static_cast<double>(index_count)) /
                                       static_cast<double>(n) -
                                   epsilon_nats);
    if (s.deviation > 0.5) s.warnings.push_back("deviation > 0.5: n * epsilon too small for the small-deviation regime");
    if (s.key_space_size > desk_scale_keys)
        s.warnings.push_back("N = " + csv_number(s.key_space_size) + " exceeds desk-scale enumeration");
    return s;
}

namespace {

std::vector<TypeComposition> reported_types(const SourceModel& source, std::size_t n, const LeakageOptions& options) {
    if (!options.types.empty()) {
        for (const auto& t : options.types)
            if (t.length() != n || t.alphabet_size() != source.alphabet_size())
                throw ValidationError("requested type " + t.label() + " does not match n / alphabet");
        return options.types;
    }
    std::vector<TypeComposition> out;
    for (auto& t : all_types(source.alphabet_size(), n))
        if (type_probability(t, source) > 0.0) out.push_back(std::move(t));
    return out;
}

}  // namespace

LeakageReport leakage_given_type_marginal(const PermutationCipher& cipher, const CompressionMap& g,
                                          const SourceModel& source, std::size_t n, const LeakageOptions& options) {
    if (n != block_length(cipher)) throw ValidationError("n != cipher block length");
    LeakageReport r;
    r.kind = kind_of(cipher);
    r.key_space_size = key_space_size(cipher);
    r.index_count = g.index_count;
    r.n = n;
    r.threshold = options.threshold.value_or(default_threshold(g.index_count));
    r.deviation = options.deviation;

    const auto types = reported_types(source, n, options);
    const auto resolved = resolve_all(cipher);
    r.per_type.resize(types.size());
    parallel_for(types.size(), [&](std::size_t i) {
        const TypeLeakageEvaluator eval(g, types[i], options.budget);
        auto& row = r.per_type[i];
        row.type = types[i];
        row.type_size = eval.type_size();
        row.probability = type_probability(types[i], source);
        row.leakage = eval.leakage(resolved);
        row.small_sets = small_set_report(eval.partition(), r.threshold);
        row.bound = type_leakage_bound({g.index_count, static_cast<double>(r.key_space_size), r.threshold, r.deviation,
                                  static_cast<double>(row.type_size)},
                                 r.kind);
    });
    CompensatedSum cond;
    CompensatedSum weight;
    for (const auto& row : r.per_type) {
        cond.add(row.probability * row.leakage.nats());
        weight.add(row.probability);
    }
    r.conditional = InfoValue::from_nats(cond.value());
    r.weight_total = weight.value();
    r.type_entropy = type_entropy(source, n);
    r.type_entropy_bound = type_info_bound(source.alphabet_size(), n);
    r.decomposition_upper = InfoValue::from_nats(r.type_entropy.nats() + r.conditional.nats());
    return r;
}

DecompositionCheck total_leakage_decomposition_check(const PermutationCipher& cipher, const CompressionMap& g,
                                                     const SourceModel& source, std::size_t n,
                                                     const LeakageBudget& budget) {
    if (n != block_length(cipher)) throw ValidationError("n != cipher block length");
    const SequencePacker packer(source.alphabet_size(), n);
    if (!packer.fits() || packer.key_space() > budget.enumeration)
        throw BudgetExceeded("full block enumeration", packer.fits() ? packer.key_space() : ~std::uint64_t{0},
                             budget.enumeration);
    const std::uint64_t blocks = packer.key_space();
    const std::uint64_t keys = key_space_size(cipher);
    const std::uint64_t m = g.index_count;
    check_pairs(blocks, keys, budget, "decomposition check");
    check_pairs(blocks, m, budget, "decomposition joint table");

    const auto resolved = resolve_all(cipher);
    std::vector<double> px(blocks);
    std::vector<std::uint32_t> counts(blocks * m, 0);
    Sequence x(n, 0);
    for (std::uint64_t b = 0; b < blocks; ++b) {
        px[b] = source.sequence_probability(x);
        for (const auto& pi : resolved) {
            const auto j = g(pi.apply(x));
            if (j >= m) throw ValidationError("compression map returned index >= M");
            ++counts[b * m + j];
        }
        for (std::size_t i = 0; i < n && ++x[i] == source.alphabet_size(); ++i) x[i] = 0;  // odometer
    }
    const double kn = static_cast<double>(keys);
    std::vector<double> pj(m, 0.0);
    for (std::uint64_t b = 0; b < blocks; ++b)
        for (std::uint64_t j = 0; j < m; ++j) pj[j] += px[b] * counts[b * m + j] / kn;
    CompensatedSum lhs;
    for (std::uint64_t b = 0; b < blocks; ++b) {
        if (px[b] <= kNegligibleProbability) continue;
        for (std::uint64_t j = 0; j < m; ++j) {
            const auto c = counts[b * m + j];
            if (c == 0) continue;
            const double cond = c / kn;  // P(J = j | X = x)
            lhs.add(px[b] * cond * std::log(cond / pj[j]));
        }
    }

    // Right side through the per-type route.
    CompensatedSum conditional;
    for (const auto& t : all_types(source.alphabet_size(), n)) {
        const double w = type_probability(t, source);
        if (w <= 0.0) continue;
        const TypeLeakageEvaluator eval(g, t, budget);
        conditional.add(w * eval.leakage(resolved).nats());
    }

    DecompositionCheck d;
    d.lhs = InfoValue::from_nats(std::max(lhs.value(), 0.0));
    d.type_entropy = type_entropy(source, n);
    d.conditional = InfoValue::from_nats(conditional.value());
    d.rhs = InfoValue::from_nats(d.type_entropy.nats() + d.conditional.nats());
    d.slack = d.rhs.nats() - d.lhs.nats();
    d.holds = d.slack >= -1e-12;
    return d;
}

EnsembleStats summarize(std::vector<double> values) {
    EnsembleStats e;
    e.values = std::move(values);
    if (e.values.empty()) return e;
    CompensatedSum s;
    for (double v : e.values) s.add(v);
    const double k = static_cast<double>(e.values.size());
    e.mean = s.value() / k;
    double ss = 0.0;
    for (double v : e.values) ss += (v - e.mean) * (v - e.mean);
    e.standard_error = e.values.size() > 1 ? std::sqrt(ss / (k - 1.0) / k) : 0.0;
    const auto it = std::min_element(e.values.begin(), e.values.end());
    e.min = *it;
    e.argmin = static_cast<std::size_t>(it - e.values.begin());
    return e;
}

EnsembleStats ensemble_leakage_given_type(CipherKind kind, std::uint64_t key_space_size, const CompressionMap& g,
                                          const TypeComposition& type, std::size_t trials, std::uint64_t seed,
                                          const LeakageBudget& budget) {
    if (trials < 1) throw ValidationError("trials must be >= 1");
    const TypeLeakageEvaluator eval(g, type, budget);
    check_pairs(eval.type_size(), key_space_size, budget, "ensemble leakage for type " + type.label());
    std::vector<double> values(trials);
    parallel_for(trials, [&](std::size_t t) {
        Rng rng(substream_seed(seed, t));
        const auto cipher = build_cipher(kind, type.length(), key_space_size, rng);
        values[t] = eval.leakage(resolve_all(cipher)).nats();
    });
    return summarize(std::move(values));
}

EnsembleBoundCheck ensemble_bound_check(CipherKind kind, std::uint64_t key_space_size, const CompressionMap& g,
                                  const TypeComposition& type, double threshold, double deviation,
                                  std::size_t trials, std::uint64_t seed, const LeakageBudget& budget) {
    EnsembleBoundCheck c;
    c.ensemble = ensemble_leakage_given_type(kind, key_space_size, g, type, trials, seed, budget);
    c.bound = type_leakage_bound({g.index_count, static_cast<double>(key_space_size), threshold, deviation,
                            type_class_size(type).convert_to<double>()},
                           kind);
    c.upper_estimate = c.ensemble.mean + 3.0 * c.ensemble.standard_error;
    c.holds = c.upper_estimate <= c.bound.total();
    return c;
}

KeyRateSearchResult key_rate_search(CipherKind kind, std::uint64_t key_space_size, const CompressionMap& g,
                               const SourceModel& source, std::size_t n, std::size_t trials, std::uint64_t seed,
                               const LeakageOptions& options) {
    if (trials < 1) throw ValidationError("trials must be >= 1");
    if (key_space_size <= g.index_count)
        throw ValidationError("secret key rate must exceed the compression rate (N > M), got N = " +
                              std::to_string(key_space_size) + ", M = " + std::to_string(g.index_count));
    KeyRateSearchResult r;
    r.kind = kind;
    r.key_space_size = key_space_size;
    r.index_count = g.index_count;
    r.types = reported_types(source, n, options);
    const double threshold = options.threshold.value_or(default_threshold(g.index_count));

    std::vector<TypeLeakageEvaluator> evals;
    evals.reserve(r.types.size());
    for (const auto& t : r.types) {
        evals.emplace_back(g, t, options.budget);
        check_pairs(evals.back().type_size(), key_space_size, options.budget, "leakage for type " + t.label());
        r.type_weights.push_back(type_probability(t, source));
        r.per_type_bound.push_back(type_leakage_bound({g.index_count, static_cast<double>(key_space_size), threshold,
                                                 options.deviation, static_cast<double>(evals.back().type_size())},
                                                kind));
        r.averaged_bound += r.type_weights.back() * r.per_type_bound.back().total();
    }

    // per_trial[t][i]: leakage of draw t on type i
    std::vector<std::vector<double>> per_trial(trials, std::vector<double>(r.types.size()));
    parallel_for(trials, [&](std::size_t t) {
        Rng rng(substream_seed(seed, t));
        const auto resolved = resolve_all(build_cipher(kind, n, key_space_size, rng));
        for (std::size_t i = 0; i < evals.size(); ++i) per_trial[t][i] = evals[i].leakage(resolved).nats();
    });

    std::vector<double> conditional(trials, 0.0);
    for (std::size_t t = 0; t < trials; ++t) {
        CompensatedSum s;
        for (std::size_t i = 0; i < r.types.size(); ++i) s.add(r.type_weights[i] * per_trial[t][i]);
        conditional[t] = s.value();
    }
    for (std::size_t i = 0; i < r.types.size(); ++i) {
        std::vector<double> col(trials);
        for (std::size_t t = 0; t < trials; ++t) col[t] = per_trial[t][i];
        r.per_type.push_back(summarize(std::move(col)));
    }
    r.conditional = summarize(std::move(conditional));
    r.best_seed = substream_seed(seed, r.conditional.argmin);
    Rng best_rng(r.best_seed);
    r.best_cipher = build_cipher(kind, n, key_space_size, best_rng);
    r.best_leakage = r.conditional.min;
    return r;
}

Json to_json(const LeakageBoundTerms& b) {
    Json j;
    j["kind"] = to_string(b.kind);
    j["M"] = b.params.index_count;
    j["N"] = b.params.key_space_size;
    j["Delta"] = b.params.threshold;
    j["delta"] = b.params.deviation;
    j["type_size"] = b.params.type_size;
    j["T1"] = b.t1;
    j["T2"] = b.t2;
    j["T3"] = b.t3;
    j["total"] = b.total();
    j["warnings"] = b.warnings;
    return j;
}

Json to_json(const SmallSetReport& s) {
    Json j;
    j["Delta"] = s.threshold;
    j["normal_bins"] = s.normal_bins;
    j["normal_count"] = s.normal_count;
    j["type_size"] = s.type_size;
    j["eta"] = s.eta;
    j["eta_bound"] = s.eta_bound;
    return j;
}

Json to_json(const LeakageReport& r) {
    Json j;
    j["cipher_kind"] = to_string(r.kind);
    j["N"] = r.key_space_size;
    j["M"] = r.index_count;
    j["n"] = r.n;
    j["Delta"] = r.threshold;
    j["delta"] = r.deviation;
    j["conditional_leakage_nats"] = r.conditional.nats();
    j["conditional_leakage_bits"] = r.conditional.bits();
    j["type_weight_total"] = r.weight_total;
    j["type_entropy_nats"] = r.type_entropy.nats();
    j["type_entropy_bound_nats"] = r.type_entropy_bound.nats();
    j["decomposition_upper_nats"] = r.decomposition_upper.nats();
    Json rows = Json::array();
    for (const auto& row : r.per_type) {
        Json e;
        e["type"] = std::vector<std::uint32_t>(row.type.counts().begin(), row.type.counts().end());
        e["type_size"] = row.type_size;
        e["probability"] = row.probability;
        e["leakage_nats"] = row.leakage.nats();
        e["leakage_bits"] = row.leakage.bits();
        e["small_sets"] = to_json(row.small_sets);
        e["bound"] = to_json(row.bound);
        rows.push_back(std::move(e));
    }
    j["per_type"] = std::move(rows);
    return j;
}

Json to_json(const DecompositionCheck& d) {
    Json j;
    j["lhs_nats"] = d.lhs.nats();
    j["type_entropy_nats"] = d.type_entropy.nats();
    j["conditional_nats"] = d.conditional.nats();
    j["rhs_nats"] = d.rhs.nats();
    j["slack_nats"] = d.slack;
    j["holds"] = d.holds;
    return j;
}

Json to_json(const EnsembleStats& e) {
    Json j;
    j["draws"] = e.values.size();
    j["mean"] = e.mean;
    j["standard_error"] = e.standard_error;
    j["min"] = e.min;
    j["argmin"] = e.argmin;
    return j;
}

Json to_json(const KeyRateSearchResult& t) {
    Json j;
    j["cipher_kind"] = to_string(t.kind);
    j["N"] = t.key_space_size;
    j["M"] = t.index_count;
    j["conditional"] = to_json(t.conditional);
    j["best_seed"] = t.best_seed;
    j["best_leakage_nats"] = t.best_leakage;
    j["averaged_bound_nats"] = t.averaged_bound;
    Json rows = Json::array();
    for (std::size_t i = 0; i < t.types.size(); ++i) {
        Json e;
        e["type"] = std::vector<std::uint32_t>(t.types[i].counts().begin(), t.types[i].counts().end());
        e["weight"] = t.type_weights[i];
        e["ensemble"] = to_json(t.per_type[i]);
        e["bound"] = to_json(t.per_type_bound[i]);
        e["mean_plus_3se_within_bound"] =
            t.per_type[i].mean + 3.0 * t.per_type[i].standard_error <= t.per_type_bound[i].total();
        rows.push_back(std::move(e));
    }
    j["per_type"] = std::move(rows);
    return j;
}

std::string leakage_to_csv(const LeakageReport& r, std::uint64_t seed) {
    CsvWriter csv({"type", "type_size", "probability", "leakage_nats", "leakage_bits", "T1", "T2", "T3",
                   "bound_total", "eta", "Delta", "delta", "N", "M", "seed"});
    for (const auto& row : r.per_type)
        csv.row({row.type.label(), std::to_string(row.type_size), csv_number(row.probability),
                 csv_number(row.leakage.nats()), csv_number(row.leakage.bits()), csv_number(row.bound.t1),
                 csv_number(row.bound.t2), csv_number(row.bound.t3), csv_number(row.bound.total()),
                 csv_number(row.small_sets.eta), csv_number(r.threshold), csv_number(r.deviation),
                 std::to_string(r.key_space_size), std::to_string(r.index_count), std::to_string(seed)});
    return csv.str();
}

}  // namespace petc
