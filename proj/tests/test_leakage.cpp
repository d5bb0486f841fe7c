#include <cmath>
#include <numbers>

#include "doctest.h"
#include "petc/errors.hpp"
#include "petc/leakage.hpp"

using namespace petc;

namespace {

CompressionMap constant_map() {
    return {1, [](std::span<const Symbol>) { return std::uint64_t{0}; }};
}

/// Injective on all binary blocks of length n.
CompressionMap binary_index_map(std::size_t n) {
    return {std::uint64_t{1} << n, [](std::span<const Symbol> x) {
                std::uint64_t v = 0;
                for (std::size_t i = 0; i < x.size(); ++i) v |= std::uint64_t{x[i]} << i;
                return v;
            }};
}

CompressionMap first_symbol_map() {
    return {2, [](std::span<const Symbol> x) { return std::uint64_t{x[0]}; }};
}

PermutationCipher identity_cipher(std::size_t n) { return TypeICipher({Permutation::identity(n)}); }

Codebook fixed_codebook(std::size_t n, std::uint64_t m, std::uint64_t seed) {
    const auto rd = rd_point_for_rate(SourceModel::uniform(2), DistortionMeasure::hamming(2),
                                      std::log(static_cast<double>(m)) / static_cast<double>(n));
    Rng rng(seed);
    return build_codebook(rd, n, m, rng);
}

}  // namespace

TEST_CASE("bin partitions") {
    const TypeComposition t55({5, 5});
    const auto whole = partition_type_by_bins(constant_map(), t55);
    CHECK(whole.bin_size(0) == 252);

    const auto singletons = partition_type_by_bins(binary_index_map(10), t55);
    std::size_t occupied = 0;
    for (std::uint64_t j = 0; j < singletons.index_count; ++j) {
        CHECK(singletons.bin_size(j) <= 1);
        occupied += singletons.bin_size(j);
    }
    CHECK(occupied == 252);

    const auto d = DistortionMeasure::hamming(2);
    const auto cb = fixed_codebook(10, 4, 1);
    const auto bp = partition_type_by_bins(as_compression_map(cb, d), t55);
    std::size_t total = 0;
    for (std::uint64_t j = 0; j < 4; ++j) total += bp.bin_size(j);
    CHECK(total == 252);
    CHECK_THROWS_AS(partition_type_by_bins(constant_map(), TypeComposition({10, 10}), 1000), BudgetExceeded);
}

TEST_CASE("small-set reports") {
    const TypeComposition t22({2, 2});
    const CompressionMap halves{2, [](std::span<const Symbol> x) { return std::uint64_t{x[0]}; }};
    const auto even = small_set_report(partition_type_by_bins(halves, t22), 4);
    CHECK(even.eta == 0.0);

    const auto cb_rep = small_set_report(partition_type_by_bins(constant_map(), t22), 100);
    CHECK(cb_rep.eta_bound == doctest::Approx(0.01));
    const CompressionMap four{4, [](std::span<const Symbol> x) { return std::uint64_t{x[0]}; }};
    CHECK(small_set_report(partition_type_by_bins(four, t22), 100).eta_bound == doctest::Approx(0.04));

    // one singleton bin (the last member) and the rest in bin 0
    const CompressionMap lone{2, [](std::span<const Symbol> x) {
                                  return std::uint64_t{x[0] == 1 && x[1] == 1 && x[2] == 1 && x[3] == 1 && x[4] == 1};
                              }};
    const auto r = small_set_report(partition_type_by_bins(lone, TypeComposition({5, 5})), 16);
    CHECK(r.eta == doctest::Approx(1.0 / 252).epsilon(1e-14));
    CHECK(r.normal_bins == std::vector<std::uint64_t>{0});
}

TEST_CASE("exact leakage given a type") {
    Rng rng(2);
    const TypeComposition t55({5, 5});
    const auto c = build_cipher(CipherKind::type1, 10, 16, rng);
    CHECK(exact_leakage_given_type(c, constant_map(), t55).nats() == 0.0);
    CHECK(exact_leakage_given_type(identity_cipher(10), binary_index_map(10), t55).nats() ==
          doctest::Approx(std::log(252.0)).epsilon(1e-13));
}

TEST_CASE("hand-computed joint table") {
    // identity and a cyclic shift; g reads the first symbol
    const PermutationCipher c = TypeICipher({Permutation::identity(4), Permutation({1, 2, 3, 0})});
    const TypeComposition t22({2, 2});
    const TypeLeakageEvaluator eval(first_symbol_map(), t22);
    const auto jc = eval.joint_counts(resolve_all(c));
    // members 0011 0101 0110 1001 1010 1100
    const std::vector<std::uint32_t> expect{1, 1, 1, 1, 2, 0, 0, 2, 1, 1, 1, 1};
    CHECK(jc.counts == expect);
    const double value = std::log(2.0) / 3.0;
    CHECK(exact_leakage_given_type(c, first_symbol_map(), t22).nats() == doctest::Approx(value).epsilon(1e-14));

    Table joint(6, 2);
    for (std::size_t x = 0; x < 6; ++x)
        for (std::size_t j = 0; j < 2; ++j) joint(x, j) = expect[x * 2 + j] / 12.0;
    CHECK(mutual_information(joint).nats() == doctest::Approx(value).epsilon(1e-14));
}

TEST_CASE("leakage given the type, averaged over types") {
    Rng rng(3);
    const auto d = DistortionMeasure::hamming(2);
    const auto cb = fixed_codebook(6, 4, 4);
    const auto g = as_compression_map(cb, d);
    const auto c = build_cipher(CipherKind::type1, 6, 8, rng);

    const auto degenerate = leakage_given_type_marginal(c, g, SourceModel({1.0, 0.0}), 6);
    CHECK(degenerate.per_type.size() == 1);
    CHECK(degenerate.conditional.nats() == 0.0);

    const auto rep = leakage_given_type_marginal(c, g, SourceModel::uniform(2), 6);
    CHECK(rep.weight_total == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rep.per_type.size() == 7);
    double recomputed = 0.0;
    for (const auto& row : rep.per_type) {
        const auto again = exact_leakage_given_type(c, g, row.type);
        CHECK(again.nats() == row.leakage.nats());
        recomputed += row.probability * again.nats();
        CHECK(row.small_sets.eta <= row.small_sets.eta_bound + 1e-12);
    }
    CHECK(rep.conditional.nats() == doctest::Approx(recomputed).epsilon(1e-14));
    CHECK(leakage_to_csv(rep, 5).find("\n3:3,20,") != std::string::npos);
}

TEST_CASE("decomposition inequality") {
    const auto src = SourceModel::uniform(2);
    const auto flat = total_leakage_decomposition_check(identity_cipher(6), constant_map(), src, 6);
    CHECK(flat.lhs.nats() == 0.0);
    CHECK(flat.holds);

    const auto tight = total_leakage_decomposition_check(identity_cipher(6), binary_index_map(6), src, 6);
    CHECK(tight.lhs.nats() == doctest::Approx(6 * std::numbers::ln2).epsilon(1e-13));
    CHECK(tight.rhs.nats() == doctest::Approx(6 * std::numbers::ln2).epsilon(1e-13));
    CHECK(std::abs(tight.slack) <= 1e-12);
    CHECK(tight.holds);

    const auto d = DistortionMeasure::hamming(2);
    const auto cb = fixed_codebook(6, 4, 7);
    Rng rng(8);
    const auto check = total_leakage_decomposition_check(build_cipher(CipherKind::type1, 6, 8, rng),
                                                         as_compression_map(cb, d), src, 6);
    CHECK(check.holds);
    CHECK(check.slack >= 0.0);
}

TEST_CASE("three-term bound") {
    const double log252 = std::log(252.0);
    CHECK(type_leakage_bound({4, 8192, 16, 0.5, 252}, CipherKind::type1).t1 ==
          doctest::Approx(0.25 * log252).epsilon(1e-14));
    const auto one = type_leakage_bound({4, 8192, 64, 0.5, 252}, CipherKind::type1);
    const auto two = type_leakage_bound({4, 8192, 64, 0.5, 252}, CipherKind::type2);
    CHECK(one.t1 == doctest::Approx(0.34558931796946396).epsilon(1e-14));
    CHECK(one.t2 == doctest::Approx(0.01837492623370823).epsilon(1e-13));
    CHECK(two.t2 == doctest::Approx(0.17279465898473198).epsilon(1e-14));
    CHECK(one.t3 == 0.5);
    CHECK(one.total() == doctest::Approx(0.864).epsilon(1e-3));
    CHECK(two.total() == doctest::Approx(1.019).epsilon(1e-3));
    CHECK(one.warnings.empty());
    CHECK_THROWS_AS(type_leakage_bound({4, 0, 64, 0.5, 252}, CipherKind::type1), ValidationError);
    CHECK_THROWS_AS(type_leakage_bound({4, 8192, 64, -0.5, 252}, CipherKind::type1), ValidationError);
    CHECK_FALSE(type_leakage_bound({4, 8192, 64, 1.5, 252}, CipherKind::type1).warnings.empty());
}

TEST_CASE("asymptotic settings") {
    const auto a = asymptotic_settings(100, 0.1, 2);
    CHECK(a.threshold == doctest::Approx(296.8263182051532).epsilon(1e-13));
    CHECK(a.key_space_size == doctest::Approx(44052.93158961343).epsilon(1e-13));
    CHECK(a.deviation == doctest::Approx(0.18887560283756183).epsilon(1e-13));
    CHECK(a.consistency_error <= 1e-14);
    CHECK(std::log(a.key_space_size / 2) / 100 == doctest::Approx(0.1).epsilon(1e-13));

    const auto edge = asymptotic_settings(10, 1e-6, 4);
    CHECK(edge.threshold == doctest::Approx(4.0).epsilon(1e-4));
    CHECK(edge.deviation == doctest::Approx(1.0).epsilon(1e-4));
    CHECK_FALSE(edge.warnings.empty());
}

TEST_CASE("cipher search") {
    const auto d = DistortionMeasure::hamming(2);
    const auto cb = fixed_codebook(6, 4, 9);
    const auto g = as_compression_map(cb, d);
    const auto src = SourceModel::uniform(2);

    const auto single = key_rate_search(CipherKind::type1, 16, g, src, 6, 1, 77);
    REQUIRE(single.best_cipher.has_value());
    CHECK(single.conditional.values.size() == 1);
    const auto direct = leakage_given_type_marginal(*single.best_cipher, g, src, 6);
    CHECK(single.best_leakage == doctest::Approx(direct.conditional.nats()).epsilon(1e-14));

    const auto many = key_rate_search(CipherKind::type2, 16, g, src, 6, 12, 78);
    CHECK(many.best_leakage <= many.conditional.mean);
    CHECK(many.best_leakage == many.conditional.min);

    CHECK_THROWS_AS(key_rate_search(CipherKind::type1, 4, g, src, 6, 3, 1), ValidationError);

    const auto again = key_rate_search(CipherKind::type2, 16, g, src, 6, 12, 78);
    CHECK(again.conditional.values == many.conditional.values);
}

TEST_CASE("ensemble check against the bound") {
    const auto d = DistortionMeasure::hamming(2);
    const auto cb = fixed_codebook(10, 4, 10);
    const auto chk = ensemble_bound_check(CipherKind::type1, 512, as_compression_map(cb, d),
                                           TypeComposition({5, 5}), 16, 0.5, 20, 11);
    CHECK(chk.holds);
    CHECK(chk.ensemble.values.size() == 20);
}
