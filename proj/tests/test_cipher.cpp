#include <cmath>
#include <filesystem>
#include <map>

#include "doctest.h"
#include "petc/cipher.hpp"
#include "petc/errors.hpp"
#include "petc/types_method.hpp"

using namespace petc;

TEST_CASE("uniform permutations") {
    Rng rng(3);
    for (int i = 0; i < 10; ++i) CHECK(sample_uniform_permutation(1, rng).is_identity());

    // chi-square over S_3, 5 degrees of freedom, 1% critical value 15.086
    std::map<std::uint64_t, int> counts;
    const int draws = 60000;
    for (int i = 0; i < draws; ++i) ++counts[permutation_rank(sample_uniform_permutation(3, rng))];
    REQUIRE(counts.size() == 6);
    double chi2 = 0.0;
    for (const auto& [rank, c] : counts) chi2 += (c - draws / 6.0) * (c - draws / 6.0) / (draws / 6.0);
    CHECK(chi2 < 15.086);

    for (int i = 0; i < 1000; ++i) {
        const auto p = sample_uniform_permutation(1 + rng.uniform_index(30), rng);
        CHECK(compose(p.inverse(), p).is_identity());
        CHECK(compose(p, p.inverse()).is_identity());
    }
}

TEST_CASE("permutation validation and application") {
    CHECK_THROWS_AS(Permutation({0, 0, 1}), ValidationError);
    CHECK_THROWS_AS(Permutation({0, 3, 1}), ValidationError);
    const Permutation shift({1, 2, 3, 0});
    CHECK(shift.apply(Sequence{0, 1, 2, 3}) == Sequence{3, 0, 1, 2});
    CHECK(shift.apply_inverse(Sequence{3, 0, 1, 2}) == Sequence{0, 1, 2, 3});
    CHECK_THROWS_AS(shift.apply(Sequence{0, 1, 2}), ValidationError);
    // compose(outer, inner) applies inner first
    const Permutation swap01({1, 0, 2, 3});
    const Sequence x{0, 1, 2, 3};
    CHECK(compose(shift, swap01).apply(x) == shift.apply(swap01.apply(x)));
}

TEST_CASE("type I construction") {
    Rng rng(4);
    const auto one = build_type1(6, 1, rng);
    CHECK(one.key_space_size() == 1);
    const PermutationCipher c1 = one;
    const Sequence x{0, 1, 1, 0, 1, 0};
    CHECK(encrypt(c1, {0, 1}, x) == encrypt(c1, {0, 1}, x));

    const PermutationCipher c = build_type1(8, 4, rng);
    CHECK(stored_permutation_count(c) == 4);
    for (const auto& p : resolve_all(c)) CHECK(p.size() == 8);
    CHECK_THROWS_AS(resolve_permutation(c, 4), ValidationError);
}

TEST_CASE("type II construction and key resolution") {
    Rng rng(5);
    CHECK(key_bit_count(8) == 3);
    CHECK(key_bit_count(5) == 3);
    CHECK(key_bit_count(2) == 1);
    const auto c8 = build_type2(6, 8, rng);
    CHECK(c8.stored_permutation_count() == 3);
    CHECK(build_type2(6, 5, rng).stored_permutation_count() == 3);
    CHECK_THROWS_AS(build_type2(6, 1, rng), ValidationError);

    CHECK(resolve_permutation(c8, 0).is_identity());
    CHECK(resolve_permutation(c8, 1) == c8.bases()[0]);
    CHECK(resolve_permutation(c8, 2) == c8.bases()[1]);
    CHECK(resolve_permutation(c8, 4) == c8.bases()[2]);
    CHECK_THROWS_AS(resolve_permutation(c8, 8), ValidationError);

    // every resolved permutation is the ordered composition of its key's bases
    for (std::uint64_t k = 0; k < 8; ++k) {
        Permutation expect = Permutation::identity(6);
        for (std::size_t bit = 0; bit < 3; ++bit)
            if (k >> bit & 1) expect = compose(c8.bases()[bit], expect);
        CHECK(resolve_permutation(c8, k) == expect);
    }
    const PermutationCipher as_variant = c8;
    const auto all = resolve_all(as_variant);
    for (std::uint64_t k = 0; k < 8; ++k) CHECK(all[k] == resolve_permutation(c8, k));
}

TEST_CASE("type II key 3 with two bases, hand composed") {
    const Permutation s1({1, 2, 3, 0});
    const Permutation s2({1, 0, 3, 2});
    const TypeIICipher c({s1, s2}, 4);
    // sigma_1 sends 0->1, 1->2, 2->3, 3->0; sigma_2 then swaps 0<->1 and 2<->3
    CHECK(resolve_permutation(c, 3) == Permutation({0, 3, 2, 1}));
    CHECK(resolve_permutation(c, 3).apply(Sequence{0, 1, 2, 3}) == Sequence{0, 3, 2, 1});
}

TEST_CASE("round trips, type preservation and wrong keys") {
    Rng rng(6);
    for (const auto kind : {CipherKind::type1, CipherKind::type2}) {
        const auto c = build_cipher(kind, 10, 16, rng);
        for (int t = 0; t < 2000; ++t) {
            const auto x = sample_iid(SourceModel::uniform(3), 10, rng);
            const auto key = sample_key(16, rng);
            const auto y = encrypt(c, key, x);
            CHECK(decrypt(c, key, y) == x);
            CHECK(type_of(y, 3) == type_of(x, 3));
        }
        CHECK_THROWS_AS(encrypt(c, {0, 16}, Sequence{0, 1}), ValidationError);
    }

    // wrong key: exhaustive over binary inputs of length 6
    const auto c = build_type1(6, 2, rng);
    const auto p0 = resolve_permutation(c, 0);
    const auto p1 = resolve_permutation(c, 1);
    if (!(p0 == p1)) {
        bool differs = false;
        for (const auto& x : enumerate_type_class(TypeComposition({3, 3})))
            differs = differs || decrypt(PermutationCipher(c), {1, 2}, encrypt(PermutationCipher(c), {0, 2}, x)) != x;
        CHECK(differs);
    }
}

TEST_CASE("identity key leaves the block unchanged") {
    Rng rng(7);
    const PermutationCipher c = build_type2(5, 4, rng);
    const Sequence x{1, 0, 2, 2, 1};
    CHECK(encrypt(c, {0, 4}, x) == x);
    CHECK(decrypt(c, {0, 4}, x) == x);
}

TEST_CASE("permutations preserve the i.i.d. law exactly") {
    Rng rng(8);
    const SourceModel src({0.3, 0.7});
    for (int t = 0; t < 5; ++t) {
        const auto pi = sample_uniform_permutation(4, rng);
        double worst = 0.0;
        for (std::uint32_t v = 0; v < 16; ++v) {
            const Sequence y{v & 1, v >> 1 & 1, v >> 2 & 1, v >> 3 & 1};
            worst = std::max(worst, std::abs(src.sequence_probability(pi.apply_inverse(y)) - src.sequence_probability(y)));
        }
        CHECK(worst <= 1e-14);
    }
}

TEST_CASE("modulo-sum pad") {
    const ModuloSumCipher pad(4);
    for (std::uint64_t m = 0; m < 4; ++m) CHECK(pad.encrypt(m, 0) == m);
    for (std::uint64_t m = 0; m < 4; ++m) {
        std::vector<int> seen(4, 0);
        for (std::uint64_t k = 0; k < 4; ++k) ++seen[pad.encrypt(m, k)];
        CHECK(seen == std::vector<int>{1, 1, 1, 1});
        for (std::uint64_t k = 0; k < 4; ++k) CHECK(pad.decrypt(pad.encrypt(m, k), k) == m);
    }
    CHECK(pad.encrypt(Sequence{1, 2, 3}, Sequence{3, 3, 3}) == Sequence{0, 1, 2});
    CHECK_THROWS_AS(pad.encrypt(4, 0), ValidationError);
    CHECK_THROWS_AS(pad.encrypt(Sequence{1, 2}, Sequence{1}), ValidationError);
    const std::vector<double> skewed{0.5, 0.2, 0.1, 0.05, 0.05, 0.04, 0.03, 0.03};
    CHECK(modulo_sum_leakage(ModuloSumCipher(8), skewed).nats() <= 1e-12);
}

TEST_CASE("type II resolved marginals") {
    Rng rng(9);
    const auto m = type2_resolved_marginals(3, 4, 6000, rng);
    // key 0 is always the identity (rank 0)
    CHECK(m.frequencies[0][0] == 1.0);
    CHECK(m.max_deviation[0] == doctest::Approx(5.0 / 6.0));
    for (std::uint64_t k = 1; k < 4; ++k) CHECK(m.max_deviation[k] < 0.03);
}

TEST_CASE("cipher persistence") {
    Rng rng(10);
    const auto dir = std::filesystem::temp_directory_path();
    for (const auto kind : {CipherKind::type1, CipherKind::type2}) {
        const auto c = build_cipher(kind, 7, 6, rng);
        const auto path = dir / ("petc_cipher_" + to_string(kind) + ".json");
        save_cipher(c, path);
        CHECK(load_cipher(path) == c);
        CHECK(cipher_from_json(cipher_to_json(c)) == c);
        std::filesystem::remove(path);
    }
    auto j = cipher_to_json(build_cipher(CipherKind::type1, 3, 2, rng));
    j["format"] = "other";
    CHECK_THROWS_AS(cipher_from_json(j), ValidationError);
}
