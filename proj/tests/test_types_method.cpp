#include <cmath>
#include <set>

#include "doctest.h"
#include "petc/cipher.hpp"
#include "petc/errors.hpp"
#include "petc/types_method.hpp"

using namespace petc;

TEST_CASE("type_of") {
    CHECK(type_of(Sequence{0, 0, 0}, 2) == TypeComposition({3, 0}));
    CHECK(type_of(Sequence{0, 1, 0, 1}, 2) == TypeComposition({2, 2}));
    CHECK(TypeComposition({2, 2}).label() == "2:2");
}

TEST_CASE("type is invariant under permutation") {
    Rng rng(11);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 1 + rng.uniform_index(20);
        const std::size_t k = 2 + rng.uniform_index(3);
        const auto x = sample_iid(SourceModel::uniform(k), n, rng);
        const auto pi = sample_uniform_permutation(n, rng);
        CHECK(type_of(pi.apply(x), k) == type_of(x, k));
    }
}

TEST_CASE("type class sizes") {
    CHECK(type_class_size(TypeComposition({4, 0})) == 1);
    CHECK(type_class_size(TypeComposition({2, 2})) == 6);
    CHECK(type_class_size(TypeComposition({5, 5})) == 252);
    CHECK(enumerate_type_class(TypeComposition({5, 5})).size() == 252);
    // 100! / (50! 50!) needs more than 64 bits
    const auto big = type_class_size(TypeComposition({50, 50}));
    CHECK(big.str() == "100891344545564193334812497256");
    CHECK(log_type_class_size(TypeComposition({50, 50})) == doctest::Approx(std::log(1.00891344545564193e29)));
    CHECK_THROWS_AS(checked_type_class_size(TypeComposition({50, 50}), 1000), BudgetExceeded);
}

TEST_CASE("enumeration order") {
    CHECK(enumerate_type_class(TypeComposition({1, 1})) == std::vector<Sequence>{{0, 1}, {1, 0}});
    CHECK(enumerate_type_class(TypeComposition({2, 1})) == std::vector<Sequence>{{0, 0, 1}, {0, 1, 0}, {1, 0, 0}});
    const auto all = enumerate_type_class(TypeComposition({5, 5}));
    const std::set<Sequence> unique(all.begin(), all.end());
    CHECK(unique.size() == 252);
    for (const auto& x : all) CHECK(type_of(x, 2) == TypeComposition({5, 5}));
    CHECK(std::is_sorted(all.begin(), all.end()));
    CHECK_THROWS_AS(enumerate_type_class(TypeComposition({10, 10}), 1000), BudgetExceeded);
}

TEST_CASE("type class stream restarts") {
    TypeClassStream s(TypeComposition({1, 2}));
    Sequence x;
    std::vector<Sequence> first, second;
    while (s.next(x)) first.push_back(x);
    s.reset();
    while (s.next(x)) second.push_back(x);
    CHECK(first.size() == 3);
    CHECK(first == second);
}

TEST_CASE("type index lookups") {
    const TypeClassIndex idx(TypeComposition({2, 1, 1}));
    CHECK(idx.size() == 12);
    for (std::uint32_t i = 0; i < idx.size(); ++i) {
        CHECK(idx.find(idx.members()[i]) == i);
        CHECK(idx.position_of_packed(idx.packer().pack(idx.members()[i])) == i);
    }
    CHECK_FALSE(idx.find(Sequence{0, 0, 0, 1}).has_value());
    const Permutation pi({2, 0, 3, 1});
    const auto& x = idx.members()[5];
    CHECK(idx.packer().pack_moved(x, pi.mapping()) == idx.packer().pack(pi.apply(x)));
}

TEST_CASE("type probabilities") {
    CHECK(type_probability(TypeComposition({1, 1}), SourceModel::uniform(2)) == doctest::Approx(0.5));
    CHECK(type_probability(TypeComposition({7, 0}), SourceModel({1.0, 0.0})) == doctest::Approx(1.0));
    const SourceModel p3({0.3, 0.7});
    CHECK(type_probability(TypeComposition({2, 2}), p3) == doctest::Approx(0.2646).epsilon(1e-13));
    double by_sequences = 0.0;
    for (const auto& x : enumerate_type_class(TypeComposition({2, 2}))) by_sequences += p3.sequence_probability(x);
    CHECK(by_sequences == doctest::Approx(0.2646).epsilon(1e-13));
}

TEST_CASE("type probabilities sum to one") {
    for (std::size_t n = 1; n <= 12; ++n) {
        double total = 0.0;
        const auto types = all_types(2, n);
        CHECK(types.size() <= std::pow(n + 1.0, 2));
        for (const auto& t : types) total += type_probability(t, SourceModel({0.3, 0.7}));
        CHECK(std::abs(total - 1.0) <= 1e-10);
    }
    CHECK(all_types(3, 4).size() == 15);
}

TEST_CASE("type information bound") {
    CHECK(type_info_bound(2, 7).nats() == doctest::Approx(4.1588830833596715).epsilon(1e-14));
    CHECK(type_info_bound(2, 7).bits() == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(type_info_bound(2, 1).nats() == doctest::Approx(2 * std::log(2.0)));
    CHECK(type_entropy(SourceModel::uniform(2), 10).nats() == doctest::Approx(1.8759536052468004).epsilon(1e-13));
    for (std::size_t k = 2; k <= 3; ++k)
        for (std::size_t n = 1; n <= 12; ++n)
            CHECK(type_entropy(SourceModel::uniform(k), n).nats() <= type_info_bound(k, n).nats());
}
