#include <cmath>

#include "doctest.h"
#include "petc/concentration.hpp"
#include "petc/errors.hpp"

using namespace petc;

TEST_CASE("statistic on the whole class and on full hits") {
    Rng rng(1);
    const TypeComposition t({2, 2});
    const auto all = enumerate_type_class(t);
    std::vector<Permutation> ens;
    for (int i = 0; i < 7; ++i) ens.push_back(sample_uniform_permutation(4, rng));
    CHECK(conditional_prob_statistic(ens, all[2], all, t) == doctest::Approx(1.0 / 6).epsilon(1e-15));

    const std::vector<Permutation> same(5, Permutation::identity(4));
    const std::vector<Sequence> bin{all[0], all[3], all[4]};
    CHECK(conditional_prob_statistic(same, all[3], bin, t) == doctest::Approx(1.0 / 3));
    CHECK_THROWS_AS(conditional_prob_statistic(same, all[3], std::vector<Sequence>{}, t), ValidationError);
    CHECK_THROWS_AS(conditional_prob_statistic(same, Sequence{0, 0, 0, 1}, bin, t), ValidationError);
}

TEST_CASE("hand-built ensemble with two hits") {
    const TypeComposition t({2, 2});
    const Sequence x{0, 0, 1, 1};
    // identity keeps x; shift gives 1001; reversal gives 1100; swap of the middle gives 0101
    const std::vector<Permutation> ens{Permutation::identity(4), Permutation({1, 2, 3, 0}), Permutation({3, 2, 1, 0}),
                                       Permutation({0, 2, 1, 3})};
    const std::vector<Sequence> bin{{0, 0, 1, 1}, {1, 1, 0, 0}, {0, 1, 1, 0}};
    CHECK(conditional_prob_statistic(ens, x, bin, t) == doctest::Approx(1.0 / 6).epsilon(1e-15));
}

TEST_CASE("statistic sums to one over the class") {
    Rng rng(2);
    const TypeComposition t({3, 2});
    const auto all = enumerate_type_class(t);
    std::vector<Permutation> ens;
    for (int i = 0; i < 9; ++i) ens.push_back(sample_uniform_permutation(5, rng));
    const std::vector<Sequence> bin{all[1], all[4], all[7]};
    // sum over x of the statistic times |bin| counts each hit once per (i, x)
    std::uint64_t hits = 0;
    for (const auto& x : all)
        hits += static_cast<std::uint64_t>(
            std::llround(conditional_prob_statistic(ens, x, bin, t) * ens.size() * bin.size()));
    CHECK(hits == ens.size() * bin.size());
}

TEST_CASE("bound formulas") {
    CHECK(chernoff_bound(0.1, 1000, 1) == doctest::Approx(0.18492495212583998).epsilon(1e-13));
    CHECK(chernoff_bound(0.5, 128, 1) == doctest::Approx(0.003323114546347868).epsilon(1e-13));
    CHECK(chernoff_bound(0.5, 1024, 16) == doctest::Approx(0.08152440795673242).epsilon(1e-13));
    CHECK(chernoff_bound(0.5, 1e-6, 1) == 1.0);
    CHECK(chebyshev_bound(0.1, 1000, 1) == doctest::Approx(0.1));
    CHECK(chebyshev_bound(0.5, 128, 1) == doctest::Approx(0.03125));
    CHECK(chebyshev_bound(0.5, 2, 1) == 1.0);
    CHECK_THROWS_AS(chernoff_bound(0.0, 1, 1), ValidationError);

    for (double r = 1; r < 1e4; r *= 1.7) {
        CHECK(chernoff_bound(0.3, r * 1.1, 1) <= chernoff_bound(0.3, r, 1));
        CHECK(chebyshev_bound(0.3, r * 1.1, 1) <= chebyshev_bound(0.3, r, 1));
        CHECK(chernoff_bound(0.2, r, 1) >= chernoff_bound(0.3, r, 1));
    }
}

TEST_CASE("bound crossover") {
    for (double delta : {0.1, 0.5, 0.9}) {
        const double r = bound_crossover_ratio(delta);
        CHECK(chernoff_bound(delta, r * 1.01, 1) <= chebyshev_bound(delta, r * 1.01, 1));
        CHECK(chernoff_bound(delta, r * 0.99, 1) > chebyshev_bound(delta, r * 0.99, 1));
    }
}

TEST_CASE("experiment validation") {
    const TypeComposition t({5, 5});
    CHECK_THROWS_AS(make_deviation_experiment(t, 10, 64, 16, 0.5, EnsembleKind::mutual, 10), ValidationError);
    const auto ok = make_deviation_experiment(t, 16, 64, 16, 0.5, EnsembleKind::mutual, 10);
    CHECK(ok.bin_fraction() == doctest::Approx(16.0 / 252));
    CHECK(ok.probe == Sequence{1, 1, 1, 1, 1, 0, 0, 0, 0, 0});
    CHECK_THROWS_AS(make_deviation_experiment(t, 16, 64, 16, 0.0, EnsembleKind::mutual, 10), ValidationError);
    CHECK_THROWS_AS(make_deviation_experiment(t, 16, 64, 16, 0.5, EnsembleKind::mutual, 0), ValidationError);
}

TEST_CASE("tail estimates") {
    const TypeComposition t({2, 2});
    // bin is the whole class: the statistic is always exactly 1/|T|
    const auto whole = make_deviation_experiment(t, 6, 32, 1, 0.01, EnsembleKind::mutual, 50);
    const auto est = deviation_tail_estimate(whole, 3);
    CHECK(est.events == 0);
    CHECK(est.empirical == 0.0);
    CHECK(est.verdict == "consistent");

    const auto exp = make_deviation_experiment(TypeComposition({3, 3}), 4, 64, 5, 0.5, EnsembleKind::pairwise, 300);
    const auto a = deviation_tail_estimate(exp, 4);
    const auto b = deviation_tail_estimate(exp, 4);
    CHECK(a.events == b.events);
    CHECK(a.empirical >= 0.0);
    CHECK(a.empirical <= 1.0);
    CHECK(a.holds == (a.empirical - a.half_width <= a.bound));
    CHECK(a.bound == doctest::Approx(chebyshev_bound(0.5, 64, 5)));

    const std::vector<DeviationExperiment> exps{exp};
    const std::vector<TailEstimate> ests{a};
    const auto csv = concentration_to_csv(exps, ests);
    CHECK(csv.rfind("kind,q,N,Delta,delta,trials,empirical,ci_half_width,bound,verdict\npairwise,0.2,64,5,0.5,300,", 0) == 0);
}
