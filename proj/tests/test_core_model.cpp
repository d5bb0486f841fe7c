#include <cmath>
#include <numbers>

#include "doctest.h"
#include "petc/core_model.hpp"
#include "petc/errors.hpp"

using namespace petc;

TEST_CASE("entropy of fixed vectors") {
    CHECK(entropy(std::vector<double>{0.5, 0.5}).nats() == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
    CHECK(entropy(std::vector<double>{1.0, 0.0}).nats() == 0.0);
    CHECK(entropy(std::vector<double>{0.3, 0.7}).nats() == doctest::Approx(0.6108643020548935).epsilon(1e-14));
    CHECK(entropy(std::vector<double>{0.5, 0.5}).bits() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("entropy of uniform is ln k") {
    for (std::size_t k = 2; k <= 40; ++k) {
        const auto s = SourceModel::uniform(k);
        CHECK(entropy(s.pmf()).nats() == doctest::Approx(std::log(static_cast<double>(k))).epsilon(1e-13));
    }
}

TEST_CASE("entropy rejects invalid vectors") {
    CHECK_THROWS_AS(entropy(std::vector<double>{0.5, 0.6}), ValidationError);
    CHECK_THROWS_AS(entropy(std::vector<double>{1.2, -0.2}), ValidationError);
    CHECK_THROWS_AS(entropy(std::vector<double>{}), ValidationError);
    CHECK_NOTHROW(entropy(std::vector<double>{0.5, 0.5 + 5e-13}));
}

TEST_CASE("mutual information of fixed tables") {
    CHECK(mutual_information(Table(2, 2, 0.25)).nats() == doctest::Approx(0.0));
    CHECK(mutual_information(Table::from_rows({{0.5, 0.0}, {0.0, 0.5}})).nats() ==
          doctest::Approx(std::numbers::ln2).epsilon(1e-14));
    CHECK(mutual_information(Table::from_rows({{0.4, 0.1}, {0.1, 0.4}})).nats() ==
          doctest::Approx(0.19274475702175753).epsilon(1e-13));
}

TEST_CASE("mutual information is symmetric and equals H(A) - H(A|B)") {
    const auto joint = Table::from_rows({{0.1, 0.05, 0.15}, {0.2, 0.25, 0.05}, {0.05, 0.1, 0.05}});
    Table transposed(3, 3);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b) transposed(b, a) = joint(a, b);
    CHECK(mutual_information(joint).nats() == doctest::Approx(mutual_information(transposed).nats()).epsilon(1e-14));

    std::vector<double> pa(3, 0.0), pb(3, 0.0);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b) {
            pa[a] += joint(a, b);
            pb[b] += joint(a, b);
        }
    double h_a_given_b = 0.0;
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b) h_a_given_b -= joint(a, b) * std::log(joint(a, b) / pb[b]);
    CHECK(mutual_information(joint).nats() == doctest::Approx(entropy(pa).nats() - h_a_given_b).epsilon(1e-13));
}

TEST_CASE("sample_iid") {
    Rng rng(1);
    CHECK(sample_iid(SourceModel({1.0, 0.0}), 5, rng) == Sequence{0, 0, 0, 0, 0});

    Rng big(20261016);
    const auto x = sample_iid(SourceModel::uniform(2), 100000, big);
    const double zeros = static_cast<double>(std::count(x.begin(), x.end(), 0u)) / 1e5;
    CHECK(zeros >= 0.494);
    CHECK(zeros <= 0.506);

    Rng a(99), b(99);
    CHECK(sample_iid(SourceModel({0.2, 0.3, 0.5}), 1000, a) == sample_iid(SourceModel({0.2, 0.3, 0.5}), 1000, b));
    CHECK_THROWS_AS(sample_iid(SourceModel::uniform(2), 0, a), ValidationError);
}

TEST_CASE("sample_iid never emits zero-probability symbols") {
    Rng rng(5);
    const auto x = sample_iid(SourceModel({0.5, 0.0, 0.5}), 20000, rng);
    CHECK(std::count(x.begin(), x.end(), 1u) == 0);
}

TEST_CASE("distortion") {
    const auto h = DistortionMeasure::hamming(2);
    CHECK(distortion(Sequence{0, 1, 1}, Sequence{0, 1, 1}, h) == 0.0);
    CHECK(distortion(Sequence{0, 0, 0, 0}, Sequence{1, 1, 1, 1}, h) == 1.0);
    CHECK(distortion(Sequence{0, 1, 0, 1}, Sequence{0, 1, 1, 1}, h) == 0.25);
    CHECK_THROWS_AS(distortion(Sequence{0, 1}, Sequence{0}, h), ValidationError);

    const DistortionMeasure scaled(Table::from_rows({{0.0, 3.0}, {3.0, 0.0}}));
    CHECK(distortion(Sequence{0, 1, 0, 1}, Sequence{0, 1, 1, 1}, scaled) == doctest::Approx(0.75));
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(SourceModel({1.0}), ValidationError);
    CHECK_THROWS_AS(SourceModel({0.6, 0.6}), ValidationError);
    CHECK_THROWS_AS(DistortionMeasure(Table::from_rows({{0.0, -1.0}, {1.0, 0.0}})), ValidationError);
    CHECK_THROWS_AS(validate_sequence(Sequence{0, 2}, 2), ValidationError);
    CHECK(DistortionMeasure::hamming(3).is_hamming());
    CHECK(InfoValue::from_bits(1.0).nats() == doctest::Approx(std::numbers::ln2));
}
