#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "petc/core_model.hpp"
#include "petc/json_types.hpp"
#include "petc/rng.hpp"

namespace petc {

/// A point on the rate-distortion curve together with the test channel
/// that attains it.
struct RDPoint {
    double slope = 0.0;
    double rate_nats = 0.0;
    double distortion = 0.0;
    Table channel;                        // P_{Y|X}, rows indexed by source symbol
    std::vector<double> output_marginal;  // Q_Y
    int iterations = 0;

    double rate_bits() const { return InfoValue::from_nats(rate_nats).bits(); }
};

struct BlahutArimotoOptions {
    double tolerance = 1e-10;  // on successive rate iterates, nats
    int max_iterations = 10'000;
    /// Warm start; uniform when empty.
    std::vector<double> initial_marginal;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, RDPoint last)
        : std::runtime_error(what), last_(std::move(last)) {}
    const RDPoint& last_iterate() const { return last_; }

private:
    RDPoint last_;
};

/// Minimizes I(X;Y) + slope * E d(X,Y) by alternating minimization.
RDPoint blahut_arimoto(const SourceModel& source, const DistortionMeasure& d, double slope,
                       const BlahutArimotoOptions& options = {});

/// One point per slope; slopes must be nonnegative and ascending.
std::vector<RDPoint> rd_sweep(const SourceModel& source, const DistortionMeasure& d,
                              std::span<const double> slopes);

/// True when (D, R) pairs are non-increasing in D order and convex, within tol.
bool is_convex_nonincreasing(std::span<const RDPoint> points, double tol = 1e-9);

/// sum_x P(x) min_y d(x,y): the distortion at maximal rate.
double min_distortion(const SourceModel& source, const DistortionMeasure& d);

/// min_y sum_x P(x) d(x,y): the smallest distortion reachable at rate 0.
double zero_rate_distortion(const SourceModel& source, const DistortionMeasure& d);

/// The curve point at distortion target_distortion, located by bisection
/// over the slope to within 1e-8 in D.
RDPoint rd_point_for_distortion(const SourceModel& source, const DistortionMeasure& d, double target_distortion);

/// The curve point at rate target_rate_nats, by bisection over the slope.
RDPoint rd_point_for_rate(const SourceModel& source, const DistortionMeasure& d, double target_rate_nats);

inline constexpr std::uint64_t kMaxCodewords = std::uint64_t{1} << 20;

/// M reconstruction codewords of length n; the compressor g maps a block
/// to its nearest codeword and reconstruct(j) returns codeword j.
class Codebook {
public:
    Codebook(std::vector<Sequence> codewords, std::size_t reconstruction_alphabet_size);

    std::size_t block_length() const { return codewords_.front().size(); }
    std::uint64_t size() const { return codewords_.size(); }
    std::size_t reconstruction_alphabet_size() const { return alphabet_; }
    const std::vector<Sequence>& codewords() const { return codewords_; }

    /// (1/n) ln M
    double rate_nats() const;
    double rate_bits() const { return InfoValue::from_nats(rate_nats()).bits(); }

    /// Nearest codeword under d; ties go to the smallest index.
    std::uint64_t compress(std::span<const Symbol> x, const DistortionMeasure& d) const;
    const Sequence& reconstruct(std::uint64_t j) const;

    friend bool operator==(const Codebook&, const Codebook&) = default;

private:
    std::vector<Sequence> codewords_;
    std::size_t alphabet_;
};

/// Codewords drawn i.i.d. from the point's output marginal.
Codebook build_codebook(const RDPoint& rd, std::size_t n, std::uint64_t codebook_size, Rng& rng,
                        std::uint64_t max_codewords = kMaxCodewords);

struct PerformanceReport {
    double rate_nats = 0.0;
    double rate_bits = 0.0;
    double mean_distortion = 0.0;
    double standard_error = 0.0;
    double half_width = 0.0;  // 95% normal interval
    std::size_t trials = 0;
};

/// Monte Carlo distortion of x -> reconstruct(compress(x)) with per-trial substreams.
PerformanceReport measure_performance(const Codebook& cb, const SourceModel& source, const DistortionMeasure& d,
                                      std::size_t trials, Rng& rng);

/// Compression map g with the number M of output indices.
struct CompressionMap {
    std::uint64_t index_count = 1;
    std::function<std::uint64_t(std::span<const Symbol>)> map;

    std::uint64_t operator()(std::span<const Symbol> x) const { return map(x); }
};

/// g = nearest-codeword encoder of cb under d. cb must outlive the map.
CompressionMap as_compression_map(const Codebook& cb, const DistortionMeasure& d);

Json codebook_to_json(const Codebook& cb);
Codebook codebook_from_json(const Json& j);
void save_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);

/// Columns slope, D, R_nats, R_bits.
std::string sweep_to_csv(std::span<const RDPoint> points);
Json sweep_to_json(std::span<const RDPoint> points);

}  // namespace petc
