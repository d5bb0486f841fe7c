#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "petc/rng.hpp"

namespace petc {

using Symbol = std::uint32_t;

/// A block of alphabet indices (x^n or y^n).
using Sequence = std::vector<Symbol>;

/// Probability vectors are accepted when they sum to 1 within this slack.
inline constexpr double kPmfTolerance = 1e-12;

/// Probabilities below this are treated as exact zeros in log terms.
inline constexpr double kNegligibleProbability = 1e-300;

/// An information quantity, stored in nats.
class InfoValue {
public:
    constexpr InfoValue() = default;
    static constexpr InfoValue from_nats(double v) { return InfoValue(v); }
    static constexpr InfoValue from_bits(double v) { return InfoValue(v * std::numbers::ln2); }

    constexpr double nats() const { return nats_; }
    constexpr double bits() const { return nats_ / std::numbers::ln2; }

private:
    constexpr explicit InfoValue(double v) : nats_(v) {}
    double nats_ = 0.0;
};

/// Dense row-major table of doubles; used for joint pmfs, channels and
/// distortion matrices.
class Table {
public:
    Table() = default;
    Table(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    /// Builds from nested rows; all rows must have the same length.
    static Table from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> values() const { return data_; }

    std::vector<std::vector<double>> to_rows() const;

    friend bool operator==(const Table&, const Table&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Throws ValidationError unless p is nonnegative and sums to 1.
void validate_pmf(std::span<const double> p, const char* what = "pmf");

/// i.i.d. source law P_X over a finite alphabet of size >= 2.
class SourceModel {
public:
    explicit SourceModel(std::vector<double> pmf);
    static SourceModel uniform(std::size_t alphabet_size);

    std::size_t alphabet_size() const { return pmf_.size(); }
    std::span<const double> pmf() const { return pmf_; }
    double probability(Symbol x) const { return pmf_.at(x); }

    /// Probability of a whole block under the i.i.d. law.
    double sequence_probability(std::span<const Symbol> x) const;

private:
    std::vector<double> pmf_;
};

/// Per-letter distortion d(x, y) >= 0. Entries may be +inf (forbidden
/// reconstructions) as long as every source symbol has a finite one.
class DistortionMeasure {
public:
    explicit DistortionMeasure(Table table);
    static DistortionMeasure hamming(std::size_t alphabet_size);

    std::size_t source_alphabet_size() const { return table_.rows(); }
    std::size_t reconstruction_alphabet_size() const { return table_.cols(); }
    double operator()(Symbol x, Symbol y) const { return table_(x, y); }
    const Table& table() const { return table_; }
    /// Largest finite entry.
    double max_finite() const;
    bool is_hamming() const;

private:
    Table table_;
};

/// Throws ValidationError if any symbol is >= alphabet_size or x is empty.
void validate_sequence(std::span<const Symbol> x, std::size_t alphabet_size);

/// -sum p ln p with 0 ln 0 = 0.
InfoValue entropy(std::span<const double> pmf);

/// I(A;B) of a joint table (rows A, columns B). Round-off below zero is clamped.
InfoValue mutual_information(const Table& joint);

/// n symbols drawn independently from the source; deterministic for a seed.
Sequence sample_iid(const SourceModel& source, std::size_t n, Rng& rng);

/// (1/n) sum_i d(x_i, y_i).
double distortion(std::span<const Symbol> x, std::span<const Symbol> y, const DistortionMeasure& d);

}  // namespace petc
