#include "petc/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "petc/errors.hpp"

namespace petc {

Table Table::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Table t(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != t.cols()) throw ValidationError("table rows have unequal lengths");
        std::copy(rows[r].begin(), rows[r].end(), t.row(r).begin());
    }
    return t;
}

std::vector<std::vector<double>> Table::to_rows() const {
    std::vector<std::vector<double>> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r].assign(row(r).begin(), row(r).end());
    return out;
}

void validate_pmf(std::span<const double> p, const char* what) {
    if (p.empty()) throw ValidationError(std::string(what) + ": empty probability vector");
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError(std::string(what) + ": negative or non-finite probability");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kPmfTolerance)
        throw ValidationError(std::string(what) + ": probabilities sum to " + std::to_string(sum));
}

SourceModel::SourceModel(std::vector<double> pmf) : pmf_(std::move(pmf)) {
    if (pmf_.size() < 2) throw ValidationError("source alphabet must have at least 2 symbols");
    validate_pmf(pmf_, "source pmf");
}

SourceModel SourceModel::uniform(std::size_t alphabet_size) {
    if (alphabet_size < 2) throw ValidationError("source alphabet must have at least 2 symbols");
    return SourceModel(std::vector<double>(alphabet_size, 1.0 / static_cast<double>(alphabet_size)));
}

double SourceModel::sequence_probability(std::span<const Symbol> x) const {
    double p = 1.0;
    for (Symbol s : x) p *= pmf_.at(s);
    return p;
}

DistortionMeasure::DistortionMeasure(Table table) : table_(std::move(table)) {
    if (table_.rows() == 0 || table_.cols() == 0) throw ValidationError("empty distortion table");
    for (std::size_t x = 0; x < table_.rows(); ++x) {
        bool has_finite = false;
        for (double v : table_.row(x)) {
            if (std::isnan(v) || v < 0.0) throw ValidationError("distortion entries must be >= 0");
            has_finite = has_finite || std::isfinite(v);
        }
        if (!has_finite)
            throw ValidationError("source symbol " + std::to_string(x) + " has no finite distortion");
    }
}

DistortionMeasure DistortionMeasure::hamming(std::size_t alphabet_size) {
    Table t(alphabet_size, alphabet_size, 1.0);
    for (std::size_t i = 0; i < alphabet_size; ++i) t(i, i) = 0.0;
    return DistortionMeasure(std::move(t));
}

double DistortionMeasure::max_finite() const {
    double m = 0.0;
    for (double v : table_.values())
        if (std::isfinite(v)) m = std::max(m, v);
    return m;
}

bool DistortionMeasure::is_hamming() const {
    if (table_.rows() != table_.cols()) return false;
    for (std::size_t x = 0; x < table_.rows(); ++x)
        for (std::size_t y = 0; y < table_.cols(); ++y)
            if (table_(x, y) != (x == y ? 0.0 : 1.0)) return false;
    return true;
}

void validate_sequence(std::span<const Symbol> x, std::size_t alphabet_size) {
    if (x.empty()) throw ValidationError("sequence must be non-empty");
    for (Symbol s : x)
        if (s >= alphabet_size)
            throw ValidationError("symbol " + std::to_string(s) + " outside alphabet of size " +
                                  std::to_string(alphabet_size));
}

InfoValue entropy(std::span<const double> pmf) {
    validate_pmf(pmf);
    double h = 0.0;
    for (double p : pmf)
        if (p > kNegligibleProbability) h -= p * std::log(p);
    return InfoValue::from_nats(std::max(h, 0.0));
}

InfoValue mutual_information(const Table& joint) {
    validate_pmf(joint.values(), "joint table");
    std::vector<double> pa(joint.rows(), 0.0);
    std::vector<double> pb(joint.cols(), 0.0);
    for (std::size_t a = 0; a < joint.rows(); ++a)
        for (std::size_t b = 0; b < joint.cols(); ++b) {
            pa[a] += joint(a, b);
            pb[b] += joint(a, b);
        }
    double mi = 0.0;
    for (std::size_t a = 0; a < joint.rows(); ++a)
        for (std::size_t b = 0; b < joint.cols(); ++b) {
            const double p = joint(a, b);
            if (p > kNegligibleProbability) mi += p * std::log(p / (pa[a] * pb[b]));
        }
    return InfoValue::from_nats(std::max(mi, 0.0));
}

Sequence sample_iid(const SourceModel& source, std::size_t n, Rng& rng) {
    if (n == 0) throw ValidationError("sequence length must be >= 1");
    const auto pmf = source.pmf();
    std::vector<double> cdf(pmf.size());
    double acc = 0.0;
    Symbol last_positive = 0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        acc += pmf[i];
        cdf[i] = acc;
        if (pmf[i] > 0.0) last_positive = static_cast<Symbol>(i);
    }
    Sequence out(n);
    for (auto& s : out) {
        const double u = rng.uniform_real();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        // Rounding can leave the cdf tail below 1; fall back to the last live symbol.
        s = it == cdf.end() ? last_positive : static_cast<Symbol>(it - cdf.begin());
    }
    return out;
}

double distortion(std::span<const Symbol> x, std::span<const Symbol> y, const DistortionMeasure& d) {
    if (x.size() != y.size())
        throw ValidationError("distortion: length mismatch " + std::to_string(x.size()) + " vs " +
                              std::to_string(y.size()));
    if (x.empty()) throw ValidationError("distortion: empty sequences");
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += d(x[i], y[i]);
    return sum / static_cast<double>(x.size());
}

}  // namespace petc
