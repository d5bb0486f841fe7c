#include "petc/rd_codec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "petc/errors.hpp"
#include "petc/parallel.hpp"
#include "petc/report_format.hpp"

namespace petc {

namespace {

void check_compatible(const SourceModel& source, const DistortionMeasure& d) {
    if (d.source_alphabet_size() != source.alphabet_size())
        throw ValidationError("distortion table rows (" + std::to_string(d.source_alphabet_size()) +
                              ") != source alphabet size (" + std::to_string(source.alphabet_size()) + ")");
}

// exp(-slope * d) with forbidden (infinite) entries mapped to zero weight.
Table tilt_weights(const DistortionMeasure& d, double slope) {
    const auto& t = d.table();
    Table a(t.rows(), t.cols());
    for (std::size_t x = 0; x < t.rows(); ++x)
        for (std::size_t y = 0; y < t.cols(); ++y)
            a(x, y) = std::isfinite(t(x, y)) ? std::exp(-slope * t(x, y)) : 0.0;
    return a;
}

}  // namespace

RDPoint blahut_arimoto(const SourceModel& source, const DistortionMeasure& d, double slope,
                       const BlahutArimotoOptions& options) {
    check_compatible(source, d);
    if (!(slope >= 0.0) || !std::isfinite(slope)) throw ValidationError("slope must be finite and >= 0");
    const std::size_t nx = source.alphabet_size();
    const std::size_t ny = d.reconstruction_alphabet_size();
    const auto p = source.pmf();
    const Table weights = tilt_weights(d, slope);

    std::vector<double> q = options.initial_marginal;
    if (q.empty()) {
        q.assign(ny, 1.0 / static_cast<double>(ny));
    } else {
        if (q.size() != ny) throw ValidationError("initial marginal has the wrong size");
        validate_pmf(q, "initial marginal");
    }

    RDPoint pt;
    pt.slope = slope;
    pt.channel = Table(nx, ny);
    std::vector<double> q_next(ny);
    double prev_rate = std::numeric_limits<double>::infinity();

    for (int it = 1; it <= options.max_iterations; ++it) {
        std::fill(q_next.begin(), q_next.end(), 0.0);
        for (std::size_t x = 0; x < nx; ++x) {
            double z = 0.0;
            for (std::size_t y = 0; y < ny; ++y) z += q[y] * weights(x, y);
            if (!(z > 0.0)) {
                // All mass sits on forbidden reconstructions; reopen the support.
                z = 0.0;
                for (std::size_t y = 0; y < ny; ++y) z += weights(x, y);
                for (std::size_t y = 0; y < ny; ++y) pt.channel(x, y) = weights(x, y) / z;
            } else {
                for (std::size_t y = 0; y < ny; ++y) pt.channel(x, y) = q[y] * weights(x, y) / z;
            }
            for (std::size_t y = 0; y < ny; ++y) q_next[y] += p[x] * pt.channel(x, y);
        }

        double rate = 0.0;
        double dist = 0.0;
        for (std::size_t x = 0; x < nx; ++x) {
            if (p[x] <= kNegligibleProbability) continue;
            for (std::size_t y = 0; y < ny; ++y) {
                const double w = pt.channel(x, y);
                if (w <= kNegligibleProbability) continue;
                rate += p[x] * w * std::log(w / q_next[y]);
                dist += p[x] * w * d(static_cast<Symbol>(x), static_cast<Symbol>(y));
            }
        }
        rate = std::max(rate, 0.0);
        q.swap(q_next);
        pt.rate_nats = rate;
        pt.distortion = dist;
        pt.output_marginal = q;
        pt.iterations = it;
        if (std::abs(rate - prev_rate) < options.tolerance) return pt;
        prev_rate = rate;
    }
    throw ConvergenceError("Blahut-Arimoto did not converge within " + std::to_string(options.max_iterations) +
                               " iterations at slope " + std::to_string(slope),
                           std::move(pt));
}

bool is_convex_nonincreasing(std::span<const RDPoint> points, double tol) {
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].distortion > points[i - 1].distortion + tol) return false;
        if (points[i].rate_nats < points[i - 1].rate_nats - tol) return false;
    }
    // Chords between neighbours must get steeper (more negative) as D decreases.
    for (std::size_t i = 2; i < points.size(); ++i) {
        const auto& a = points[i - 2];
        const auto& b = points[i - 1];
        const auto& c = points[i];
        // Cross product sign of (b - a) x (c - b) in the (D, R) plane.
        const double cross = (b.distortion - a.distortion) * (c.rate_nats - b.rate_nats) -
                             (b.rate_nats - a.rate_nats) * (c.distortion - b.distortion);
        if (cross > tol) return false;
    }
    return true;
}

std::vector<RDPoint> rd_sweep(const SourceModel& source, const DistortionMeasure& d,
                              std::span<const double> slopes) {
    for (std::size_t i = 0; i < slopes.size(); ++i) {
        if (!(slopes[i] >= 0.0)) throw ValidationError("rd_sweep: slopes must be nonnegative");
        if (i && slopes[i] < slopes[i - 1]) throw ValidationError("rd_sweep: slopes must be sorted ascending");
    }
    std::vector<RDPoint> out;
    out.reserve(slopes.size());
    for (double s : slopes) out.push_back(blahut_arimoto(source, d, s));
    if (!is_convex_nonincreasing(out, 1e-7))
        throw std::logic_error("rd_sweep: solver returned a non-convex R(D) trace");
    return out;
}

double min_distortion(const SourceModel& source, const DistortionMeasure& d) {
    check_compatible(source, d);
    double sum = 0.0;
    for (std::size_t x = 0; x < source.alphabet_size(); ++x) {
        const auto row = d.table().row(x);
        sum += source.probability(static_cast<Symbol>(x)) * *std::min_element(row.begin(), row.end());
    }
    return sum;
}

namespace {

// Best constant reconstruction symbol.
std::pair<std::size_t, double> zero_rate_choice(const SourceModel& source, const DistortionMeasure& d) {
    std::size_t best_y = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < d.reconstruction_alphabet_size(); ++y) {
        double sum = 0.0;
        for (std::size_t x = 0; x < source.alphabet_size(); ++x) {
            const double p = source.probability(static_cast<Symbol>(x));
            if (p > 0.0) sum += p * d(static_cast<Symbol>(x), static_cast<Symbol>(y));
        }
        if (sum < best) {
            best = sum;
            best_y = y;
        }
    }
    return {best_y, best};
}

RDPoint zero_rate_point(const SourceModel& source, const DistortionMeasure& d) {
    const auto [y_star, dist] = zero_rate_choice(source, d);
    RDPoint pt;
    pt.slope = 0.0;
    pt.rate_nats = 0.0;
    pt.distortion = dist;
    pt.channel = Table(source.alphabet_size(), d.reconstruction_alphabet_size());
    for (std::size_t x = 0; x < source.alphabet_size(); ++x) pt.channel(x, y_star) = 1.0;
    pt.output_marginal.assign(d.reconstruction_alphabet_size(), 0.0);
    pt.output_marginal[y_star] = 1.0;
    return pt;
}

// Bisection over slope on a monotone functional of the BA point.
// increasing(pt) must grow with slope; stop once |value - target| <= tol.
template <class Value>
RDPoint bisect_slope(const SourceModel& source, const DistortionMeasure& d, double target, double tol,
                     Value value, bool value_decreasing) {
    auto below = [&](const RDPoint& pt) {  // still on the low-slope side of the target
        return value_decreasing ? value(pt) > target : value(pt) < target;
    };
    double lo = 0.0;
    double hi = 1.0;
    RDPoint hi_pt = blahut_arimoto(source, d, hi);
    while (below(hi_pt)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw ValidationError("target lies beyond the reachable part of the curve");
        BlahutArimotoOptions warm;
        warm.initial_marginal = hi_pt.output_marginal;
        hi_pt = blahut_arimoto(source, d, hi, warm);
    }
    RDPoint best = hi_pt;
    for (int iter = 0; iter < 200 && std::abs(value(best) - target) > tol && hi - lo > 1e-15 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        BlahutArimotoOptions warm;
        warm.initial_marginal = best.output_marginal;
        // Keep the warm start strictly positive so the support can recover.
        for (auto& q : warm.initial_marginal) q = 0.999 * q + 0.001 / static_cast<double>(warm.initial_marginal.size());
        RDPoint pt = blahut_arimoto(source, d, mid, warm);
        if (below(pt)) lo = mid;
        else hi = mid;
        best = std::move(pt);
    }
    return best;
}

}  // namespace

double zero_rate_distortion(const SourceModel& source, const DistortionMeasure& d) {
    check_compatible(source, d);
    return zero_rate_choice(source, d).second;
}

RDPoint rd_point_for_distortion(const SourceModel& source, const DistortionMeasure& d, double target_distortion) {
    check_compatible(source, d);
    const double d_min = min_distortion(source, d);
    if (target_distortion < d_min)
        throw ValidationError("target distortion below the minimum achievable " + std::to_string(d_min));
    if (target_distortion >= zero_rate_distortion(source, d)) return zero_rate_point(source, d);
    return bisect_slope(
        source, d, target_distortion, 1e-8, [](const RDPoint& pt) { return pt.distortion; }, true);
}

RDPoint rd_point_for_rate(const SourceModel& source, const DistortionMeasure& d, double target_rate_nats) {
    check_compatible(source, d);
    if (target_rate_nats <= 0.0) return zero_rate_point(source, d);
    return bisect_slope(
        source, d, target_rate_nats, 1e-10, [](const RDPoint& pt) { return pt.rate_nats; }, false);
}

Codebook::Codebook(std::vector<Sequence> codewords, std::size_t reconstruction_alphabet_size)
    : codewords_(std::move(codewords)), alphabet_(reconstruction_alphabet_size) {
    if (codewords_.empty()) throw ValidationError("codebook needs at least one codeword");
    for (const auto& c : codewords_) {
        validate_sequence(c, alphabet_);
        if (c.size() != codewords_.front().size()) throw ValidationError("codewords must share one length");
    }
}

double Codebook::rate_nats() const {
    return std::log(static_cast<double>(codewords_.size())) / static_cast<double>(block_length());
}

std::uint64_t Codebook::compress(std::span<const Symbol> x, const DistortionMeasure& d) const {
    if (x.size() != block_length()) throw ValidationError("compress: sequence length != codeword length");
    if (d.reconstruction_alphabet_size() != alphabet_)
        throw ValidationError("compress: distortion measure does not match codebook alphabet");
    std::uint64_t best = 0;
    double best_sum = std::numeric_limits<double>::infinity();
    for (std::uint64_t j = 0; j < codewords_.size(); ++j) {
        const auto& c = codewords_[j];
        double sum = 0.0;
        std::size_t i = 0;
        for (; i < x.size() && sum <= best_sum; ++i) sum += d(x[i], c[i]);
        if (i == x.size() && sum < best_sum) {
            best_sum = sum;
            best = j;
        }
    }
    return best;
}

const Sequence& Codebook::reconstruct(std::uint64_t j) const {
    if (j >= codewords_.size())
        throw ValidationError("index " + std::to_string(j) + " outside codebook of size " +
                              std::to_string(codewords_.size()));
    return codewords_[j];
}

Codebook build_codebook(const RDPoint& rd, std::size_t n, std::uint64_t codebook_size, Rng& rng,
                        std::uint64_t max_codewords) {
    if (codebook_size < 1) throw ValidationError("codebook size must be >= 1");
    if (codebook_size > max_codewords) throw BudgetExceeded("codebook size", codebook_size, max_codewords);
    if (rd.output_marginal.size() < 2) throw ValidationError("output marginal must cover >= 2 symbols");
    // Reuse the i.i.d. sampler: Q_Y plays the role of a source law.
    const SourceModel q(rd.output_marginal);
    std::vector<Sequence> words;
    words.reserve(codebook_size);
    for (std::uint64_t j = 0; j < codebook_size; ++j) words.push_back(sample_iid(q, n, rng));
    return Codebook(std::move(words), rd.output_marginal.size());
}

PerformanceReport measure_performance(const Codebook& cb, const SourceModel& source, const DistortionMeasure& d,
                                      std::size_t trials, Rng& rng) {
    if (trials < 1) throw ValidationError("trials must be >= 1");
    const std::uint64_t parent = rng();
    std::vector<double> per_trial(trials);
    parallel_for(trials, [&](std::size_t t) {
        Rng trial_rng(substream_seed(parent, t));
        const Sequence x = sample_iid(source, cb.block_length(), trial_rng);
        per_trial[t] = distortion(x, cb.reconstruct(cb.compress(x, d)), d);
    });
    double sum = 0.0;
    for (double v : per_trial) sum += v;
    const double mean = sum / static_cast<double>(trials);
    double ss = 0.0;
    for (double v : per_trial) ss += (v - mean) * (v - mean);
    const double var = trials > 1 ? ss / static_cast<double>(trials - 1) : 0.0;

    PerformanceReport r;
    r.rate_nats = cb.rate_nats();
    r.rate_bits = cb.rate_bits();
    r.mean_distortion = mean;
    r.standard_error = std::sqrt(var / static_cast<double>(trials));
    r.half_width = 1.96 * r.standard_error;
    r.trials = trials;
    return r;
}

CompressionMap as_compression_map(const Codebook& cb, const DistortionMeasure& d) {
    return {cb.size(), [&cb, &d](std::span<const Symbol> x) { return cb.compress(x, d); }};
}

namespace {
constexpr const char* kCodebookFormat = "petc-codebook";
constexpr int kCodebookVersion = 1;
}  // namespace

Json codebook_to_json(const Codebook& cb) {
    Json j;
    j["format"] = kCodebookFormat;
    j["version"] = kCodebookVersion;
    j["n"] = cb.block_length();
    j["M"] = cb.size();
    j["reconstruction_alphabet_size"] = cb.reconstruction_alphabet_size();
    j["codewords"] = cb.codewords();
    return j;
}

Codebook codebook_from_json(const Json& j) {
    try {
        if (j.at("format").get<std::string>() != kCodebookFormat) throw ValidationError("not a codebook file");
        if (j.at("version").get<int>() != kCodebookVersion)
            throw ValidationError("unsupported codebook file version " + j.at("version").dump());
        Codebook cb(j.at("codewords").get<std::vector<Sequence>>(),
                    j.at("reconstruction_alphabet_size").get<std::size_t>());
        if (cb.block_length() != j.at("n").get<std::size_t>() || cb.size() != j.at("M").get<std::uint64_t>())
            throw ValidationError("codebook header does not match its codewords");
        return cb;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed codebook file: ") + e.what());
    }
}

void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << codebook_to_json(cb).dump() << '\n';
}

Codebook load_codebook(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return codebook_from_json(Json::parse(in));
}

std::string sweep_to_csv(std::span<const RDPoint> points) {
    CsvWriter csv({"slope", "D", "R_nats", "R_bits"});
    for (const auto& p : points)
        csv.row({csv_number(p.slope), csv_number(p.distortion), csv_number(p.rate_nats), csv_number(p.rate_bits())});
    return csv.str();
}

Json sweep_to_json(std::span<const RDPoint> points) {
    Json arr = Json::array();
    for (const auto& p : points) {
        Json j;
        j["slope"] = p.slope;
        j["D"] = p.distortion;
        j["R_nats"] = p.rate_nats;
        j["R_bits"] = p.rate_bits();
        j["iterations"] = p.iterations;
        j["output_marginal"] = p.output_marginal;
        arr.push_back(std::move(j));
    }
    return arr;
}

}  // namespace petc
