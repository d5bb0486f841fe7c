#include "petc/types_method.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "petc/errors.hpp"

namespace petc {

TypeComposition::TypeComposition(std::vector<std::uint32_t> counts) : counts_(std::move(counts)) {
    if (counts_.empty()) throw ValidationError("type composition needs at least one symbol");
    for (auto c : counts_) n_ += c;
    if (n_ == 0) throw ValidationError("type composition must have length >= 1");
}

std::vector<double> TypeComposition::frequencies() const {
    std::vector<double> f(counts_.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = static_cast<double>(counts_[i]) / static_cast<double>(n_);
    return f;
}

std::string TypeComposition::label() const {
    std::string s;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        if (i) s += ':';
        s += std::to_string(counts_[i]);
    }
    return s;
}

TypeComposition type_of(std::span<const Symbol> x, std::size_t alphabet_size) {
    validate_sequence(x, alphabet_size);
    std::vector<std::uint32_t> counts(alphabet_size, 0);
    for (Symbol s : x) ++counts[s];
    return TypeComposition(std::move(counts));
}

BigCount type_class_size(const TypeComposition& type) {
    // Product of binomials C(running, c) keeps every intermediate integral.
    BigCount size = 1;
    std::uint64_t running = 0;
    for (auto c : type.counts()) {
        for (std::uint32_t k = 1; k <= c; ++k) {
            ++running;
            size *= running;
            size /= k;
        }
    }
    return size;
}

double log_type_class_size(const TypeComposition& type) {
    return std::log(type_class_size(type).convert_to<double>());
}

std::uint64_t checked_type_class_size(const TypeComposition& type, std::uint64_t budget,
                                      const std::string& what_for) {
    const BigCount size = type_class_size(type);
    if (size > budget) {
        const std::uint64_t required = size > std::numeric_limits<std::uint64_t>::max()
                                           ? std::numeric_limits<std::uint64_t>::max()
                                           : size.convert_to<std::uint64_t>();
        throw BudgetExceeded(what_for + " for type " + type.label(), required, budget);
    }
    return size.convert_to<std::uint64_t>();
}

TypeClassStream::TypeClassStream(TypeComposition type, std::uint64_t budget)
    : type_(std::move(type)), size_(checked_type_class_size(type_, budget)) {
    reset();
}

void TypeClassStream::reset() {
    current_.clear();
    current_.reserve(type_.length());
    for (std::size_t a = 0; a < type_.alphabet_size(); ++a)
        current_.insert(current_.end(), type_.count(static_cast<Symbol>(a)), static_cast<Symbol>(a));
    started_ = false;
    done_ = false;
}

bool TypeClassStream::next(Sequence& out) {
    if (done_) return false;
    if (started_ && !std::next_permutation(current_.begin(), current_.end())) {
        done_ = true;
        return false;
    }
    started_ = true;
    out = current_;
    return true;
}

std::vector<Sequence> enumerate_type_class(const TypeComposition& type, std::uint64_t budget) {
    TypeClassStream stream(type, budget);
    std::vector<Sequence> out;
    out.reserve(stream.size());
    Sequence x;
    while (stream.next(x)) out.push_back(x);
    return out;
}

std::vector<TypeComposition> all_types(std::size_t alphabet_size, std::size_t n) {
    if (alphabet_size < 1 || n < 1) throw ValidationError("all_types: need alphabet >= 1 and n >= 1");
    std::vector<TypeComposition> out;
    std::vector<std::uint32_t> counts(alphabet_size, 0);
    std::function<void(std::size_t, std::uint32_t)> fill = [&](std::size_t pos, std::uint32_t left) {
        if (pos + 1 == alphabet_size) {
            counts[pos] = left;
            out.emplace_back(counts);
            return;
        }
        for (std::uint32_t c = 0; c <= left; ++c) {
            counts[pos] = c;
            fill(pos + 1, left - c);
        }
    };
    fill(0, static_cast<std::uint32_t>(n));
    return out;
}

SequencePacker::SequencePacker(std::size_t alphabet_size, std::size_t n) : n_(n), place_(n) {
    if (alphabet_size < 1 || n < 1) throw ValidationError("packer needs alphabet >= 1 and n >= 1");
    std::uint64_t weight = 1;
    for (std::size_t i = 0; i < n; ++i) {
        place_[i] = weight;
        if (weight > std::numeric_limits<std::uint64_t>::max() / alphabet_size) {
            fits_ = false;
            break;
        }
        weight *= alphabet_size;
    }
    key_space_ = fits_ ? weight : 0;
}

std::uint64_t SequencePacker::pack(std::span<const Symbol> x) const {
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < n_; ++i) key += x[i] * place_[i];
    return key;
}

std::uint64_t SequencePacker::pack_moved(std::span<const Symbol> x, std::span<const std::uint32_t> dest) const {
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < n_; ++i) key += x[i] * place_[dest[i]];
    return key;
}

namespace {
constexpr std::uint64_t kDenseIndexLimit = std::uint64_t{1} << 24;
}

TypeClassIndex::TypeClassIndex(TypeComposition type, std::uint64_t budget)
    : type_(std::move(type)),
      members_(enumerate_type_class(type_, budget)),
      packer_(type_.alphabet_size(), type_.length()) {
    if (!packer_.fits()) {
        for (std::uint32_t i = 0; i < members_.size(); ++i) unpacked_.emplace(members_[i], i);
    } else if (packer_.key_space() <= kDenseIndexLimit) {
        dense_.assign(packer_.key_space(), -1);
        for (std::uint32_t i = 0; i < members_.size(); ++i) dense_[packer_.pack(members_[i])] = static_cast<std::int32_t>(i);
    } else {
        for (std::uint32_t i = 0; i < members_.size(); ++i) sparse_.emplace(packer_.pack(members_[i]), i);
    }
}

std::optional<std::uint32_t> TypeClassIndex::find(std::span<const Symbol> x) const {
    if (x.size() != type_.length()) return std::nullopt;
    for (Symbol s : x)
        if (s >= type_.alphabet_size()) return std::nullopt;
    if (!packer_.fits()) {
        const auto it = unpacked_.find(Sequence(x.begin(), x.end()));
        if (it == unpacked_.end()) return std::nullopt;
        return it->second;
    }
    const auto key = packer_.pack(x);
    if (!dense_.empty()) {
        if (dense_[key] < 0) return std::nullopt;
        return static_cast<std::uint32_t>(dense_[key]);
    }
    const auto it = sparse_.find(key);
    if (it == sparse_.end()) return std::nullopt;
    return it->second;
}

std::uint32_t TypeClassIndex::position_of_packed(std::uint64_t key) const {
    if (!dense_.empty()) return static_cast<std::uint32_t>(dense_[key]);
    return sparse_.at(key);
}

double type_probability(const TypeComposition& type, const SourceModel& source) {
    if (type.alphabet_size() != source.alphabet_size())
        throw ValidationError("type_probability: alphabet size mismatch");
    double p = type_class_size(type).convert_to<double>();
    for (std::size_t a = 0; a < type.alphabet_size(); ++a) {
        const auto c = type.count(static_cast<Symbol>(a));
        if (c > 0) p *= std::pow(source.probability(static_cast<Symbol>(a)), static_cast<double>(c));
    }
    return p;
}

InfoValue type_info_bound(std::size_t alphabet_size, std::size_t n) {
    if (n < 1) throw ValidationError("type_info_bound: n must be >= 1");
    return InfoValue::from_nats(static_cast<double>(alphabet_size) * std::log(static_cast<double>(n) + 1.0));
}

InfoValue type_entropy(const SourceModel& source, std::size_t n) {
    double h = 0.0;
    for (const auto& t : all_types(source.alphabet_size(), n)) {
        const double p = type_probability(t, source);
        if (p > kNegligibleProbability) h -= p * std::log(p);
    }
    return InfoValue::from_nats(std::max(h, 0.0));
}

}  // namespace petc
