#pragma once

#include <compare>
#include <map>
#include <optional>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "petc/core_model.hpp"

namespace petc {

/// Exact integer for type-class cardinalities.
using BigCount = boost::multiprecision::cpp_int;

inline constexpr std::uint64_t kDefaultEnumerationBudget = 10'000'000;

/// Symbol counts of a sequence: the type P_{x^n}.
class TypeComposition {
public:
    TypeComposition() = default;
    explicit TypeComposition(std::vector<std::uint32_t> counts);

    std::size_t alphabet_size() const { return counts_.size(); }
    std::size_t length() const { return n_; }
    std::span<const std::uint32_t> counts() const { return counts_; }
    std::uint32_t count(Symbol a) const { return counts_.at(a); }

    /// counts / n
    std::vector<double> frequencies() const;

    /// "c0:c1:...", the label used in reports.
    std::string label() const;

    friend bool operator==(const TypeComposition&, const TypeComposition&) = default;
    friend auto operator<=>(const TypeComposition& a, const TypeComposition& b) {
        return a.counts_ <=> b.counts_;
    }

private:
    std::vector<std::uint32_t> counts_;
    std::size_t n_ = 0;
};

TypeComposition type_of(std::span<const Symbol> x, std::size_t alphabet_size);

/// |T_P^n| = n! / prod counts!, exact.
BigCount type_class_size(const TypeComposition& type);

/// ln |T_P^n|.
double log_type_class_size(const TypeComposition& type);

/// |T_P^n| if it fits within budget, otherwise BudgetExceeded.
std::uint64_t checked_type_class_size(const TypeComposition& type, std::uint64_t budget,
                                      const std::string& what_for = "type class enumeration");

/// Lexicographic stream over T_P^n. Restartable with reset().
class TypeClassStream {
public:
    explicit TypeClassStream(TypeComposition type, std::uint64_t budget = kDefaultEnumerationBudget);

    /// Writes the next sequence into out; false once the class is exhausted.
    bool next(Sequence& out);
    void reset();

    std::uint64_t size() const { return size_; }
    const TypeComposition& type() const { return type_; }

private:
    TypeComposition type_;
    std::uint64_t size_;
    Sequence current_;
    bool started_ = false;
    bool done_ = false;
};

/// Whole type class in lexicographic order.
std::vector<Sequence> enumerate_type_class(const TypeComposition& type,
                                           std::uint64_t budget = kDefaultEnumerationBudget);

/// Every type of length n over the alphabet, in lexicographic order of counts.
std::vector<TypeComposition> all_types(std::size_t alphabet_size, std::size_t n);

/// Mixed-radix packing of fixed-length sequences into 64-bit keys.
/// fits() is false when alphabet_size^n does not fit in 64 bits.
class SequencePacker {
public:
    SequencePacker(std::size_t alphabet_size, std::size_t n);

    bool fits() const { return fits_; }
    std::size_t length() const { return n_; }
    /// alphabet_size^n, valid only when fits().
    std::uint64_t key_space() const { return key_space_; }

    std::uint64_t pack(std::span<const Symbol> x) const;
    /// pack(apply(x)) for the position map dest (x[i] lands at dest[i]).
    std::uint64_t pack_moved(std::span<const Symbol> x, std::span<const std::uint32_t> dest) const;

private:
    std::size_t n_;
    bool fits_ = true;
    std::uint64_t key_space_ = 1;
    std::vector<std::uint64_t> place_;
};

/// A type class enumerated once, with lookup from a sequence to its
/// lexicographic position.
class TypeClassIndex {
public:
    explicit TypeClassIndex(TypeComposition type, std::uint64_t budget = kDefaultEnumerationBudget);

    const TypeComposition& type() const { return type_; }
    std::size_t size() const { return members_.size(); }
    const std::vector<Sequence>& members() const { return members_; }
    const SequencePacker& packer() const { return packer_; }

    std::optional<std::uint32_t> find(std::span<const Symbol> x) const;
    /// Position of the member whose packed key is given; key must belong to the class.
    std::uint32_t position_of_packed(std::uint64_t key) const;

private:
    TypeComposition type_;
    std::vector<Sequence> members_;
    SequencePacker packer_;
    std::vector<std::int32_t> dense_;                  // when the key space is small
    std::map<std::uint64_t, std::uint32_t> sparse_;    // packed keys otherwise
    std::map<Sequence, std::uint32_t> unpacked_;       // when packing does not fit
};

/// Pr(P_{X^n} = P) = |T_P^n| prod_x P_X(x)^{counts[x]}.
double type_probability(const TypeComposition& type, const SourceModel& source);

/// |X| ln(n+1): upper bound on H(P_{X^n}).
InfoValue type_info_bound(std::size_t alphabet_size, std::size_t n);

/// Exact entropy of the type random variable P_{X^n}.
InfoValue type_entropy(const SourceModel& source, std::size_t n);

}  // namespace petc
