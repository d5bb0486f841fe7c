#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>


#include "petc/core_model.hpp"
#include "petc/json_types.hpp"
#include "petc/rng.hpp"

namespace petc {

/// A bijection on positions {0..n-1}. mapping()[i] is the destination of
/// position i, so apply(x)[mapping[i]] == x[i].
class Permutation {
public:
    Permutation() = default;
    explicit Permutation(std::vector<std::uint32_t> mapping);
    static Permutation identity(std::size_t n);

    std::size_t size() const { return mapping_.size(); }
    std::span<const std::uint32_t> mapping() const { return mapping_; }
    std::uint32_t operator[](std::size_t i) const { return mapping_[i]; }
    bool is_identity() const;

    Permutation inverse() const;

    Sequence apply(std::span<const Symbol> x) const;
    Sequence apply_inverse(std::span<const Symbol> y) const;

    friend bool operator==(const Permutation&, const Permutation&) = default;

private:
    std::vector<std::uint32_t> mapping_;
};

/// outer ∘ inner: inner is applied first.
Permutation compose(const Permutation& outer, const Permutation& inner);

/// Uniform over S_n (Fisher-Yates).
Permutation sample_uniform_permutation(std::size_t n, Rng& rng);

/// Uniform key in {0..N-1}.
struct SecretKey {
    std::uint64_t value = 0;
    std::uint64_t key_space_size = 1;

    /// R_s = (1/n) ln N.
    double rate_nats(std::size_t n) const;
};

SecretKey sample_key(std::uint64_t key_space_size, Rng& rng);

enum class CipherKind { type1, type2 };

std::string to_string(CipherKind kind);
CipherKind cipher_kind_from_string(const std::string& s);

/// Stores one permutation per key.
class TypeICipher {
public:
    explicit TypeICipher(std::vector<Permutation> permutations);

    std::size_t block_length() const { return permutations_.front().size(); }
    std::uint64_t key_space_size() const { return permutations_.size(); }
    std::size_t stored_permutation_count() const { return permutations_.size(); }
    const std::vector<Permutation>& permutations() const { return permutations_; }

    friend bool operator==(const TypeICipher&, const TypeICipher&) = default;

private:
    std::vector<Permutation> permutations_;
};

/// Stores L = ceil(log2 N) base permutations; key bit i (LSB = bit 0)
/// selects base i, and selected bases are applied in increasing bit order.
class TypeIICipher {
public:
    TypeIICipher(std::vector<Permutation> bases, std::uint64_t key_space_size);

    std::size_t block_length() const { return bases_.front().size(); }
    std::uint64_t key_space_size() const { return key_space_size_; }
    std::size_t stored_permutation_count() const { return bases_.size(); }
    const std::vector<Permutation>& bases() const { return bases_; }

    friend bool operator==(const TypeIICipher&, const TypeIICipher&) = default;

private:
    std::vector<Permutation> bases_;
    std::uint64_t key_space_size_;
};

using PermutationCipher = std::variant<TypeICipher, TypeIICipher>;

/// ceil(log2 N) for N >= 1.
std::size_t key_bit_count(std::uint64_t key_space_size);

TypeICipher build_type1(std::size_t n, std::uint64_t key_space_size, Rng& rng);
TypeIICipher build_type2(std::size_t n, std::uint64_t key_space_size, Rng& rng);
PermutationCipher build_cipher(CipherKind kind, std::size_t n, std::uint64_t key_space_size, Rng& rng);

CipherKind kind_of(const PermutationCipher& cipher);
std::size_t block_length(const PermutationCipher& cipher);
std::uint64_t key_space_size(const PermutationCipher& cipher);
std::size_t stored_permutation_count(const PermutationCipher& cipher);

Permutation resolve_permutation(const TypeICipher& cipher, std::uint64_t key);
Permutation resolve_permutation(const TypeIICipher& cipher, std::uint64_t key);
Permutation resolve_permutation(const PermutationCipher& cipher, std::uint64_t key);

/// pi_k for every key 0..N-1, in key order.
std::vector<Permutation> resolve_all(const PermutationCipher& cipher);

Sequence encrypt(const PermutationCipher& cipher, const SecretKey& key, std::span<const Symbol> x);
Sequence decrypt(const PermutationCipher& cipher, const SecretKey& key, std::span<const Symbol> y);

/// Shift cipher on Z_modulus: the conventional system's one-time pad.
class ModuloSumCipher {
public:
    explicit ModuloSumCipher(std::uint64_t modulus);

    std::uint64_t modulus() const { return modulus_; }

    std::uint64_t encrypt(std::uint64_t payload, std::uint64_t key) const;
    std::uint64_t decrypt(std::uint64_t ciphertext, std::uint64_t key) const;
    Sequence encrypt(std::span<const Symbol> payload, std::span<const Symbol> key_stream) const;
    Sequence decrypt(std::span<const Symbol> ciphertext, std::span<const Symbol> key_stream) const;

private:
    void check(std::uint64_t v, const char* what) const;
    std::uint64_t modulus_;
};

/// Exact I(payload; ciphertext) for a payload law over Z_m and uniform key.
InfoValue modulo_sum_leakage(const ModuloSumCipher& cipher, std::span<const double> payload_pmf);

/// Empirical law of the Type II resolved permutation for each key over
/// independent redraws of the bases. Only for n <= 8.
struct ResolvedMarginals {
    std::size_t n = 0;
    std::uint64_t key_space_size = 0;
    std::size_t draws = 0;
    /// frequencies[key][rank of permutation in lexicographic order of S_n]
    std::vector<std::vector<double>> frequencies;
    /// max over permutations of |freq - 1/n!| per key
    std::vector<double> max_deviation;
};

ResolvedMarginals type2_resolved_marginals(std::size_t n, std::uint64_t key_space_size,
                                           std::size_t draws, Rng& rng);

/// Lexicographic rank of a permutation's mapping within S_n.
std::uint64_t permutation_rank(const Permutation& p);

Json cipher_to_json(const PermutationCipher& cipher);
PermutationCipher cipher_from_json(const Json& j);
void save_cipher(const PermutationCipher& cipher, const std::filesystem::path& path);
PermutationCipher load_cipher(const std::filesystem::path& path);

}  // namespace petc
