#include "petc/cipher.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

#include "petc/errors.hpp"

namespace petc {

Permutation::Permutation(std::vector<std::uint32_t> mapping) : mapping_(std::move(mapping)) {
    if (mapping_.empty()) throw ValidationError("permutation must have length >= 1");
    std::vector<bool> seen(mapping_.size(), false);
    for (auto m : mapping_) {
        if (m >= mapping_.size() || seen[m]) throw ValidationError("mapping is not a bijection");
        seen[m] = true;
    }
}

Permutation Permutation::identity(std::size_t n) {
    std::vector<std::uint32_t> m(n);
    std::iota(m.begin(), m.end(), 0u);
    return Permutation(std::move(m));
}

bool Permutation::is_identity() const {
    for (std::size_t i = 0; i < mapping_.size(); ++i)
        if (mapping_[i] != i) return false;
    return true;
}

Permutation Permutation::inverse() const {
    std::vector<std::uint32_t> inv(mapping_.size());
    for (std::size_t i = 0; i < mapping_.size(); ++i) inv[mapping_[i]] = static_cast<std::uint32_t>(i);
    return Permutation(std::move(inv));
}

Sequence Permutation::apply(std::span<const Symbol> x) const {
    if (x.size() != mapping_.size())
        throw ValidationError("permutation of length " + std::to_string(mapping_.size()) +
                              " applied to sequence of length " + std::to_string(x.size()));
    Sequence y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[mapping_[i]] = x[i];
    return y;
}

Sequence Permutation::apply_inverse(std::span<const Symbol> y) const {
    if (y.size() != mapping_.size())
        throw ValidationError("permutation of length " + std::to_string(mapping_.size()) +
                              " applied to sequence of length " + std::to_string(y.size()));
    Sequence x(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) x[i] = y[mapping_[i]];
    return x;
}

Permutation compose(const Permutation& outer, const Permutation& inner) {
    if (outer.size() != inner.size()) throw ValidationError("compose: length mismatch");
    std::vector<std::uint32_t> m(inner.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = outer[inner[i]];
    return Permutation(std::move(m));
}

Permutation sample_uniform_permutation(std::size_t n, Rng& rng) {
    if (n == 0) throw ValidationError("permutation length must be >= 1");
    std::vector<std::uint32_t> m(n);
    std::iota(m.begin(), m.end(), 0u);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(m[i], m[rng.uniform_index(i + 1)]);
    return Permutation(std::move(m));
}

double SecretKey::rate_nats(std::size_t n) const {
    return std::log(static_cast<double>(key_space_size)) / static_cast<double>(n);
}

SecretKey sample_key(std::uint64_t key_space_size, Rng& rng) {
    if (key_space_size == 0) throw ValidationError("key space must be non-empty");
    return {rng.uniform_index(key_space_size), key_space_size};
}

std::string to_string(CipherKind kind) { return kind == CipherKind::type1 ? "type1" : "type2"; }

CipherKind cipher_kind_from_string(const std::string& s) {
    if (s == "type1" || s == "I" || s == "1") return CipherKind::type1;
    if (s == "type2" || s == "II" || s == "2") return CipherKind::type2;
    throw ValidationError("unknown cipher kind '" + s + "' (expected type1 or type2)");
}

namespace {

void check_equal_lengths(const std::vector<Permutation>& perms) {
    if (perms.empty()) throw ValidationError("cipher needs at least one permutation");
    for (const auto& p : perms)
        if (p.size() != perms.front().size())
            throw ValidationError("cipher permutations must share one block length");
}

void check_key(std::uint64_t key, std::uint64_t key_space_size) {
    if (key >= key_space_size)
        throw ValidationError("key " + std::to_string(key) + " outside key space of size " +
                              std::to_string(key_space_size));
}

}  // namespace

TypeICipher::TypeICipher(std::vector<Permutation> permutations) : permutations_(std::move(permutations)) {
    check_equal_lengths(permutations_);
}

TypeIICipher::TypeIICipher(std::vector<Permutation> bases, std::uint64_t key_space_size)
    : bases_(std::move(bases)), key_space_size_(key_space_size) {
    check_equal_lengths(bases_);
    if (key_space_size_ < 2) throw ValidationError("type II cipher needs N >= 2");
    if (bases_.size() != key_bit_count(key_space_size_))
        throw ValidationError("type II cipher with N = " + std::to_string(key_space_size_) + " needs " +
                              std::to_string(key_bit_count(key_space_size_)) + " base permutations, got " +
                              std::to_string(bases_.size()));
}

std::size_t key_bit_count(std::uint64_t key_space_size) {
    if (key_space_size == 0) throw ValidationError("key space must be non-empty");
    return key_space_size <= 1 ? 0 : static_cast<std::size_t>(std::bit_width(key_space_size - 1));
}

TypeICipher build_type1(std::size_t n, std::uint64_t key_space_size, Rng& rng) {
    if (key_space_size < 1) throw ValidationError("type I cipher needs N >= 1");
    std::vector<Permutation> perms;
    perms.reserve(key_space_size);
    for (std::uint64_t k = 0; k < key_space_size; ++k) perms.push_back(sample_uniform_permutation(n, rng));
    return TypeICipher(std::move(perms));
}

TypeIICipher build_type2(std::size_t n, std::uint64_t key_space_size, Rng& rng) {
    if (key_space_size < 2) throw ValidationError("type II cipher needs N >= 2");
    std::vector<Permutation> bases;
    const auto bits = key_bit_count(key_space_size);
    for (std::size_t i = 0; i < bits; ++i) bases.push_back(sample_uniform_permutation(n, rng));
    return TypeIICipher(std::move(bases), key_space_size);
}

PermutationCipher build_cipher(CipherKind kind, std::size_t n, std::uint64_t key_space_size, Rng& rng) {
    if (kind == CipherKind::type1) return build_type1(n, key_space_size, rng);
    return build_type2(n, key_space_size, rng);
}

CipherKind kind_of(const PermutationCipher& cipher) {
    return std::holds_alternative<TypeICipher>(cipher) ? CipherKind::type1 : CipherKind::type2;
}

std::size_t block_length(const PermutationCipher& cipher) {
    return std::visit([](const auto& c) { return c.block_length(); }, cipher);
}

std::uint64_t key_space_size(const PermutationCipher& cipher) {
    return std::visit([](const auto& c) { return c.key_space_size(); }, cipher);
}

std::size_t stored_permutation_count(const PermutationCipher& cipher) {
    return std::visit([](const auto& c) { return c.stored_permutation_count(); }, cipher);
}

Permutation resolve_permutation(const TypeICipher& cipher, std::uint64_t key) {
    check_key(key, cipher.key_space_size());
    return cipher.permutations()[key];
}

Permutation resolve_permutation(const TypeIICipher& cipher, std::uint64_t key) {
    check_key(key, cipher.key_space_size());
    Permutation p = Permutation::identity(cipher.block_length());
    for (std::size_t i = 0; i < cipher.bases().size(); ++i)
        if ((key >> i) & 1u) p = compose(cipher.bases()[i], p);
    return p;
}

Permutation resolve_permutation(const PermutationCipher& cipher, std::uint64_t key) {
    return std::visit([key](const auto& c) { return resolve_permutation(c, key); }, cipher);
}

std::vector<Permutation> resolve_all(const PermutationCipher& cipher) {
    if (const auto* t1 = std::get_if<TypeICipher>(&cipher)) return t1->permutations();
    const auto& t2 = std::get<TypeIICipher>(cipher);
    std::vector<Permutation> out;
    out.reserve(t2.key_space_size());
    out.push_back(Permutation::identity(t2.block_length()));
    // pi_k = sigma_top ∘ pi_{k without its top bit}
    for (std::uint64_t k = 1; k < t2.key_space_size(); ++k) {
        const auto top = static_cast<std::size_t>(std::bit_width(k) - 1);
        out.push_back(compose(t2.bases()[top], out[k & ~(std::uint64_t{1} << top)]));
    }
    return out;
}

Sequence encrypt(const PermutationCipher& cipher, const SecretKey& key, std::span<const Symbol> x) {
    if (x.size() != block_length(cipher)) throw ValidationError("encrypt: sequence length != block length");
    return resolve_permutation(cipher, key.value).apply(x);
}

Sequence decrypt(const PermutationCipher& cipher, const SecretKey& key, std::span<const Symbol> y) {
    if (y.size() != block_length(cipher)) throw ValidationError("decrypt: sequence length != block length");
    return resolve_permutation(cipher, key.value).apply_inverse(y);
}

ModuloSumCipher::ModuloSumCipher(std::uint64_t modulus) : modulus_(modulus) {
    if (modulus_ < 2) throw ValidationError("modulus must be >= 2");
}

void ModuloSumCipher::check(std::uint64_t v, const char* what) const {
    if (v >= modulus_)
        throw ValidationError(std::string(what) + " " + std::to_string(v) + " outside Z_" +
                              std::to_string(modulus_));
}

std::uint64_t ModuloSumCipher::encrypt(std::uint64_t payload, std::uint64_t key) const {
    check(payload, "payload");
    check(key, "key");
    return (payload + key) % modulus_;
}

std::uint64_t ModuloSumCipher::decrypt(std::uint64_t ciphertext, std::uint64_t key) const {
    check(ciphertext, "ciphertext");
    check(key, "key");
    return (ciphertext + modulus_ - key) % modulus_;
}

Sequence ModuloSumCipher::encrypt(std::span<const Symbol> payload, std::span<const Symbol> key_stream) const {
    if (payload.size() != key_stream.size()) throw ValidationError("key stream length != payload length");
    Sequence out(payload.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<Symbol>(encrypt(payload[i], key_stream[i]));
    return out;
}

Sequence ModuloSumCipher::decrypt(std::span<const Symbol> ciphertext, std::span<const Symbol> key_stream) const {
    if (ciphertext.size() != key_stream.size()) throw ValidationError("key stream length != ciphertext length");
    Sequence out(ciphertext.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<Symbol>(decrypt(ciphertext[i], key_stream[i]));
    return out;
}

InfoValue modulo_sum_leakage(const ModuloSumCipher& cipher, std::span<const double> payload_pmf) {
    const auto m = cipher.modulus();
    if (payload_pmf.size() != m) throw ValidationError("payload pmf size must equal the modulus");
    validate_pmf(payload_pmf, "payload pmf");
    Table joint(m, m, 0.0);
    const double key_p = 1.0 / static_cast<double>(m);
    for (std::uint64_t a = 0; a < m; ++a)
        for (std::uint64_t k = 0; k < m; ++k) joint(a, cipher.encrypt(a, k)) += payload_pmf[a] * key_p;
    return mutual_information(joint);
}

std::uint64_t permutation_rank(const Permutation& p) {
    // Lehmer code.
    const auto n = p.size();
    std::uint64_t rank = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t smaller = 0;
        for (std::size_t j = i + 1; j < n; ++j)
            if (p[j] < p[i]) ++smaller;
        rank = rank * (n - i) + smaller;
    }
    return rank;
}

ResolvedMarginals type2_resolved_marginals(std::size_t n, std::uint64_t key_space_size, std::size_t draws,
                                           Rng& rng) {
    if (n == 0 || n > 8) throw ValidationError("resolved marginals are tabulated only for 1 <= n <= 8");
    if (draws == 0) throw ValidationError("draws must be >= 1");
    std::uint64_t factorial = 1;
    for (std::size_t i = 2; i <= n; ++i) factorial *= i;

    ResolvedMarginals out;
    out.n = n;
    out.key_space_size = key_space_size;
    out.draws = draws;
    std::vector<std::vector<std::uint64_t>> counts(key_space_size, std::vector<std::uint64_t>(factorial, 0));
    for (std::size_t d = 0; d < draws; ++d) {
        const PermutationCipher c = build_type2(n, key_space_size, rng);
        const auto resolved = resolve_all(c);
        for (std::uint64_t k = 0; k < key_space_size; ++k) ++counts[k][permutation_rank(resolved[k])];
    }
    const double uniform = 1.0 / static_cast<double>(factorial);
    for (const auto& row : counts) {
        std::vector<double> f(factorial);
        double dev = 0.0;
        for (std::size_t r = 0; r < factorial; ++r) {
            f[r] = static_cast<double>(row[r]) / static_cast<double>(draws);
            dev = std::max(dev, std::abs(f[r] - uniform));
        }
        out.frequencies.push_back(std::move(f));
        out.max_deviation.push_back(dev);
    }
    return out;
}

namespace {
constexpr const char* kCipherFormat = "petc-cipher";
constexpr int kCipherVersion = 1;
}  // namespace

Json cipher_to_json(const PermutationCipher& cipher) {
    Json j;
    j["format"] = kCipherFormat;
    j["version"] = kCipherVersion;
    j["kind"] = to_string(kind_of(cipher));
    j["n"] = block_length(cipher);
    j["key_space_size"] = key_space_size(cipher);
    auto& perms = j["permutations"] = Json::array();
    const auto& stored = std::holds_alternative<TypeICipher>(cipher) ? std::get<TypeICipher>(cipher).permutations()
                                                                      : std::get<TypeIICipher>(cipher).bases();
    for (const auto& p : stored) perms.push_back(std::vector<std::uint32_t>(p.mapping().begin(), p.mapping().end()));
    return j;
}

PermutationCipher cipher_from_json(const Json& j) {
    try {
        if (j.at("format").get<std::string>() != kCipherFormat) throw ValidationError("not a cipher file");
        if (j.at("version").get<int>() != kCipherVersion)
            throw ValidationError("unsupported cipher file version " + j.at("version").dump());
        const auto kind = cipher_kind_from_string(j.at("kind").get<std::string>());
        const auto n = j.at("n").get<std::size_t>();
        const auto key_space = j.at("key_space_size").get<std::uint64_t>();
        std::vector<Permutation> perms;
        for (const auto& m : j.at("permutations")) {
            perms.emplace_back(m.get<std::vector<std::uint32_t>>());
            if (perms.back().size() != n) throw ValidationError("stored permutation length != n");
        }
        if (kind == CipherKind::type1) {
            if (perms.size() != key_space) throw ValidationError("type I cipher must store N permutations");
            return TypeICipher(std::move(perms));
        }
        return TypeIICipher(std::move(perms), key_space);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed cipher file: ") + e.what());
    }
}

void save_cipher(const PermutationCipher& cipher, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << cipher_to_json(cipher).dump() << '\n';
}

PermutationCipher load_cipher(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return cipher_from_json(Json::parse(in));
}

}  // namespace petc
