#include "petc/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "petc/errors.hpp"
#include "petc/parallel.hpp"
#include "petc/report_format.hpp"

namespace petc {

namespace {

void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.contains(key)) throw ConfigError(where + ": unknown field '" + key + "'");
}

template <class T>
T get(const Json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <class T>
T get_or(const Json& obj, const std::string& key, T fallback, const std::string& where) {
    return obj.contains(key) ? get<T>(obj, key, where) : fallback;
}

std::uint64_t positive(std::uint64_t v, const std::string& what) {
    if (v == 0) throw ConfigError(what + " must be positive");
    return v;
}

ConcentrationSpec parse_concentration(const Json& j, const std::string& where) {
    check_keys(j, {"kind", "type", "bin_size", "key_space_size", "threshold", "deviation", "trials"}, where);
    ConcentrationSpec s;
    try {
        s.kind = ensemble_kind_from_string(get<std::string>(j, "kind", where));
    } catch (const ValidationError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    s.type = get<std::vector<std::uint32_t>>(j, "type", where);
    s.bin_size = positive(get<std::size_t>(j, "bin_size", where), where + ".bin_size");
    s.key_space_size = positive(get<std::uint64_t>(j, "key_space_size", where), where + ".key_space_size");
    s.threshold = get<double>(j, "threshold", where);
    s.deviation = get<double>(j, "deviation", where);
    s.trials = positive(get<std::size_t>(j, "trials", where), where + ".trials");
    if (!(s.threshold > 0) || !(s.deviation > 0)) throw ConfigError(where + ": threshold and deviation must be > 0");
    return s;
}

LeakageOptions options_without_types(const ExperimentConfig& cfg) {
    LeakageOptions o;
    o.threshold = cfg.leakage_threshold;
    o.deviation = cfg.leakage_deviation;
    o.budget = cfg.leakage_budget();
    return o;
}

Json rates_json(const ExperimentConfig& cfg) {
    Json j;
    j["M"] = cfg.codebook_size;
    j["N"] = cfg.key_space_size;
    j["R_nats"] = cfg.rate_nats();
    j["R_bits"] = InfoValue::from_nats(cfg.rate_nats()).bits();
    j["Rs_nats"] = cfg.key_rate_nats();
    j["Rs_bits"] = InfoValue::from_nats(cfg.key_rate_nats()).bits();
    j["epsilon_nats"] = cfg.key_rate_nats() - cfg.rate_nats();
    return j;
}

Json distortion_json(std::span<const double> per_trial, const RDPoint& design) {
    double sum = 0.0;
    for (double v : per_trial) sum += v;
    const double k = static_cast<double>(per_trial.size());
    const double mean = sum / k;
    double ss = 0.0;
    for (double v : per_trial) ss += (v - mean) * (v - mean);
    const double se = per_trial.size() > 1 ? std::sqrt(ss / (k - 1.0) / k) : 0.0;
    Json j;
    j["trials"] = per_trial.size();
    j["mean"] = mean;
    j["standard_error"] = se;
    j["ci_half_width"] = 1.96 * se;
    j["design_distortion"] = design.distortion;
    j["design_rate_nats"] = design.rate_nats;
    return j;
}

Json report_header(const std::string& system, const ExperimentConfig& cfg, const DerivedSeeds& seeds) {
    Json j;
    j["system"] = system;
    j["config"] = to_json(cfg);
    j["seeds"] = to_json(seeds);
    j["rates"] = rates_json(cfg);
    return j;
}

void check_codebook(const ExperimentConfig& cfg, const Codebook& cb) {
    if (cb.block_length() != cfg.n) throw ConfigError("codebook block length != n");
    if (cb.size() != cfg.codebook_size) throw ConfigError("codebook size != codebook_size");
}

struct LeakageSection {
    Json json;
    LeakageReport fixed;
    bool bounds_hold = true;
};

LeakageSection reversed_leakage_section(const ExperimentConfig& cfg, const DerivedSeeds& seeds,
                                        const PermutationCipher& cipher, const Codebook& cb,
                                        const DistortionMeasure& d, const SourceModel& source) {
    require_key_rate_margin(cfg);
    const auto g = as_compression_map(cb, d);
    const auto options = cfg.leakage_options();
    LeakageSection out;
    Json& j = out.json;
    out.fixed = leakage_given_type_marginal(cipher, g, source, cfg.n, options);
    j["fixed_cipher"] = to_json(out.fixed);
    try {
        const auto dec = total_leakage_decomposition_check(cipher, g, source, cfg.n, options.budget);
        out.bounds_hold = dec.holds;
        j["decomposition"] = to_json(dec);
    } catch (const BudgetExceeded& e) {
        j["decomposition"] = Json{{"skipped", e.what()}};
    }
    const auto ens = key_rate_search(kind_of(cipher), cfg.key_space_size, g, source, cfg.n,
                                     cfg.leakage_cipher_trials, seeds.leakage, options);
    for (std::size_t i = 0; i < ens.types.size(); ++i)
        out.bounds_hold = out.bounds_hold && ens.per_type[i].mean + 3.0 * ens.per_type[i].standard_error <=
                                                 ens.per_type_bound[i].total();
    j["ensemble"] = to_json(ens);
    const auto a = asymptotic_settings(cfg.n, cfg.key_rate_nats() - cfg.rate_nats(), cfg.codebook_size);
    j["asymptotic_settings"] = Json{{"Delta", a.threshold},
                                    {"N", a.key_space_size},
                                    {"delta", a.deviation},
                                    {"consistency_error", a.consistency_error},
                                    {"warnings", a.warnings}};
    return out;
}

}  // namespace

void require_key_rate_margin(const ExperimentConfig& cfg) {
    if (cfg.key_space_size <= cfg.codebook_size)
        throw ConfigError("permutation-cipher leakage experiments need a secret key rate above the compression "
                          "rate: N = " + std::to_string(cfg.key_space_size) + " must exceed M = " +
                          std::to_string(cfg.codebook_size) + " (epsilon = (1/n) ln(N/M) > 0)");
}

SourceModel ExperimentConfig::source() const { return SourceModel(source_pmf); }

DistortionMeasure ExperimentConfig::distortion() const {
    if (distortion_kind == "hamming") return DistortionMeasure::hamming(source_pmf.size());
    return DistortionMeasure(Table::from_rows(distortion_table));
}

LeakageBudget ExperimentConfig::leakage_budget() const { return {enumeration_budget, pair_evaluation_budget}; }

LeakageOptions ExperimentConfig::leakage_options() const {
    auto o = options_without_types(*this);
    for (const auto& t : leakage_types) o.types.emplace_back(t);
    return o;
}

double ExperimentConfig::rate_nats() const {
    return std::log(static_cast<double>(codebook_size)) / static_cast<double>(n);
}

double ExperimentConfig::key_rate_nats() const {
    return std::log(static_cast<double>(key_space_size)) / static_cast<double>(n);
}

ExperimentConfig parse_config(const Json& j) {
    const std::string top = "config";
    check_keys(j,
               {"version", "source", "n", "distortion", "codebook_size", "key_space_size", "cipher", "trials",
                "design_distortion", "analyses", "leakage", "concentration", "rd_sweep", "compare", "budgets"},
               top);
    if (get<int>(j, "version", top) != kConfigVersion)
        throw ConfigError("config: unsupported version (expected " + std::to_string(kConfigVersion) + ")");
    ExperimentConfig cfg;

    const auto& src = j.contains("source") ? j.at("source") : throw ConfigError("config: missing field 'source'");
    check_keys(src, {"pmf"}, "source");
    cfg.source_pmf = get<std::vector<double>>(src, "pmf", "source");
    cfg.n = positive(get<std::size_t>(j, "n", top), "n");
    cfg.codebook_size = positive(get<std::uint64_t>(j, "codebook_size", top), "codebook_size");
    cfg.key_space_size = positive(get<std::uint64_t>(j, "key_space_size", top), "key_space_size");
    cfg.trials = positive(get_or<std::size_t>(j, "trials", cfg.trials, top), "trials");
    try {
        cfg.cipher = cipher_kind_from_string(get_or<std::string>(j, "cipher", "type1", top));
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("config.cipher: ") + e.what());
    }
    if (j.contains("design_distortion")) cfg.design_distortion = get<double>(j, "design_distortion", top);

    if (j.contains("distortion")) {
        const auto& d = j.at("distortion");
        check_keys(d, {"kind", "table"}, "distortion");
        cfg.distortion_kind = get<std::string>(d, "kind", "distortion");
        if (cfg.distortion_kind == "table") {
            cfg.distortion_table = get<std::vector<std::vector<double>>>(d, "table", "distortion");
        } else if (cfg.distortion_kind != "hamming" || d.contains("table")) {
            throw ConfigError("distortion.kind must be 'hamming' (no table) or 'table'");
        }
    }

    if (j.contains("analyses")) {
        const auto& a = j.at("analyses");
        check_keys(a, {"leakage", "concentration", "rd_sweep"}, "analyses");
        cfg.run_leakage = get_or<bool>(a, "leakage", false, "analyses");
        cfg.run_concentration = get_or<bool>(a, "concentration", false, "analyses");
        cfg.run_rd_sweep = get_or<bool>(a, "rd_sweep", false, "analyses");
    }
    if (j.contains("leakage")) {
        const auto& l = j.at("leakage");
        check_keys(l, {"threshold", "deviation", "cipher_trials", "types"}, "leakage");
        if (l.contains("threshold")) cfg.leakage_threshold = get<double>(l, "threshold", "leakage");
        cfg.leakage_deviation = get_or<double>(l, "deviation", cfg.leakage_deviation, "leakage");
        cfg.leakage_cipher_trials =
            positive(get_or<std::size_t>(l, "cipher_trials", cfg.leakage_cipher_trials, "leakage"),
                     "leakage.cipher_trials");
        cfg.leakage_types = get_or<std::vector<std::vector<std::uint32_t>>>(l, "types", {}, "leakage");
        if (cfg.leakage_threshold && !(*cfg.leakage_threshold > 0)) throw ConfigError("leakage.threshold must be > 0");
        if (!(cfg.leakage_deviation > 0)) throw ConfigError("leakage.deviation must be > 0");
    }
    if (j.contains("compare")) {
        const auto& c = j.at("compare");
        check_keys(c, {"key_space_sizes"}, "compare");
        cfg.compare_key_space_sizes = get<std::vector<std::uint64_t>>(c, "key_space_sizes", "compare");
    }
    if (j.contains("concentration")) {
        const auto& c = j.at("concentration");
        check_keys(c, {"experiments"}, "concentration");
        const auto& list = c.contains("experiments") ? c.at("experiments") : Json::array();
        if (!list.is_array()) throw ConfigError("concentration.experiments must be an array");
        for (std::size_t i = 0; i < list.size(); ++i)
            cfg.concentration.push_back(
                parse_concentration(list.at(i), "concentration.experiments[" + std::to_string(i) + "]"));
    }
    if (j.contains("rd_sweep")) {
        const auto& r = j.at("rd_sweep");
        check_keys(r, {"slopes"}, "rd_sweep");
        cfg.rd_slopes = get<std::vector<double>>(r, "slopes", "rd_sweep");
    }
    if (j.contains("budgets")) {
        const auto& b = j.at("budgets");
        check_keys(b, {"enumeration", "pair_evaluations", "max_codewords"}, "budgets");
        cfg.enumeration_budget =
            positive(get_or<std::uint64_t>(b, "enumeration", cfg.enumeration_budget, "budgets"), "budgets.enumeration");
        cfg.pair_evaluation_budget = positive(
            get_or<std::uint64_t>(b, "pair_evaluations", cfg.pair_evaluation_budget, "budgets"),
            "budgets.pair_evaluations");
        cfg.max_codewords =
            positive(get_or<std::uint64_t>(b, "max_codewords", cfg.max_codewords, "budgets"), "budgets.max_codewords");
    }

    // Semantic checks.
    try {
        const auto source = cfg.source();
        const auto d = cfg.distortion();
        if (d.source_alphabet_size() != source.alphabet_size())
            throw ConfigError("distortion table rows must match the source alphabet");
        for (const auto& t : cfg.leakage_types) {
            const TypeComposition type(t);
            if (type.alphabet_size() != source.alphabet_size() || type.length() != cfg.n)
                throw ConfigError("leakage.types entry " + type.label() + " does not match n / alphabet");
        }
        for (const auto& c : cfg.concentration) {
            const TypeComposition type(c.type);
            if (type.alphabet_size() != source.alphabet_size() || type.length() != cfg.n)
                throw ConfigError("concentration type " + type.label() + " does not match n / alphabet");
        }
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (cfg.run_rd_sweep && cfg.rd_slopes.empty()) throw ConfigError("rd_sweep.slopes must be non-empty");
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        return parse_config(Json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
}

Json to_json(const ExperimentConfig& cfg) {
    Json j;
    j["version"] = kConfigVersion;
    j["source"] = Json{{"pmf", cfg.source_pmf}};
    j["n"] = cfg.n;
    Json d;
    d["kind"] = cfg.distortion_kind;
    if (cfg.distortion_kind == "table") d["table"] = cfg.distortion_table;
    j["distortion"] = d;
    j["codebook_size"] = cfg.codebook_size;
    j["key_space_size"] = cfg.key_space_size;
    j["cipher"] = to_string(cfg.cipher);
    j["trials"] = cfg.trials;
    if (cfg.design_distortion) j["design_distortion"] = *cfg.design_distortion;
    j["analyses"] = Json{{"leakage", cfg.run_leakage},
                         {"concentration", cfg.run_concentration},
                         {"rd_sweep", cfg.run_rd_sweep}};
    Json l;
    l["threshold"] = cfg.leakage_threshold.value_or(default_threshold(cfg.codebook_size));
    l["deviation"] = cfg.leakage_deviation;
    l["cipher_trials"] = cfg.leakage_cipher_trials;
    l["types"] = cfg.leakage_types;
    j["leakage"] = l;
    j["compare"] = Json{{"key_space_sizes", cfg.compare_key_space_sizes}};
    Json exps = Json::array();
    for (const auto& c : cfg.concentration)
        exps.push_back(Json{{"kind", to_string(c.kind)},
                            {"type", c.type},
                            {"bin_size", c.bin_size},
                            {"key_space_size", c.key_space_size},
                            {"threshold", c.threshold},
                            {"deviation", c.deviation},
                            {"trials", c.trials}});
    j["concentration"] = Json{{"experiments", exps}};
    j["rd_sweep"] = Json{{"slopes", cfg.rd_slopes}};
    j["budgets"] = Json{{"enumeration", cfg.enumeration_budget},
                        {"pair_evaluations", cfg.pair_evaluation_budget},
                        {"max_codewords", cfg.max_codewords}};
    return j;
}

DerivedSeeds derive_seeds(std::uint64_t master) {
    return {master,
            derive_seed(master, "cipher"),
            derive_seed(master, "codebook"),
            derive_seed(master, "trials"),
            derive_seed(master, "leakage"),
            derive_seed(master, "concentration")};
}

Json to_json(const DerivedSeeds& s) {
    return Json{{"master", s.master},   {"cipher", s.cipher},   {"codebook", s.codebook},
                {"trials", s.trials},   {"leakage", s.leakage}, {"concentration", s.concentration}};
}

std::string fingerprint(const Json& j) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << h;
    return out.str();
}

RDPoint design_point(const ExperimentConfig& cfg) {
    const auto source = cfg.source();
    const auto d = cfg.distortion();
    if (cfg.design_distortion) return rd_point_for_distortion(source, d, *cfg.design_distortion);
    return rd_point_for_rate(source, d, cfg.rate_nats());
}

Codebook build_experiment_codebook(const ExperimentConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    return build_codebook(design_point(cfg), cfg.n, cfg.codebook_size, rng, cfg.max_codewords);
}

PermutationCipher build_experiment_cipher(const ExperimentConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    return build_cipher(cfg.cipher, cfg.n, cfg.key_space_size, rng);
}

InfoValue conventional_exact_leakage(const Codebook& cb, const DistortionMeasure& d, const SourceModel& source,
                                     std::uint64_t key_space_size, std::uint64_t enumeration_budget) {
    const std::uint64_t m = cb.size();
    if (key_space_size % m != 0)
        throw ConfigError("conventional system needs N to be a multiple of M for a uniform pad");
    const std::size_t n = cb.block_length();
    const SequencePacker packer(source.alphabet_size(), n);
    if (!packer.fits() || packer.key_space() > enumeration_budget)
        throw BudgetExceeded("conventional leakage enumeration", packer.fits() ? packer.key_space() : ~0ULL,
                             enumeration_budget);
    const std::uint64_t blocks = packer.key_space();
    std::vector<double> px(blocks);
    std::vector<std::uint64_t> index(blocks);
    std::vector<double> pc(m, 0.0);
    Sequence x(n, 0);
    const double kn = static_cast<double>(key_space_size);
    // c = (j + k mod M) mod M over all keys k
    std::vector<std::uint64_t> shift_count(m, key_space_size / m);
    for (std::uint64_t b = 0; b < blocks; ++b) {
        px[b] = source.sequence_probability(x);
        index[b] = cb.compress(x, d);
        for (std::uint64_t s = 0; s < m; ++s) pc[(index[b] + s) % m] += px[b] * shift_count[s] / kn;
        for (std::size_t i = 0; i < n && ++x[i] == source.alphabet_size(); ++i) x[i] = 0;
    }
    double mi = 0.0;
    for (std::uint64_t b = 0; b < blocks; ++b) {
        if (px[b] <= kNegligibleProbability) continue;
        for (std::uint64_t s = 0; s < m; ++s) {
            const double cond = shift_count[s] / kn;
            mi += px[b] * cond * std::log(cond / pc[(index[b] + s) % m]);
        }
    }
    return InfoValue::from_nats(std::max(mi, 0.0));
}

Json run_reversed_pipeline(const ExperimentConfig& cfg, std::uint64_t seed) {
    const auto seeds = derive_seeds(seed);
    return run_reversed_pipeline(cfg, seed, build_experiment_cipher(cfg, seeds.cipher),
                                 build_experiment_codebook(cfg, seeds.codebook));
}

Json run_reversed_pipeline(const ExperimentConfig& cfg, std::uint64_t seed, const PermutationCipher& cipher,
                           const Codebook& cb) {
    check_codebook(cfg, cb);
    if (block_length(cipher) != cfg.n) throw ConfigError("cipher block length != n");
    const auto seeds = derive_seeds(seed);
    const auto source = cfg.source();
    const auto d = cfg.distortion();
    const auto design = design_point(cfg);
    const auto keys = key_space_size(cipher);

    std::vector<double> per_trial(cfg.trials);
    parallel_for(cfg.trials, [&](std::size_t t) {
        Rng rng(substream_seed(seeds.trials, t));
        const Sequence x = sample_iid(source, cfg.n, rng);
        const SecretKey key = sample_key(keys, rng);
        const Sequence y = encrypt(cipher, key, x);
        const Sequence& y_hat = cb.reconstruct(cb.compress(y, d));
        per_trial[t] = distortion(x, decrypt(cipher, key, y_hat), d);
    });

    Json report = report_header("reversed", cfg, seeds);
    report["rates"]["N"] = keys;
    report["distortion"] = distortion_json(per_trial, design);
    report["fingerprints"] = Json{{"cipher", fingerprint(cipher_to_json(cipher))},
                                  {"codebook", fingerprint(codebook_to_json(cb))}};
    if (cfg.run_leakage) report["leakage"] = reversed_leakage_section(cfg, seeds, cipher, cb, d, source).json;
    if (cfg.run_concentration) report["concentration"] = to_json(run_concentration(cfg, seed));
    if (cfg.run_rd_sweep) report["rd_sweep"] = sweep_to_json(rd_sweep(source, d, cfg.rd_slopes));
    return report;
}

Json run_conventional_pipeline(const ExperimentConfig& cfg, std::uint64_t seed) {
    return run_conventional_pipeline(cfg, seed, build_experiment_codebook(cfg, derive_seeds(seed).codebook));
}

Json run_conventional_pipeline(const ExperimentConfig& cfg, std::uint64_t seed, const Codebook& cb) {
    check_codebook(cfg, cb);
    const std::uint64_t m = cb.size();
    if (cfg.key_space_size % m != 0)
        throw ConfigError("conventional system needs N (" + std::to_string(cfg.key_space_size) +
                          ") to be a multiple of M (" + std::to_string(m) + ")");
    const auto seeds = derive_seeds(seed);
    const auto source = cfg.source();
    const auto d = cfg.distortion();
    const auto design = design_point(cfg);
    const ModuloSumCipher pad(std::max<std::uint64_t>(m, 2));

    std::vector<double> per_trial(cfg.trials);
    parallel_for(cfg.trials, [&](std::size_t t) {
        Rng rng(substream_seed(seeds.trials, t));
        const Sequence x = sample_iid(source, cfg.n, rng);
        const std::uint64_t k = sample_key(cfg.key_space_size, rng).value % m;
        const std::uint64_t j = cb.compress(x, d);
        const std::uint64_t c = m == 1 ? j : pad.encrypt(j, k);
        const std::uint64_t j_rx = m == 1 ? c : pad.decrypt(c, k);
        per_trial[t] = distortion(x, cb.reconstruct(j_rx), d);
    });

    Json report = report_header("conventional", cfg, seeds);
    report["distortion"] = distortion_json(per_trial, design);
    report["fingerprints"] = Json{{"codebook", fingerprint(codebook_to_json(cb))}};
    if (cfg.run_leakage) {
        const auto leak =
            conventional_exact_leakage(cb, d, source, cfg.key_space_size, cfg.enumeration_budget);
        report["leakage"] = Json{{"total_nats", leak.nats()}, {"total_bits", leak.bits()}};
    }
    if (cfg.run_concentration) report["concentration"] = to_json(run_concentration(cfg, seed));
    if (cfg.run_rd_sweep) report["rd_sweep"] = sweep_to_json(rd_sweep(source, d, cfg.rd_slopes));
    return report;
}

Json compare_systems(const ExperimentConfig& cfg, std::uint64_t seed) {
    require_key_rate_margin(cfg);
    const auto seeds = derive_seeds(seed);
    const auto source = cfg.source();
    const auto d = cfg.distortion();
    const auto cb = build_experiment_codebook(cfg, seeds.codebook);
    const auto cipher = build_experiment_cipher(cfg, seeds.cipher);
    auto plain = cfg;
    plain.run_leakage = plain.run_concentration = plain.run_rd_sweep = false;
    const Json reversed = run_reversed_pipeline(plain, seed, cipher, cb);
    const Json conventional = run_conventional_pipeline(plain, seed, cb);

    const auto g = as_compression_map(cb, d);
    const auto budget = cfg.leakage_budget();
    const auto decomposition = total_leakage_decomposition_check(cipher, g, source, cfg.n, budget);
    const auto given_type = leakage_given_type_marginal(cipher, g, source, cfg.n, options_without_types(cfg));
    const auto conv_leak = conventional_exact_leakage(cb, d, source, cfg.key_space_size, cfg.enumeration_budget);

    Json report = report_header("compare", cfg, seeds);
    Json systems = Json::array();
    systems.push_back(Json{{"system", "conventional"},
                           {"R_bits", conventional["rates"]["R_bits"]},
                           {"Rs_bits", conventional["rates"]["Rs_bits"]},
                           {"mean_distortion", conventional["distortion"]["mean"]},
                           {"distortion_ci_half_width", conventional["distortion"]["ci_half_width"]},
                           {"leakage_total_nats", conv_leak.nats()},
                           // the pad makes C independent of X^n, hence of X^n given its type
                           {"leakage_given_type_nats", 0.0}});
    systems.push_back(Json{{"system", "reversed"},
                           {"R_bits", reversed["rates"]["R_bits"]},
                           {"Rs_bits", reversed["rates"]["Rs_bits"]},
                           {"mean_distortion", reversed["distortion"]["mean"]},
                           {"distortion_ci_half_width", reversed["distortion"]["ci_half_width"]},
                           {"leakage_total_nats", decomposition.lhs.nats()},
                           {"leakage_given_type_nats", given_type.conditional.nats()}});
    report["systems"] = systems;
    report["type_entropy_nats"] = decomposition.type_entropy.nats();
    report["type_entropy_bound_nats"] = type_info_bound(source.alphabet_size(), cfg.n).nats();
    report["decomposition"] = to_json(decomposition);
    report["fingerprints"] = Json{{"cipher", fingerprint(cipher_to_json(cipher))},
                                  {"codebook", fingerprint(codebook_to_json(cb))}};

    Json trend = Json::array();
    const auto trend_seed = derive_seed(seeds.leakage, "key-rate-trend");
    for (std::size_t i = 0; i < cfg.compare_key_space_sizes.size(); ++i) {
        const auto keys = cfg.compare_key_space_sizes[i];
        const auto r = key_rate_search(cfg.cipher, keys, g, source, cfg.n, cfg.leakage_cipher_trials,
                                       substream_seed(trend_seed, i), options_without_types(cfg));
        trend.push_back(Json{{"N", keys},
                             {"N_over_M", static_cast<double>(keys) / static_cast<double>(cfg.codebook_size)},
                             {"mean_conditional_nats", r.conditional.mean},
                             {"standard_error", r.conditional.standard_error}});
    }
    report["key_rate_trend"] = trend;
    return report;
}

LeakageAnalysis leakage_analysis(const ExperimentConfig& cfg, std::uint64_t seed) {
    require_key_rate_margin(cfg);
    const auto seeds = derive_seeds(seed);
    const auto source = cfg.source();
    const auto d = cfg.distortion();
    const auto cb = build_experiment_codebook(cfg, seeds.codebook);
    const auto cipher = build_experiment_cipher(cfg, seeds.cipher);
    Json report = report_header("leakage", cfg, seeds);
    report["fingerprints"] = Json{{"cipher", fingerprint(cipher_to_json(cipher))},
                                  {"codebook", fingerprint(codebook_to_json(cb))}};
    auto section = reversed_leakage_section(cfg, seeds, cipher, cb, d, source);
    report["leakage"] = std::move(section.json);
    report["bounds_hold"] = section.bounds_hold;
    return {std::move(report), std::move(section.fixed), section.bounds_hold};
}

ConcentrationRun run_concentration(const ExperimentConfig& cfg, std::uint64_t seed) {
    const auto parent = derive_seeds(seed).concentration;
    ConcentrationRun run;
    for (std::size_t i = 0; i < cfg.concentration.size(); ++i) {
        const auto& c = cfg.concentration[i];
        auto exp = make_deviation_experiment(TypeComposition(c.type), c.bin_size, c.key_space_size, c.threshold,
                                             c.deviation, c.kind, c.trials, cfg.enumeration_budget);
        run.estimates.push_back(deviation_tail_estimate(exp, substream_seed(parent, i)));
        run.experiments.push_back(std::move(exp));
    }
    return run;
}

Json to_json(const ConcentrationRun& run) {
    Json out = Json::array();
    for (std::size_t i = 0; i < run.experiments.size(); ++i) out.push_back(to_json(run.experiments[i], run.estimates[i]));
    return out;
}

std::string pipeline_to_csv(const Json& report) {
    CsvWriter csv({"field", "value"});
    auto num = [&](const std::string& name, const Json& v) { csv.row({name, csv_number(v.get<double>())}); };
    csv.row({"system", report.at("system").get<std::string>()});
    csv.row({"seed", std::to_string(report.at("seeds").at("master").get<std::uint64_t>())});
    for (const auto& key : {"M", "N"})
        csv.row({key, std::to_string(report.at("rates").at(key).get<std::uint64_t>())});
    for (const auto& key : {"R_nats", "R_bits", "Rs_nats", "Rs_bits", "epsilon_nats"})
        num(key, report.at("rates").at(key));
    const auto& dist = report.at("distortion");
    csv.row({"trials", std::to_string(dist.at("trials").get<std::size_t>())});
    for (const auto& key : {"mean", "standard_error", "ci_half_width", "design_distortion", "design_rate_nats"})
        num(std::string("distortion_") + key, dist.at(key));
    for (const auto& [name, value] : report.at("fingerprints").items()) csv.row({name + "_fingerprint", value});
    if (report.contains("leakage")) {
        const auto& l = report.at("leakage");
        if (l.contains("total_nats")) num("leakage_total_nats", l.at("total_nats"));
        if (l.contains("fixed_cipher")) {
            num("conditional_leakage_nats", l.at("fixed_cipher").at("conditional_leakage_nats"));
            num("type_entropy_nats", l.at("fixed_cipher").at("type_entropy_nats"));
        }
        if (l.contains("decomposition") && l.at("decomposition").contains("lhs_nats"))
            num("leakage_total_nats", l.at("decomposition").at("lhs_nats"));
    }
    return csv.str();
}

std::string compare_to_csv(const Json& report) {
    CsvWriter csv({"system", "R_bits", "Rs_bits", "mean_distortion", "distortion_ci_half_width",
                   "leakage_total_nats", "leakage_given_type_nats", "type_entropy_nats", "type_entropy_bound_nats"});
    for (const auto& s : report.at("systems"))
        csv.row({s.at("system").get<std::string>(), csv_number(s.at("R_bits").get<double>()),
                 csv_number(s.at("Rs_bits").get<double>()), csv_number(s.at("mean_distortion").get<double>()),
                 csv_number(s.at("distortion_ci_half_width").get<double>()),
                 csv_number(s.at("leakage_total_nats").get<double>()),
                 csv_number(s.at("leakage_given_type_nats").get<double>()),
                 csv_number(report.at("type_entropy_nats").get<double>()),
                 csv_number(report.at("type_entropy_bound_nats").get<double>())});
    return csv.str();
}

}  // namespace petc
