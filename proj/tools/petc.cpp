// petc: command-line front end for the permutation-cipher / lossy-compression experiments.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "petc/errors.hpp"
#include "petc/pipeline.hpp"
#include "petc/report_format.hpp"

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kBudget = 3, kAssert = 4 };

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string format = "json";
    std::string output;
};

void add_common(CLI::App* cmd, Common& c, bool seeded) {
    cmd->add_option("--config", c.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    if (seeded) cmd->add_option("--seed", c.seed, "Master seed")->required();
    cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--output,-o", c.output, "Write the report here instead of stdout");
}

void emit(const Common& c, const std::string& text) {
    if (c.output.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(c.output, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + c.output);
    out << text;
}

std::string dump(const petc::Json& j) { return j.dump(2) + "\n"; }

petc::Sequence parse_sequence(const std::string& text) {
    petc::Sequence out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw petc::ValidationError("bad symbol '" + item + "' in sequence");
        out.push_back(static_cast<petc::Symbol>(v));
    }
    if (out.empty()) throw petc::ValidationError("empty sequence");
    return out;
}

std::string join(const petc::Sequence& x) {
    std::string s;
    for (std::size_t i = 0; i < x.size(); ++i) s += (i ? "," : "") + std::to_string(x[i]);
    return s;
}

int run(int argc, char** argv) {
    CLI::App app{"Permutation cipher + lossy compression experiments"};
    app.require_subcommand(1);

    Common sweep_opts;
    std::vector<double> slopes;
    auto* sweep = app.add_subcommand("rd-sweep", "Rate-distortion curve by Blahut-Arimoto");
    add_common(sweep, sweep_opts, false);
    sweep->add_option("--slopes", slopes, "Slopes (ascending, >= 0); overrides rd_sweep.slopes");

    Common enc_opts;
    std::string cipher_file, save_cipher, input;
    std::optional<std::uint64_t> key;
    bool decrypt_mode = false;
    auto* enc = app.add_subcommand("encrypt", "Permute a block with a stored or freshly built cipher");
    enc->add_option("--config", enc_opts.config, "Experiment config used to build the cipher")
        ->check(CLI::ExistingFile);
    enc->add_option("--seed", enc_opts.seed, "Master seed for building the cipher");
    enc->add_option("--cipher", cipher_file, "Load the cipher from this file")->check(CLI::ExistingFile);
    enc->add_option("--save-cipher", save_cipher, "Store the cipher in this file");
    enc->add_option("--key", key, "Key in [0, N)");
    enc->add_option("--input", input, "Comma-separated symbols");
    enc->add_flag("--decrypt", decrypt_mode, "Apply the inverse permutation");
    enc->add_option("--format", enc_opts.format)->check(CLI::IsMember({"json", "csv"}));
    enc->add_option("--output,-o", enc_opts.output);

    Common comp_opts;
    std::string codebook_file, save_codebook;
    std::optional<std::uint64_t> index;
    auto* comp = app.add_subcommand("compress", "Nearest-codeword compression or reconstruction");
    comp->add_option("--config", comp_opts.config, "Experiment config used to build the codebook")
        ->check(CLI::ExistingFile);
    comp->add_option("--seed", comp_opts.seed, "Master seed for building the codebook");
    comp->add_option("--codebook", codebook_file, "Load the codebook from this file")->check(CLI::ExistingFile);
    comp->add_option("--save-codebook", save_codebook, "Store the codebook in this file");
    auto* comp_input = comp->add_option("--input", input, "Comma-separated symbols to compress");
    comp->add_option("--index", index, "Index to reconstruct")->excludes(comp_input);
    comp->add_option("--format", comp_opts.format)->check(CLI::IsMember({"json", "csv"}));
    comp->add_option("--output,-o", comp_opts.output);

    Common pipe_opts;
    std::string system = "reversed";
    auto* pipeline = app.add_subcommand("pipeline", "End-to-end systems");
    pipeline->require_subcommand(1);
    auto* pipe_run = pipeline->add_subcommand("run", "Run one system");
    add_common(pipe_run, pipe_opts, true);
    pipe_run->add_option("--system", system)->check(CLI::IsMember({"reversed", "conventional"}));

    Common leak_opts;
    bool leak_assert = false;
    auto* leak = app.add_subcommand("leakage", "Exact leakage of the reversed system and its bounds");
    add_common(leak, leak_opts, true);
    leak->add_flag("--assert-bounds", leak_assert, "Exit 4 unless every bound check holds");

    Common conc_opts;
    bool conc_assert = false;
    auto* conc = app.add_subcommand("concentration", "Tail bounds against ensemble redraws");
    add_common(conc, conc_opts, true);
    conc->add_flag("--assert-bounds", conc_assert, "Exit 4 if any experiment's verdict is violated");

    Common cmp_opts;
    auto* cmp = app.add_subcommand("compare", "Conventional and reversed systems side by side");
    add_common(cmp, cmp_opts, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfig;
    }

    if (sweep->parsed()) {
        const auto cfg = petc::load_config(sweep_opts.config);
        const auto& s = slopes.empty() ? cfg.rd_slopes : slopes;
        if (s.empty()) throw petc::ConfigError("no slopes given (--slopes or rd_sweep.slopes)");
        const auto points = petc::rd_sweep(cfg.source(), cfg.distortion(), s);
        emit(sweep_opts, sweep_opts.format == "csv" ? petc::sweep_to_csv(points) : dump(petc::sweep_to_json(points)));
        return kOk;
    }

    if (enc->parsed()) {
        std::optional<petc::PermutationCipher> cipher;
        if (!cipher_file.empty()) {
            cipher = petc::load_cipher(cipher_file);
        } else {
            if (enc_opts.config.empty() || !enc_opts.seed)
                throw petc::ConfigError("encrypt needs --cipher, or --config together with --seed");
            const auto cfg = petc::load_config(enc_opts.config);
            cipher = petc::build_experiment_cipher(cfg, petc::derive_seeds(*enc_opts.seed).cipher);
        }
        if (!save_cipher.empty()) petc::save_cipher(*cipher, save_cipher);
        if (input.empty()) return kOk;
        if (!key) throw petc::ConfigError("--key is required with --input");
        const petc::SecretKey k{*key, petc::key_space_size(*cipher)};
        if (k.value >= k.key_space_size) throw petc::ValidationError("key outside [0, N)");
        const auto x = parse_sequence(input);
        const auto y = decrypt_mode ? petc::decrypt(*cipher, k, x) : petc::encrypt(*cipher, k, x);
        if (enc_opts.format == "csv") {
            petc::CsvWriter csv({"key", "input", "output"});
            csv.row({std::to_string(k.value), join(x), join(y)});
            emit(enc_opts, csv.str());
        } else {
            emit(enc_opts, dump(petc::Json{{"mode", decrypt_mode ? "decrypt" : "encrypt"},
                                           {"key", k.value},
                                           {"input", x},
                                           {"output", y}}));
        }
        return kOk;
    }

    if (comp->parsed()) {
        std::optional<petc::Codebook> cb;
        std::optional<petc::DistortionMeasure> d;
        if (!comp_opts.config.empty()) d = petc::load_config(comp_opts.config).distortion();
        if (!codebook_file.empty()) {
            cb = petc::load_codebook(codebook_file);
        } else {
            if (comp_opts.config.empty() || !comp_opts.seed)
                throw petc::ConfigError("compress needs --codebook, or --config together with --seed");
            const auto cfg = petc::load_config(comp_opts.config);
            cb = petc::build_experiment_codebook(cfg, petc::derive_seeds(*comp_opts.seed).codebook);
        }
        if (!d) d = petc::DistortionMeasure::hamming(cb->reconstruction_alphabet_size());
        if (!save_codebook.empty()) petc::save_codebook(*cb, save_codebook);
        petc::Json out;
        if (!input.empty()) {
            const auto x = parse_sequence(input);
            const auto j = cb->compress(x, *d);
            out = {{"input", x}, {"index", j}, {"reconstruction", cb->reconstruct(j)}};
        } else if (index) {
            out = {{"index", *index}, {"reconstruction", cb->reconstruct(*index)}};
        } else {
            return kOk;
        }
        if (comp_opts.format == "csv") {
            petc::CsvWriter csv({"index", "reconstruction"});
            csv.row({std::to_string(out["index"].get<std::uint64_t>()),
                     join(out["reconstruction"].get<petc::Sequence>())});
            emit(comp_opts, csv.str());
        } else {
            emit(comp_opts, dump(out));
        }
        return kOk;
    }

    if (pipe_run->parsed()) {
        const auto cfg = petc::load_config(pipe_opts.config);
        const auto report = system == "reversed" ? petc::run_reversed_pipeline(cfg, *pipe_opts.seed)
                                                 : petc::run_conventional_pipeline(cfg, *pipe_opts.seed);
        emit(pipe_opts, pipe_opts.format == "csv" ? petc::pipeline_to_csv(report) : dump(report));
        return kOk;
    }

    if (leak->parsed()) {
        const auto cfg = petc::load_config(leak_opts.config);
        const auto analysis = petc::leakage_analysis(cfg, *leak_opts.seed);
        emit(leak_opts, leak_opts.format == "csv" ? petc::leakage_to_csv(analysis.fixed_cipher, *leak_opts.seed)
                                                  : dump(analysis.report));
        if (leak_assert && !analysis.bounds_hold) {
            std::cerr << "leakage: a bound check failed\n";
            return kAssert;
        }
        return kOk;
    }

    if (conc->parsed()) {
        const auto cfg = petc::load_config(conc_opts.config);
        if (cfg.concentration.empty()) throw petc::ConfigError("concentration.experiments is empty");
        const auto result = petc::run_concentration(cfg, *conc_opts.seed);
        emit(conc_opts, conc_opts.format == "csv"
                            ? petc::concentration_to_csv(result.experiments, result.estimates)
                            : dump(petc::to_json(result)));
        if (conc_assert)
            for (const auto& e : result.estimates)
                if (e.verdict == "violated") {
                    std::cerr << "concentration: empirical tail exceeds its bound\n";
                    return kAssert;
                }
        return kOk;
    }

    if (cmp->parsed()) {
        const auto cfg = petc::load_config(cmp_opts.config);
        const auto report = petc::compare_systems(cfg, *cmp_opts.seed);
        emit(cmp_opts, cmp_opts.format == "csv" ? petc::compare_to_csv(report) : dump(report));
        return kOk;
    }
    return kOther;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const petc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const petc::ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kConfig;
    } catch (const petc::BudgetExceeded& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return kBudget;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOther;
    }
}
