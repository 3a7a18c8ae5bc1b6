// staug: command-line driver for decomposition, augmentation and the
// train/evaluate protocol.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "staug/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace staug;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct DataArgs {
    std::string input;
    std::string synth;
    std::uint64_t data_seed = 7;
    std::size_t synth_length = 0;  // 0: preset default
};

struct SeedArg {
    std::uint64_t value = 0;
    bool given = false;
};

void add_data_options(CLI::App* cmd, DataArgs& d) {
    auto* in = cmd->add_option("--input", d.input, "CSV file: time column, then one numeric column per channel");
    auto* sy = cmd->add_option("--synth", d.synth, "synthetic data: 'scarcity', 'two-tone' or a JSON spec file");
    in->excludes(sy);
    cmd->add_option("--data-seed", d.data_seed, "seed of the synthetic generator")->capture_default_str();
    cmd->add_option("--synth-length", d.synth_length, "length of a preset synthetic series (default: 2000 scarcity, 512 two-tone)");
}

void add_emd_options(CLI::App* cmd, emd::EmdConfig& e, std::string& boundary) {
    cmd->add_option("--sd-threshold", e.sd_threshold, "sifting stop threshold")->capture_default_str();
    cmd->add_option("--max-sift-iters", e.max_sift_iters, "sifting iteration cap")->capture_default_str();
    cmd->add_option("--max-imfs", e.max_imfs, "IMF count cap")->capture_default_str();
    cmd->add_option("--boundary-extrema", e.boundary_extrema, "extrema mirrored per side")->capture_default_str();
    cmd->add_option("--boundary", boundary, "mirror axis: extremum or endpoint")->capture_default_str();
    cmd->add_flag("!--no-oscillation-check", e.require_oscillation,
                  "stop sifting on the SD threshold alone");
}

void add_augment_options(CLI::App* cmd, AugmentConfig& a, std::string& residue, std::string& part) {
    cmd->add_option("--alpha", a.alpha, "Beta(alpha, alpha) parameter of the mix-up weight")->capture_default_str();
    cmd->add_option("--weight-low", a.weight_low, "lower bound of the IMF weights")->capture_default_str();
    cmd->add_option("--weight-high", a.weight_high, "upper bound of the IMF weights")->capture_default_str();
    cmd->add_option("--residue", residue, "residue policy: fixed_one, weighted or dropped")->capture_default_str();
    cmd->add_option("--emd-part", part, "decomposed slice: full, history or future")->capture_default_str();
}

void add_seed_option(CLI::App* cmd, SeedArg& s) {
    cmd->add_option("--seed", s.value, "base seed (falls back to $STAUG_SEED, then 0)")
        ->each([&s](const std::string&) { s.given = true; });
}

std::uint64_t resolve_seed(const SeedArg& s) {
    if (s.given) return s.value;
    if (const char* env = std::getenv("STAUG_SEED")) {
        auto v = io::parse_int(env);
        if (!v || *v < 0) throw ConfigError(std::string("STAUG_SEED is not a non-negative integer: '") + env + "'");
        return static_cast<std::uint64_t>(*v);
    }
    return 0;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Dataset {
    MultivariateSeries series;
    json source;
};

Dataset load_dataset(const DataArgs& d) {
    if (!d.input.empty()) {
        if (!fs::exists(d.input)) throw ConfigError("input file not found: " + d.input);
        const std::string bytes = read_file(d.input);
        std::istringstream in(bytes);
        auto csv = io::read_csv(in, d.input);
        return {std::move(csv.series), {{"path", d.input}, {"hash", fnv1a_hex(bytes)}}};
    }
    io::SynthSpec spec;
    if (d.synth.empty() || d.synth == "scarcity") {
        spec = scarcity_task(d.data_seed, d.synth_length ? d.synth_length : 2000);
    } else if (d.synth == "two-tone") {
        spec = two_tone_task(d.synth_length ? d.synth_length : 512);
    } else {
        try {
            spec = synth_spec_from_json(json::parse(read_file(d.synth)));
        } catch (const json::exception& e) {
            throw ConfigError("synthetic spec " + d.synth + ": " + e.what());
        }
    }
    json js = to_json(spec);
    return {io::synth_generate(spec), {{"synth", js}, {"hash", fnv1a_hex(js.dump())}}};
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

fs::path prepare_out_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
    return p;
}

json emd_json(const emd::EmdConfig& e) {
    return {{"sd_threshold", e.sd_threshold},
            {"max_sift_iters", e.max_sift_iters},
            {"max_imfs", e.max_imfs},
            {"residue_energy_ratio", e.residue_energy_ratio},
            {"boundary_extrema", e.boundary_extrema},
            {"boundary", emd::to_string(e.boundary)},
            {"require_oscillation", e.require_oscillation}};
}

json weights_json(const std::vector<WeightVector>& ws) {
    json out = json::array();
    for (const auto& w : ws) out.push_back({{"imf_weights", w.weights}, {"residue_weight", w.residue_weight}});
    return out;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::vector<std::string>& args,
                    std::uint64_t seed, const json& config, const json& source, const std::vector<std::string>& outputs) {
    write_json(dir / "manifest.json", {{"tool", "staug"},
                                       {"command", command},
                                       {"argv", args},
                                       {"seed", seed},
                                       {"config", config},
                                       {"input", source},
                                       {"outputs", outputs}});
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Sample standard deviation; 0 for a single run.
double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

int run(const std::vector<std::string>& args);

int run_parsed(const std::vector<std::string>& args) {
    CLI::App app{"STAug: EMD recombination and mix-up augmentation for forecasting"};
    app.require_subcommand(1);

    DataArgs data;
    SeedArg seed;
    std::string out_dir = "staug_out";
    emd::EmdConfig emd_cfg;
    AugmentConfig aug_cfg;
    std::string residue = "fixed_one";
    std::string part = "full";
    std::string boundary = "extremum";

    // decompose
    auto* dec_cmd = app.add_subcommand("decompose", "write the IMFs and residue of each channel as CSV");
    add_data_options(dec_cmd, data);
    add_emd_options(dec_cmd, emd_cfg, boundary);
    long long channel = -1;
    dec_cmd->add_option("--channel", channel, "only this channel (default: all)");
    dec_cmd->add_option("--out-dir", out_dir, "output directory")->capture_default_str();

    // augment
    auto* aug_cmd = app.add_subcommand("augment", "emit augmented training windows with an audit trail");
    add_data_options(aug_cmd, data);
    add_emd_options(aug_cmd, emd_cfg, boundary);
    add_augment_options(aug_cmd, aug_cfg, residue, part);
    add_seed_option(aug_cmd, seed);
    std::size_t context = 96, horizon = 96, count = 4;
    bool no_freq = false, no_time = false;
    aug_cmd->add_option("--context", context, "history length d")->capture_default_str();
    aug_cmd->add_option("--horizon", horizon, "forecast length h")->capture_default_str();
    aug_cmd->add_option("--count", count, "number of augmented windows")->capture_default_str();
    aug_cmd->add_flag("--no-freq", no_freq, "disable the frequency-domain stage");
    aug_cmd->add_flag("--no-time", no_time, "disable the mix-up stage");
    aug_cmd->add_option("--out-dir", out_dir, "output directory")->capture_default_str();

    // train
    auto* train_cmd = app.add_subcommand("train", "split, train and evaluate; writes metrics.json");
    train_cmd->alias("train-eval");
    add_data_options(train_cmd, data);
    add_emd_options(train_cmd, emd_cfg, boundary);
    add_augment_options(train_cmd, aug_cfg, residue, part);
    add_seed_option(train_cmd, seed);
    ExperimentConfig exp;
    std::vector<std::string> aug_names{"none"};
    std::vector<double> fractions{1.0};
    std::size_t runs = 1;
    bool save_models = false;
    train_cmd->add_option("--context", exp.context, "history length d")->capture_default_str();
    train_cmd->add_option("--horizon", exp.horizon, "forecast length h")->capture_default_str();
    train_cmd->add_option("--stride", exp.stride, "training window stride")->capture_default_str();
    train_cmd->add_option("--aug", aug_names,
                          "augmentations: none, staug, staug-nofreq, staug-notime, filter, permute")
        ->capture_default_str();
    train_cmd->add_option("--train-fraction", fractions, "fractions of training windows kept")->capture_default_str();
    train_cmd->add_option("--runs", runs, "seeds per configuration: seed, seed+1, ...")->capture_default_str();
    train_cmd->add_option("--epochs", exp.train.epochs, "training epochs")->capture_default_str();
    train_cmd->add_option("--lr", exp.train.learning_rate, "initial learning rate")->capture_default_str();
    train_cmd->add_option("--decay", exp.train.decay, "per-epoch learning-rate factor")->capture_default_str();
    train_cmd->add_option("--batch-size", exp.train.batch_size, "mini-batch size")->capture_default_str();
    train_cmd->add_option("--filter-kernel", exp.filter_kernel, "moving-average kernel for --aug filter")
        ->capture_default_str();
    train_cmd->add_option("--segments", exp.permute_segments, "block count for --aug permute")->capture_default_str();
    train_cmd->add_option("--jobs", exp.jobs, "decomposition worker threads")->capture_default_str();
    train_cmd->add_flag("--save-models", save_models, "write a checkpoint per run");
    train_cmd->add_option("--out-dir", out_dir, "output directory")->capture_default_str();

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "original, filtered, permuted and STAug versions of one window");
    add_data_options(cmp_cmd, data);
    add_emd_options(cmp_cmd, emd_cfg, boundary);
    add_augment_options(cmp_cmd, aug_cfg, residue, part);
    add_seed_option(cmp_cmd, seed);
    std::size_t window = 0, cmp_channel = 0, kernel = 5, segments = 4;
    cmp_cmd->add_option("--context", context, "history length d")->capture_default_str();
    cmp_cmd->add_option("--horizon", horizon, "forecast length h")->capture_default_str();
    cmp_cmd->add_option("--window", window, "training window index")->capture_default_str();
    cmp_cmd->add_option("--channel", cmp_channel, "channel to export")->capture_default_str();
    cmp_cmd->add_option("--filter-kernel", kernel, "moving-average kernel")->capture_default_str();
    cmp_cmd->add_option("--segments", segments, "permutation block count")->capture_default_str();
    cmp_cmd->add_flag("--no-freq", no_freq, "disable the frequency-domain stage");
    cmp_cmd->add_flag("--no-time", no_time, "disable the mix-up stage");
    cmp_cmd->add_option("--out-dir", out_dir, "output directory")->capture_default_str();

    // synth
    auto* syn_cmd = app.add_subcommand("synth", "write a synthetic series as CSV");
    add_data_options(syn_cmd, data);
    std::string out_file;
    syn_cmd->add_option("--out", out_file, "output CSV")->required();

    // replay
    auto* rep_cmd = app.add_subcommand("replay", "re-run the command recorded in a manifest");
    std::string manifest_path;
    rep_cmd->add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required();
    rep_cmd->add_option("--out-dir", out_dir, "output directory for the re-run")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    aug_cfg.residue = parse_residue_policy(residue);
    aug_cfg.part = parse_window_part(part);
    emd_cfg.boundary = emd::parse_boundary_mode(boundary);

    if (*rep_cmd) {
        json m;
        try {
            m = json::parse(read_file(manifest_path));
        } catch (const json::exception& e) {
            throw ConfigError("manifest " + manifest_path + ": " + e.what());
        }
        auto replay_args = m.at("argv").get<std::vector<std::string>>();
        bool replaced = false;
        for (std::size_t k = 0; k + 1 < replay_args.size(); ++k) {
            if (replay_args[k] == "--out-dir") {
                replay_args[k + 1] = out_dir;
                replaced = true;
            }
        }
        if (!replaced) {
            replay_args.push_back("--out-dir");
            replay_args.push_back(out_dir);
        }
        // A recorded seed wins over whatever STAUG_SEED now says.
        if (m.contains("seed") && std::find(replay_args.begin(), replay_args.end(), "--seed") == replay_args.end() &&
            m.at("command") != "decompose" && m.at("command") != "synth") {
            replay_args.push_back("--seed");
            replay_args.push_back(std::to_string(m.at("seed").get<std::uint64_t>()));
        }
        return run(replay_args);
    }

    if (*syn_cmd) {
        const Dataset ds = load_dataset(data);
        io::write_csv(out_file, ds.series);
        return kExitOk;
    }

    const fs::path dir = prepare_out_dir(out_dir);

    if (*dec_cmd) {
        emd_cfg.validate();
        const Dataset ds = load_dataset(data);
        if (channel >= static_cast<long long>(ds.series.channels()) || channel < -1) {
            throw ConfigError("--channel " + std::to_string(channel) + " out of range; series has " +
                              std::to_string(ds.series.channels()) + " channels");
        }
        std::vector<std::string> outputs;
        json summary = json::array();
        for (std::size_t c = 0; c < ds.series.channels(); ++c) {
            if (channel >= 0 && static_cast<std::size_t>(channel) != c) continue;
            const auto d = emd::decompose(ds.series.channel(c), emd_cfg);
            std::vector<std::string> header;
            std::vector<std::vector<double>> cols;
            for (std::size_t i = 0; i < d.imf_count(); ++i) {
                header.push_back("imf_" + std::to_string(i + 1));
                cols.push_back(d.imfs[i]);
            }
            header.push_back("residue");
            cols.push_back(d.residue);
            const std::string name = "channel_" + std::to_string(c) + ".csv";
            io::write_columns((dir / name).string(), header, cols);
            outputs.push_back(name);
            summary.push_back({{"channel", c}, {"imfs", d.imf_count()}, {"stop_reason", emd::to_string(d.stop_reason)}});
        }
        write_json(dir / "decomposition.json", summary);
        outputs.push_back("decomposition.json");
        write_manifest(dir, "decompose", args, 0, {{"emd", emd_json(emd_cfg)}, {"channel", channel}}, ds.source,
                       outputs);
        return kExitOk;
    }

    const std::uint64_t base_seed = resolve_seed(seed);

    if (*aug_cmd || *cmp_cmd) {
        aug_cfg.enable_freq = !no_freq;
        aug_cfg.enable_time = !no_time;
        aug_cfg.validate();
        emd_cfg.validate();
        const Dataset ds = load_dataset(data);
        const auto parts = io::split(ds.series, {}, context, horizon);
        const auto norm = io::fit_normalizer(parts.train);
        const auto windows = enumerate_windows(norm.apply(parts.train), context, horizon, 1);
        DecompositionCache cache;
        json config = {{"context", context},
                       {"horizon", horizon},
                       {"augment",
                        {{"weight_low", aug_cfg.weight_low},
                         {"weight_high", aug_cfg.weight_high},
                         {"alpha", aug_cfg.alpha},
                         {"residue", to_string(aug_cfg.residue)},
                         {"emd_part", to_string(aug_cfg.part)},
                         {"enable_freq", aug_cfg.enable_freq},
                         {"enable_time", aug_cfg.enable_time}}},
                       {"emd", emd_json(emd_cfg)}};
        const RandomSource root(base_seed);

        if (*aug_cmd) {
            if (aug_cfg.enable_freq) cache = precompute(windows, emd_cfg, aug_cfg.part);
            json audit = json::array();
            std::vector<std::string> outputs;
            for (std::size_t k = 0; k < count; ++k) {
                RandomSource pick = root.child(2 * k);
                RandomSource rng = root.child(2 * k + 1);
                const std::size_t i = pick.uniform_index(windows.size());
                SampleTrace tr;
                const WindowPair w = staug_sample(i, windows, cache, aug_cfg, rng, &tr);
                Matrix joined(w.channels(), w.length());
                std::vector<std::string> header{"step"};
                std::vector<std::vector<double>> cols(1 + w.channels());
                for (std::size_t t = 0; t < w.length(); ++t) cols[0].push_back(static_cast<double>(t));
                for (std::size_t c = 0; c < w.channels(); ++c) {
                    header.push_back(ds.series.channel_names().empty() ? "ch" + std::to_string(c)
                                                                      : ds.series.channel_names()[c]);
                    cols[c + 1] = w.joined(c);
                }
                const std::string name = "sample_" + std::to_string(k) + ".csv";
                io::write_columns((dir / name).string(), header, cols);
                outputs.push_back(name);
                audit.push_back({{"sample", k},
                                 {"window", i},
                                 {"source_offset", windows[i].source_offset},
                                 {"partner", tr.partner},
                                 {"partner_offset", windows[tr.partner].source_offset},
                                 {"lambda", tr.lambda},
                                 {"weights_i", weights_json(tr.weights_i)},
                                 {"weights_j", weights_json(tr.weights_j)}});
            }
            write_json(dir / "augment.json", {{"seed", base_seed}, {"samples", audit}});
            outputs.push_back("augment.json");
            config["count"] = count;
            write_manifest(dir, "augment", args, base_seed, config, ds.source, outputs);
            return kExitOk;
        }

        if (window >= windows.size()) {
            throw ConfigError("--window " + std::to_string(window) + " out of range; " +
                              std::to_string(windows.size()) + " training windows");
        }
        if (cmp_channel >= ds.series.channels()) throw ConfigError("--channel out of range");
        if (aug_cfg.enable_freq) cache = precompute(windows, emd_cfg, aug_cfg.part);
        RandomSource perm_rng = root.child(1);
        RandomSource staug_rng = root.child(2);
        const WindowPair& w = windows[window];
        SampleTrace trace;
        const WindowPair mixed = staug_sample(window, windows, cache, aug_cfg, staug_rng, &trace);
        const std::pair<const char*, WindowPair> variants[] = {
            {"original", w},
            {"filtered", moving_average_filter(w, kernel)},
            {"permuted", segment_permutation(w, segments, perm_rng)},
            {"staug", mixed},
        };
        std::ofstream out(dir / "compare.csv");
        if (!out) throw Error("cannot write compare.csv");
        out << "step,variant,value\n";
        for (const auto& [name, v] : variants) {
            const auto s = v.joined(cmp_channel);
            for (std::size_t t = 0; t < s.size(); ++t) out << t << ',' << name << ',' << io::format_double(s[t]) << '\n';
        }
        write_json(dir / "compare.json", {{"window", window},
                                          {"partner", trace.partner},
                                          {"lambda", trace.lambda},
                                          {"weights_i", weights_json(trace.weights_i)},
                                          {"weights_j", weights_json(trace.weights_j)}});
        config["window"] = window;
        config["channel"] = cmp_channel;
        config["filter_kernel"] = kernel;
        config["segments"] = segments;
        write_manifest(dir, "compare", args, base_seed, config, ds.source, {"compare.csv", "compare.json"});
        return kExitOk;
    }

    // train
    if (runs < 1) throw ConfigError("--runs must be >= 1");
    exp.augment = aug_cfg;
    exp.emd = emd_cfg;
    std::vector<AugKind> kinds;
    for (const auto& n : aug_names) kinds.push_back(parse_aug_kind(n));
    for (double f : fractions) io::subsample_size(1, f);
    const Dataset ds = load_dataset(data);

    json results = json::array();
    std::vector<std::string> outputs{"metrics.json"};
    for (AugKind kind : kinds) {
        for (double fraction : fractions) {
            ExperimentConfig cfg = exp;
            cfg.aug = kind;
            cfg.train_fraction = fraction;
            std::vector<double> mses, maes;
            json per_seed = json::array();
            for (std::size_t r = 0; r < runs; ++r) {
                cfg.train.seed = base_seed + r;
                const RunResult res = run_experiment(ds.series, cfg);
                mses.push_back(res.test.mse);
                maes.push_back(res.test.mae);
                per_seed.push_back({{"seed", res.seed},
                                    {"mse", res.test.mse},
                                    {"mae", res.test.mae},
                                    {"final_train_loss", res.loss_trace.back()},
                                    {"train_windows", res.train_windows},
                                    {"test_windows", res.test_windows}});
                if (save_models) {
                    const std::string name = std::string("model_") + to_string(kind) + "_f" +
                                             io::format_double(fraction) + "_s" + std::to_string(res.seed) + ".json";
                    save_checkpoint(res.model, (dir / name).string());
                    outputs.push_back(name);
                }
            }
            results.push_back({{"aug", to_string(kind)},
                               {"train_fraction", fraction},
                               {"config_hash", config_hash(cfg)},
                               {"runs", per_seed},
                               {"mse_mean", mean_of(mses)},
                               {"mse_std", std_of(mses)},
                               {"mae_mean", mean_of(maes)},
                               {"mae_std", std_of(maes)}});
        }
    }
    json config = to_json(exp);
    config["aug"] = aug_names;
    config["train_fractions"] = fractions;
    config["runs"] = runs;
    config["jobs"] = exp.jobs;
    write_json(dir / "metrics.json", {{"seed", base_seed}, {"config_hash", config_hash(exp)}, {"results", results}});
    write_manifest(dir, "train", args, base_seed, config, ds.source, outputs);
    return kExitOk;
}

int run(const std::vector<std::string>& args) {
    try {
        return run_parsed(args);
    } catch (const TrainingDivergedError& e) {
        std::cerr << "staug: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const DegenerateEnvelopeError& e) {
        std::cerr << "staug: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "staug: " << e.what() << '\n';
        return kExitConfig;
    } catch (const json::exception& e) {
        std::cerr << "staug: " << e.what() << '\n';
        return kExitConfig;
    }
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args);
}
