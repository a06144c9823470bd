// genescreen: hierarchical Bayesian association screening with gene-level
// priors, plus frequentist baselines and a simulation harness.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "genescreen/freq_baselines.hpp"
#include "genescreen/io.hpp"
#include "genescreen/parallel.hpp"
#include "genescreen/screen_engine.hpp"
#include "genescreen/sim_harness.hpp"

namespace fs = std::filesystem;
using namespace genescreen;

namespace {

std::string default_out_dir() {
    const char* env = std::getenv("GENESCREEN_OUTDIR");
    return env != nullptr ? env : ".";
}

struct CommonOpts {
    std::string out_dir = default_out_dir();
    std::uint64_t seed = 0;
    std::size_t threads = default_threads();
};

struct ScreenOpts {
    std::string data_path;
    std::string labels_path;
    std::string mode = "hierarchical";
    std::string kind;
    std::string kernels_path;
    std::size_t fit_kernels = 0;
    double lambda_mass = 1.0;
    RunConfig run;
    bool trace = false;
    bool rao_blackwell = false;
};

void add_run_flags(CLI::App* cmd, RunConfig& run) {
    cmd->add_option("--sweeps", run.n_sweeps, "Gibbs sweeps per chain");
    cmd->add_option("--burnin", run.n_burnin, "burn-in sweeps discarded");
    cmd->add_option("--chains", run.n_chains, "independent chains");
    cmd->add_option("--alpha", run.dp.alpha, "DP concentration");
    cmd->add_option("--base-a", run.dp.a, "base Beta shape a");
    cmd->add_option("--base-b", run.dp.b, "base Beta shape b");
    cmd->add_option("--truncation", run.dp.truncation, "stick-breaking truncation H");
}

EstimationMode mode_or_throw(const std::string& s) {
    const auto mode = parse_mode(s);
    if (!mode) {
        throw Error(ErrorCode::Usage, "UnknownFlag", "unknown mode '" + s + "'");
    }
    return *mode;
}

std::optional<DataKind> kind_override(const std::string& s) {
    if (s.empty()) return std::nullopt;
    if (s == "binary") return DataKind::Binary;
    if (s == "continuous") return DataKind::Continuous01;
    throw Error(ErrorCode::Usage, "UnknownFlag", "unknown kind '" + s + "'");
}

ScenarioConfig scenario_from(const std::string& name, const ScenarioConfig& base) {
    ScenarioConfig cfg = base;
    if (name == "null") {
        cfg.kind = ScenarioKind::GlobalNull;
    } else if (name == "bimodal") {
        cfg.kind = ScenarioKind::Bimodal;
    } else if (name == "beta-tail") {
        cfg.kind = ScenarioKind::BetaTail;
    } else if (name == "custom-beta") {
        cfg.kind = ScenarioKind::CustomBeta;
    } else {
        throw Error(ErrorCode::Usage, "UnknownFlag", "unknown scenario '" + name + "'");
    }
    return cfg;
}

nlohmann::json run_config_json(const RunConfig& run) {
    return {{"sweeps", run.n_sweeps},     {"burnin", run.n_burnin},
            {"chains", run.n_chains},     {"mode", mode_name(run.mode)},
            {"alpha", run.dp.alpha},      {"base_a", run.dp.a},
            {"base_b", run.dp.b},         {"truncation", run.dp.truncation},
            {"threads", run.threads},     {"rao_blackwell", run.rao_blackwell}};
}

void finish_manifest(RunManifest manifest, const CommonOpts& common,
                     std::chrono::steady_clock::time_point start) {
    manifest.seed = common.seed;
    manifest.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(manifest, (fs::path(common.out_dir) / "manifest.json").string());
}

int run_screen_cmd(const CommonOpts& common, const ScreenOpts& opts) {
    const auto start = std::chrono::steady_clock::now();
    Dataset data = load_tsv_dataset(opts.data_path, opts.labels_path, kind_override(opts.kind));

    RunConfig run = opts.run;
    run.mode = mode_or_throw(opts.mode);
    run.seed = common.seed;
    run.threads = common.threads;
    run.trace = opts.trace;
    run.rao_blackwell = opts.rao_blackwell;

    std::optional<KernelDictionary> dict;
    if (!opts.kernels_path.empty()) {
        dict = load_kernel_dictionary(opts.kernels_path);
    } else if (opts.fit_kernels > 0) {
        dict = fit_kernel_dictionary(data, opts.fit_kernels, opts.lambda_mass);
    } else if (data.kind == DataKind::Continuous01) {
        throw Error(ErrorCode::Usage, "MissingRequired",
                    "continuous data needs --kernels or --fit-kernels");
    }

    ScreenDiagnostics diag;
    const ScreenResult result = run_screen(data, run, dict ? &*dict : nullptr, &diag);
    if (result.chain_divergence_warning) {
        std::cerr << "warning: ChainDivergence: chains disagree, gene_prob RMS difference "
                  << result.chain_rms_difference << " > 0.05\n";
    }
    if (diag.truncation_warning) {
        std::cerr << "warning: posterior mean of the last stick weight is "
                  << diag.mean_tail_weight << " > 1e-4; consider a larger --truncation\n";
    }

    fs::create_directories(common.out_dir);
    const fs::path out(common.out_dir);
    write_posteriors_tsv(data, result, (out / "posteriors.tsv").string());
    write_gene_probs_tsv(data, result, (out / "gene_probs.tsv").string());
    if (run.trace) {
        write_trace_tsv(result, (out / "trace_gene_prob.tsv").string(),
                        (out / "trace_null.tsv").string());
    }
    if (dict) {
        save_kernel_dictionary(*dict, (out / "kernels.json").string());
    }

    RunManifest manifest;
    manifest.command = "screen";
    manifest.config = run_config_json(run);
    manifest.input_digests["data"] = file_digest(opts.data_path);
    manifest.input_digests["labels"] = file_digest(opts.labels_path);
    if (!opts.kernels_path.empty()) {
        manifest.input_digests["kernels"] = file_digest(opts.kernels_path);
    }
    finish_manifest(std::move(manifest), common, start);
    return 0;
}

int run_fisher_cmd(const CommonOpts& common, const std::string& data_path,
                   const std::string& labels_path, double level) {
    const auto start = std::chrono::steady_clock::now();
    const Dataset data = load_tsv_dataset(data_path, labels_path, DataKind::Binary);
    const std::vector<double> p = fisher_pvalues(data);
    const BhResult bh = bh_adjust(p, level);
    const HochbergResult hb = hochberg_adjust(p, level);
    const TwoStepResult two = two_step_hierarchical(p, data.gene_index, level);

    fs::create_directories(common.out_dir);
    const fs::path out(common.out_dir);
    {
        std::ofstream tsv(out / "fisher.tsv");
        if (!tsv) throw data_error("IoError", "cannot write fisher.tsv");
        tsv << "marker_id\tgene_id\tp\tbh_q\thochberg_reject\ttwo_step_reject\n";
        for (std::size_t m = 0; m < data.n_markers; ++m) {
            tsv << data.marker_ids[m] << "\t" << data.gene_of_marker[m] << "\t"
                << format_double(p[m]) << "\t" << format_double(bh.adjusted[m]) << "\t"
                << int(hb.rejected[m]) << "\t" << int(two.rejected[m]) << "\n";
        }
    }
    RunManifest manifest;
    manifest.command = "fisher";
    manifest.config = {{"level", level}};
    manifest.input_digests["data"] = file_digest(data_path);
    manifest.input_digests["labels"] = file_digest(labels_path);
    finish_manifest(std::move(manifest), common, start);
    return 0;
}

int run_simulate_cmd(const CommonOpts& common, const ScenarioConfig& scenario,
                     const std::string& kernels_path) {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(substream(common.seed, stream_domain::scenario, 0));
    LabeledDataset sim;
    if (!kernels_path.empty()) {
        const KernelDictionary dict = load_kernel_dictionary(kernels_path);
        sim = generate_continuous_scenario(scenario, dict, rng);
    } else {
        sim = generate_scenario(scenario, rng);
    }
    fs::create_directories(common.out_dir);
    const fs::path out(common.out_dir);
    save_tsv_dataset(sim.data, (out / "data.tsv").string(), (out / "labels.tsv").string());
    {
        std::ofstream truth(out / "truth.tsv");
        if (!truth) throw data_error("IoError", "cannot write truth.tsv");
        truth << "marker_id\tgene_id\ttruth_null\n";
        for (std::size_t m = 0; m < sim.data.n_markers; ++m) {
            truth << sim.data.marker_ids[m] << "\t" << sim.data.gene_of_marker[m] << "\t"
                  << int(sim.truth_null[m]) << "\n";
        }
    }
    RunManifest manifest;
    manifest.command = "simulate";
    manifest.config = {{"scenario", scenario_name(scenario.kind)},
                       {"genes", scenario.n_genes},
                       {"markers_low", scenario.markers_low},
                       {"markers_high", scenario.markers_high},
                       {"n0", scenario.n0},
                       {"n1", scenario.n1},
                       {"null_fraction", scenario.null_fraction}};
    finish_manifest(std::move(manifest), common, start);
    return 0;
}

int run_compare_cmd(const CommonOpts& common, ScenarioConfig scenario, std::size_t replicates,
                    RunConfig run) {
    const auto start = std::chrono::steady_clock::now();
    scenario.seed = common.seed;
    run.seed = common.seed;
    run.threads = common.threads;
    const auto methods = all_methods();
    const auto rows = run_comparison(scenario, replicates, methods, run);

    fs::create_directories(common.out_dir);
    const fs::path out(common.out_dir);
    write_comparison_csv(rows, (out / "errors.csv").string());

    // ROC points from the first replicate, one file per method.
    if (scenario.kind != ScenarioKind::GlobalNull) {
        Rng rng(substream(scenario.seed, stream_domain::replicate, 0));
        const LabeledDataset sim = generate_scenario(scenario, rng);
        const std::vector<double> fisher_p = fisher_pvalues(sim.data);
        RunConfig rep_cfg = run;
        rep_cfg.seed = splitmix64_mix(run.seed, 0);
        for (const Method method : methods) {
            const MethodEvaluation eval = evaluate_method(method, sim, fisher_p, rep_cfg);
            const auto points = roc_points(eval.roc_score, sim.truth_null);
            write_roc_csv(points,
                          (out / ("roc_" + std::string(method_name(method)) + ".csv")).string());
        }
    }
    RunManifest manifest;
    manifest.command = "compare";
    manifest.config = run_config_json(run);
    manifest.config["scenario"] = scenario_name(scenario.kind);
    manifest.config["replicates"] = replicates;
    finish_manifest(std::move(manifest), common, start);
    return 0;
}

int run_permute_cmd(const CommonOpts& common, const std::string& data_path,
                    const std::string& labels_path, const std::string& which) {
    const auto start = std::chrono::steady_clock::now();
    const Dataset data = load_tsv_dataset(data_path, labels_path);
    Rng rng(substream(common.seed, stream_domain::scenario, 1));
    Dataset permuted;
    if (which == "gene") {
        permuted = permute_gene_labels(data, rng);
    } else if (which == "class") {
        permuted = permute_class_labels(data, rng);
    } else {
        throw Error(ErrorCode::Usage, "UnknownFlag", "--which must be gene or class");
    }
    fs::create_directories(common.out_dir);
    const fs::path out(common.out_dir);
    save_tsv_dataset(permuted, (out / "data.tsv").string(), (out / "labels.tsv").string());
    RunManifest manifest;
    manifest.command = "permute";
    manifest.config = {{"which", which}};
    manifest.input_digests["data"] = file_digest(data_path);
    manifest.input_digests["labels"] = file_digest(labels_path);
    finish_manifest(std::move(manifest), common, start);
    return 0;
}

int run_crossval_cmd(const CommonOpts& common, const std::string& data_path,
                     const std::string& labels_path, double holdout, RunConfig run,
                     const std::string& kernels_path) {
    const auto start = std::chrono::steady_clock::now();
    const Dataset data = load_tsv_dataset(data_path, labels_path);
    std::optional<KernelDictionary> dict;
    if (!kernels_path.empty()) dict = load_kernel_dictionary(kernels_path);
    run.seed = common.seed;
    run.threads = common.threads;

    fs::create_directories(common.out_dir);
    std::ofstream csv(fs::path(common.out_dir) / "crossval.csv");
    if (!csv) throw data_error("IoError", "cannot write crossval.csv");
    csv << "mode,mean_kl\n";
    for (const EstimationMode mode :
         {EstimationMode::Hierarchical, EstimationMode::Separate, EstimationMode::Joint,
          EstimationMode::Simple}) {
        RunConfig cfg = run;
        cfg.mode = mode;
        Rng rng(substream(common.seed, stream_domain::scenario, 2));
        const double kl =
            cross_validate_priors(data, cfg, holdout, rng, dict ? &*dict : nullptr);
        csv << mode_name(mode) << "," << format_double(kl) << "\n";
    }
    RunManifest manifest;
    manifest.command = "crossval";
    manifest.config = run_config_json(run);
    manifest.config["holdout"] = holdout;
    manifest.input_digests["data"] = file_digest(data_path);
    manifest.input_digests["labels"] = file_digest(labels_path);
    finish_manifest(std::move(manifest), common, start);
    return 0;
}

int run_fit_kernels_cmd(const CommonOpts& common, const std::string& data_path,
                        const std::string& labels_path, std::size_t k, double lambda_mass) {
    const auto start = std::chrono::steady_clock::now();
    const Dataset data = load_tsv_dataset(data_path, labels_path, DataKind::Continuous01);
    const KernelDictionary dict = fit_kernel_dictionary(data, k, lambda_mass);
    fs::create_directories(common.out_dir);
    save_kernel_dictionary(dict, (fs::path(common.out_dir) / "kernels.json").string());
    RunManifest manifest;
    manifest.command = "fit-kernels";
    manifest.config = {{"k", k}, {"lambda_mass", lambda_mass}};
    manifest.input_digests["data"] = file_digest(data_path);
    manifest.input_digests["labels"] = file_digest(labels_path);
    finish_manifest(std::move(manifest), common, start);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical Bayesian genome-wide association screening"};
    app.require_subcommand(1);

    CommonOpts common;
    app.add_option("--out", common.out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", common.seed, "master RNG seed")->capture_default_str();
    app.add_option("--threads", common.threads, "worker threads")->capture_default_str();

    // screen
    ScreenOpts screen;
    auto* screen_cmd = app.add_subcommand("screen", "run the Gibbs screening sampler");
    screen_cmd->add_option("--data", screen.data_path, "marker matrix TSV")->required();
    screen_cmd->add_option("--labels", screen.labels_path, "sample label TSV")->required();
    screen_cmd->add_option("--mode", screen.mode, "hierarchical|separate|joint|simple")
        ->capture_default_str();
    screen_cmd->add_option("--kind", screen.kind, "binary|continuous (default: inferred)");
    auto* kernels_opt = screen_cmd->add_option("--kernels", screen.kernels_path,
                                               "kernel dictionary JSON (continuous data)");
    auto* fit_opt = screen_cmd->add_option("--fit-kernels", screen.fit_kernels,
                                           "fit a K-kernel dictionary from the data");
    kernels_opt->excludes(fit_opt);
    screen_cmd->add_option("--lambda-mass", screen.lambda_mass,
                           "total Dirichlet mass for fitted dictionaries");
    screen_cmd->add_flag("--trace", screen.trace, "write per-sweep traces");
    screen_cmd->add_flag("--rao-blackwell", screen.rao_blackwell,
                         "report Rao-Blackwellized posterior averages");
    add_run_flags(screen_cmd, screen.run);

    // fisher
    std::string fisher_data, fisher_labels;
    double fisher_level = 0.05;
    auto* fisher_cmd = app.add_subcommand("fisher", "Fisher exact tests with corrections");
    fisher_cmd->add_option("--data", fisher_data)->required();
    fisher_cmd->add_option("--labels", fisher_labels)->required();
    fisher_cmd->add_option("--level", fisher_level, "FDR / significance level")
        ->capture_default_str();

    // simulate
    ScenarioConfig scenario;
    std::string scenario_name_opt = "null";
    std::string simulate_kernels;
    auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic dataset");
    sim_cmd->add_option("--scenario", scenario_name_opt, "null|bimodal|beta-tail|custom-beta")
        ->capture_default_str();
    sim_cmd->add_option("--genes", scenario.n_genes)->capture_default_str();
    sim_cmd->add_option("--markers-low", scenario.markers_low)->capture_default_str();
    sim_cmd->add_option("--markers-high", scenario.markers_high)->capture_default_str();
    sim_cmd->add_option("--n0", scenario.n0)->capture_default_str();
    sim_cmd->add_option("--n1", scenario.n1)->capture_default_str();
    sim_cmd->add_option("--null-fraction", scenario.null_fraction)->capture_default_str();
    sim_cmd->add_option("--beta-a", scenario.beta_a)->capture_default_str();
    sim_cmd->add_option("--beta-b", scenario.beta_b)->capture_default_str();
    sim_cmd->add_option("--kernels", simulate_kernels,
                        "kernel dictionary JSON; generates continuous data");

    // compare
    ScenarioConfig compare_scenario;
    std::string compare_scenario_name = "bimodal";
    std::size_t replicates = 50;
    RunConfig compare_run;
    compare_run.n_chains = 1;
    auto* compare_cmd = app.add_subcommand("compare", "replicated method comparison");
    compare_cmd->add_option("--scenario", compare_scenario_name)->capture_default_str();
    compare_cmd->add_option("--replicates", replicates)->capture_default_str();
    compare_cmd->add_option("--genes", compare_scenario.n_genes)->capture_default_str();
    compare_cmd->add_option("--markers-low", compare_scenario.markers_low)->capture_default_str();
    compare_cmd->add_option("--markers-high", compare_scenario.markers_high)
        ->capture_default_str();
    compare_cmd->add_option("--n0", compare_scenario.n0)->capture_default_str();
    compare_cmd->add_option("--n1", compare_scenario.n1)->capture_default_str();
    compare_cmd->add_option("--null-fraction", compare_scenario.null_fraction)
        ->capture_default_str();
    add_run_flags(compare_cmd, compare_run);

    // permute
    std::string permute_data, permute_labels, permute_which = "gene";
    auto* permute_cmd = app.add_subcommand("permute", "permute gene or class labels");
    permute_cmd->add_option("--data", permute_data)->required();
    permute_cmd->add_option("--labels", permute_labels)->required();
    permute_cmd->add_option("--which", permute_which, "gene|class")->capture_default_str();

    // crossval
    std::string cv_data, cv_labels, cv_kernels;
    double cv_holdout = 0.1;
    RunConfig cv_run;
    auto* cv_cmd = app.add_subcommand("crossval", "holdout KL diagnostic across modes");
    cv_cmd->add_option("--data", cv_data)->required();
    cv_cmd->add_option("--labels", cv_labels)->required();
    cv_cmd->add_option("--holdout", cv_holdout, "held-out marker fraction")
        ->capture_default_str();
    cv_cmd->add_option("--kernels", cv_kernels, "kernel dictionary JSON");
    add_run_flags(cv_cmd, cv_run);

    // fit-kernels
    std::string fk_data, fk_labels;
    std::size_t fk_k = 8;
    double fk_lambda_mass = 1.0;
    auto* fk_cmd = app.add_subcommand("fit-kernels", "fit a kernel dictionary");
    fk_cmd->add_option("--data", fk_data)->required();
    fk_cmd->add_option("--labels", fk_labels)->required();
    fk_cmd->add_option("--k", fk_k, "number of kernels")->capture_default_str();
    fk_cmd->add_option("--lambda-mass", fk_lambda_mass)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (screen_cmd->parsed()) return run_screen_cmd(common, screen);
        if (fisher_cmd->parsed()) {
            return run_fisher_cmd(common, fisher_data, fisher_labels, fisher_level);
        }
        if (sim_cmd->parsed()) {
            scenario.seed = common.seed;
            return run_simulate_cmd(common, scenario_from(scenario_name_opt, scenario),
                                    simulate_kernels);
        }
        if (compare_cmd->parsed()) {
            return run_compare_cmd(common, scenario_from(compare_scenario_name, compare_scenario),
                                   replicates, compare_run);
        }
        if (permute_cmd->parsed()) {
            return run_permute_cmd(common, permute_data, permute_labels, permute_which);
        }
        if (cv_cmd->parsed()) {
            return run_crossval_cmd(common, cv_data, cv_labels, cv_holdout, cv_run, cv_kernels);
        }
        if (fk_cmd->parsed()) {
            return run_fit_kernels_cmd(common, fk_data, fk_labels, fk_k, fk_lambda_mass);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
