#include "stg3net/cli.hpp"
#include "stg3net/config.hpp"
#include "stg3net/graph.hpp"
#include "stg3net/ingest.hpp"
#include "stg3net/io.hpp"
#include "stg3net/log.hpp"
#include "stg3net/metrics.hpp"
#include "stg3net/model.hpp"
#include "stg3net/pipeline.hpp"
#include "stg3net/synth.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

namespace stg3net::cli {

namespace fs = std::filesystem;

namespace {

/** Flag values as typed; applied on top of the config file and --set overrides. */
struct SharedOptions {
    std::string config;
    std::vector<std::string> sets;
    std::map<std::string, std::string> flags;
    bool quiet = false;
    bool verbose = false;
};

void add_shared(CLI::App& cmd, SharedOptions& opts) {
    cmd.add_option("-c,--config", opts.config, "Config file (sectioned key = value)");
    cmd.add_option("--set", opts.sets, "Override one config key: --set section.key=value")->allow_extra_args(false);
    cmd.add_flag("-q,--quiet", opts.quiet, "Only report errors");
    cmd.add_flag("-v,--verbose", opts.verbose, "Report training progress");

    struct Flag {
        const char* name;
        const char* key;
        const char* help;
    };
    static const Flag flags[] = {
        {"--seed", "seed", "Base seed"},
        {"--out", "out", "Output directory"},
        {"--manifest", "manifest", "Input manifest (JSON)"},
        {"--truth", "truth", "Truth CSV matched by spot barcode"},
        {"--variant", "model.variant", "full | only-mask | mask-gan | mask-g2n"},
        {"--recon-loss", "model.recon_loss", "sce | mse"},
        {"--pair-loss", "model.pair_loss", "triplet | contrastive"},
        {"--epochs", "train.epochs", "Training epochs"},
        {"--lambda", "train.lambda", "Adversarial weight"},
        {"--rho", "train.rho", "Mask rate"},
        {"--k-spatial", "graph.k_spatial", "Spatial neighbours per spot"},
        {"--kg", "g2n.kg", "Cross-slice candidates per anchor"},
        {"--kc", "g2n.kc", "Clusters for the pair filter"},
        {"--n-pos", "g2n.n_pos", "Positive budget per anchor"},
        {"--domains", "domains", "Number of target domains"},
    };
    for (const auto& f : flags) {
        auto* opt = cmd.add_option_function<std::string>(
            f.name, [&opts, key = std::string(f.key)](const std::string& v) { opts.flags[key] = v; }, f.help);
        opt->type_name("VALUE");
    }
}

RunConfig resolve(const SharedOptions& opts) {
    RunConfig cfg;
    if (!opts.config.empty()) {
        cfg.load(opts.config);
    }
    for (const auto& kv : opts.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        }
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& [key, value] : opts.flags) {
        cfg.set(key, value);
    }
    cfg.finalize();
    if (opts.quiet) {
        logging::set_level(logging::Level::quiet);
    } else if (opts.verbose) {
        logging::set_level(logging::Level::info);
    }
    return cfg;
}

std::vector<std::string> latent_names(Index n) {
    std::vector<std::string> names;
    for (Index j = 0; j < n; ++j) {
        names.push_back("h" + std::to_string(j));
    }
    return names;
}

std::string report_row(const metrics::MetricsReport& r) {
    auto cell = [](double v) { return std::isfinite(v) ? io::format_double(v) : std::string("nan"); };
    return cell(r.ari) + "," + cell(r.nmi) + "," + cell(r.hom) + "," + cell(r.com) + "," + cell(r.accuracy) + "," +
           cell(r.chaos) + "," + cell(r.pas) + "," + cell(r.consistency) + "," + cell(r.lisi_batch_median) + "," +
           cell(r.lisi_domain_median) + "," + cell(r.f1_lisi);
}

constexpr const char* kReportColumns = "ari,nmi,hom,com,accuracy,chaos,pas,consistency,lisi_batch,lisi_domain,f1_lisi";

int cmd_synth(const RunConfig& cfg) {
    const auto ds = synth::generate(cfg.synth);
    synth::write_dataset(cfg.out, ds);
    std::cout << "wrote " << ds.slices.size() << " slices to " << cfg.out.string() << "\n";
    return ok;
}

struct RunExtras {
    bool dump_triplets = false;
    bool dump_graph = false;
    bool autocorrelation = false;
};

int cmd_run(const RunConfig& cfg, const RunExtras& extras) {
    if (cfg.manifest.empty()) {
        throw ConfigError("run needs a manifest (--manifest or 'manifest' in the config)");
    }
    const auto data = preprocess(load_manifest(cfg.manifest), cfg.n_top_genes);
    const auto graph = build_spatial_graph(data, cfg.k_spatial);
    std::optional<Labels> truth;
    if (!cfg.truth.empty()) {
        truth = load_truth(cfg.truth, data);
    }
    const auto result = run_pipeline(data, graph, truth, cfg, extras.autocorrelation);

    fs::create_directories(cfg.out);
    const auto& t = result.trained;
    io::write_text(cfg.out / "H.csv", io::matrix_to_csv(t.H, latent_names(t.H.cols()), data.barcodes));
    io::write_text(cfg.out / "Z.csv", io::matrix_to_csv(t.Z, data.gene_names, data.barcodes));
    io::write_text(cfg.out / "labels.csv", io::labels_to_csv(result.labels, data.barcodes, "domain"));
    io::write_text(cfg.out / "metrics.json", result.report.to_json());
    io::write_text(cfg.out / "loss_history.csv", history_to_csv(t.history));
    save_checkpoint(cfg.out / "checkpoint.txt", t.params, cfg.ablation.uses_discriminator());
    if (extras.dump_triplets) {
        io::write_text(cfg.out / "triplets.csv", triplets_to_csv(t.last_triplets, t.last_triplet_epoch));
    }
    if (extras.dump_graph) {
        io::write_text(cfg.out / "a_norm.txt", to_coordinate_list(graph.a_norm));
    }
    std::cout << result.report.to_json();
    return ok;
}

struct EvalFiles {
    std::string labels, truth, coords, embedding, slices, output;
};

int cmd_eval(const RunConfig& cfg, const EvalFiles& files) {
    if (files.labels.empty() || files.coords.empty() || files.embedding.empty() || files.slices.empty()) {
        throw ConfigError("eval needs --labels, --coords, --embedding and --slices");
    }
    metrics::EvaluationInput in;
    in.predicted = io::read_labels_csv(files.labels);
    in.coords = io::read_matrix_csv(files.coords, true);
    in.embedding = io::read_matrix_csv(files.embedding, true);
    in.slice_of = io::read_labels_csv(files.slices);
    const std::string truth_path = !files.truth.empty() ? files.truth : cfg.truth.string();
    if (!truth_path.empty()) {
        in.truth = io::read_labels_csv(truth_path);
    }
    const auto n = static_cast<Index>(in.predicted.size());
    const bool mismatch = in.coords.rows() != n || in.embedding.rows() != n ||
                          static_cast<Index>(in.slice_of.size()) != n ||
                          (in.truth && static_cast<Index>(in.truth->size()) != n);
    if (mismatch) {
        throw DataError("eval: input files disagree on the number of spots");
    }
    if (in.coords.cols() != 2) {
        throw DataError("eval: coords file must have exactly two value columns");
    }
    in.lisi_k = cfg.lisi_k;
    in.pas_k = cfg.pas_k;
    const auto json = metrics::evaluate(in).to_json();
    const fs::path output = files.output.empty() ? cfg.out / "metrics.json" : fs::path(files.output);
    if (output.has_parent_path()) {
        fs::create_directories(output.parent_path());
    }
    io::write_text(output, json);
    std::cout << json;
    return ok;
}

int cmd_ablate(const RunConfig& base) {
    struct Arm {
        Variant variant;
        ReconLoss recon;
        PairLoss pair;
    };
    std::vector<Arm> arms;
    for (auto v : {Variant::only_mask, Variant::mask_gan, Variant::mask_g2n, Variant::full}) {
        arms.push_back({v, base.ablation.recon, base.ablation.pair});
    }
    if (base.objective_sweep) {
        arms.push_back({Variant::full, ReconLoss::mse, PairLoss::triplet});
        arms.push_back({Variant::full, ReconLoss::sce, PairLoss::contrastive});
    }

    std::string table = std::string("variant,recon_loss,pair_loss,seed,") + kReportColumns + "\n";
    std::string summary = std::string("variant,recon_loss,pair_loss,n_seeds,") + kReportColumns + "\n";
    std::vector<std::vector<metrics::MetricsReport>> reports(arms.size());

    for (int i = 0; i < base.ablate_seeds; ++i) {
        RunConfig cfg = base;
        cfg.seed = base.seed + static_cast<std::uint64_t>(i);
        cfg.finalize();

        std::optional<synth::SynthDataset> synthetic;
        std::vector<SliceRaw> slices;
        std::optional<Labels> truth;
        if (cfg.manifest.empty()) {
            synthetic = synth::generate(cfg.synth);
            slices = synthetic->slices;
        } else {
            slices = load_manifest(cfg.manifest);
        }
        const auto data = preprocess(slices, cfg.n_top_genes);
        if (synthetic) {
            truth = synthetic->stacked_truth();
        } else if (!cfg.truth.empty()) {
            truth = load_truth(cfg.truth, data);
        }
        const auto graph = build_spatial_graph(data, cfg.k_spatial);

        for (std::size_t a = 0; a < arms.size(); ++a) {
            cfg.ablation.variant = arms[a].variant;
            cfg.ablation.recon = arms[a].recon;
            cfg.ablation.pair = arms[a].pair;
            logging::info("ablate: " + to_string(arms[a].variant) + " seed " + std::to_string(cfg.seed));
            reports[a].push_back(run_pipeline(data, graph, truth, cfg).report);
        }
    }

    for (std::size_t a = 0; a < arms.size(); ++a) {
        const std::string prefix = to_string(arms[a].variant) + "," + to_string(arms[a].recon) + "," + to_string(arms[a].pair) + ",";
        for (std::size_t i = 0; i < reports[a].size(); ++i) {
            table += prefix + std::to_string(base.seed + i) + "," + report_row(reports[a][i]) + "\n";
        }
        auto med = [&](double metrics::MetricsReport::*field) {
            std::vector<double> v;
            for (const auto& r : reports[a]) {
                v.push_back(r.*field);
            }
            return metrics::median(v);
        };
        metrics::MetricsReport m;
        using R = metrics::MetricsReport;
        for (auto field : {&R::ari, &R::nmi, &R::hom, &R::com, &R::accuracy, &R::chaos, &R::pas, &R::consistency,
                           &R::lisi_batch_median, &R::lisi_domain_median, &R::f1_lisi}) {
            m.*field = med(field);
        }
        summary += prefix + std::to_string(reports[a].size()) + "," + report_row(m) + "\n";
    }

    fs::create_directories(base.out);
    io::write_text(base.out / "ablation.csv", table);
    io::write_text(base.out / "ablation_summary.csv", summary);
    std::cout << summary;
    return ok;
}

}

int main(int argc, char** argv) {
    CLI::App app{"Multi-slice spatial transcriptomics integration with a masked graph autoencoder"};
    app.require_subcommand(0, 1);

    bool help_config = false;
    app.add_flag("--help-config", help_config, "Print every config key with its default and exit");

    SharedOptions synth_opts, run_opts, eval_opts, ablate_opts;
    RunExtras extras;
    EvalFiles eval_files;

    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic multi-slice dataset (manifest, slices, truth)");
    add_shared(*synth_cmd, synth_opts);

    auto* run_cmd = app.add_subcommand("run", "Train, cluster the latent space and write all artifacts");
    add_shared(*run_cmd, run_opts);
    run_cmd->add_flag("--dump-triplets", extras.dump_triplets, "Also write the last anchor triplets");
    run_cmd->add_flag("--dump-graph", extras.dump_graph, "Also write the normalized adjacency as a coordinate list");
    run_cmd->add_flag("--autocorrelation", extras.autocorrelation, "Add per-gene Moran's I and Geary's C of the denoised output");

    auto* eval_cmd = app.add_subcommand("eval", "Score existing labels and embeddings without training");
    add_shared(*eval_cmd, eval_opts);
    eval_cmd->add_option("--labels", eval_files.labels, "Predicted labels CSV (spot,label)");
    eval_cmd->add_option("--coords", eval_files.coords, "Coordinates CSV (spot,x,y)");
    eval_cmd->add_option("--embedding", eval_files.embedding, "Embedding CSV (spot,dim...)");
    eval_cmd->add_option("--slices", eval_files.slices, "Slice labels CSV (spot,slice)");
    eval_cmd->add_option("--truth-labels", eval_files.truth, "Truth labels CSV in the same spot order (last column used)");
    eval_cmd->add_option("--output", eval_files.output, "Metrics file (default: <out>/metrics.json)");

    auto* ablate_cmd = app.add_subcommand("ablate", "Run every variant over several seeds and summarize medians");
    add_shared(*ablate_cmd, ablate_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    try {
        if (help_config) {
            std::cout << RunConfig::reference();
            return ok;
        }
        if (*synth_cmd) return cmd_synth(resolve(synth_opts));
        if (*run_cmd) return cmd_run(resolve(run_opts), extras);
        if (*eval_cmd) return cmd_eval(resolve(eval_opts), eval_files);
        if (*ablate_cmd) return cmd_ablate(resolve(ablate_opts));
        std::cout << app.help();
        return config_error;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return data_error;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return numeric_error;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return data_error;
    }
}

}
