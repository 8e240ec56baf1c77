// ness: command-line front end for stability assessment of neighbor embeddings.
//
// Exit codes: 0 success, 2 usage error, 3 data/format error, 4 numeric failure.

#include "CLI11.hpp"

#include "ness/dataset.hpp"
#include "ness/embed.hpp"
#include "ness/error.hpp"
#include "ness/io.hpp"
#include "ness/knn.hpp"
#include "ness/metrics.hpp"
#include "ness/stability.hpp"
#include "ness/svg.hpp"
#include "ness/theory.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace ness;

struct GlobalArgs {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string format;

    std::string format_or(const std::string& fallback) const {
        return format.empty() ? fallback : format;
    }
};

struct DataArgs {
    std::string path;
    std::string label_column;
    std::string labels_path;
    std::optional<double> denoise;
};

struct EngineArgs {
    std::string engine = "tsne-perplexity";
    std::string metric = "euclidean";
    std::size_t iterations = 1000;
    std::size_t early = 250;
    double learning_rate = 200.0;
    double rate_per_point = 0.0;

    OptimizerParams params() const {
        OptimizerParams p;
        p.iterations = iterations;
        p.learning_rate = learning_rate;
        p.learning_rate_per_point = rate_per_point;
        p.momentum_switch = early;
        p.exaggeration_iterations = early;
        p.validate();
        return p;
    }

    std::unique_ptr<Embedder> make() const {
        return std::make_unique<TsneEmbedder>(parse_engine(engine), params(),
                                              parse_metric(metric));
    }
};

void add_data_options(CLI::App* cmd, DataArgs& a, bool required = true) {
    auto* opt = cmd->add_option("--data", a.path, "Input matrix CSV (rows are points)");
    if (required) {
        opt->required();
    }
    cmd->add_option("--label-column", a.label_column, "Column of the data CSV holding labels");
    cmd->add_option("--labels", a.labels_path, "Single-column label CSV aligned with the data");
    cmd->add_option("--denoise", a.denoise,
                    "Apply SVD hard thresholding with gap constant C before use");
}

void add_rate_options(CLI::App* cmd, EngineArgs& a) {
    cmd->add_option("--learning-rate", a.learning_rate, "Optimizer step")->capture_default_str();
    cmd->add_option("--learning-rate-per-point", a.rate_per_point,
                    "Step as a multiple of n; overrides --learning-rate when positive")
        ->capture_default_str();
}

void add_engine_options(CLI::App* cmd, EngineArgs& a) {
    cmd->add_option("--engine", a.engine, "tsne-perplexity or tsne-knn")
        ->check(CLI::IsMember({"tsne-perplexity", "tsne-knn"}))
        ->capture_default_str();
    cmd->add_option("--metric", a.metric, "Input distance metric")
        ->check(CLI::IsMember({"euclidean", "manhattan", "cosine"}))
        ->capture_default_str();
    cmd->add_option("--iterations", a.iterations, "Optimizer iterations")->capture_default_str();
    cmd->add_option("--early-iterations", a.early,
                    "Iterations with early exaggeration and low momentum")
        ->capture_default_str();
    add_rate_options(cmd, a);
}

std::vector<std::string> read_labels(const std::string& path) {
    auto lines = io::split_lines(io::read_file(path));
    while (!lines.empty() && lines.back().empty()) {
        lines.pop_back();
    }
    if (!lines.empty() && lines.front() == "label") {
        lines.erase(lines.begin());
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty() || lines[i].find(',') != std::string::npos) {
            throw ParseError(path + ": line " + std::to_string(i + 1) +
                             ": expected one label per line");
        }
    }
    return lines;
}

DataMatrix load_data(const DataArgs& a) {
    CsvOptions options;
    if (!a.label_column.empty()) {
        options.label_column = a.label_column;
    }
    auto x = load_matrix(a.path, options);
    if (!a.labels_path.empty()) {
        auto labels = read_labels(a.labels_path);
        if (labels.size() != x.n()) {
            throw ValidationError(a.labels_path + ": " + std::to_string(labels.size()) +
                                  " labels for " + std::to_string(x.n()) + " points");
        }
        x = DataMatrix(x.values(), LabelVector(std::move(labels)), x.row_ids());
    }
    if (a.denoise) {
        x = denoise_svd(x, *a.denoise).data;
    }
    return x;
}

std::vector<double> read_column(const std::string& path) {
    const auto m = load_matrix(path);
    if (m.p() != 1) {
        throw ValidationError(path + ": expected a single column, found " +
                              std::to_string(m.p()));
    }
    std::vector<double> out(m.n());
    for (std::size_t i = 0; i < m.n(); ++i) {
        out[i] = m.values()(i, 0);
    }
    return out;
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::fwrite(text.data(), 1, text.size(), stdout);
    } else {
        io::write_file(path, text);
    }
}

std::vector<std::string> column_names(std::size_t p) {
    std::vector<std::string> names(p);
    for (std::size_t j = 0; j < p; ++j) {
        names[j] = "x" + std::to_string(j + 1);
    }
    return names;
}

// ---- generate ---------------------------------------------------------------

struct GenerateArgs {
    std::string kind;
    std::size_t n = 0;
    std::size_t dim = 2;
    double noise = 0.1;
    std::string out;
    std::string labels_out;
};

void run_generate(const GenerateArgs& a, const GlobalArgs& g) {
    std::optional<DataMatrix> x;
    if (a.kind == "curve") {
        x = generate_curve(a.n, a.dim, a.noise, g.seed);
    } else if (a.kind == "circle") {
        x = generate_circle(a.n, g.seed);
    } else {
        x = discrete_circle(a.n);
    }
    const auto names = column_names(x->p());
    const LabelVector* labels = x->labels() ? &*x->labels() : nullptr;
    std::string labels_out = a.labels_out;
    if (labels && labels_out.empty() && !a.out.empty() && a.out != "-") {
        labels_out = std::filesystem::path(a.out).replace_extension(".labels.csv").string();
    }
    if (labels && labels_out.empty()) {
        emit(a.out, format_matrix_csv(x->values(), names, labels));
        return;
    }
    emit(a.out, format_matrix_csv(x->values(), names));
    if (labels) {
        std::string text = "label\n";
        for (const auto& l : labels->labels()) {
            text += l + "\n";
        }
        io::write_file(labels_out, text);
    }
}

// ---- embed ------------------------------------------------------------------

struct EmbedArgs {
    DataArgs data;
    EngineArgs engine;
    double gcp = 30.0;
    std::string out;
    std::string sidecar;
    std::string svg;
};

void run_embed(const EmbedArgs& a, const GlobalArgs& g) {
    const auto x = load_data(a.data);
    const auto engine = a.engine.make();
    engine->check_gcp(a.gcp, x.n());
    const auto run = engine->prepare(x, nullptr, a.gcp)(g.seed);
    emit(a.out, format_embedding_csv(run));
    if (!a.sidecar.empty()) {
        io::write_file(a.sidecar, format_embedding_sidecar(run));
    }
    if (!a.svg.empty()) {
        std::vector<std::size_t> codes;
        if (x.labels()) {
            codes = x.labels()->codes();
        }
        io::write_file(a.svg, scatter_svg(run.coords, codes,
                                          {engine->tag() + " gcp=" + io::format_number(a.gcp),
                                           "dim1", "dim2"}));
    }
}

// ---- assess -----------------------------------------------------------------

struct AssessArgs {
    DataArgs data;
    EngineArgs engine;
    std::vector<std::string> embeddings;
    double gcp = 30.0;
    std::size_t runs = 30;
    std::size_t k = 50;
    double lambda = 0.75;
    std::string out;
    std::string local_out;
    std::string rareness_out;
    std::string pick_embedding;
    std::string instability_out;
    bool transform = false;
};

RunEnsemble assess_ensemble(const AssessArgs& a, const GlobalArgs& g) {
    if (!a.embeddings.empty()) {
        std::vector<EmbeddingRun> runs;
        for (std::size_t r = 0; r < a.embeddings.size(); ++r) {
            runs.push_back(load_external_embedding(a.embeddings[r], {"external", a.gcp, r}));
        }
        return RunEnsemble(std::move(runs));
    }
    if (a.data.path.empty()) {
        throw ArgumentError("assess needs --data or --embeddings");
    }
    const auto x = load_data(a.data);
    const auto engine = a.engine.make();
    return collect_runs(*engine, x, a.gcp, a.runs, g.seed, g.threads);
}

void run_assess(const AssessArgs& a, const GlobalArgs& g) {
    if (!(a.lambda > 0.0 && a.lambda < 1.0)) {
        throw ArgumentError("lambda must lie in (0, 1)");
    }
    const auto ensemble = assess_ensemble(a, g);
    if (a.k < 1 || a.k + 1 > ensemble.n()) {
        throw ArgumentError("k=" + std::to_string(a.k) + " outside [1, n-1] for n=" +
                            std::to_string(ensemble.n()));
    }
    const auto graphs = embedding_graphs(ensemble, a.k, g.threads);
    const auto report = stability_report(neighbor_count_matrix(graphs), a.lambda);
    if (g.format_or("json") == "csv") {
        emit(a.out, "global,lambda,k,N\n" + io::format_number(report.global) + "," +
                        io::format_number(report.lambda) + "," + std::to_string(report.k) + "," +
                        std::to_string(report.runs) + "\n");
    } else {
        emit(a.out, stability_json(report));
    }
    if (!a.local_out.empty()) {
        io::write_file(a.local_out, local_scores_csv(report.local));
    }
    if (!a.instability_out.empty()) {
        const auto inst = instability(report.local, a.transform);
        std::string text = "instability\n";
        for (double v : inst) {
            text += io::format_number(v) + "\n";
        }
        io::write_file(a.instability_out, text);
    }
    if (!a.rareness_out.empty() || !a.pick_embedding.empty()) {
        const auto rare = rareness_scores(graphs);
        if (!a.rareness_out.empty()) {
            io::write_file(a.rareness_out, rareness_json(rare));
        }
        if (!a.pick_embedding.empty()) {
            io::write_file(a.pick_embedding,
                           format_embedding_csv(ensemble.runs()[rare.least_rare]));
        }
    }
}

// ---- gcp-scan ---------------------------------------------------------------

struct ScanArgs {
    DataArgs data;
    EngineArgs engine;
    std::vector<double> gcps;
    bool log10 = false;
    std::size_t runs = 30;
    std::size_t k = 50;
    double lambda = 0.75;
    std::string rule = "sequential";
    std::string improvement = "relative";
    bool timings = false;
    std::string out;
    std::string svg;
};

void run_scan(const ScanArgs& a, const GlobalArgs& g) {
    const auto x = load_data(a.data);
    const auto engine = a.engine.make();
    const auto gcps = a.gcps.empty() ? default_gcp_grid(x.n(), a.log10) : a.gcps;
    ScanOptions options;
    options.runs = a.runs;
    options.k = a.k;
    options.lambda = a.lambda;
    options.rule = parse_scan_rule(a.rule);
    options.improvement =
        a.improvement == "absolute" ? ImprovementMode::absolute : ImprovementMode::relative;
    options.base_seed = g.seed;
    options.threads = g.threads;
    const auto result = gcp_scan(*engine, x, gcps, options);
    const auto& trace = result.trace;
    if (g.format_or("json") == "csv") {
        std::string text = "gcp,global,recommended\n";
        for (std::size_t i = 0; i < trace.entries.size(); ++i) {
            text += io::format_number(trace.entries[i].gcp) + "," +
                    io::format_number(trace.entries[i].global) + "," +
                    (i == result.recommended_index ? "1" : "0") + "\n";
        }
        emit(a.out, text);
    } else {
        emit(a.out, scan_json(trace, a.timings));
    }
    if (!a.svg.empty()) {
        std::vector<double> xs, ys;
        for (const auto& e : trace.entries) {
            xs.push_back(e.gcp);
            ys.push_back(e.global);
        }
        io::write_file(a.svg, line_chart_svg(xs, ys, result.recommended_index,
                                             {"Global stability by GCP (" + engine->tag() + ")",
                                              "GCP", "global stability"}));
    }
}

// ---- metrics ----------------------------------------------------------------

struct MetricsArgs {
    DataArgs data;
    std::string embedding;
    MetricsOptions options;
    std::string out;
};

void run_metrics(const MetricsArgs& a, const GlobalArgs& g) {
    const auto x = load_data(a.data);
    const auto y = load_external_embedding(a.embedding, {});
    if (y.n() != x.n()) {
        throw ValidationError("embedding has " + std::to_string(y.n()) + " rows, data has " +
                              std::to_string(x.n()));
    }
    const auto report =
        evaluate_metrics(x.values(), y.coords, x.labels() ? &*x.labels() : nullptr, a.options);
    if (g.format_or("json") == "csv") {
        std::string text = "metric,value\n";
        auto row = [&](const char* name, std::optional<double> v) {
            if (v) {
                text += std::string(name) + "," + io::format_number(*v) + "\n";
            }
        };
        row("correlation", report.correlation);
        row("concordance", report.concordance);
        row("silhouette", report.silhouette);
        row("neighbor_purity", report.neighbor_purity);
        row("local_simpson", report.local_simpson);
        emit(a.out, text);
    } else {
        emit(a.out, metrics_json(report));
    }
}

// ---- density ----------------------------------------------------------------

struct DensityArgs {
    DataArgs data;
    std::string local;
    std::vector<double> percentiles{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    std::string normalization = "median-of-means";
    std::string out;
};

void run_density(const DensityArgs& a, const GlobalArgs&) {
    const auto x = load_data(a.data);
    const auto s = read_column(a.local);
    if (s.size() != x.n()) {
        throw ValidationError("stability file has " + std::to_string(s.size()) +
                              " rows, data has " + std::to_string(x.n()));
    }
    const auto norm = a.normalization == "median-of-neighbor-distances"
                          ? DensityNormalization::median_of_neighbor_distances
                          : DensityNormalization::median_of_means;
    emit(a.out, density_csv(local_density_profile(x.values(), s, a.percentiles, norm)));
}

// ---- removal ----------------------------------------------------------------

struct RemovalArgs {
    DataArgs data;
    EngineArgs engine;
    RemovalOptions options;
    std::vector<double> fractions{0.05, 0.1, 0.2};
    std::string out;
};

void run_removal(RemovalArgs a, const GlobalArgs& g) {
    const auto x = load_data(a.data);
    const auto engine = a.engine.make();
    a.options.base_seed = g.seed;
    a.options.threads = g.threads;
    const auto baseline =
        collect_runs(*engine, x, a.options.gcp, a.options.runs, g.seed, g.threads);
    const auto report = stability_report(
        neighbor_count_matrix(baseline, a.options.k, g.threads), a.options.lambda);
    emit(a.out, removal_csv(removal_experiment(*engine, x, baseline, report.local, a.fractions,
                                               a.options)));
}

// ---- associate --------------------------------------------------------------

struct AssociateArgs {
    std::string features;
    std::string local;
    std::string out;
};

void run_associate(const AssociateArgs& a, const GlobalArgs&) {
    const auto text = io::read_file(a.features);
    const auto f = parse_matrix_csv(text);
    std::vector<std::string> names;
    const auto lines = io::split_lines(text);
    if (!lines.empty()) {
        auto first = io::split_csv_line(lines.front());
        bool header = false;
        for (const auto& cell : first) {
            header = header || !io::parse_double(cell);
        }
        if (header) {
            names = std::move(first);
        }
    }
    const auto s = read_column(a.local);
    if (s.size() != f.n()) {
        throw ValidationError("stability file has " + std::to_string(s.size()) +
                              " rows, features have " + std::to_string(f.n()));
    }
    emit(a.out, association_csv(feature_association(f.values(), s, names)));
}

// ---- theory -----------------------------------------------------------------

struct TheoryArgs {
    std::vector<std::size_t> ns;
    std::size_t k = 3;
    double k_fraction = 0.0;
    std::size_t seeds = 10;
    EngineArgs engine;
    std::string out;
    std::string rows_out;
};

void run_theory(const TheoryArgs& a, const GlobalArgs& g) {
    NeighborRule rule{a.k, a.k_fraction};
    const auto result = distortion_scaling_experiment(a.ns, rule, a.seeds, a.engine.params(),
                                                      g.seed, g.threads);
    if (g.format_or("csv") == "json") {
        emit(a.out, theory_summary_json(result.summary));
    } else {
        emit(a.out, theory_summary_csv(result.summary));
    }
    if (!a.rows_out.empty()) {
        io::write_file(a.rows_out, theory_rows_csv(result.rows));
    }
}

int exit_code(const std::exception& e) {
    if (dynamic_cast<const ArgumentError*>(&e)) {
        return 2;
    }
    if (dynamic_cast<const ness::ParseError*>(&e) || dynamic_cast<const ValidationError*>(&e)) {
        return 3;
    }
    if (dynamic_cast<const NumericError*>(&e)) {
        return 4;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stability assessment for neighbor embeddings"};
    app.require_subcommand(1);
    GlobalArgs g;
    app.add_option("--seed", g.seed, "Base random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker thread cap")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--format", g.format, "Report format (json or csv)")
        ->check(CLI::IsMember({"json", "csv"}));
    app.set_help_all_flag("--help-all");
    app.fallthrough();

    GenerateArgs gen;
    auto* c_gen = app.add_subcommand("generate", "Write a synthetic dataset");
    c_gen->add_option("kind", gen.kind, "curve, circle or discrete-circle")
        ->required()
        ->check(CLI::IsMember({"curve", "circle", "discrete-circle"}));
    c_gen->add_option("--n", gen.n, "Number of points")->required();
    c_gen->add_option("--dim", gen.dim, "Ambient dimension (curve)")->capture_default_str();
    c_gen->add_option("--noise", gen.noise, "Gaussian noise sd (curve)")->capture_default_str();
    c_gen->add_option("--out", gen.out, "Output CSV (stdout when omitted)");
    c_gen->add_option("--labels-out", gen.labels_out, "Label CSV path for labeled data");

    EmbedArgs emb;
    auto* c_emb = app.add_subcommand("embed", "Embed data once");
    add_data_options(c_emb, emb.data);
    add_engine_options(c_emb, emb.engine);
    c_emb->add_option("--gcp", emb.gcp, "Perplexity or neighbor count")->capture_default_str();
    c_emb->add_option("--out", emb.out, "Embedding CSV");
    c_emb->add_option("--sidecar", emb.sidecar, "Run metadata JSON");
    c_emb->add_option("--svg", emb.svg, "Scatter plot of the embedding");

    AssessArgs as;
    auto* c_as = app.add_subcommand("assess", "Local and global stability of an ensemble");
    add_data_options(c_as, as.data, false);
    add_engine_options(c_as, as.engine);
    c_as->add_option("--embeddings", as.embeddings, "External embedding CSVs forming the ensemble")
        ->delimiter(',');
    c_as->add_option("--gcp", as.gcp, "Perplexity or neighbor count")->capture_default_str();
    c_as->add_option("--runs,-N", as.runs, "Ensemble size")->capture_default_str();
    c_as->add_option("--k", as.k, "Embedding-space neighbor count")->capture_default_str();
    c_as->add_option("--lambda", as.lambda, "Stability quantile")->capture_default_str();
    c_as->add_option("--out", as.out, "Stability report");
    c_as->add_option("--local-out", as.local_out, "Per-point stability CSV");
    c_as->add_option("--rareness-out", as.rareness_out, "Rareness JSON");
    c_as->add_option("--pick-embedding", as.pick_embedding,
                     "Write the least rare embedding to this CSV");
    c_as->add_option("--instability-out", as.instability_out, "Per-point instability CSV");
    c_as->add_flag("--transform", as.transform, "Use log(1 + 100 log(1/S)) for instability");

    ScanArgs sc;
    auto* c_sc = app.add_subcommand("gcp-scan", "Global stability across GCP values");
    add_data_options(c_sc, sc.data);
    add_engine_options(c_sc, sc.engine);
    c_sc->add_option("--gcps", sc.gcps, "Increasing GCP values (default grid when omitted)")
        ->delimiter(',');
    c_sc->add_flag("--log10", sc.log10, "Default grid upper end 10 log10(n)");
    c_sc->add_option("--runs,-N", sc.runs, "Ensemble size")->capture_default_str();
    c_sc->add_option("--k", sc.k, "Embedding-space neighbor count")->capture_default_str();
    c_sc->add_option("--lambda", sc.lambda, "Stability quantile")->capture_default_str();
    c_sc->add_option("--rule", sc.rule, "sequential or top5pct")
        ->check(CLI::IsMember({"sequential", "top5pct"}))
        ->capture_default_str();
    c_sc->add_option("--improvement", sc.improvement, "relative or absolute 5% gain test")
        ->check(CLI::IsMember({"relative", "absolute"}))
        ->capture_default_str();
    c_sc->add_flag("--timings", sc.timings, "Include wall times in the JSON trace");
    c_sc->add_option("--out", sc.out, "Scan trace");
    c_sc->add_option("--svg", sc.svg, "Line chart of global stability");

    MetricsArgs me;
    auto* c_me = app.add_subcommand("metrics", "Structure and label preservation");
    add_data_options(c_me, me.data);
    c_me->add_option("--embedding", me.embedding, "Embedding CSV")->required();
    c_me->add_option("--concordance-k", me.options.concordance_k)->capture_default_str();
    c_me->add_option("--purity-k", me.options.purity_k)->capture_default_str();
    c_me->add_option("--simpson-k", me.options.simpson_k)->capture_default_str();
    c_me->add_option("--out", me.out, "Metrics report");

    DensityArgs de;
    auto* c_de = app.add_subcommand("density", "Local density of stable points");
    add_data_options(c_de, de.data);
    c_de->add_option("--local", de.local, "Per-point stability CSV")->required();
    c_de->add_option("--percentiles", de.percentiles, "Upper percentiles in (0, 100]")
        ->delimiter(',');
    c_de->add_option("--normalization", de.normalization)
        ->check(CLI::IsMember({"median-of-means", "median-of-neighbor-distances"}))
        ->capture_default_str();
    c_de->add_option("--out", de.out, "Density CSV");

    RemovalArgs re;
    auto* c_re = app.add_subcommand("removal", "Re-embed after dropping unstable points");
    add_data_options(c_re, re.data);
    add_engine_options(c_re, re.engine);
    c_re->add_option("--gcp", re.options.gcp)->capture_default_str();
    c_re->add_option("--runs,-N", re.options.runs)->capture_default_str();
    c_re->add_option("--k", re.options.k)->capture_default_str();
    c_re->add_option("--lambda", re.options.lambda)->capture_default_str();
    c_re->add_option("--concordance-k", re.options.concordance_k)->capture_default_str();
    c_re->add_option("--purity-k", re.options.purity_k)->capture_default_str();
    c_re->add_option("--fractions", re.fractions, "Fractions of points to remove")
        ->delimiter(',');
    c_re->add_option("--out", re.out, "Removal CSV");

    AssociateArgs at;
    auto* c_at = app.add_subcommand("associate", "Spearman association of features with S");
    c_at->add_option("--features", at.features, "Feature CSV (rows are points)")->required();
    c_at->add_option("--local", at.local, "Per-point stability CSV")->required();
    c_at->add_option("--out", at.out, "Association CSV");

    TheoryArgs th;
    auto* c_th = app.add_subcommand("theory", "Distortion of t-SNE on discrete circles");
    c_th->add_option("--ns", th.ns, "Circle sizes")->required()->delimiter(',');
    auto* k_opt = c_th->add_option("--k", th.k, "Fixed neighbor count")->capture_default_str();
    c_th->add_option("--k-fraction", th.k_fraction, "Neighbor count as a fraction of n")
        ->excludes(k_opt);
    c_th->add_option("--seeds", th.seeds, "Seeds per n")->capture_default_str();
    c_th->add_option("--iterations", th.engine.iterations)->capture_default_str();
    c_th->add_option("--early-iterations", th.engine.early)->capture_default_str();
    th.engine.rate_per_point = 0.25;
    add_rate_options(c_th, th.engine);
    c_th->add_option("--out", th.out, "Summary of medians per n");
    c_th->add_option("--rows-out", th.rows_out, "Per-run CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*c_gen) {
            run_generate(gen, g);
        } else if (*c_emb) {
            run_embed(emb, g);
        } else if (*c_as) {
            run_assess(as, g);
        } else if (*c_sc) {
            run_scan(sc, g);
        } else if (*c_me) {
            run_metrics(me, g);
        } else if (*c_de) {
            run_density(de, g);
        } else if (*c_re) {
            run_removal(re, g);
        } else if (*c_at) {
            run_associate(at, g);
        } else if (*c_th) {
            run_theory(th, g);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e);
    }
    return 0;
}
