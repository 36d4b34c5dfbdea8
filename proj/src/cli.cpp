#include "zerosyl/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "binary.hpp"
#include "text.hpp"
#include "zerosyl/alignment.hpp"
#include "zerosyl/bench_score.hpp"
#include "zerosyl/codebook.hpp"
#include "zerosyl/error.hpp"
#include "zerosyl/eval_boundary.hpp"
#include "zerosyl/eval_discovery.hpp"
#include "zerosyl/feature_io.hpp"
#include "zerosyl/kmeans.hpp"
#include "zerosyl/parallel.hpp"
#include "zerosyl/segmenter.hpp"
#include "zerosyl/tokenizer.hpp"

namespace fs = std::filesystem;

namespace zerosyl::cli {

namespace {

void write_text(const fs::path& path, const std::string& text) {
    detail::write_file(path, std::vector<char>(text.begin(), text.end()));
}

void require_file(const fs::path& path, const char* what) {
    if (!fs::exists(path))
        throw IoError(std::string(what) + " not found: " + path.string());
}

FeatureMatrix load_entry(const fs::path& features_dir, const ManifestEntry& e) {
    const fs::path path = features_dir / e.relative_path;
    try {
        FeatureMatrix m = read_features(path);
        m.utterance_id = e.utterance_id;
        return m;
    } catch (const Error& ex) {
        throw Error("utterance " + e.utterance_id + " (" + path.string() + "): " + ex.what());
    }
}

std::map<std::string, const TimedBoundaries*> index_segments(const std::vector<TimedBoundaries>& segs) {
    std::map<std::string, const TimedBoundaries*> out;
    for (const auto& s : segs)
        if (!out.emplace(s.utterance_id, &s).second)
            throw ValidationError("duplicate utterance in segmentation: " + s.utterance_id);
    return out;
}

const TimedBoundaries& lookup(const std::map<std::string, const TimedBoundaries*>& idx, const std::string& id) {
    const auto it = idx.find(id);
    if (it == idx.end())
        throw ValidationError("utterance " + id + " has no segmentation");
    return *it->second;
}

// ---------------------------------------------------------------------------
// Stages

struct SegmentStage {
    fs::path manifest;
    fs::path features_dir;
    SegmenterConfig cfg;
    int jobs = 1;
};

std::vector<Segmentation> run_segment(const SegmentStage& s, std::ostream& err) {
    s.cfg.validate();
    const Manifest manifest = read_manifest(s.manifest);
    std::vector<Segmentation> segs(manifest.entries.size());
    std::vector<SegmentStats> stats(manifest.entries.size());
    parallel_for(manifest.entries.size(), s.jobs, [&](std::size_t i) {
        const FeatureMatrix m = load_entry(s.features_dir, manifest.entries[i]);
        segs[i] = segment(m, s.cfg, &stats[i]);
    });
    std::size_t zero_pairs = 0;
    for (const auto& st : stats)
        zero_pairs += st.zero_norm_pairs;
    if (zero_pairs > 0)
        err << "warning: " << zero_pairs << " adjacent frame pairs involved a zero-norm frame (distance set to 1)\n";
    return segs;
}

struct FeatureStage {
    fs::path manifest;
    fs::path features_dir;
    fs::path segments;
    std::optional<double> frame_period_s;
    int jobs = 1;
};

Segmentation grid_segmentation(const FeatureMatrix& m, const TimedBoundaries& tb, std::optional<double> period) {
    return to_segmentation(tb, period.value_or(m.frame_period_s), m.num_frames());
}

std::vector<SegmentEmbedding> run_pool(const FeatureStage& s) {
    const Manifest manifest = read_manifest(s.manifest);
    const auto timed = read_segmentations(s.segments);
    const auto idx = index_segments(timed);
    std::vector<std::vector<SegmentEmbedding>> per(manifest.entries.size());
    parallel_for(manifest.entries.size(), s.jobs, [&](std::size_t i) {
        const auto& e = manifest.entries[i];
        const FeatureMatrix m = load_entry(s.features_dir, e);
        per[i] = pool_segments(m, grid_segmentation(m, lookup(idx, e.utterance_id), s.frame_period_s));
    });
    std::vector<SegmentEmbedding> all;
    for (auto& v : per)
        std::move(v.begin(), v.end(), std::back_inserter(all));
    return all;
}

std::vector<TokenSequence> run_quantize(const FeatureStage& s, const Codebook& cb, std::ostream& err) {
    const Manifest manifest = read_manifest(s.manifest);
    const auto timed = read_segmentations(s.segments);
    const auto idx = index_segments(timed);
    std::vector<TokenSequence> out(manifest.entries.size());
    std::vector<QuantizeStats> stats(manifest.entries.size());
    parallel_for(manifest.entries.size(), s.jobs, [&](std::size_t i) {
        const auto& e = manifest.entries[i];
        const FeatureMatrix m = load_entry(s.features_dir, e);
        out[i] = quantize(m, grid_segmentation(m, lookup(idx, e.utterance_id), s.frame_period_s), cb, &stats[i]);
    });
    std::size_t zero = 0;
    for (const auto& st : stats)
        zero += st.zero_norm_segments;
    if (zero > 0)
        err << "warning: " << zero << " zero-norm segments assigned the silence id\n";
    return out;
}

struct TrainStage {
    fs::path embeddings;
    KMeansOptions kmeans;
    std::size_t max_embeddings = 0;
};

FrameMatrix subsample(const FrameMatrix& all, std::size_t budget, std::uint64_t seed) {
    const std::size_t n = static_cast<std::size_t>(all.rows());
    if (budget == 0 || budget >= n)
        return all;
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i)
        idx[i] = i;
    std::mt19937_64 rng(seed ^ 0x5a5355424d504c45ULL);
    for (std::size_t i = 0; i < budget; ++i) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        const std::size_t j = i + std::min(n - i - 1, static_cast<std::size_t>(u * static_cast<double>(n - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(budget);
    std::sort(idx.begin(), idx.end());
    FrameMatrix out(static_cast<Eigen::Index>(budget), all.cols());
    for (std::size_t i = 0; i < budget; ++i)
        out.row(static_cast<Eigen::Index>(i)) = all.row(static_cast<Eigen::Index>(idx[i]));
    return out;
}

Codebook run_train(const TrainStage& s, std::ostream& err) {
    const FrameMatrix all = read_features(s.embeddings).frames;
    const FrameMatrix data = subsample(all, s.max_embeddings, s.kmeans.seed);
    const KMeansResult r = train_spherical_kmeans(data, s.kmeans);
    if (r.dropped_zero > 0)
        err << "warning: dropped " << r.dropped_zero << " zero-norm embeddings before training\n";
    err << "k-means: " << data.rows() << " embeddings, k=" << s.kmeans.k << ", " << r.iterations << " iterations, "
        << (r.converged ? "converged" : "hit max-iters") << ", objective " << r.objective_history.back();
    if (r.reseeded > 0)
        err << ", " << r.reseeded << " empty clusters re-seeded";
    err << "\n";
    return r.codebook;
}

Codebook run_collapse(const Codebook& cb, std::ostream& err) {
    CollapseInfo info;
    Codebook out = collapse_silence(cb, &info);
    err << "silence collapse: " << info.silence_branch.size() << " of " << cb.k()
        << " centroids mapped to id 0; vocabulary " << cb.k() << " -> " << out.collapsed_vocab_size << "\n";
    return out;
}

std::vector<double> parse_grid(const std::vector<double>& flag) {
    return flag.empty() ? default_shift_grid() : flag;
}

// ---------------------------------------------------------------------------
// Option wiring

void add_config(CLI::App& sub) {
    sub.add_option("--config", "Key-value (TOML/INI) config file; command-line flags take precedence");
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// CLI11 only reads config files attached to the root app, so subcommand configs
// are turned into trailing flags here. Keys already given on the command line win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::optional<std::string> file;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            file = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            file = args[i].substr(9);
    }
    if (!file)
        return args;
    std::vector<std::string> out = args;
    for (const auto& item : CLI::ConfigTOML().from_file(*file)) {
        if (item.name == "++" || item.name == "--")
            continue;
        if (!item.parents.empty() && item.parents != std::vector<std::string>{args[0]})
            continue;
        const std::string flag = "--" + item.name;
        if (has_flag(args, flag))
            continue;
        if (item.inputs == std::vector<std::string>{"false"})
            continue;
        out.push_back(flag);
        if (item.inputs != std::vector<std::string>{"true"})
            out.insert(out.end(), item.inputs.begin(), item.inputs.end());
    }
    return out;
}

void add_segmenter_options(CLI::App& sub, std::string& mode, SegmenterConfig& cfg) {
    sub.add_option("--mode", mode, "Boundary signal: norm (frame L2 norm) or cosine (adjacent-frame distance)")
        ->check(CLI::IsMember({"norm", "cosine"}))
        ->capture_default_str();
    sub.add_option("--window", cfg.smoothing_window, "Moving-average window (odd)")->capture_default_str();
    sub.add_option("--prominence-factor", cfg.prominence_factor, "Minimum prominence as a multiple of signal std")
        ->capture_default_str();
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"zerosyl: training-free syllable tokenizer and segmentation evaluation"};
    app.require_subcommand(1);
    app.fallthrough(false);

    // segment
    SegmentStage seg_stage;
    std::string seg_mode = "norm";
    std::optional<double> seg_period;
    fs::path seg_out;
    auto* seg_cmd = app.add_subcommand("segment", "Detect syllable boundaries from boundary-layer features");
    add_config(*seg_cmd);
    seg_cmd->add_option("--manifest", seg_stage.manifest, "Manifest TSV")->required();
    seg_cmd->add_option("--features-dir", seg_stage.features_dir, "Boundary-layer feature directory")->required();
    add_segmenter_options(*seg_cmd, seg_mode, seg_stage.cfg);
    seg_cmd->add_option("--frame-period", seg_period, "Override the feature files' frame period (s)");
    seg_cmd->add_option("--out", seg_out, "Segmentation TSV to write")->required();
    seg_cmd->add_option("--jobs", seg_stage.jobs, "Worker threads")->capture_default_str();

    // pool
    FeatureStage pool_stage;
    fs::path pool_out;
    auto* pool_cmd = app.add_subcommand("pool", "Mean-pool semantic-layer features within segments");
    add_config(*pool_cmd);
    pool_cmd->add_option("--manifest", pool_stage.manifest, "Manifest TSV")->required();
    pool_cmd->add_option("--features-dir", pool_stage.features_dir, "Semantic-layer feature directory")->required();
    pool_cmd->add_option("--segments", pool_stage.segments, "Segmentation TSV")->required();
    pool_cmd->add_option("--frame-period", pool_stage.frame_period_s, "Override the feature files' frame period (s)");
    pool_cmd->add_option("--out", pool_out, "Embedding matrix (ZSFT) to write; index goes to <stem>.index.tsv")
        ->required();
    pool_cmd->add_option("--jobs", pool_stage.jobs, "Worker threads")->capture_default_str();

    // train-kmeans
    TrainStage train_stage;
    fs::path train_out;
    auto* train_cmd = app.add_subcommand("train-kmeans", "Train a spherical k-means codebook on pooled embeddings");
    add_config(*train_cmd);
    train_cmd->add_option("--embeddings", train_stage.embeddings, "Embedding matrix from `pool`")->required();
    train_cmd->add_option("--k", train_stage.kmeans.k, "Number of centroids")->capture_default_str();
    train_cmd->add_option("--seed", train_stage.kmeans.seed, "Random seed")->capture_default_str();
    train_cmd->add_option("--max-iters", train_stage.kmeans.max_iters, "Iteration cap")->capture_default_str();
    train_cmd->add_option("--max-embeddings", train_stage.max_embeddings, "Random subsample size (0 = all)")
        ->capture_default_str();
    train_cmd->add_option("--out", train_out, "Codebook (ZSCB) to write")->required();
    train_cmd->add_option("--jobs", train_stage.kmeans.jobs, "Worker threads")->capture_default_str();

    // collapse-silence
    fs::path collapse_in, collapse_out;
    auto* collapse_cmd = app.add_subcommand("collapse-silence", "Merge the silence branch of the codebook into id 0");
    add_config(*collapse_cmd);
    collapse_cmd->add_option("--codebook", collapse_in, "Uncollapsed codebook")->required();
    collapse_cmd->add_option("--out", collapse_out, "Collapsed codebook to write")->required();

    // quantize
    FeatureStage quant_stage;
    fs::path quant_codebook, quant_out;
    auto* quant_cmd = app.add_subcommand("quantize", "Turn segmented utterances into token sequences");
    add_config(*quant_cmd);
    quant_cmd->add_option("--manifest", quant_stage.manifest, "Manifest TSV")->required();
    quant_cmd->add_option("--features-dir", quant_stage.features_dir, "Semantic-layer feature directory")->required();
    quant_cmd->add_option("--segments", quant_stage.segments, "Segmentation TSV")->required();
    quant_cmd->add_option("--codebook", quant_codebook, "Codebook (ZSCB)")->required();
    quant_cmd->add_option("--frame-period", quant_stage.frame_period_s, "Override the feature files' frame period (s)");
    quant_cmd->add_option("--out", quant_out, "Token file to write; spans go to <stem>.spans.tsv")->required();
    quant_cmd->add_option("--jobs", quant_stage.jobs, "Worker threads")->capture_default_str();

    // eval-boundaries
    fs::path eb_align, eb_segs, eb_dev_align, eb_dev_segs, eb_report;
    double eb_tol = 0.05;
    double eb_shift = 0.0;
    bool eb_tune = false;
    bool eb_excl_adjacent = false;
    std::vector<double> eb_grid;
    auto* eb_cmd = app.add_subcommand("eval-boundaries", "Boundary and token precision/recall/F1, OS and R-value");
    add_config(*eb_cmd);
    eb_cmd->add_option("--alignments", eb_align, "Reference syllable TSV")->required();
    eb_cmd->add_option("--segments", eb_segs, "Predicted segmentation TSV")->required();
    eb_cmd->add_option("--tolerance", eb_tol, "Match tolerance (s)")->capture_default_str();
    auto* shift_opt = eb_cmd->add_option("--shift", eb_shift, "Constant shift added to predictions (s)");
    auto* tune_opt = eb_cmd->add_flag("--tune-shift", eb_tune, "Pick the shift maximising boundary F1 on a grid");
    shift_opt->excludes(tune_opt);
    eb_cmd->add_option("--shift-grid", eb_grid, "Shift grid (s); default -0.1..0.1 step 0.01");
    eb_cmd->add_option("--dev-alignments", eb_dev_align, "Tune the shift on this reference set instead");
    eb_cmd->add_option("--dev-segments", eb_dev_segs, "Predictions for --dev-alignments");
    eb_cmd->add_flag("--exclude-silence-adjacent-tokens", eb_excl_adjacent,
                     "Drop reference syllables that touch a silence from token scores");
    eb_cmd->add_option("--report", eb_report, "Write key-value report here");

    // eval-discovery
    fs::path ed_align, ed_tokens, ed_report, ed_table;
    bool ed_excl_sil = false;
    auto* ed_cmd = app.add_subcommand("eval-discovery", "Cluster purity, SNMI, bitrate and token frequency");
    add_config(*ed_cmd);
    ed_cmd->add_option("--alignments", ed_align, "Reference syllable TSV")->required();
    ed_cmd->add_option("--tokens", ed_tokens, "Token file from `quantize`")->required();
    ed_cmd->add_flag("--exclude-silence", ed_excl_sil, "Leave tokens mapped to silence out of the tables");
    ed_cmd->add_option("--report", ed_report, "Write key-value report here");
    ed_cmd->add_option("--contingency", ed_table, "Dump the contingency table as TSV");

    // score-pairs
    fs::path sp_pairs;
    bool sp_unnorm = false;
    auto* sp_cmd = app.add_subcommand("score-pairs", "Forced-choice accuracy from per-item log-likelihoods");
    add_config(*sp_cmd);
    sp_cmd->add_option("--pairs", sp_pairs, "TSV: pair_id, pos_ll, pos_tokens, neg_ll, neg_tokens")->required();
    sp_cmd->add_flag("--unnormalized", sp_unnorm, "Compare total instead of per-token log-likelihoods");

    // pipeline
    fs::path pl_manifest, pl_train_manifest, pl_bdir, pl_sdir, pl_out, pl_align;
    SegmenterConfig pl_cfg;
    std::string pl_mode = "norm";
    KMeansOptions pl_kmeans;
    std::size_t pl_budget = 0;
    int pl_jobs = 1;
    double pl_tol = 0.05;
    std::vector<double> pl_grid;
    bool pl_resume = false;
    auto* pl_cmd = app.add_subcommand("pipeline", "segment -> pool -> train-kmeans -> collapse-silence -> quantize");
    add_config(*pl_cmd);
    pl_cmd->add_option("--manifest", pl_manifest, "Manifest of utterances to tokenize")->required();
    pl_cmd->add_option("--kmeans-train-manifest", pl_train_manifest, "Manifest for codebook training (default: --manifest)");
    pl_cmd->add_option("--boundary-features-dir", pl_bdir, "Boundary-layer feature directory")->required();
    pl_cmd->add_option("--semantic-features-dir", pl_sdir, "Semantic-layer feature directory")->required();
    add_segmenter_options(*pl_cmd, pl_mode, pl_cfg);
    pl_cmd->add_option("--k", pl_kmeans.k, "Number of centroids")->capture_default_str();
    pl_cmd->add_option("--seed", pl_kmeans.seed, "Random seed")->capture_default_str();
    pl_cmd->add_option("--max-iters", pl_kmeans.max_iters, "k-means iteration cap")->capture_default_str();
    pl_cmd->add_option("--max-embeddings", pl_budget, "k-means training subsample (0 = all)")->capture_default_str();
    pl_cmd->add_option("--alignments", pl_align, "If given, evaluate boundaries and discovery at the end");
    pl_cmd->add_option("--tolerance", pl_tol, "Evaluation tolerance (s)")->capture_default_str();
    pl_cmd->add_option("--shift-grid", pl_grid, "Evaluation shift grid (s)");
    pl_cmd->add_option("--out-dir", pl_out, "Output directory")->required();
    pl_cmd->add_option("--jobs", pl_jobs, "Worker threads")->capture_default_str();
    pl_cmd->add_flag("--resume", pl_resume, "Skip stages whose outputs already exist");

    try {
        const std::vector<std::string> expanded = expand_config(args);
        std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*seg_cmd) {
            seg_stage.cfg.mode = parse_signal_mode(seg_mode);
            seg_stage.cfg.frame_period_s = seg_period;
            write_segmentations(run_segment(seg_stage, err), seg_out);
        } else if (*pool_cmd) {
            write_embeddings(run_pool(pool_stage), pool_out);
        } else if (*train_cmd) {
            write_codebook(run_train(train_stage, err), train_out);
        } else if (*collapse_cmd) {
            write_codebook(run_collapse(read_codebook(collapse_in), err), collapse_out);
        } else if (*quant_cmd) {
            const Codebook cb = read_codebook(quant_codebook);
            write_token_sequences(run_quantize(quant_stage, cb, err), quant_out);
        } else if (*eb_cmd) {
            const auto refs = read_alignments(eb_align);
            const auto preds = read_segmentations(eb_segs);
            BoundaryEvalOptions opts;
            opts.tolerance_s = eb_tol;
            opts.silence_adjacent_tokens = !eb_excl_adjacent;
            opts.shift_s = eb_shift;
            if (eb_tune) {
                const auto grid = parse_grid(eb_grid);
                if (eb_dev_align.empty() != eb_dev_segs.empty())
                    throw ValidationError("--dev-alignments and --dev-segments go together");
                if (!eb_dev_align.empty())
                    opts.shift_s = tune_shift(read_alignments(eb_dev_align), read_segmentations(eb_dev_segs), eb_tol,
                                              grid);
                else
                    opts.shift_s = tune_shift(refs, preds, eb_tol, grid);
            }
            const BoundaryReport r = evaluate_boundaries(refs, preds, opts);
            out << format_boundary_table(r);
            if (!eb_report.empty())
                write_text(eb_report, format_boundary_kv(r));
        } else if (*ed_cmd) {
            DiscoveryOptions opts;
            opts.exclude_silence = ed_excl_sil;
            const auto tokens = read_token_sequences(ed_tokens);
            const auto refs = read_alignments(ed_align);
            const DiscoveryReport r = evaluate_discovery(tokens, refs, opts);
            out << format_discovery_table(r);
            if (!ed_report.empty())
                write_text(ed_report, format_discovery_kv(r));
            if (!ed_table.empty())
                write_text(ed_table, format_contingency_tsv(build_contingency(tokens, refs, opts)));
        } else if (*sp_cmd) {
            const auto pairs = read_pairs(sp_pairs);
            out << detail::fixed(pair_accuracy(pairs, !sp_unnorm), 4) << "\n";
        } else if (*pl_cmd) {
            if (pl_kmeans.k < 2)
                throw ValidationError("k must be >= 2");
            require_file(pl_manifest, "manifest");
            require_file(pl_bdir, "boundary feature directory");
            require_file(pl_sdir, "semantic feature directory");
            pl_cfg.mode = parse_signal_mode(pl_mode);
            pl_kmeans.jobs = pl_jobs;
            fs::create_directories(pl_out);

            const fs::path train_manifest = pl_train_manifest.empty() ? pl_manifest : pl_train_manifest;
            const bool separate_train = train_manifest != pl_manifest;
            const fs::path segs = pl_out / "segments.tsv";
            const fs::path train_segs = separate_train ? pl_out / "train_segments.tsv" : segs;
            const fs::path emb = pl_out / "embeddings.zsft";
            const fs::path raw_cb = pl_out / "codebook.raw.zscb";
            const fs::path cb_path = pl_out / "codebook.zscb";
            const fs::path tokens = pl_out / "tokens.txt";
            const auto skip = [&](const fs::path& p) {
                if (pl_resume && fs::exists(p)) {
                    err << "resume: keeping " << p.string() << "\n";
                    return true;
                }
                return false;
            };

            if (!skip(segs))
                write_segmentations(run_segment({pl_manifest, pl_bdir, pl_cfg, pl_jobs}, err), segs);
            if (separate_train && !skip(train_segs))
                write_segmentations(run_segment({train_manifest, pl_bdir, pl_cfg, pl_jobs}, err), train_segs);
            if (!skip(emb))
                write_embeddings(run_pool({train_manifest, pl_sdir, train_segs, std::nullopt, pl_jobs}), emb);
            if (!skip(raw_cb))
                write_codebook(run_train({emb, pl_kmeans, pl_budget}, err), raw_cb);
            if (!skip(cb_path))
                write_codebook(run_collapse(read_codebook(raw_cb), err), cb_path);
            if (!skip(tokens))
                write_token_sequences(
                    run_quantize({pl_manifest, pl_sdir, segs, std::nullopt, pl_jobs}, read_codebook(cb_path), err),
                    tokens);

            if (!pl_align.empty()) {
                const auto refs = read_alignments(pl_align);
                const auto preds = read_segmentations(segs);
                BoundaryEvalOptions opts;
                opts.tolerance_s = pl_tol;
                opts.shift_s = tune_shift(refs, preds, pl_tol, parse_grid(pl_grid));
                const BoundaryReport br = evaluate_boundaries(refs, preds, opts);
                out << format_boundary_table(br);
                write_text(pl_out / "boundary_report.txt", format_boundary_kv(br));
                const DiscoveryReport dr = evaluate_discovery(read_token_sequences(tokens), refs);
                out << format_discovery_table(dr);
                write_text(pl_out / "discovery_report.txt", format_discovery_kv(dr));
            }
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace zerosyl::cli
