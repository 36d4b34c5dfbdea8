#include <doctest.h>

#include <fstream>
#include <sstream>

#include "support/synthetic.hpp"
#include "zerosyl/cli.hpp"
#include "zerosyl/codebook.hpp"
#include "zerosyl/feature_io.hpp"
#include "zerosyl/segmenter.hpp"
#include "zerosyl/tokenizer.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = zerosyl::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

fs::path small_corpus(const std::string& name) {
    synth::CorpusOptions o;
    o.num_utterances = 12;
    o.frames = 200;
    o.prototypes = 6;
    const auto dir = synth::temp_dir(name);
    synth::write_corpus(synth::make_corpus(o), dir);
    return dir;
}

std::vector<std::string> pipeline_args(const fs::path& corpus, const fs::path& out) {
    return {"pipeline",
            "--manifest", (corpus / "manifest.tsv").string(),
            "--boundary-features-dir", (corpus / "boundary").string(),
            "--semantic-features-dir", (corpus / "semantic").string(),
            "--k", "6", "--seed", "5",
            "--out-dir", out.string()};
}

const char* kStageFiles[] = {"segments.tsv", "embeddings.zsft", "embeddings.index.tsv", "codebook.raw.zscb",
                             "codebook.zscb", "tokens.txt", "tokens.spans.tsv"};

} // namespace

TEST_CASE("pipeline smoke run is deterministic") {
    const auto corpus = small_corpus("cli_pipeline");
    const auto a = corpus / "out_a";
    const auto b = corpus / "out_b";
    auto args = pipeline_args(corpus, a);
    args.insert(args.end(), {"--alignments", (corpus / "alignments.tsv").string()});
    const Run ra = run(args);
    INFO(ra.err);
    REQUIRE(ra.code == 0);
    auto args_b = pipeline_args(corpus, b);
    args_b.insert(args_b.end(), {"--jobs", "3"});
    REQUIRE(run(args_b).code == 0);

    for (const char* f : kStageFiles) {
        INFO(f);
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(fs::exists(a / "boundary_report.txt"));
    CHECK(fs::exists(a / "discovery_report.txt"));

    const auto tokens = zerosyl::read_token_sequences(a / "tokens.txt");
    const auto manifest = zerosyl::read_manifest(corpus / "manifest.tsv");
    REQUIRE(tokens.size() == manifest.entries.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        CHECK(tokens[i].utterance_id == manifest.entries[i].utterance_id);
        CHECK_FALSE(tokens[i].tokens.empty());
    }
}

TEST_CASE("resume keeps finished stages") {
    const auto corpus = small_corpus("cli_resume");
    const auto out = corpus / "out";
    REQUIRE(run(pipeline_args(corpus, out)).code == 0);
    const auto before = slurp(out / "tokens.txt");
    const auto stamp = fs::last_write_time(out / "codebook.zscb");
    auto args = pipeline_args(corpus, out);
    args.push_back("--resume");
    const Run r = run(args);
    CHECK(r.code == 0);
    CHECK(r.err.find("resume: keeping") != std::string::npos);
    CHECK(fs::last_write_time(out / "codebook.zscb") == stamp);
    CHECK(slurp(out / "tokens.txt") == before);
}

TEST_CASE("stages chained by hand match the pipeline") {
    const auto corpus = small_corpus("cli_stages");
    const auto p = corpus / "pipe";
    const auto s = corpus / "stages";
    REQUIRE(run(pipeline_args(corpus, p)).code == 0);
    fs::create_directories(s);
    const auto m = (corpus / "manifest.tsv").string();
    CHECK(run({"segment", "--manifest", m, "--features-dir", (corpus / "boundary").string(), "--mode", "norm",
               "--window", "3", "--prominence-factor", "0.45", "--out", (s / "segments.tsv").string()})
              .code == 0);
    CHECK(run({"pool", "--manifest", m, "--features-dir", (corpus / "semantic").string(), "--segments",
               (s / "segments.tsv").string(), "--out", (s / "embeddings.zsft").string()})
              .code == 0);
    CHECK(run({"train-kmeans", "--embeddings", (s / "embeddings.zsft").string(), "--k", "6", "--seed", "5", "--out",
               (s / "codebook.raw.zscb").string()})
              .code == 0);
    CHECK(run({"collapse-silence", "--codebook", (s / "codebook.raw.zscb").string(), "--out",
               (s / "codebook.zscb").string()})
              .code == 0);
    CHECK(run({"quantize", "--manifest", m, "--features-dir", (corpus / "semantic").string(), "--segments",
               (s / "segments.tsv").string(), "--codebook", (s / "codebook.zscb").string(), "--out",
               (s / "tokens.txt").string()})
              .code == 0);
    for (const char* f : kStageFiles) {
        INFO(f);
        CHECK(slurp(p / f) == slurp(s / f));
    }

    const auto align = (corpus / "alignments.tsv").string();
    const Run eb = run({"eval-boundaries", "--alignments", align, "--segments", (s / "segments.tsv").string(),
                        "--tolerance", "0.02", "--report", (s / "b.txt").string()});
    CHECK(eb.code == 0);
    CHECK(slurp(s / "b.txt").find("f1\t1.0000") != std::string::npos);
    const Run tuned = run({"eval-boundaries", "--alignments", align, "--segments", (s / "segments.tsv").string(),
                           "--tune-shift"});
    CHECK(tuned.code == 0);
    const Run ed = run({"eval-discovery", "--alignments", align, "--tokens", (s / "tokens.txt").string(), "--report",
                        (s / "d.txt").string(), "--contingency", (s / "c.tsv").string()});
    CHECK(ed.code == 0);
    CHECK(slurp(s / "d.txt").find("snmi\t") != std::string::npos);
    CHECK_FALSE(slurp(s / "c.tsv").empty());
}

TEST_CASE("config file with flag override") {
    const auto corpus = small_corpus("cli_config");
    {
        std::ofstream cfg(corpus / "seg.toml");
        cfg << "manifest = \"" << (corpus / "manifest.tsv").string() << "\"\n"
            << "features-dir = \"" << (corpus / "boundary").string() << "\"\n"
            << "prominence-factor = 100.0\n"
            << "out = \"" << (corpus / "cfg.tsv").string() << "\"\n";
    }
    REQUIRE(run({"segment", "--config", (corpus / "seg.toml").string()}).code == 0);
    // factor 100 suppresses every interior boundary
    for (const auto& s : zerosyl::read_segmentations(corpus / "cfg.tsv"))
        CHECK(s.times.size() == 2);

    REQUIRE(run({"segment", "--config", (corpus / "seg.toml").string(), "--prominence-factor", "0.45"}).code == 0);
    bool interior = false;
    for (const auto& s : zerosyl::read_segmentations(corpus / "cfg.tsv"))
        interior = interior || s.times.size() > 2;
    CHECK(interior);
}

TEST_CASE("score-pairs prints accuracy") {
    const auto dir = synth::temp_dir("cli_pairs");
    {
        std::ofstream f(dir / "p.tsv");
        f << "a\t-10\t5\t-9\t3\nb\t-1\t1\t-1\t1\n";
    }
    CHECK(run({"score-pairs", "--pairs", (dir / "p.tsv").string()}).out == "0.7500\n");
    CHECK(run({"score-pairs", "--pairs", (dir / "p.tsv").string(), "--unnormalized"}).out == "0.2500\n");
}

TEST_CASE("errors exit nonzero with a diagnostic") {
    const auto dir = synth::temp_dir("cli_errors");
    const Run missing = run({"segment", "--manifest", (dir / "nope.tsv").string(), "--features-dir", dir.string(),
                             "--out", (dir / "x.tsv").string()});
    CHECK(missing.code != 0);
    CHECK(missing.err.find("nope.tsv") != std::string::npos);
    CHECK(run({"segment", "--bogus"}).code != 0);
    CHECK(run({"frobnicate"}).code != 0);
    CHECK(run({"eval-boundaries", "--alignments", "a", "--segments", "b", "--shift", "0.1", "--tune-shift"}).code != 0);

    // A feature file whose frame count disagrees with the segmentation names the utterance.
    const auto corpus = small_corpus("cli_mismatch");
    const auto out = corpus / "o";
    REQUIRE(run(pipeline_args(corpus, out)).code == 0);
    auto f = zerosyl::read_features(corpus / "semantic" / "utt0003.zsft");
    f.frames.conservativeResize(f.frames.rows() - 1, Eigen::NoChange);
    zerosyl::write_features(f, corpus / "semantic" / "utt0003.zsft");
    const Run bad = run({"pool", "--manifest", (corpus / "manifest.tsv").string(), "--features-dir",
                         (corpus / "semantic").string(), "--segments", (out / "segments.tsv").string(), "--out",
                         (out / "e2.zsft").string()});
    CHECK(bad.code != 0);
    CHECK(bad.err.find("utt0003") != std::string::npos);
}
