#include "zerosyl/tokenizer.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "binary.hpp"
#include "text.hpp"
#include "zerosyl/agglomerative.hpp"
#include "zerosyl/error.hpp"
#include "zerosyl/kmeans.hpp"

namespace zerosyl {

std::vector<SegmentEmbedding> pool_segments(const FeatureMatrix& semantic, const Segmentation& seg) {
    seg.validate();
    if (semantic.frames.rows() != seg.num_frames())
        throw ValidationError(seg.utterance_id + ": semantic layer has " + std::to_string(semantic.frames.rows()) +
                              " frames but segmentation covers " + std::to_string(seg.num_frames()));
    std::vector<SegmentEmbedding> out;
    out.reserve(seg.num_segments());
    for (std::size_t j = 0; j < seg.num_segments(); ++j) {
        const Eigen::Index lo = seg.boundaries[j];
        const Eigen::Index len = seg.boundaries[j + 1] - lo;
        const Eigen::RowVectorXd mean = semantic.frames.middleRows(lo, len).cast<double>().colwise().sum() /
                                        static_cast<double>(len);
        out.push_back({seg.utterance_id, j, mean.cast<float>(), static_cast<double>(lo) * seg.frame_period_s,
                       static_cast<double>(lo + len) * seg.frame_period_s});
    }
    return out;
}

FrameMatrix stack_embeddings(const std::vector<SegmentEmbedding>& embeddings) {
    if (embeddings.empty())
        return FrameMatrix();
    FrameMatrix m(static_cast<Eigen::Index>(embeddings.size()), embeddings.front().vector.size());
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        if (embeddings[i].vector.size() != m.cols())
            throw ValidationError(embeddings[i].utterance_id + ": embedding dimension mismatch");
        m.row(static_cast<Eigen::Index>(i)) = embeddings[i].vector;
    }
    return m;
}

std::filesystem::path embeddings_index_path(const std::filesystem::path& path) {
    auto p = path;
    return p.replace_extension(".index.tsv");
}

void write_embeddings(const std::vector<SegmentEmbedding>& embeddings, const std::filesystem::path& path) {
    if (embeddings.empty())
        throw ValidationError("no embeddings to write");
    FeatureMatrix m;
    m.utterance_id = path.stem().string();
    m.frames = stack_embeddings(embeddings);
    write_features(m, path);

    std::ostringstream os;
    for (const auto& e : embeddings)
        os << e.utterance_id << '\t' << e.segment_index << '\t' << detail::fixed(e.start_s, 6) << '\t'
           << detail::fixed(e.end_s, 6) << '\n';
    const std::string text = os.str();
    detail::write_file(embeddings_index_path(path), std::vector<char>(text.begin(), text.end()));
}

std::vector<SegmentEmbedding> read_embeddings(const std::filesystem::path& path) {
    const FeatureMatrix m = read_features(path);
    const auto index_path = embeddings_index_path(path);
    std::ifstream in(index_path);
    if (!in)
        throw IoError("cannot open embedding index " + index_path.string());
    std::vector<SegmentEmbedding> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_blank(line))
            continue;
        const std::string where = index_path.string() + ":" + std::to_string(lineno);
        const auto f = detail::split_tabs(line);
        if (f.size() != 4)
            throw FormatError(where + ": expected 4 columns");
        if (static_cast<Eigen::Index>(out.size()) >= m.frames.rows())
            throw CorruptionError(where + ": index has more rows than the embedding matrix");
        SegmentEmbedding e;
        e.utterance_id = f[0];
        e.segment_index = static_cast<std::size_t>(detail::parse_int(f[1], where));
        e.start_s = detail::parse_double(f[2], where);
        e.end_s = detail::parse_double(f[3], where);
        e.vector = m.frames.row(static_cast<Eigen::Index>(out.size()));
        out.push_back(std::move(e));
    }
    if (static_cast<Eigen::Index>(out.size()) != m.frames.rows())
        throw CorruptionError(index_path.string() + ": index rows differ from embedding matrix rows");
    return out;
}

Codebook collapse_silence(const Codebook& codebook, CollapseInfo* info) {
    if (codebook.collapse_map)
        throw ValidationError("codebook is already collapsed");
    if (codebook.k() < 2)
        throw ValidationError("silence collapsing needs at least 2 centroids");

    const auto branches = average_linkage_cosine(codebook.centroids).root_branches();
    if (branches[0].size() == branches[1].size())
        throw TieError("root branches of the centroid dendrogram have equal size (" +
                       std::to_string(branches[0].size()) + "); cannot tell silence apart, inspect the codebook");
    const bool first_smaller = branches[0].size() < branches[1].size();
    const auto& silence = first_smaller ? branches[0] : branches[1];
    const auto& other = first_smaller ? branches[1] : branches[0];

    const std::size_t k = static_cast<std::size_t>(codebook.k());
    std::vector<bool> is_silence(k, false);
    for (const auto id : silence)
        is_silence[id] = true;

    std::vector<std::uint32_t> map(k);
    std::uint32_t next_id = kSilenceId + 1;
    for (std::size_t raw = 0; raw < k; ++raw)
        map[raw] = is_silence[raw] ? kSilenceId : next_id++;

    Codebook out = codebook;
    out.collapse_map = std::move(map);
    out.collapsed_vocab_size = next_id;
    if (info)
        *info = {silence, other};
    return out;
}

Eigen::Index assign_raw(const Codebook& codebook, const Eigen::Ref<const Eigen::RowVectorXf>& embedding) {
    if (embedding.size() != codebook.dim())
        throw ValidationError("embedding dimension " + std::to_string(embedding.size()) +
                              " does not match codebook dimension " + std::to_string(codebook.dim()));
    const double norm = embedding.cast<double>().norm();
    if (norm == 0.0)
        return -1;
    // Centroids are unit-norm; argmax of the raw dot product equals argmax cosine.
    return nearest_centroid(codebook.centroids, embedding);
}

TokenSequence quantize(const FeatureMatrix& semantic, const Segmentation& seg, const Codebook& codebook,
                       QuantizeStats* stats) {
    TokenSequence out;
    out.utterance_id = seg.utterance_id;
    for (const auto& e : pool_segments(semantic, seg)) {
        const Eigen::Index raw = assign_raw(codebook, e.vector);
        std::uint32_t id = kSilenceId;
        if (raw < 0) {
            if (stats)
                ++stats->zero_norm_segments;
        } else {
            id = codebook.map_id(static_cast<std::uint32_t>(raw));
        }
        out.tokens.push_back({id, e.start_s, e.end_s});
    }
    return out;
}

std::filesystem::path spans_path(const std::filesystem::path& tokens_path) {
    auto p = tokens_path;
    return p.replace_extension(".spans.tsv");
}

void write_token_sequences(const std::vector<TokenSequence>& seqs, const std::filesystem::path& path) {
    std::ostringstream ids, spans;
    for (const auto& s : seqs) {
        ids << s.utterance_id << '\t';
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
            const Token& t = s.tokens[i];
            ids << (i ? " " : "") << t.id;
            spans << s.utterance_id << '\t' << detail::fixed(t.start_s, 6) << '\t' << detail::fixed(t.end_s, 6)
                  << '\t' << t.id << '\n';
        }
        ids << '\n';
    }
    const std::string a = ids.str(), b = spans.str();
    detail::write_file(path, std::vector<char>(a.begin(), a.end()));
    detail::write_file(spans_path(path), std::vector<char>(b.begin(), b.end()));
}

std::vector<TokenSequence> read_token_sequences(const std::filesystem::path& path) {
    std::vector<TokenSequence> out;
    std::vector<std::vector<std::uint32_t>> listed;
    std::map<std::string, std::size_t> index;
    {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open token file " + path.string());
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (detail::is_blank(line))
                continue;
            const auto f = detail::split_tabs(line);
            if (f.size() != 2)
                throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected utterance_id<TAB>ids");
            if (!index.emplace(f[0], out.size()).second)
                throw ValidationError(path.string() + ": duplicate utterance " + f[0]);
            out.push_back({f[0], {}});
            std::vector<std::uint32_t> ids;
            for (const auto& tok : detail::split_spaces(f[1]))
                ids.push_back(static_cast<std::uint32_t>(
                    detail::parse_int(tok, path.string() + ":" + std::to_string(lineno))));
            listed.push_back(std::move(ids));
        }
    }
    const auto sp = spans_path(path);
    std::ifstream in(sp);
    if (!in)
        throw IoError("cannot open token spans " + sp.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_blank(line))
            continue;
        const std::string where = sp.string() + ":" + std::to_string(lineno);
        const auto f = detail::split_tabs(line);
        if (f.size() != 4)
            throw FormatError(where + ": expected utterance_id, start_s, end_s, id");
        const auto it = index.find(f[0]);
        if (it == index.end())
            throw ValidationError(where + ": utterance " + f[0] + " missing from " + path.string());
        const auto id = detail::parse_int(f[3], where);
        if (id < 0)
            throw FormatError(where + ": negative token id");
        out[it->second].tokens.push_back(
            {static_cast<std::uint32_t>(id), detail::parse_double(f[1], where), detail::parse_double(f[2], where)});
    }
    for (std::size_t u = 0; u < out.size(); ++u) {
        bool same = out[u].tokens.size() == listed[u].size();
        for (std::size_t i = 0; same && i < listed[u].size(); ++i)
            same = out[u].tokens[i].id == listed[u][i];
        if (!same)
            throw CorruptionError(out[u].utterance_id + ": token ids and spans disagree");
    }
    return out;
}

} // namespace zerosyl
