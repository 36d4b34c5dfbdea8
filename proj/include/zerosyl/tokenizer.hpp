#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "zerosyl/codebook.hpp"
#include "zerosyl/feature_io.hpp"
#include "zerosyl/segmenter.hpp"

namespace zerosyl {

/// Mean of the semantic frames inside one segment.
struct SegmentEmbedding {
    std::string utterance_id;
    std::size_t segment_index = 0;
    Eigen::RowVectorXf vector;
    double start_s = 0.0;
    double end_s = 0.0;
};

/// One embedding per segment: the mean of rows [b_j, b_{j+1}). Throws
/// ValidationError when the layer's frame count differs from the segmentation's.
std::vector<SegmentEmbedding> pool_segments(const FeatureMatrix& semantic, const Segmentation& seg);

/// Pooled-embedding stage file: a ZSFT matrix with one row per segment plus a
/// sibling "<stem>.index.tsv" (utterance_id, segment_index, start_s, end_s).
void write_embeddings(const std::vector<SegmentEmbedding>& embeddings, const std::filesystem::path& path);
std::vector<SegmentEmbedding> read_embeddings(const std::filesystem::path& path);
std::filesystem::path embeddings_index_path(const std::filesystem::path& path);

/// Stacks embedding vectors into an N x D matrix.
FrameMatrix stack_embeddings(const std::vector<SegmentEmbedding>& embeddings);

struct CollapseInfo {
    std::vector<std::size_t> silence_branch; // raw ids mapped to kSilenceId
    std::vector<std::size_t> other_branch;
};

/// Clusters the centroids with average-linkage cosine agglomeration, takes the
/// smaller of the two root branches as silence and maps it to id 0; the rest
/// get consecutive ids from 1 in raw order. Rejects codebooks that already
/// carry a collapse map, and throws TieError when the branches are equal.
Codebook collapse_silence(const Codebook& codebook, CollapseInfo* info = nullptr);

struct Token {
    std::uint32_t id = 0;
    double start_s = 0.0;
    double end_s = 0.0;

    friend bool operator==(const Token&, const Token&) = default;
};

struct TokenSequence {
    std::string utterance_id;
    std::vector<Token> tokens;
};

struct QuantizeStats {
    std::size_t zero_norm_segments = 0;
};

/// Pools, then assigns each segment to its nearest centroid by cosine (lowest
/// raw id on ties) and applies the collapse map. Zero-norm segments get kSilenceId.
TokenSequence quantize(const FeatureMatrix& semantic, const Segmentation& seg, const Codebook& codebook,
                       QuantizeStats* stats = nullptr);

/// Raw (pre-collapse) nearest centroid for one embedding, or -1 for a zero vector.
Eigen::Index assign_raw(const Codebook& codebook, const Eigen::Ref<const Eigen::RowVectorXf>& embedding);

/// "<path>": utterance_id<TAB>space-separated ids. Sibling "<stem>.spans.tsv":
/// utterance_id<TAB>start_s<TAB>end_s<TAB>id, one token per line.
void write_token_sequences(const std::vector<TokenSequence>& seqs, const std::filesystem::path& path);
std::vector<TokenSequence> read_token_sequences(const std::filesystem::path& path);
std::filesystem::path spans_path(const std::filesystem::path& tokens_path);

} // namespace zerosyl
