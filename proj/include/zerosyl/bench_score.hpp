#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace zerosyl {

/// Total log-likelihoods and token counts of a positive/negative stimulus pair.
struct ScoredPair {
    std::string pair_id;
    double pos_ll = 0.0;
    long long pos_tokens = 1;
    double neg_ll = 0.0;
    long long neg_tokens = 1;
};

/// Fraction of pairs where the positive item scores strictly higher, by mean
/// log-likelihood per token (normalized) or total log-likelihood. Exact ties earn 0.5.
double pair_accuracy(std::span<const ScoredPair> pairs, bool normalized = true);

/// TSV: pair_id, pos_ll, pos_tokens, neg_ll, neg_tokens. A header line starting with "pair_id" is skipped.
std::vector<ScoredPair> read_pairs(const std::filesystem::path& path);

} // namespace zerosyl
