#pragma once

#include <cstdint>
#include <vector>

#include "zerosyl/codebook.hpp"
#include "zerosyl/feature_io.hpp"

namespace zerosyl {

struct KMeansOptions {
    int k = 10000;
    std::uint64_t seed = 0;
    int max_iters = 300;
    int jobs = 1;
};

struct KMeansResult {
    Codebook codebook; // no collapse map
    /// Mean max-cosine of the training set after each assignment step.
    std::vector<double> objective_history;
    int iterations = 0;
    bool converged = false;
    std::size_t dropped_zero = 0; // zero-norm inputs removed before training
    std::size_t reseeded = 0;     // empty clusters re-seeded over all iterations
};

/// Spherical K-means with K-means++ seeding (weights 1 - max cosine to the
/// chosen centroids). Rows are L2-normalised first; assignment is argmax dot
/// product, lowest index on ties; the update is the normalised mean. Stops when
/// no assignment changes or after max_iters. Deterministic for a fixed seed and
/// independent of `jobs`.
KMeansResult train_spherical_kmeans(const FrameMatrix& embeddings, const KMeansOptions& opts);

/// Index of the row of `centroids` with largest dot product with `x` (lowest on ties).
Eigen::Index nearest_centroid(const FrameMatrix& centroids, const Eigen::Ref<const Eigen::RowVectorXf>& x);

} // namespace zerosyl
