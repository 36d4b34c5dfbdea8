#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "zerosyl/feature_io.hpp"

namespace zerosyl {

/// One dendrogram merge in SciPy linkage convention: ids < n are leaves, id
/// n + i is the cluster formed by merges[i]. Merges are sorted by height.
struct Merge {
    std::size_t left = 0;
    std::size_t right = 0;
    double height = 0.0;
    std::size_t size = 0;
};

struct Dendrogram {
    std::size_t num_leaves = 0;
    std::vector<Merge> merges; // num_leaves - 1 entries

    /// Leaf indices (ascending) under each child of the root merge.
    std::array<std::vector<std::size_t>, 2> root_branches() const;
};

/// Average-linkage agglomerative clustering of unit-norm rows under cosine
/// distance (1 - dot). Uses the nearest-neighbour chain over a condensed
/// float distance matrix: O(n^2) time and n(n-1)/2 floats of memory.
Dendrogram average_linkage_cosine(const FrameMatrix& unit_rows);

} // namespace zerosyl
