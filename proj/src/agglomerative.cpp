#include "zerosyl/agglomerative.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "zerosyl/error.hpp"

namespace zerosyl {

namespace {

class CondensedDistances {
public:
    explicit CondensedDistances(std::size_t n) : n_(n), d_(n * (n - 1) / 2) {}

    float& at(std::size_t i, std::size_t j) {
        if (i > j)
            std::swap(i, j);
        return d_[i * n_ - i * (i + 1) / 2 + (j - i - 1)];
    }

private:
    std::size_t n_;
    std::vector<float> d_;
};

} // namespace

std::array<std::vector<std::size_t>, 2> Dendrogram::root_branches() const {
    if (merges.empty())
        throw ValidationError("dendrogram has no merges");
    std::array<std::vector<std::size_t>, 2> out;
    const Merge& root = merges.back();
    const std::size_t children[2] = {root.left, root.right};
    for (int side = 0; side < 2; ++side) {
        std::vector<std::size_t> stack{children[side]};
        while (!stack.empty()) {
            const std::size_t id = stack.back();
            stack.pop_back();
            if (id < num_leaves) {
                out[side].push_back(id);
            } else {
                stack.push_back(merges[id - num_leaves].left);
                stack.push_back(merges[id - num_leaves].right);
            }
        }
        std::sort(out[side].begin(), out[side].end());
    }
    return out;
}

Dendrogram average_linkage_cosine(const FrameMatrix& unit_rows) {
    const std::size_t n = static_cast<std::size_t>(unit_rows.rows());
    if (n < 2)
        throw ValidationError("linkage needs at least 2 points");

    CondensedDistances dist(n);
    constexpr Eigen::Index kBlock = 256;
    for (Eigen::Index lo = 0; lo < unit_rows.rows(); lo += kBlock) {
        const Eigen::Index rows = std::min(kBlock, unit_rows.rows() - lo);
        const Eigen::MatrixXf gram = unit_rows.middleRows(lo, rows) * unit_rows.transpose();
        for (Eigen::Index r = 0; r < rows; ++r) {
            const std::size_t i = static_cast<std::size_t>(lo + r);
            for (std::size_t j = i + 1; j < n; ++j)
                dist.at(i, j) = 1.0f - gram(r, static_cast<Eigen::Index>(j));
        }
    }

    // Doubly linked list of active slots so scans skip merged clusters.
    std::vector<std::size_t> next(n + 1), prev(n + 1);
    const std::size_t head = n; // sentinel
    for (std::size_t i = 0; i <= n; ++i) {
        next[i] = (i + 1) % (n + 1);
        prev[i] = (i + n) % (n + 1);
    }
    auto remove = [&](std::size_t i) {
        next[prev[i]] = next[i];
        prev[next[i]] = prev[i];
    };

    std::vector<std::size_t> size(n, 1);
    struct RawMerge {
        std::size_t a, b; // slots; the merged cluster keeps slot b
        float height;
    };
    std::vector<RawMerge> raw;
    raw.reserve(n - 1);

    std::vector<std::size_t> chain;
    chain.reserve(n);
    for (std::size_t active = n; active > 1; --active) {
        if (chain.empty())
            chain.push_back(next[head]);
        while (true) {
            const std::size_t a = chain.back();
            // Prefer the previous chain element on ties so the chain terminates.
            std::size_t b = std::numeric_limits<std::size_t>::max();
            float best = std::numeric_limits<float>::infinity();
            if (chain.size() >= 2) {
                b = chain[chain.size() - 2];
                best = dist.at(a, b);
            }
            for (std::size_t k = next[head]; k != head; k = next[k]) {
                if (k == a)
                    continue;
                const float d = dist.at(a, k);
                if (d < best) {
                    best = d;
                    b = k;
                }
            }
            if (chain.size() >= 2 && b == chain[chain.size() - 2])
                break;
            chain.push_back(b);
        }
        const std::size_t a = chain.back();
        chain.pop_back();
        const std::size_t b = chain.back();
        chain.pop_back();
        const float height = dist.at(a, b);

        const double wa = static_cast<double>(size[a]);
        const double wb = static_cast<double>(size[b]);
        remove(a);
        for (std::size_t k = next[head]; k != head; k = next[k]) {
            if (k == b)
                continue;
            dist.at(b, k) = static_cast<float>((wa * dist.at(a, k) + wb * dist.at(b, k)) / (wa + wb));
        }
        size[b] += size[a];
        raw.push_back({a, b, height});
    }

    // Order by height (stable) and relabel into SciPy ids via union-find.
    std::vector<std::size_t> order(raw.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return raw[x].height < raw[y].height; });

    std::vector<std::size_t> parent(n), label(n), members(n, 1);
    std::iota(parent.begin(), parent.end(), 0);
    std::iota(label.begin(), label.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };

    Dendrogram out;
    out.num_leaves = n;
    out.merges.reserve(raw.size());
    for (std::size_t step = 0; step < order.size(); ++step) {
        const RawMerge& m = raw[order[step]];
        const std::size_t ra = find(m.a), rb = find(m.b);
        std::size_t left = label[ra], right = label[rb];
        if (left > right)
            std::swap(left, right);
        parent[ra] = rb;
        members[rb] += members[ra];
        label[rb] = n + step;
        out.merges.push_back({left, right, static_cast<double>(m.height), members[rb]});
    }
    return out;
}

} // namespace zerosyl
