#include "zerosyl/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "zerosyl/error.hpp"
#include "zerosyl/parallel.hpp"

namespace zerosyl {

namespace {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Rows per GEMM block in the assignment step. Fixed so that every row sees the
// same floating-point path whatever the thread count.
constexpr Eigen::Index kBlockRows = 512;

// 53-bit uniform in [0, 1); std::uniform_real_distribution is not portable.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

struct Assignment {
    std::vector<Eigen::Index> labels;
    std::vector<double> best; // max cosine per point
};

void assign(const RowMatrixXd& x, const RowMatrixXd& c, int jobs, Assignment& out) {
    const Eigen::Index n = x.rows();
    const std::size_t blocks = static_cast<std::size_t>((n + kBlockRows - 1) / kBlockRows);
    parallel_for(blocks, jobs, [&](std::size_t b) {
        const Eigen::Index lo = static_cast<Eigen::Index>(b) * kBlockRows;
        const Eigen::Index rows = std::min(kBlockRows, n - lo);
        const Eigen::MatrixXd sims = x.middleRows(lo, rows) * c.transpose();
        for (Eigen::Index r = 0; r < rows; ++r) {
            Eigen::Index arg = 0;
            double best = sims(r, 0);
            for (Eigen::Index j = 1; j < sims.cols(); ++j) {
                if (sims(r, j) > best) {
                    best = sims(r, j);
                    arg = j;
                }
            }
            out.labels[lo + r] = arg;
            out.best[lo + r] = best;
        }
    });
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v)
        s += x;
    return s / static_cast<double>(v.size());
}

RowMatrixXd seed_plus_plus(const RowMatrixXd& x, int k, std::mt19937_64& rng) {
    const Eigen::Index n = x.rows();
    RowMatrixXd c(k, x.cols());
    std::vector<bool> chosen(n, false);
    std::vector<double> best(n, -std::numeric_limits<double>::infinity());

    auto take = [&](Eigen::Index i, int slot) {
        chosen[i] = true;
        c.row(slot) = x.row(i);
        const Eigen::VectorXd sims = x * x.row(i).transpose();
        for (Eigen::Index p = 0; p < n; ++p)
            best[p] = std::max(best[p], sims[p]);
    };

    take(static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(n))), 0);
    for (int slot = 1; slot < k; ++slot) {
        double total = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            total += std::max(0.0, 1.0 - best[p]);
        Eigen::Index pick = -1;
        if (total > 0.0) {
            const double target = uniform01(rng) * total;
            double acc = 0.0;
            for (Eigen::Index p = 0; p < n; ++p) {
                const double w = std::max(0.0, 1.0 - best[p]);
                if (w <= 0.0)
                    continue;
                acc += w;
                pick = p;
                if (acc > target)
                    break;
            }
        }
        if (pick < 0) {
            // every point coincides with a chosen centroid; fall back to an unchosen one
            std::vector<Eigen::Index> rest;
            for (Eigen::Index p = 0; p < n; ++p)
                if (!chosen[p])
                    rest.push_back(p);
            pick = rest[uniform_index(rng, rest.size())];
        }
        take(pick, slot);
    }
    return c;
}

} // namespace

Eigen::Index nearest_centroid(const FrameMatrix& centroids, const Eigen::Ref<const Eigen::RowVectorXf>& x) {
    const Eigen::VectorXd sims = centroids.cast<double>() * x.cast<double>().transpose();
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < sims.size(); ++j)
        if (sims[j] > sims[arg])
            arg = j;
    return arg;
}

KMeansResult train_spherical_kmeans(const FrameMatrix& embeddings, const KMeansOptions& opts) {
    if (opts.k < 1)
        throw ValidationError("k must be >= 1");
    if (opts.max_iters < 0)
        throw ValidationError("max_iters must be >= 0");
    if (!embeddings.allFinite())
        throw ValidationError("embeddings contain non-finite values");

    KMeansResult result;

    // Normalise, dropping zero rows.
    std::vector<Eigen::Index> keep;
    keep.reserve(embeddings.rows());
    for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
        if (embeddings.row(i).cast<double>().squaredNorm() > 0.0)
            keep.push_back(i);
        else
            ++result.dropped_zero;
    }
    if (keep.size() < static_cast<std::size_t>(opts.k))
        throw ValidationError("need at least k=" + std::to_string(opts.k) + " non-zero embeddings, got " +
                              std::to_string(keep.size()));

    const Eigen::Index n = static_cast<Eigen::Index>(keep.size());
    RowMatrixXd x(n, embeddings.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        x.row(i) = embeddings.row(keep[i]).cast<double>();
        x.row(i) /= x.row(i).norm();
    }

    std::mt19937_64 rng(opts.seed);
    RowMatrixXd c = seed_plus_plus(x, opts.k, rng);

    Assignment a{std::vector<Eigen::Index>(n), std::vector<double>(n)};
    assign(x, c, opts.jobs, a);
    result.objective_history.push_back(mean_of(a.best));

    RowMatrixXd sums(opts.k, x.cols());
    std::vector<Eigen::Index> counts(opts.k);
    std::vector<Eigen::Index> previous;
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        sums.setZero();
        std::fill(counts.begin(), counts.end(), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(a.labels[i]) += x.row(i);
            ++counts[a.labels[i]];
        }

        std::vector<double> fit = a.best;
        for (int j = 0; j < opts.k; ++j) {
            const double norm = sums.row(j).norm();
            if (counts[j] > 0 && norm > 0.0) {
                c.row(j) = sums.row(j) / norm;
                continue;
            }
            // Empty (or fully cancelled) cluster: move it onto the worst-fit point.
            const auto worst = std::min_element(fit.begin(), fit.end()) - fit.begin();
            c.row(j) = x.row(worst);
            fit[worst] = std::numeric_limits<double>::infinity();
            ++result.reseeded;
        }

        previous = a.labels;
        assign(x, c, opts.jobs, a);
        const double objective = mean_of(a.best);
        if (objective < result.objective_history.back() - 1e-12)
            throw std::logic_error("spherical k-means objective decreased at iteration " + std::to_string(iter + 1));
        result.objective_history.push_back(objective);
        result.iterations = iter + 1;
        if (a.labels == previous) {
            result.converged = true;
            break;
        }
    }

    result.codebook.centroids.resize(opts.k, x.cols());
    for (int j = 0; j < opts.k; ++j) {
        const Eigen::RowVectorXd unit = c.row(j) / c.row(j).norm();
        result.codebook.centroids.row(j) = unit.cast<float>();
    }
    result.codebook.collapsed_vocab_size = static_cast<std::uint32_t>(opts.k);
    return result;
}

} // namespace zerosyl
