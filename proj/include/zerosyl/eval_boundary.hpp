#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "zerosyl/alignment.hpp"
#include "zerosyl/segmenter.hpp"

namespace zerosyl {

struct BoundaryEvalOptions {
    double tolerance_s = 0.05;
    /// Added to every interior predicted boundary before scoring.
    double shift_s = 0.0;
    /// Keep reference syllables that touch a silence in the token scores.
    bool silence_adjacent_tokens = true;
};

/// Corpus-level counts; metrics are computed from their sums (micro-average).
struct BoundaryCounts {
    std::size_t n_ref = 0;
    std::size_t n_pred = 0;
    std::size_t matches = 0;
    std::size_t token_ref = 0;
    std::size_t token_pred = 0;
    std::size_t token_hits = 0;

    BoundaryCounts& operator+=(const BoundaryCounts& o);
};

struct TokenScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct BoundaryReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double over_segmentation = 0.0; // n_pred / n_ref - 1
    double r_value = 0.0;
    TokenScores token;
    BoundaryCounts counts;
    double shift_s = 0.0;
    double tolerance_s = 0.0;
};

/// 1 - (|r1| + |r2|) / 2 with r1 = sqrt((1-R)^2 + OS^2), r2 = (-OS + R - 1) / sqrt(2).
double r_value(double recall, double over_segmentation);

double harmonic_mean(double a, double b);

/// One-to-one greedy matching: pairs are taken in increasing |dt| (ties: earlier
/// reference, then earlier prediction) while both ends are free and |dt| <= tol.
std::size_t match_boundaries(std::span<const double> ref, std::span<const double> pred, double tol_s);

/// Counts for one utterance. `pred` holds all boundary times including the two utterance edges.
BoundaryCounts count_utterance(const SyllableAlignment& ref, const TimedBoundaries& pred,
                               const BoundaryEvalOptions& opts);

/// Reference boundaries that are scored: syllable edges minus utterance edges and silence-adjacent edges.
std::vector<double> scored_reference_boundaries(const SyllableAlignment& ref);
/// Predicted interior boundaries after shifting and dropping those inside tolerance-expanded silences.
std::vector<double> scored_predicted_boundaries(const SyllableAlignment& ref, const TimedBoundaries& pred,
                                                double tol_s, double shift_s);

/// Pairs utterances by id; every reference needs a prediction and vice versa.
BoundaryCounts count_corpus(const std::vector<SyllableAlignment>& refs, const std::vector<TimedBoundaries>& preds,
                            const BoundaryEvalOptions& opts);

/// Boundary and token metrics. Throws UndefinedMetricError when the corpus has no scored reference boundaries.
BoundaryReport evaluate_boundaries(const std::vector<SyllableAlignment>& refs,
                                   const std::vector<TimedBoundaries>& preds, const BoundaryEvalOptions& opts);

TokenScores evaluate_tokens(const std::vector<SyllableAlignment>& refs, const std::vector<TimedBoundaries>& preds,
                            const BoundaryEvalOptions& opts);

/// -100 ms .. +100 ms in 10 ms steps.
std::vector<double> default_shift_grid();

/// Grid shift with the best boundary F1; ties go to the smallest |shift|, then the negative one.
double tune_shift(const std::vector<SyllableAlignment>& refs, const std::vector<TimedBoundaries>& preds,
                  double tol_s, std::span<const double> grid);

std::string format_boundary_table(const BoundaryReport& r);
/// key<TAB>value lines, fractions with 4 decimals.
std::string format_boundary_kv(const BoundaryReport& r);

} // namespace zerosyl
