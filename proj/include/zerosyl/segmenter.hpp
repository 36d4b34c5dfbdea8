#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "zerosyl/feature_io.hpp"

namespace zerosyl {

enum class SignalMode {
    norm,   // L2 norm of each frame
    cosine, // cosine distance between adjacent frames (prominence-segmentation baseline)
};

SignalMode parse_signal_mode(std::string_view s);
std::string_view to_string(SignalMode mode);

struct SegmenterConfig {
    SignalMode mode = SignalMode::norm;
    int smoothing_window = 3;
    /// Peaks need prominence >= prominence_factor * std(raw signal).
    double prominence_factor = 0.45;
    /// Overrides the feature file's frame period when set.
    std::optional<double> frame_period_s;

    void validate() const;
};

/// Boundary frame indices [0, b_1, ..., T], strictly increasing.
struct Segmentation {
    std::string utterance_id;
    std::vector<Eigen::Index> boundaries;
    double frame_period_s = kDefaultFramePeriod;

    std::size_t num_segments() const { return boundaries.empty() ? 0 : boundaries.size() - 1; }
    Eigen::Index num_frames() const { return boundaries.empty() ? 0 : boundaries.back(); }
    /// index * frame_period_s (frame-start convention).
    std::vector<double> boundary_times() const;

    void validate() const;
};

struct SegmentStats {
    std::size_t zero_norm_pairs = 0; // cosine mode only
};

Segmentation segment(const FeatureMatrix& m, const SegmenterConfig& cfg, SegmentStats* stats = nullptr);

/// Boundary times as stored in a segmentation TSV.
struct TimedBoundaries {
    std::string utterance_id;
    std::vector<double> times;
};

/// utterance_id<TAB>space-separated boundary times in seconds, 6 decimals.
void write_segmentations(const std::vector<Segmentation>& segs, const std::filesystem::path& path);
std::vector<TimedBoundaries> read_segmentations(const std::filesystem::path& path);

/// Maps times back onto a frame grid by rounding; validates against num_frames.
Segmentation to_segmentation(const TimedBoundaries& timed, double frame_period_s, Eigen::Index num_frames);

} // namespace zerosyl
