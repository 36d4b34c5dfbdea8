#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace zerosyl {

/// Row-major so that one frame is contiguous, matching the on-disk layout.
using FrameMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kDefaultFramePeriod = 0.02;

/// T x D framewise embeddings for one utterance at one encoder layer.
struct FeatureMatrix {
    std::string utterance_id;
    FrameMatrix frames;
    double frame_period_s = kDefaultFramePeriod;

    Eigen::Index num_frames() const { return frames.rows(); }
    Eigen::Index dim() const { return frames.cols(); }
    double duration_s() const { return static_cast<double>(frames.rows()) * frame_period_s; }
};

/// Throws ValidationError unless T >= 1, D >= 1, all values finite and frame_period_s > 0.
void validate(const FeatureMatrix& m);

// ZSFT layout (little-endian):
//   "ZSFT" | u32 version=1 | u32 T | u32 D | f64 frame_period_s | T*D f32, frame-major
inline constexpr char kFeatureMagic[4] = {'Z', 'S', 'F', 'T'};
inline constexpr std::uint32_t kFeatureVersion = 1;

/// The utterance id of the result is the file stem.
FeatureMatrix read_features(const std::filesystem::path& path);
void write_features(const FeatureMatrix& m, const std::filesystem::path& path);

std::vector<char> encode_features(const FeatureMatrix& m);
FeatureMatrix decode_features(const std::vector<char>& bytes, std::string utterance_id = {});

struct ManifestEntry {
    std::string utterance_id;
    std::filesystem::path relative_path;
    std::optional<double> duration_s;
};

/// UTF-8 TSV: utterance_id<TAB>relative_path[<TAB>duration_s]. Ids must be unique.
struct Manifest {
    std::vector<ManifestEntry> entries;
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

} // namespace zerosyl
