#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "zerosyl/feature_io.hpp"

namespace zerosyl {

inline constexpr std::uint32_t kSilenceId = 0;

/// K unit-norm centroids, optionally with a raw-ID -> collapsed-ID map.
struct Codebook {
    FrameMatrix centroids; // K x D
    std::optional<std::vector<std::uint32_t>> collapse_map;
    std::uint32_t collapsed_vocab_size = 0;

    Eigen::Index k() const { return centroids.rows(); }
    Eigen::Index dim() const { return centroids.cols(); }

    std::uint32_t map_id(std::uint32_t raw) const { return collapse_map ? (*collapse_map)[raw] : raw; }

    /// Unit norms within 1e-6, collapse map (if any) surjective onto [0, collapsed_vocab_size).
    void validate() const;
};

// ZSCB layout (little-endian):
//   "ZSCB" | u32 version=1 | u32 K | u32 D | u8 has_collapse_map | K*D f32
//   [ K u32 collapse entries | u32 collapsed_vocab_size ]
inline constexpr char kCodebookMagic[4] = {'Z', 'S', 'C', 'B'};
inline constexpr std::uint32_t kCodebookVersion = 1;

std::vector<char> encode_codebook(const Codebook& cb);
Codebook decode_codebook(const std::vector<char>& bytes);
Codebook read_codebook(const std::filesystem::path& path);
void write_codebook(const Codebook& cb, const std::filesystem::path& path);

} // namespace zerosyl
