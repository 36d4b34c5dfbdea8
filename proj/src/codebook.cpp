#include "zerosyl/codebook.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "binary.hpp"
#include "zerosyl/error.hpp"

namespace zerosyl {

void Codebook::validate() const {
    if (centroids.rows() < 1 || centroids.cols() < 1)
        throw ValidationError("codebook is empty");
    if (!centroids.allFinite())
        throw ValidationError("codebook has non-finite centroid values");
    for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
        const double norm = centroids.row(j).cast<double>().norm();
        if (std::abs(norm - 1.0) > 1e-6)
            throw ValidationError("centroid " + std::to_string(j) + " has norm " + std::to_string(norm));
    }
    if (!collapse_map) {
        if (collapsed_vocab_size != static_cast<std::uint32_t>(centroids.rows()))
            throw ValidationError("uncollapsed codebook must have vocab size K");
        return;
    }
    if (collapse_map->size() != static_cast<std::size_t>(centroids.rows()))
        throw ValidationError("collapse map length differs from K");
    if (collapsed_vocab_size == 0 || collapsed_vocab_size > centroids.rows())
        throw ValidationError("collapsed vocabulary size out of range");
    std::vector<bool> hit(collapsed_vocab_size, false);
    for (const auto id : *collapse_map) {
        if (id >= collapsed_vocab_size)
            throw ValidationError("collapse map entry " + std::to_string(id) + " >= vocabulary size");
        hit[id] = true;
    }
    for (std::uint32_t id = 0; id < collapsed_vocab_size; ++id)
        if (!hit[id])
            throw ValidationError("collapse map is not surjective (id " + std::to_string(id) + " unused)");
}

std::vector<char> encode_codebook(const Codebook& cb) {
    cb.validate();
    std::vector<char> out;
    out.insert(out.end(), std::begin(kCodebookMagic), std::end(kCodebookMagic));
    detail::put_u32(out, kCodebookVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(cb.k()));
    detail::put_u32(out, static_cast<std::uint32_t>(cb.dim()));
    detail::put_u8(out, cb.collapse_map ? 1 : 0);
    const float* data = cb.centroids.data();
    for (Eigen::Index i = 0; i < cb.centroids.size(); ++i)
        detail::put_f32(out, data[i]);
    if (cb.collapse_map) {
        for (const auto id : *cb.collapse_map)
            detail::put_u32(out, id);
        detail::put_u32(out, cb.collapsed_vocab_size);
    }
    return out;
}

Codebook decode_codebook(const std::vector<char>& bytes) {
    detail::Reader r(bytes, "ZSCB");
    if (bytes.size() < 4 || !r.take_magic(kCodebookMagic))
        throw FormatError("bad magic, not a ZSCB codebook");
    const std::uint32_t version = r.u32();
    if (version != kCodebookVersion)
        throw FormatError("unsupported ZSCB version " + std::to_string(version));
    const std::uint32_t k = r.u32();
    const std::uint32_t d = r.u32();
    const std::uint8_t has_map = r.u8();
    if (has_map > 1)
        throw FormatError("ZSCB has_collapse_map flag must be 0 or 1");

    Codebook cb;
    r.need(static_cast<std::size_t>(k) * d * 4);
    cb.centroids.resize(k, d);
    float* data = cb.centroids.data();
    for (std::size_t i = 0; i < static_cast<std::size_t>(k) * d; ++i)
        data[i] = r.f32();
    cb.collapsed_vocab_size = k;
    if (has_map) {
        r.need(static_cast<std::size_t>(k) * 4 + 4);
        std::vector<std::uint32_t> map(k);
        for (auto& id : map)
            id = r.u32();
        cb.collapse_map = std::move(map);
        cb.collapsed_vocab_size = r.u32();
    }
    if (r.remaining() != 0)
        throw CorruptionError("ZSCB: " + std::to_string(r.remaining()) + " trailing bytes");
    cb.validate();
    return cb;
}

Codebook read_codebook(const std::filesystem::path& path) {
    return decode_codebook(detail::read_file(path));
}

void write_codebook(const Codebook& cb, const std::filesystem::path& path) {
    detail::write_file(path, encode_codebook(cb));
}

} // namespace zerosyl
