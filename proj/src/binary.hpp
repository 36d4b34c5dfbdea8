#pragma once

// Little-endian encode/decode helpers shared by the ZSFT and ZSCB formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "zerosyl/error.hpp"

namespace zerosyl::detail {

inline void put_u8(std::vector<char>& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

inline void put_u32(std::vector<char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline void put_u64(std::vector<char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline void put_f32(std::vector<char>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::vector<char>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

/// Bounds-checked cursor over a byte buffer; running past the end is a CorruptionError.
class Reader {
public:
    Reader(const std::vector<char>& bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

    std::size_t remaining() const { return bytes_.size() - pos_; }

    void need(std::size_t n) const {
        if (remaining() < n)
            throw CorruptionError(what_ + ": truncated payload (needed " + std::to_string(n) +
                                  " more bytes, have " + std::to_string(remaining()) + ")");
    }

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }

    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    bool take_magic(const char (&magic)[4]) {
        need(4);
        const bool ok = std::memcmp(bytes_.data() + pos_, magic, 4) == 0;
        pos_ += 4;
        return ok;
    }

private:
    const std::vector<char>& bytes_;
    std::string what_;
    std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<char>& bytes);

} // namespace zerosyl::detail
