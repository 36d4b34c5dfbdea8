#include "zerosyl/feature_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "binary.hpp"
#include "text.hpp"
#include "zerosyl/error.hpp"

namespace zerosyl {

namespace detail {

std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("write failed: " + path.string());
}

} // namespace detail

void validate(const FeatureMatrix& m) {
    const std::string who = m.utterance_id.empty() ? std::string("feature matrix") : m.utterance_id;
    if (m.frames.rows() < 1 || m.frames.cols() < 1)
        throw ValidationError(who + ": empty feature matrix (T=" + std::to_string(m.frames.rows()) +
                              ", D=" + std::to_string(m.frames.cols()) + ")");
    if (!(m.frame_period_s > 0.0) || !std::isfinite(m.frame_period_s))
        throw ValidationError(who + ": frame period must be positive");
    if (!m.frames.allFinite())
        throw ValidationError(who + ": non-finite feature values");
}

std::vector<char> encode_features(const FeatureMatrix& m) {
    validate(m);
    if (m.frames.rows() > std::numeric_limits<std::uint32_t>::max() ||
        m.frames.cols() > std::numeric_limits<std::uint32_t>::max())
        throw ValidationError(m.utterance_id + ": matrix too large for ZSFT");

    std::vector<char> out;
    out.reserve(24 + static_cast<std::size_t>(m.frames.size()) * 4);
    out.insert(out.end(), std::begin(kFeatureMagic), std::end(kFeatureMagic));
    detail::put_u32(out, kFeatureVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(m.frames.rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(m.frames.cols()));
    detail::put_f64(out, m.frame_period_s);
    const float* data = m.frames.data();
    for (Eigen::Index i = 0; i < m.frames.size(); ++i)
        detail::put_f32(out, data[i]);
    return out;
}

FeatureMatrix decode_features(const std::vector<char>& bytes, std::string utterance_id) {
    const std::string what = utterance_id.empty() ? std::string("ZSFT") : utterance_id;
    detail::Reader r(bytes, what);
    if (bytes.size() < 4 || !r.take_magic(kFeatureMagic))
        throw FormatError(what + ": bad magic, not a ZSFT feature file");
    const std::uint32_t version = r.u32();
    if (version != kFeatureVersion)
        throw FormatError(what + ": unsupported ZSFT version " + std::to_string(version));
    const std::uint32_t t = r.u32();
    const std::uint32_t d = r.u32();
    const double period = r.f64();

    const std::size_t payload = static_cast<std::size_t>(t) * d * 4;
    if (r.remaining() != payload)
        throw CorruptionError(what + ": header declares " + std::to_string(t) + "x" + std::to_string(d) +
                              " floats (" + std::to_string(payload) + " bytes) but payload has " +
                              std::to_string(r.remaining()) + " bytes");

    FeatureMatrix m;
    m.utterance_id = std::move(utterance_id);
    m.frame_period_s = period;
    m.frames.resize(t, d);
    float* data = m.frames.data();
    for (std::size_t i = 0; i < static_cast<std::size_t>(t) * d; ++i)
        data[i] = r.f32();
    validate(m);
    return m;
}

FeatureMatrix read_features(const std::filesystem::path& path) {
    return decode_features(detail::read_file(path), path.stem().string());
}

void write_features(const FeatureMatrix& m, const std::filesystem::path& path) {
    detail::write_file(path, encode_features(m));
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open manifest " + path.string());
    Manifest manifest;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_blank(line))
            continue;
        const auto fields = detail::split_tabs(line);
        if (fields.size() < 2 || fields.size() > 3)
            throw FormatError(path.string() + ":" + std::to_string(lineno) +
                              ": expected utterance_id<TAB>path[<TAB>duration_s]");
        ManifestEntry e{fields[0], fields[1], std::nullopt};
        if (fields.size() == 3)
            e.duration_s = detail::parse_double(fields[2], path.string() + ":" + std::to_string(lineno));
        if (!seen.insert(e.utterance_id).second)
            throw ValidationError(path.string() + ": duplicate utterance id " + e.utterance_id);
        manifest.entries.push_back(std::move(e));
    }
    return manifest;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    std::ostringstream os;
    for (const auto& e : manifest.entries) {
        os << e.utterance_id << '\t' << e.relative_path.generic_string();
        if (e.duration_s)
            os << '\t' << detail::fixed(*e.duration_s, 6);
        os << '\n';
    }
    const std::string s = os.str();
    detail::write_file(path, std::vector<char>(s.begin(), s.end()));
}

} // namespace zerosyl
