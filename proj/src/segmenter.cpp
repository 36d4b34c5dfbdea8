#include "zerosyl/segmenter.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "binary.hpp"
#include "text.hpp"
#include "zerosyl/error.hpp"
#include "zerosyl/signal.hpp"

namespace zerosyl {

SignalMode parse_signal_mode(std::string_view s) {
    if (s == "norm")
        return SignalMode::norm;
    if (s == "cosine")
        return SignalMode::cosine;
    throw ValidationError("unknown segmentation mode '" + std::string(s) + "' (expected norm or cosine)");
}

std::string_view to_string(SignalMode mode) {
    return mode == SignalMode::norm ? "norm" : "cosine";
}

void SegmenterConfig::validate() const {
    if (smoothing_window < 1 || smoothing_window % 2 == 0)
        throw ValidationError("smoothing window must be odd and >= 1, got " + std::to_string(smoothing_window));
    if (!(prominence_factor >= 0.0) || !std::isfinite(prominence_factor))
        throw ValidationError("prominence factor must be >= 0");
    if (frame_period_s && !(*frame_period_s > 0.0))
        throw ValidationError("frame period must be positive");
}

std::vector<double> Segmentation::boundary_times() const {
    std::vector<double> out;
    out.reserve(boundaries.size());
    for (const auto b : boundaries)
        out.push_back(static_cast<double>(b) * frame_period_s);
    return out;
}

void Segmentation::validate() const {
    if (boundaries.size() < 2)
        throw ValidationError(utterance_id + ": segmentation needs at least one segment");
    if (boundaries.front() != 0)
        throw ValidationError(utterance_id + ": first boundary must be frame 0");
    for (std::size_t i = 1; i < boundaries.size(); ++i)
        if (boundaries[i] <= boundaries[i - 1])
            throw ValidationError(utterance_id + ": boundaries not strictly increasing");
}

Segmentation segment(const FeatureMatrix& m, const SegmenterConfig& cfg, SegmentStats* stats) {
    cfg.validate();
    if (m.frames.rows() == 0)
        throw ValidationError(m.utterance_id + ": cannot segment an utterance with no frames");

    const Eigen::Index t = m.frames.rows();
    Segmentation seg;
    seg.utterance_id = m.utterance_id;
    seg.frame_period_s = cfg.frame_period_s.value_or(m.frame_period_s);

    Eigen::VectorXd raw;
    Eigen::Index offset = 0;
    if (cfg.mode == SignalMode::norm) {
        raw = norm_signal(m.frames);
    } else {
        if (t < 2)
            throw ValidationError(m.utterance_id + ": cosine mode needs at least 2 frames");
        std::size_t zero_pairs = 0;
        raw = cosine_distance_signal(m.frames, &zero_pairs);
        if (stats)
            stats->zero_norm_pairs += zero_pairs;
        // distance between frames t and t+1 marks a boundary before frame t+1
        offset = 1;
    }

    seg.boundaries.push_back(0);
    const double sigma = population_std(raw);
    if (sigma > 0.0) {
        const double threshold = cfg.prominence_factor * sigma;
        const Eigen::VectorXd smoothed = smooth(raw, cfg.smoothing_window);
        for (const auto& peak : peak_prominences(smoothed)) {
            const Eigen::Index b = peak.index + offset;
            if (peak.prominence >= threshold && b > 0 && b < t)
                seg.boundaries.push_back(b);
        }
    }
    seg.boundaries.push_back(t);
    return seg;
}

void write_segmentations(const std::vector<Segmentation>& segs, const std::filesystem::path& path) {
    std::ostringstream os;
    for (const auto& s : segs) {
        os << s.utterance_id << '\t';
        const auto times = s.boundary_times();
        for (std::size_t i = 0; i < times.size(); ++i)
            os << (i ? " " : "") << detail::fixed(times[i], 6);
        os << '\n';
    }
    const std::string text = os.str();
    detail::write_file(path, std::vector<char>(text.begin(), text.end()));
}

std::vector<TimedBoundaries> read_segmentations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open segmentation file " + path.string());
    std::vector<TimedBoundaries> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_blank(line))
            continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        const auto fields = detail::split_tabs(line);
        if (fields.size() != 2)
            throw FormatError(where + ": expected utterance_id<TAB>times");
        TimedBoundaries tb{fields[0], {}};
        for (const auto& tok : detail::split_spaces(fields[1]))
            tb.times.push_back(detail::parse_double(tok, where));
        if (tb.times.size() < 2)
            throw FormatError(where + ": need at least two boundary times");
        for (std::size_t i = 1; i < tb.times.size(); ++i)
            if (!(tb.times[i] > tb.times[i - 1]))
                throw ValidationError(where + ": boundary times not strictly increasing");
        out.push_back(std::move(tb));
    }
    return out;
}

Segmentation to_segmentation(const TimedBoundaries& timed, double frame_period_s, Eigen::Index num_frames) {
    Segmentation seg;
    seg.utterance_id = timed.utterance_id;
    seg.frame_period_s = frame_period_s;
    for (const double t : timed.times)
        seg.boundaries.push_back(static_cast<Eigen::Index>(std::llround(t / frame_period_s)));
    seg.validate();
    if (seg.boundaries.back() != num_frames)
        throw ValidationError(timed.utterance_id + ": segmentation ends at frame " +
                              std::to_string(seg.boundaries.back()) + " but features have " +
                              std::to_string(num_frames) + " frames");
    return seg;
}

} // namespace zerosyl
