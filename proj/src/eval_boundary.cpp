#include "zerosyl/eval_boundary.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

#include "text.hpp"
#include "zerosyl/error.hpp"

namespace zerosyl {

namespace {

constexpr double kSameTime = 1e-9;

bool same_time(double a, double b) { return std::abs(a - b) <= kSameTime; }

struct Interval {
    double start, end;
};

std::vector<Interval> silences(const SyllableAlignment& ref) {
    std::vector<Interval> out;
    for (const auto& t : ref.tokens)
        if (t.is_silence)
            out.push_back({t.start_s, t.end_s});
    return out;
}

bool touches_silence(double t, const std::vector<Interval>& sil) {
    return std::any_of(sil.begin(), sil.end(),
                       [&](const Interval& s) { return same_time(t, s.start) || same_time(t, s.end); });
}

bool inside_expanded(double t, const std::vector<Interval>& sil, double tol) {
    return std::any_of(sil.begin(), sil.end(), [&](const Interval& s) { return s.start - tol < t && t < s.end + tol; });
}

bool interval_inside_expanded(const Interval& iv, const std::vector<Interval>& sil, double tol) {
    return std::any_of(sil.begin(), sil.end(),
                       [&](const Interval& s) { return s.start - tol <= iv.start && iv.end <= s.end + tol; });
}

double safe_ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::vector<Interval> predicted_tokens(const TimedBoundaries& pred, double shift_s) {
    std::vector<double> b = pred.times;
    for (std::size_t i = 1; i + 1 < b.size(); ++i)
        b[i] += shift_s;
    std::vector<Interval> out;
    for (std::size_t i = 0; i + 1 < b.size(); ++i)
        out.push_back({b[i], b[i + 1]});
    return out;
}

// Greedy one-to-one token matching on total |dstart| + |dend|.
std::size_t match_tokens(const std::vector<Interval>& ref, const std::vector<Interval>& pred, double tol) {
    std::vector<std::tuple<double, std::size_t, std::size_t>> cands;
    std::vector<std::size_t> by_start(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i)
        by_start[i] = i;
    std::sort(by_start.begin(), by_start.end(),
              [&](std::size_t a, std::size_t b) { return std::tie(pred[a].start, a) < std::tie(pred[b].start, b); });
    for (std::size_t r = 0; r < ref.size(); ++r) {
        auto it = std::lower_bound(by_start.begin(), by_start.end(), ref[r].start - tol,
                                   [&](std::size_t p, double v) { return pred[p].start < v; });
        for (; it != by_start.end() && pred[*it].start <= ref[r].start + tol; ++it) {
            const double ds = std::abs(pred[*it].start - ref[r].start);
            const double de = std::abs(pred[*it].end - ref[r].end);
            if (ds <= tol && de <= tol)
                cands.emplace_back(ds + de, r, *it);
        }
    }
    std::sort(cands.begin(), cands.end());
    std::vector<bool> ref_used(ref.size(), false), pred_used(pred.size(), false);
    std::size_t hits = 0;
    for (const auto& [cost, r, p] : cands) {
        if (ref_used[r] || pred_used[p])
            continue;
        ref_used[r] = pred_used[p] = true;
        ++hits;
    }
    return hits;
}

BoundaryReport report_from(const BoundaryCounts& c, const BoundaryEvalOptions& opts) {
    if (c.n_ref == 0)
        throw UndefinedMetricError("no reference boundaries to score; boundary metrics are undefined");
    BoundaryReport r;
    r.counts = c;
    r.shift_s = opts.shift_s;
    r.tolerance_s = opts.tolerance_s;
    r.precision = safe_ratio(c.matches, c.n_pred);
    r.recall = safe_ratio(c.matches, c.n_ref);
    r.f1 = harmonic_mean(r.precision, r.recall);
    r.over_segmentation = static_cast<double>(c.n_pred) / static_cast<double>(c.n_ref) - 1.0;
    r.r_value = r_value(r.recall, r.over_segmentation);
    r.token.precision = safe_ratio(c.token_hits, c.token_pred);
    r.token.recall = safe_ratio(c.token_hits, c.token_ref);
    r.token.f1 = harmonic_mean(r.token.precision, r.token.recall);
    return r;
}

} // namespace

BoundaryCounts& BoundaryCounts::operator+=(const BoundaryCounts& o) {
    n_ref += o.n_ref;
    n_pred += o.n_pred;
    matches += o.matches;
    token_ref += o.token_ref;
    token_pred += o.token_pred;
    token_hits += o.token_hits;
    return *this;
}

double r_value(double recall, double over_segmentation) {
    const double r1 = std::sqrt((1.0 - recall) * (1.0 - recall) + over_segmentation * over_segmentation);
    const double r2 = (-over_segmentation + recall - 1.0) / std::sqrt(2.0);
    return 1.0 - (std::abs(r1) + std::abs(r2)) / 2.0;
}

double harmonic_mean(double a, double b) {
    return a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0;
}

std::size_t match_boundaries(std::span<const double> ref, std::span<const double> pred, double tol_s) {
    std::vector<std::tuple<double, std::size_t, std::size_t>> cands;
    std::size_t lo = 0;
    for (std::size_t r = 0; r < ref.size(); ++r) {
        while (lo < pred.size() && pred[lo] < ref[r] - tol_s)
            ++lo;
        for (std::size_t p = lo; p < pred.size() && pred[p] <= ref[r] + tol_s; ++p) {
            const double d = std::abs(ref[r] - pred[p]);
            if (d <= tol_s)
                cands.emplace_back(d, r, p);
        }
    }
    std::sort(cands.begin(), cands.end());
    std::vector<bool> ref_used(ref.size(), false), pred_used(pred.size(), false);
    std::size_t matches = 0;
    for (const auto& [d, r, p] : cands) {
        if (ref_used[r] || pred_used[p])
            continue;
        ref_used[r] = pred_used[p] = true;
        ++matches;
    }
    return matches;
}

std::vector<double> scored_reference_boundaries(const SyllableAlignment& ref) {
    const auto sil = silences(ref);
    std::vector<double> edges;
    for (const auto& t : ref.tokens) {
        edges.push_back(t.start_s);
        edges.push_back(t.end_s);
    }
    std::sort(edges.begin(), edges.end());
    std::vector<double> out;
    for (const double e : edges) {
        if (!out.empty() && same_time(out.back(), e))
            continue;
        out.push_back(e);
    }
    std::erase_if(out, [&](double e) {
        return same_time(e, ref.start_s()) || same_time(e, ref.end_s()) || touches_silence(e, sil);
    });
    return out;
}

std::vector<double> scored_predicted_boundaries(const SyllableAlignment& ref, const TimedBoundaries& pred,
                                                double tol_s, double shift_s) {
    const auto sil = silences(ref);
    std::vector<double> out;
    for (std::size_t i = 1; i + 1 < pred.times.size(); ++i) {
        const double t = pred.times[i] + shift_s;
        if (!inside_expanded(t, sil, tol_s))
            out.push_back(t);
    }
    std::sort(out.begin(), out.end());
    return out;
}

BoundaryCounts count_utterance(const SyllableAlignment& ref, const TimedBoundaries& pred,
                               const BoundaryEvalOptions& opts) {
    if (pred.times.size() < 2)
        throw ValidationError(pred.utterance_id + ": prediction needs at least the two utterance edges");
    BoundaryCounts c;
    const auto ref_b = scored_reference_boundaries(ref);
    const auto pred_b = scored_predicted_boundaries(ref, pred, opts.tolerance_s, opts.shift_s);
    c.n_ref = ref_b.size();
    c.n_pred = pred_b.size();
    c.matches = match_boundaries(ref_b, pred_b, opts.tolerance_s);

    const auto sil = silences(ref);
    std::vector<Interval> ref_tokens;
    for (const auto& t : ref.tokens) {
        if (t.is_silence)
            continue;
        if (!opts.silence_adjacent_tokens && (touches_silence(t.start_s, sil) || touches_silence(t.end_s, sil)))
            continue;
        ref_tokens.push_back({t.start_s, t.end_s});
    }
    std::vector<Interval> pred_tokens;
    for (const auto& iv : predicted_tokens(pred, opts.shift_s))
        if (!interval_inside_expanded(iv, sil, opts.tolerance_s))
            pred_tokens.push_back(iv);
    c.token_ref = ref_tokens.size();
    c.token_pred = pred_tokens.size();
    c.token_hits = match_tokens(ref_tokens, pred_tokens, opts.tolerance_s);
    return c;
}

BoundaryCounts count_corpus(const std::vector<SyllableAlignment>& refs, const std::vector<TimedBoundaries>& preds,
                            const BoundaryEvalOptions& opts) {
    std::map<std::string, const TimedBoundaries*> by_id;
    for (const auto& p : preds)
        if (!by_id.emplace(p.utterance_id, &p).second)
            throw ValidationError("duplicate predicted utterance " + p.utterance_id);
    if (by_id.size() != refs.size())
        throw ValidationError("reference and prediction utterance sets differ (" + std::to_string(refs.size()) +
                              " vs " + std::to_string(by_id.size()) + ")");
    BoundaryCounts total;
    for (const auto& r : refs) {
        const auto it = by_id.find(r.utterance_id);
        if (it == by_id.end())
            throw ValidationError("no prediction for utterance " + r.utterance_id);
        total += count_utterance(r, *it->second, opts);
    }
    return total;
}

BoundaryReport evaluate_boundaries(const std::vector<SyllableAlignment>& refs,
                                   const std::vector<TimedBoundaries>& preds, const BoundaryEvalOptions& opts) {
    return report_from(count_corpus(refs, preds, opts), opts);
}

TokenScores evaluate_tokens(const std::vector<SyllableAlignment>& refs, const std::vector<TimedBoundaries>& preds,
                            const BoundaryEvalOptions& opts) {
    const BoundaryCounts c = count_corpus(refs, preds, opts);
    if (c.token_ref == 0)
        throw UndefinedMetricError("no reference syllable tokens to score; token metrics are undefined");
    TokenScores s;
    s.precision = safe_ratio(c.token_hits, c.token_pred);
    s.recall = safe_ratio(c.token_hits, c.token_ref);
    s.f1 = harmonic_mean(s.precision, s.recall);
    return s;
}

std::vector<double> default_shift_grid() {
    std::vector<double> grid;
    for (int i = -10; i <= 10; ++i)
        grid.push_back(static_cast<double>(i) * 0.01);
    return grid;
}

double tune_shift(const std::vector<SyllableAlignment>& refs, const std::vector<TimedBoundaries>& preds,
                  double tol_s, std::span<const double> grid) {
    if (grid.empty())
        throw ValidationError("shift grid is empty");
    double best_shift = grid.front();
    double best_f1 = -1.0;
    for (const double shift : grid) {
        BoundaryEvalOptions opts;
        opts.tolerance_s = tol_s;
        opts.shift_s = shift;
        const double f1 = evaluate_boundaries(refs, preds, opts).f1;
        const bool better = f1 > best_f1 ||
                            (f1 == best_f1 && (std::abs(shift) < std::abs(best_shift) ||
                                               (std::abs(shift) == std::abs(best_shift) && shift < best_shift)));
        if (better) {
            best_f1 = f1;
            best_shift = shift;
        }
    }
    return best_shift;
}

std::string format_boundary_table(const BoundaryReport& r) {
    std::ostringstream os;
    const auto pct = [](double v) { return detail::fixed(100.0 * v, 1); };
    os << "tolerance " << detail::fixed(r.tolerance_s * 1000.0, 1) << " ms, shift "
       << detail::fixed(r.shift_s * 1000.0, 1) << " ms\n";
    os << "          Pr      Re      F1      OS      R   | tokPr   tokRe   tokF1\n";
    char line[256];
    std::snprintf(line, sizeof line, "      %6s  %6s  %6s  %6s  %6s | %6s  %6s  %6s\n", pct(r.precision).c_str(),
                  pct(r.recall).c_str(), pct(r.f1).c_str(), pct(r.over_segmentation).c_str(),
                  pct(r.r_value).c_str(), pct(r.token.precision).c_str(), pct(r.token.recall).c_str(),
                  pct(r.token.f1).c_str());
    os << line;
    os << "reference boundaries " << r.counts.n_ref << ", predicted " << r.counts.n_pred << ", matched "
       << r.counts.matches << "\n";
    return os.str();
}

std::string format_boundary_kv(const BoundaryReport& r) {
    std::ostringstream os;
    const auto kv = [&](const char* key, double v) { os << key << '\t' << detail::fixed(v, 4) << '\n'; };
    kv("precision", r.precision);
    kv("recall", r.recall);
    kv("f1", r.f1);
    kv("over_segmentation", r.over_segmentation);
    kv("r_value", r.r_value);
    kv("token_precision", r.token.precision);
    kv("token_recall", r.token.recall);
    kv("token_f1", r.token.f1);
    kv("shift_s", r.shift_s);
    kv("tolerance_s", r.tolerance_s);
    os << "n_ref\t" << r.counts.n_ref << '\n';
    os << "n_pred\t" << r.counts.n_pred << '\n';
    os << "matches\t" << r.counts.matches << '\n';
    os << "token_ref\t" << r.counts.token_ref << '\n';
    os << "token_pred\t" << r.counts.token_pred << '\n';
    os << "token_hits\t" << r.counts.token_hits << '\n';
    return os.str();
}

} // namespace zerosyl
