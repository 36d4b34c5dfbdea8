#include "zerosyl/bench_score.hpp"

#include <cmath>
#include <fstream>

#include "text.hpp"
#include "zerosyl/error.hpp"

namespace zerosyl {

double pair_accuracy(std::span<const ScoredPair> pairs, bool normalized) {
    if (pairs.empty())
        throw ValidationError("no pairs to score");
    double correct = 0.0;
    for (const auto& p : pairs) {
        if (p.pos_tokens < 1 || p.neg_tokens < 1)
            throw ValidationError(p.pair_id + ": token counts must be positive");
        if (!std::isfinite(p.pos_ll) || !std::isfinite(p.neg_ll))
            throw ValidationError(p.pair_id + ": non-finite log-likelihood");
        const double pos = normalized ? p.pos_ll / static_cast<double>(p.pos_tokens) : p.pos_ll;
        const double neg = normalized ? p.neg_ll / static_cast<double>(p.neg_tokens) : p.neg_ll;
        if (pos > neg)
            correct += 1.0;
        else if (pos == neg)
            correct += 0.5;
    }
    return correct / static_cast<double>(pairs.size());
}

std::vector<ScoredPair> read_pairs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open pair file " + path.string());
    std::vector<ScoredPair> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_blank(line))
            continue;
        const auto f = detail::split_tabs(line);
        if (lineno == 1 && !f.empty() && f[0] == "pair_id")
            continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (f.size() != 5)
            throw FormatError(where + ": expected pair_id, pos_ll, pos_tokens, neg_ll, neg_tokens");
        ScoredPair p{f[0], detail::parse_double(f[1], where), detail::parse_int(f[2], where),
                     detail::parse_double(f[3], where), detail::parse_int(f[4], where)};
        if (p.pos_tokens < 1 || p.neg_tokens < 1)
            throw ValidationError(where + ": token counts must be positive");
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace zerosyl
