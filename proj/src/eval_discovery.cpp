#include "zerosyl/eval_discovery.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "text.hpp"
#include "zerosyl/error.hpp"

namespace zerosyl {

namespace {

double entropy_bits(const std::vector<std::size_t>& counts, std::size_t total) {
    double h = 0.0;
    for (const auto c : counts) {
        if (c == 0)
            continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

} // namespace

void ContingencyTable::add(std::uint32_t cluster, const std::string& label, std::size_t n) {
    counts[{cluster, label}] += n;
    total += n;
}

ContingencyTable build_contingency(const std::vector<TokenSequence>& tokens,
                                   const std::vector<SyllableAlignment>& refs, const DiscoveryOptions& opts) {
    std::unordered_map<std::string, const SyllableAlignment*> by_id;
    for (const auto& r : refs)
        by_id.emplace(r.utterance_id, &r);

    ContingencyTable table;
    for (const auto& seq : tokens) {
        const auto it = by_id.find(seq.utterance_id);
        if (it == by_id.end())
            throw ValidationError("no reference alignment for utterance " + seq.utterance_id);
        const auto& syl = it->second->tokens;
        std::size_t first = 0;
        for (const auto& tok : seq.tokens) {
            // References are sorted and disjoint: skip those ending before this token.
            while (first < syl.size() && syl[first].end_s <= tok.start_s)
                ++first;
            std::size_t best = syl.size();
            double best_overlap = 0.0;
            for (std::size_t j = first; j < syl.size() && syl[j].start_s < tok.end_s; ++j) {
                const double overlap = std::min(tok.end_s, syl[j].end_s) - std::max(tok.start_s, syl[j].start_s);
                if (overlap > best_overlap) {
                    best_overlap = overlap;
                    best = j;
                }
            }
            if (best == syl.size()) {
                ++table.unmatched;
                table.add(tok.id, kNoneLabel);
                continue;
            }
            if (syl[best].is_silence) {
                if (!opts.exclude_silence)
                    table.add(tok.id, kSilenceLabel);
                continue;
            }
            table.add(tok.id, syl[best].label);
        }
    }
    return table;
}

PurityScores purity_and_snmi(const ContingencyTable& table) {
    if (table.total == 0)
        throw UndefinedMetricError("contingency table is empty");
    std::map<std::uint32_t, std::size_t> cluster_total, cluster_max;
    std::map<std::string, std::size_t> label_total, label_max;
    for (const auto& [key, n] : table.counts) {
        cluster_total[key.first] += n;
        label_total[key.second] += n;
        cluster_max[key.first] = std::max(cluster_max[key.first], n);
        label_max[key.second] = std::max(label_max[key.second], n);
    }
    const double total = static_cast<double>(table.total);

    PurityScores s;
    std::size_t pc = 0, ps = 0;
    for (const auto& [c, n] : cluster_max)
        pc += n;
    for (const auto& [l, n] : label_max)
        ps += n;
    s.pc_purity = static_cast<double>(pc) / total;
    s.ps_purity = static_cast<double>(ps) / total;

    std::vector<std::size_t> cvec, lvec;
    for (const auto& [c, n] : cluster_total)
        cvec.push_back(n);
    for (const auto& [l, n] : label_total)
        lvec.push_back(n);
    s.cluster_entropy_bits = entropy_bits(cvec, table.total);
    s.label_entropy_bits = entropy_bits(lvec, table.total);

    double mi = 0.0;
    for (const auto& [key, n] : table.counts) {
        if (n == 0)
            continue;
        const double joint = static_cast<double>(n) / total;
        const double pc_marg = static_cast<double>(cluster_total[key.first]) / total;
        const double pl_marg = static_cast<double>(label_total[key.second]) / total;
        mi += joint * std::log2(joint / (pc_marg * pl_marg));
    }
    const double upper = std::min(s.cluster_entropy_bits, s.label_entropy_bits);
    if (mi < -1e-9 || mi > upper + 1e-9)
        throw std::logic_error("mutual information " + std::to_string(mi) + " outside [0, " +
                               std::to_string(upper) + "]");
    // absorb rounding at the ends of the admissible range
    s.mutual_information_bits = std::clamp(mi, 0.0, upper);
    s.snmi = s.label_entropy_bits > 0.0 ? s.mutual_information_bits / s.label_entropy_bits : 1.0;
    return s;
}

RateScores bitrate_and_freq(const std::vector<TokenSequence>& tokens, double total_duration_s) {
    if (!(total_duration_s > 0.0))
        throw ValidationError("total duration must be positive");
    std::map<std::uint32_t, std::size_t> freq;
    RateScores r;
    for (const auto& seq : tokens)
        for (const auto& t : seq.tokens) {
            ++freq[t.id];
            ++r.num_tokens;
        }
    if (r.num_tokens == 0)
        return r;
    std::vector<std::size_t> counts;
    for (const auto& [id, n] : freq)
        counts.push_back(n);
    r.vocab_used = freq.size();
    r.token_freq_hz = static_cast<double>(r.num_tokens) / total_duration_s;
    r.bitrate_bps = r.token_freq_hz * entropy_bits(counts, r.num_tokens);
    return r;
}

double total_duration(const std::vector<TokenSequence>& tokens) {
    double total = 0.0;
    for (const auto& seq : tokens)
        if (!seq.tokens.empty())
            total += seq.tokens.back().end_s - seq.tokens.front().start_s;
    return total;
}

DiscoveryReport evaluate_discovery(const std::vector<TokenSequence>& tokens,
                                   const std::vector<SyllableAlignment>& refs, const DiscoveryOptions& opts) {
    DiscoveryReport r;
    const ContingencyTable table = build_contingency(tokens, refs, opts);
    r.purity = purity_and_snmi(table);
    r.unmatched_tokens = table.unmatched;
    r.total_duration_s = total_duration(tokens);
    r.rate = bitrate_and_freq(tokens, r.total_duration_s);
    return r;
}

std::string format_discovery_table(const DiscoveryReport& r) {
    std::ostringstream os;
    os << "  PC pur.  PS pur.  SNMI   | bitrate (bps)  freq (Hz)  vocab used\n";
    char line[256];
    std::snprintf(line, sizeof line, "  %6.1f   %6.1f   %6.1f | %13.1f  %9.2f  %10zu\n", 100.0 * r.purity.pc_purity,
                  100.0 * r.purity.ps_purity, 100.0 * r.purity.snmi, r.rate.bitrate_bps, r.rate.token_freq_hz,
                  r.rate.vocab_used);
    os << line;
    if (r.unmatched_tokens > 0)
        os << "warning: " << r.unmatched_tokens << " tokens overlap no reference syllable\n";
    return os.str();
}

std::string format_discovery_kv(const DiscoveryReport& r) {
    std::ostringstream os;
    const auto kv = [&](const char* key, double v) { os << key << '\t' << detail::fixed(v, 4) << '\n'; };
    kv("pc_purity", r.purity.pc_purity);
    kv("ps_purity", r.purity.ps_purity);
    kv("snmi", r.purity.snmi);
    kv("bitrate_bps", r.rate.bitrate_bps);
    kv("token_freq_hz", r.rate.token_freq_hz);
    kv("total_duration_s", r.total_duration_s);
    os << "vocab_used\t" << r.rate.vocab_used << '\n';
    os << "num_tokens\t" << r.rate.num_tokens << '\n';
    os << "unmatched_tokens\t" << r.unmatched_tokens << '\n';
    return os.str();
}

std::string format_contingency_tsv(const ContingencyTable& table) {
    std::ostringstream os;
    for (const auto& [key, n] : table.counts)
        os << key.first << '\t' << key.second << '\t' << n << '\n';
    return os.str();
}

} // namespace zerosyl
