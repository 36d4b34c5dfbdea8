#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "zerosyl/alignment.hpp"
#include "zerosyl/tokenizer.hpp"

namespace zerosyl {

inline const std::string kSilenceLabel = "<sil>";
inline const std::string kNoneLabel = "<none>";

/// Joint counts of (cluster id, syllable label).
struct ContingencyTable {
    std::map<std::pair<std::uint32_t, std::string>, std::size_t> counts;
    std::size_t total = 0;
    std::size_t unmatched = 0; // tokens with no overlapping reference syllable

    void add(std::uint32_t cluster, const std::string& label, std::size_t n = 1);
};

struct DiscoveryOptions {
    /// Drop tokens whose best-overlap reference is a silence.
    bool exclude_silence = false;
};

/// Maps each token to the reference syllable it overlaps most (earlier one on
/// ties). Silences share the label "<sil>"; tokens overlapping nothing get "<none>".
ContingencyTable build_contingency(const std::vector<TokenSequence>& tokens,
                                   const std::vector<SyllableAlignment>& refs, const DiscoveryOptions& opts = {});

struct PurityScores {
    double pc_purity = 0.0;
    double ps_purity = 0.0;
    double snmi = 0.0;
    double mutual_information_bits = 0.0;
    double label_entropy_bits = 0.0;
    double cluster_entropy_bits = 0.0;
};

/// Per-cluster purity, per-syllable purity and I(C;S)/H(S) in bits (1 when H(S) = 0).
PurityScores purity_and_snmi(const ContingencyTable& table);

struct RateScores {
    double bitrate_bps = 0.0;
    double token_freq_hz = 0.0;
    std::size_t num_tokens = 0;
    std::size_t vocab_used = 0;
};

/// Token rate and rate times the unigram entropy of the ids in bits.
RateScores bitrate_and_freq(const std::vector<TokenSequence>& tokens, double total_duration_s);

/// Sum over sequences of last token end minus first token start.
double total_duration(const std::vector<TokenSequence>& tokens);

struct DiscoveryReport {
    PurityScores purity;
    RateScores rate;
    double total_duration_s = 0.0;
    std::size_t unmatched_tokens = 0;
};

DiscoveryReport evaluate_discovery(const std::vector<TokenSequence>& tokens,
                                   const std::vector<SyllableAlignment>& refs, const DiscoveryOptions& opts = {});

std::string format_discovery_table(const DiscoveryReport& r);
std::string format_discovery_kv(const DiscoveryReport& r);
/// cluster_id<TAB>label<TAB>count, sorted by cluster then label.
std::string format_contingency_tsv(const ContingencyTable& table);

} // namespace zerosyl
