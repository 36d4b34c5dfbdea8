#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace zerosyl {

struct SyllableToken {
    double start_s = 0.0;
    double end_s = 0.0;
    std::string label;
    bool is_silence = false;
};

/// Ground-truth syllables of one utterance, sorted and non-overlapping.
struct SyllableAlignment {
    std::string utterance_id;
    std::vector<SyllableToken> tokens;

    double start_s() const { return tokens.empty() ? 0.0 : tokens.front().start_s; }
    double end_s() const { return tokens.empty() ? 0.0 : tokens.back().end_s; }

    void validate() const;
};

/// TSV, one syllable per line: utterance_id, start_s, end_s, label, is_silence (0/1/true/false).
/// Utterances are returned in order of first appearance.
std::vector<SyllableAlignment> read_alignments(const std::filesystem::path& path);
void write_alignments(const std::vector<SyllableAlignment>& alignments, const std::filesystem::path& path);

} // namespace zerosyl
