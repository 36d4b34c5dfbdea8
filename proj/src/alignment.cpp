#include "zerosyl/alignment.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "binary.hpp"
#include "text.hpp"
#include "zerosyl/error.hpp"

namespace zerosyl {

void SyllableAlignment::validate() const {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        if (!(t.end_s > t.start_s))
            throw ValidationError(utterance_id + ": syllable " + std::to_string(i) + " has end <= start");
        if (i > 0 && t.start_s < tokens[i - 1].end_s)
            throw ValidationError(utterance_id + ": syllables " + std::to_string(i - 1) + " and " +
                                  std::to_string(i) + " overlap or are unsorted");
    }
}

namespace {

bool parse_flag(const std::string& s, const std::string& where) {
    if (s == "1" || s == "true" || s == "True")
        return true;
    if (s == "0" || s == "false" || s == "False")
        return false;
    throw FormatError(where + ": is_silence must be 0/1/true/false, got '" + s + "'");
}

} // namespace

std::vector<SyllableAlignment> read_alignments(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open alignment file " + path.string());
    std::vector<SyllableAlignment> out;
    std::map<std::string, std::size_t> index;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_blank(line))
            continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        const auto f = detail::split_tabs(line);
        if (f.size() != 5)
            throw FormatError(where + ": expected utterance_id, start_s, end_s, label, is_silence");
        auto [it, inserted] = index.emplace(f[0], out.size());
        if (inserted)
            out.push_back({f[0], {}});
        out[it->second].tokens.push_back(
            {detail::parse_double(f[1], where), detail::parse_double(f[2], where), f[3], parse_flag(f[4], where)});
    }
    for (const auto& a : out)
        a.validate();
    return out;
}

void write_alignments(const std::vector<SyllableAlignment>& alignments, const std::filesystem::path& path) {
    std::ostringstream os;
    for (const auto& a : alignments)
        for (const auto& t : a.tokens)
            os << a.utterance_id << '\t' << detail::fixed(t.start_s, 6) << '\t' << detail::fixed(t.end_s, 6) << '\t'
               << t.label << '\t' << (t.is_silence ? 1 : 0) << '\n';
    const std::string text = os.str();
    detail::write_file(path, std::vector<char>(text.begin(), text.end()));
}

} // namespace zerosyl
