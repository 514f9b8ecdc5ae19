#pragma once
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "gsinfonce/error.hpp"

namespace gsinfonce {

inline std::vector<std::string> tokenize_ws(const std::string& line) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) tokens.emplace_back(line.substr(start, i - start));
    }
    return tokens;
}

// Whitespace-token vocabulary. Id 0 is the reserved UNK; corpus tokens get
// ids in first-occurrence order, which makes the mapping a pure function of
// the corpus file.
class Vocabulary {
public:
    static constexpr std::uint32_t kUnkId = 0;

    Vocabulary() { id_to_token_.push_back("<unk>"); }

    static Vocabulary build(const std::vector<std::string>& lines) {
        Vocabulary v;
        for (const auto& line : lines) {
            for (const auto& tok : tokenize_ws(line)) {
                if (!v.token_to_id_.contains(tok)) {
                    v.token_to_id_.emplace(tok, static_cast<std::uint32_t>(v.id_to_token_.size()));
                    v.id_to_token_.push_back(tok);
                }
            }
        }
        return v;
    }

    std::size_t size() const noexcept { return id_to_token_.size(); }

    std::uint32_t id_of(const std::string& token) const {
        auto it = token_to_id_.find(token);
        return it == token_to_id_.end() ? kUnkId : it->second;
    }

    const std::string& token_of(std::uint32_t id) const { return id_to_token_.at(id); }

    // Unknown tokens map to UNK; a sentence with no tokens encodes as a
    // single UNK so downstream scoring never sees an empty sequence.
    std::vector<std::uint32_t> encode(const std::string& sentence) const {
        std::vector<std::uint32_t> ids;
        for (const auto& tok : tokenize_ws(sentence)) ids.push_back(id_of(tok));
        if (ids.empty()) ids.push_back(kUnkId);
        return ids;
    }

private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, std::uint32_t> token_to_id_;
};

// Reads a UTF-8 text file, one sentence per line; blank lines are skipped.
inline std::vector<std::string> read_corpus_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw GsError(ErrorKind::IoError, "cannot open corpus file: " + path);
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (tokenize_ws(line).empty()) continue;
        lines.push_back(line);
    }
    return lines;
}

} // namespace gsinfonce
