#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lusd/backend.hpp"

namespace lusd {

/// Word of a prompt: lowercased, edge punctuation stripped, with the
/// character span [begin, end) of the stripped core in the original text.
struct PromptWord {
    std::string text;
    std::size_t begin = 0;
    std::size_t end = 0;
};

std::vector<PromptWord> split_prompt(const std::string& text);
std::vector<std::string> word_texts(const std::vector<PromptWord>& words);

enum class PosTag { Noun, Article, Preposition, Other };
const char* to_string(PosTag tag);

/// Part-of-speech tagger over the fixed set above. Must be deterministic.
class PosTagger {
public:
    virtual ~PosTagger() = default;
    virtual PosTag tag(const std::vector<std::string>& sentence, std::size_t i) const = 0;
};

/// Closed lists for articles, prepositions and pronouns; a bundled lexicon
/// of common nouns with plural backoff; verb/adjective/adverb lists with
/// their inflections; suffix heuristics. Unlisted words default to NOUN.
class RuleTagger final : public PosTagger {
public:
    PosTag tag(const std::vector<std::string>& sentence, std::size_t i) const override;
    /// Context-free part of tag(), exposed for tests.
    static PosTag tag_word(const std::string& word);
};

const PosTagger& default_tagger();

/// Half-open word span [begin, end) of the target prompt.
struct WordSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool empty() const noexcept { return begin >= end; }
};

/// Removes the longest common word-suffix, then the longest common
/// word-prefix of the remainders. Returns the leftover target span.
WordSpan strip_common_affixes(const std::vector<std::string>& src, const std::vector<std::string>& tgt);

/// Target word positions of the selected nouns. If the span's last word is
/// not NOUN, ARTICLE or PREPOSITION, the span grows word by word until it
/// takes in a noun or reaches the end of the prompt.
std::vector<std::size_t> select_nouns(WordSpan span, const std::vector<std::string>& tgt, const PosTagger& tagger);

/// Indices of every token whose character span overlaps one of the words.
/// Throws PromptError if a word overlaps no token.
std::vector<int> align_tokens(const std::vector<PromptWord>& words, const std::vector<Token>& tokens);

struct DiffResult {
    std::vector<std::string> differing_substring;  // after expansion
    std::vector<std::string> noun_words;
    std::vector<int> token_indices;
};

/// Full pipeline. Throws PromptError when no noun can be derived.
DiffResult diff_prompts(const std::string& y_src, const std::string& y_tgt, const std::vector<Token>& tokens,
                        const PosTagger& tagger = default_tagger());

/// Explicit override: every occurrence of each given word in y_tgt.
/// Throws PromptError for a word absent from the prompt.
DiffResult explicit_nouns(const std::vector<std::string>& nouns, const std::string& y_tgt,
                          const std::vector<Token>& tokens);

}  // namespace lusd
