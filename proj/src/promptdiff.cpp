#include "lusd/promptdiff.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "lexicon.hpp"
#include "lusd/error.hpp"

namespace lusd {

namespace {

using lexicon::WordSet;

bool has(const WordSet& s, std::string_view w) { return s.count(w) > 0; }

bool ends_with(std::string_view w, std::string_view suffix) {
    return w.size() > suffix.size() && w.substr(w.size() - suffix.size()) == suffix;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

// Candidate stems for an inflected form: plain strip, strip plus 'e',
// doubled final consonant, and 'i' back to 'y'.
std::vector<std::string> stems(std::string_view w, std::string_view suffix) {
    std::vector<std::string> out;
    if (!ends_with(w, suffix)) return out;
    std::string stem(w.substr(0, w.size() - suffix.size()));
    if (stem.size() < 2) return out;
    out.push_back(stem);
    out.push_back(stem + "e");
    const std::size_t n = stem.size();
    if (n >= 3 && stem[n - 1] == stem[n - 2] && !is_vowel(stem[n - 1])) out.push_back(stem.substr(0, n - 1));
    if (stem.back() == 'i') out.push_back(stem.substr(0, n - 1) + "y");
    return out;
}

bool any_stem_in(std::string_view w, std::string_view suffix, const WordSet& set) {
    for (const std::string& s : stems(w, suffix)) {
        if (has(set, s)) return true;
    }
    return false;
}

bool is_plural_noun(std::string_view w) {
    const auto& irregular = lexicon::irregular_plurals();
    if (irregular.count(w) > 0) return true;
    const WordSet& nouns = lexicon::nouns();
    if (ends_with(w, "ies") && has(nouns, std::string(w.substr(0, w.size() - 3)) + "y")) return true;
    if (ends_with(w, "ves")) {
        const std::string stem(w.substr(0, w.size() - 3));
        if (has(nouns, stem + "f") || has(nouns, stem + "fe")) return true;
    }
    if (ends_with(w, "es") && has(nouns, w.substr(0, w.size() - 2))) return true;
    return ends_with(w, "s") && !ends_with(w, "ss") && has(nouns, w.substr(0, w.size() - 1));
}

bool is_inflected_other(std::string_view w) {
    const WordSet& verbs = lexicon::verbs();
    const WordSet& adjectives = lexicon::adjectives();
    if (lexicon::irregular_verb_forms().count(w) > 0) return true;
    for (std::string_view sfx : {"ing", "ed", "s", "es"}) {
        if (any_stem_in(w, sfx, verbs)) return true;
    }
    for (std::string_view sfx : {"er", "est"}) {
        if (any_stem_in(w, sfx, adjectives)) return true;
    }
    return any_stem_in(w, "ly", adjectives);
}

constexpr std::array<std::string_view, 14> kNounSuffixes = {
    "tion", "sion", "ness", "ment", "ity", "ism", "ist", "ship", "hood", "dom", "ance", "ence", "er", "or"};
constexpr std::array<std::string_view, 13> kOtherSuffixes = {
    "ing", "ed", "ly", "ous", "ful", "ive", "al", "ic", "able", "ible", "ish", "less", "est"};

bool possessive_or_determiner(std::string_view w) {
    static const WordSet s = {"my", "your", "his", "her", "its", "our", "their", "this", "that",
                              "these", "those", "some", "every", "each", "any", "no"};
    return has(s, w);
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

std::vector<PromptWord> split_prompt(const std::string& text) {
    std::vector<PromptWord> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        std::size_t b = i, e = j;
        while (b < e && !std::isalnum(static_cast<unsigned char>(text[b]))) ++b;
        while (e > b && !std::isalnum(static_cast<unsigned char>(text[e - 1]))) --e;
        if (b < e) out.push_back({lower(text.substr(b, e - b)), b, e});
        i = j;
    }
    return out;
}

std::vector<std::string> word_texts(const std::vector<PromptWord>& words) {
    std::vector<std::string> out;
    out.reserve(words.size());
    for (const PromptWord& w : words) out.push_back(w.text);
    return out;
}

const char* to_string(PosTag tag) {
    switch (tag) {
        case PosTag::Noun: return "NOUN";
        case PosTag::Article: return "ARTICLE";
        case PosTag::Preposition: return "PREPOSITION";
        case PosTag::Other: return "OTHER";
    }
    return "OTHER";
}

PosTag RuleTagger::tag_word(const std::string& word) {
    const std::string w = lower(word);
    if (w.empty()) return PosTag::Other;
    if (has(lexicon::articles(), w)) return PosTag::Article;
    if (has(lexicon::prepositions(), w)) return PosTag::Preposition;
    if (has(lexicon::pronouns(), w) || has(lexicon::function_words(), w)) return PosTag::Other;
    if (std::any_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); })) return PosTag::Other;
    if (has(lexicon::nouns(), w) || is_plural_noun(w)) return PosTag::Noun;
    if (has(lexicon::verbs(), w) || has(lexicon::adjectives(), w) || has(lexicon::adverbs(), w)) return PosTag::Other;
    if (is_inflected_other(w)) return PosTag::Other;
    for (std::string_view sfx : kNounSuffixes) {
        if (w.size() >= sfx.size() + 3 && ends_with(w, sfx)) return PosTag::Noun;
    }
    for (std::string_view sfx : kOtherSuffixes) {
        if (w.size() >= sfx.size() + 3 && ends_with(w, sfx)) return PosTag::Other;
    }
    return PosTag::Noun;
}

PosTag RuleTagger::tag(const std::vector<std::string>& sentence, std::size_t i) const {
    const std::string w = lower(sentence.at(i));
    const PosTag base = tag_word(w);
    // "a smile", "her dance": a bare verb after a determiner reads as a noun.
    if (base == PosTag::Other && i > 0 && has(lexicon::verbs(), w) && !has(lexicon::adjectives(), w)) {
        const std::string prev = lower(sentence[i - 1]);
        if (tag_word(prev) == PosTag::Article || possessive_or_determiner(prev)) return PosTag::Noun;
    }
    return base;
}

const PosTagger& default_tagger() {
    static const RuleTagger tagger;
    return tagger;
}

WordSpan strip_common_affixes(const std::vector<std::string>& src, const std::vector<std::string>& tgt) {
    std::size_t suffix = 0;
    while (suffix < src.size() && suffix < tgt.size() &&
           src[src.size() - 1 - suffix] == tgt[tgt.size() - 1 - suffix]) {
        ++suffix;
    }
    const std::size_t src_end = src.size() - suffix;
    const std::size_t tgt_end = tgt.size() - suffix;
    std::size_t prefix = 0;
    while (prefix < src_end && prefix < tgt_end && src[prefix] == tgt[prefix]) ++prefix;
    return WordSpan{prefix, tgt_end};
}

std::vector<std::size_t> select_nouns(WordSpan span, const std::vector<std::string>& tgt, const PosTagger& tagger) {
    if (span.end > tgt.size() || span.begin > span.end) throw PromptError("select_nouns: span outside the prompt");
    std::vector<std::size_t> out;
    for (std::size_t i = span.begin; i < span.end; ++i) {
        if (tagger.tag(tgt, i) == PosTag::Noun) out.push_back(i);
    }
    if (span.empty()) return out;
    const PosTag last = tagger.tag(tgt, span.end - 1);
    if (last == PosTag::Noun || last == PosTag::Article || last == PosTag::Preposition) return out;
    for (std::size_t i = span.end; i < tgt.size(); ++i) {
        if (tagger.tag(tgt, i) == PosTag::Noun) {
            out.push_back(i);
            break;
        }
    }
    return out;
}

std::vector<int> align_tokens(const std::vector<PromptWord>& words, const std::vector<Token>& tokens) {
    std::vector<int> out;
    for (const PromptWord& w : words) {
        bool found = false;
        for (const Token& t : tokens) {
            if (t.begin < w.end && w.begin < t.end) {
                out.push_back(t.index);
                found = true;
            }
        }
        if (!found) {
            throw PromptError("tokenization has no token covering '" + w.text + "' at characters [" +
                              std::to_string(w.begin) + ", " + std::to_string(w.end) + ")");
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

DiffResult diff_prompts(const std::string& y_src, const std::string& y_tgt, const std::vector<Token>& tokens,
                        const PosTagger& tagger) {
    const auto src_words = split_prompt(y_src);
    const auto tgt_words = split_prompt(y_tgt);
    const auto tgt = word_texts(tgt_words);
    const WordSpan span = strip_common_affixes(word_texts(src_words), tgt);
    if (span.empty()) {
        throw PromptError("source and target prompts do not differ; pass the edit nouns with --nouns");
    }
    const auto picks = select_nouns(span, tgt, tagger);
    if (picks.empty()) {
        throw PromptError("no noun found in the differing part of the target prompt; pass the edit nouns with --nouns");
    }
    DiffResult r;
    const std::size_t end = std::max(span.end, picks.back() + 1);
    for (std::size_t i = span.begin; i < end; ++i) r.differing_substring.push_back(tgt[i]);
    std::vector<PromptWord> noun_words;
    for (std::size_t i : picks) {
        r.noun_words.push_back(tgt[i]);
        noun_words.push_back(tgt_words[i]);
    }
    r.token_indices = align_tokens(noun_words, tokens);
    return r;
}

DiffResult explicit_nouns(const std::vector<std::string>& nouns, const std::string& y_tgt,
                          const std::vector<Token>& tokens) {
    const auto tgt_words = split_prompt(y_tgt);
    DiffResult r;
    std::vector<PromptWord> hits;
    for (const std::string& raw : nouns) {
        const auto parts = split_prompt(raw);
        if (parts.size() != 1) throw PromptError("--nouns entries must be single words, got '" + raw + "'");
        bool found = false;
        for (const PromptWord& w : tgt_words) {
            if (w.text == parts[0].text) {
                hits.push_back(w);
                found = true;
            }
        }
        if (!found) throw PromptError("noun '" + raw + "' does not occur in the target prompt");
        r.noun_words.push_back(parts[0].text);
        r.differing_substring.push_back(parts[0].text);
    }
    if (hits.empty()) throw PromptError("--nouns is empty");
    r.token_indices = align_tokens(hits, tokens);
    return r;
}

}  // namespace lusd
