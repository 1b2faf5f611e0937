#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

// Word lists behind the rule tagger.
namespace lusd::lexicon {

using WordSet = std::unordered_set<std::string_view>;

const WordSet& articles();
const WordSet& prepositions();
const WordSet& pronouns();
const WordSet& function_words();  // conjunctions, determiners, numerals, auxiliaries
const WordSet& nouns();
const WordSet& verbs();       // base forms
const WordSet& adjectives();  // base forms
const WordSet& adverbs();
const std::unordered_map<std::string_view, std::string_view>& irregular_plurals();
const std::unordered_map<std::string_view, std::string_view>& irregular_verb_forms();

}  // namespace lusd::lexicon
