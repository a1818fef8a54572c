#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace adaptlm::corpus {

using Words = std::vector<std::string>;

// Word-level rules, applied per whitespace-separated chunk:
//  * leading characters from  " ' ( [ {  and trailing characters from
//    . , ! ? ; : " ' ) ] }  are split off, one token per character;
//  * what remains is kept whole (so "don't", "3.5", "well-known" survive);
//  * ASCII letters are lowercased, other bytes pass through untouched.
Words tokenize_words(std::string_view line);

// Word rules plus sentence splitting: a sentence ends after a chunk whose
// trailing punctuation contains . ! or ? when the next chunk starts with an
// uppercase letter, and at end of input. Empty input gives no sentences.
std::vector<Words> tokenize(std::string_view raw);

std::string join(const Words& words, char sep = ' ');

}  // namespace adaptlm::corpus
