#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ter {

// Shared tokenizer for corpus text, queries, lemmas and entity names:
// case-folded, split on any non-alphanumeric byte, digits kept.
// No stemming.
std::vector<std::string> tokenize(std::string_view text);

std::string lowercase(std::string_view text);

std::string join(const std::vector<std::string>& tokens, char sep = ' ');

}  // namespace ter
