#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace semiauto::text {

// NFKC-normalizes UTF-8 text. Invalid UTF-8 is replaced by U+FFFD.
std::string normalize_nfkc(std::string_view utf8);

// Strips leading and trailing Unicode whitespace.
std::string trim(std::string_view utf8);

std::size_t count_scalar_values(std::string_view utf8);

// Length of an utterance as used for the short-turn rule: Unicode scalar
// values of the NFKC form with surrounding whitespace removed.
std::size_t normalized_length(std::string_view utf8);

bool is_blank(std::string_view utf8);

bool is_valid_utf8(std::string_view bytes);

}  // namespace semiauto::text
