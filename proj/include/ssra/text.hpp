// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ssra::text {

// Canonical query/text equality used everywhere a "same query" decision is
// made (dedup, duplicate rate, merge keys): Unicode NFC, surrounding
// whitespace trimmed, internal whitespace runs collapsed to a single U+0020,
// ASCII letters lower-cased. No case folding beyond ASCII.
std::string normalize(std::string_view utf8);

// Unicode scalar-value count. The corpus is Chinese, so lengths are counted
// in characters by default; a whitespace-token mode exists for comparison.
std::size_t length_chars(std::string_view utf8);
std::size_t length_ws_tokens(std::string_view utf8);

// Overlap tokens for the heuristic mock scorer: runs of ASCII alphanumerics
// form one token, every other non-space codepoint is its own token. Input is
// normalized first.
std::vector<std::string> overlap_tokens(std::string_view utf8);

// Jaccard similarity of the two texts' overlap-token sets. Empty/empty -> 0.
double jaccard(std::string_view a, std::string_view b);

bool is_space_codepoint(char32_t cp);

// Decodes UTF-8 into codepoints; invalid bytes decode as U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view utf8);
void append_utf8(std::string& out, char32_t cp);

} // namespace ssra::text
