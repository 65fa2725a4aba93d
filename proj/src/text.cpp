// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#include "ssra/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <set>

#include "ssra/error.hpp"

namespace ssra::text {

namespace {

std::string nfc(std::string_view utf8) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || norm == nullptr) {
        throw Error(ErrorKind::stage, "ICU NFC normalizer unavailable");
    }
    icu::UnicodeString in = icu::UnicodeString::fromUTF8(
        icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
    icu::UnicodeString out = norm->normalize(in, status);
    if (U_FAILURE(status)) {
        throw Error(ErrorKind::parse, "NFC normalization failed");
    }
    std::string result;
    out.toUTF8String(result);
    return result;
}

} // namespace

bool is_space_codepoint(char32_t cp) {
    // Unicode White_Space set.
    switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x20: case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
        return true;
    default:
        return cp >= 0x2000 && cp <= 0x200A;
    }
}

std::vector<char32_t> decode_utf8(std::string_view utf8) {
    std::vector<char32_t> cps;
    cps.reserve(utf8.size());
    std::size_t i = 0;
    const auto n = utf8.size();
    while (i < n) {
        const auto b0 = static_cast<unsigned char>(utf8[i]);
        char32_t cp = 0xFFFD;
        std::size_t len = 1;
        if (b0 < 0x80) {
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
        } else {
            cps.push_back(0xFFFD);
            ++i;
            continue;
        }
        if (i + len > n) {
            cps.push_back(0xFFFD);
            break;
        }
        bool ok = true;
        for (std::size_t k = 1; k < len; ++k) {
            const auto b = static_cast<unsigned char>(utf8[i + k]);
            if ((b & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (b & 0x3F);
        }
        if (!ok || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            cps.push_back(0xFFFD);
            ++i;
            continue;
        }
        // Reject overlong encodings.
        static constexpr char32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
        if (cp < kMin[len]) {
            cps.push_back(0xFFFD);
            ++i;
            continue;
        }
        cps.push_back(cp);
        i += len;
    }
    return cps;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string normalize(std::string_view utf8) {
    const std::string composed = nfc(utf8);
    const std::vector<char32_t> cps = decode_utf8(composed);

    std::string out;
    out.reserve(composed.size());
    bool pending_space = false;
    bool emitted = false;
    for (char32_t cp : cps) {
        if (is_space_codepoint(cp)) {
            pending_space = emitted; // leading whitespace is dropped
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        if (cp >= 'A' && cp <= 'Z') {
            cp = cp - 'A' + 'a';
        }
        append_utf8(out, cp);
        emitted = true;
    }
    return out;
}

std::size_t length_chars(std::string_view utf8) {
    return decode_utf8(utf8).size();
}

std::size_t length_ws_tokens(std::string_view utf8) {
    const std::vector<char32_t> cps = decode_utf8(utf8);
    std::size_t count = 0;
    bool in_token = false;
    for (char32_t cp : cps) {
        if (is_space_codepoint(cp)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

std::vector<std::string> overlap_tokens(std::string_view utf8) {
    const std::string norm = normalize(utf8);
    const std::vector<char32_t> cps = decode_utf8(norm);
    std::vector<std::string> tokens;
    std::string ascii_run;
    auto flush = [&] {
        if (!ascii_run.empty()) {
            tokens.push_back(ascii_run);
            ascii_run.clear();
        }
    };
    for (char32_t cp : cps) {
        const bool ascii_alnum =
            (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z');
        if (ascii_alnum) {
            ascii_run.push_back(static_cast<char>(cp));
            continue;
        }
        flush();
        if (is_space_codepoint(cp)) {
            continue;
        }
        std::string tok;
        append_utf8(tok, cp);
        tokens.push_back(std::move(tok));
    }
    flush();
    return tokens;
}

double jaccard(std::string_view a, std::string_view b) {
    const auto ta = overlap_tokens(a);
    const auto tb = overlap_tokens(b);
    const std::set<std::string> sa(ta.begin(), ta.end());
    const std::set<std::string> sb(tb.begin(), tb.end());
    if (sa.empty() && sb.empty()) {
        return 0.0;
    }
    std::size_t inter = 0;
    for (const auto& t : sa) {
        inter += sb.count(t);
    }
    const std::size_t uni = sa.size() + sb.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace ssra::text
