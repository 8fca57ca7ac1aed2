#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace nwdlens {

char ascii_lower(char c);

// Word-boundary, ASCII-case-insensitive contiguous match: `phrase` occurs
// in `text` with no alphanumeric character immediately before or after.
bool phrase_matches(std::string_view text, std::string_view phrase);

// RFC 3986 percent-encoding; everything but unreserved characters.
std::string percent_encode(std::string_view s);

// CSV field per RFC 4180: quote when the field contains , " or a newline.
std::string csv_escape(std::string_view field);

// "%.{digits}g" rendering; negative zero normalized; non-finite -> "".
std::string format_sig(double value, int digits);

// Value rounded through its %.{digits}g rendering (for JSON emission).
double round_sig(double value, int digits);

// FNV-1a 64-bit as a 16-hex-digit string; content digest, not crypto.
std::string fnv1a64_hex(std::string_view data);

// Filesystem-safe label: ASCII lowercased, runs of other bytes -> '_'.
std::string slugify(std::string_view s);

}  // namespace nwdlens
