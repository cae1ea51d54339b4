#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace bflux::csv {

// RFC-4180-style field split: commas, double-quote quoting, "" escapes.
std::vector<std::string> split_line(std::string_view line);

// Fast split for lines known to contain no quotes. Views point into `line`.
void split_line_fast(std::string_view line, std::vector<std::string_view>& out);

// Quote a field when it contains a comma, quote, or newline.
std::string escape(std::string_view field);

// Invokes fn(line_index, line) for each line of `text`. Handles trailing
// \r and a missing final newline. line_index starts at 0.
void for_each_line(std::string_view text, const std::function<void(std::size_t, std::string_view)>& fn);

// Strips one trailing '\r' (CRLF input).
std::string_view strip_cr(std::string_view line);

}  // namespace bflux::csv
