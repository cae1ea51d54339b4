#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "borderflux/time.hpp"
#include "borderflux/types.hpp"

namespace bflux::sentiment {

// Dual-polarity lexicon: term strengths in +-2..+-5, booster modifiers
// +-1, and negating tokens. A token may appear in only one table.
struct Lexicon {
  std::unordered_map<std::string, int, StringHash, std::equal_to<>> terms;
  std::unordered_map<std::string, int, StringHash, std::equal_to<>> boosters;
  std::unordered_set<std::string, StringHash, std::equal_to<>> negators;
};

// CSV: token,kind{term|booster|negator},value.
Lexicon parse_lexicon_csv(std::string_view text);

// Tokenizer shared by scoring and the extreme-word statistics: UTF-8
// input, word characters are ASCII alphanumerics plus any non-ASCII
// codepoint, ASCII letters lower-cased, a leading '#' stripped.
std::vector<std::string> tokenize(std::string_view text);

struct Score {
  int pos = 1;        // [1, 5]
  int neg = -1;       // [-5, -1]
  int composite = 0;  // pos + neg, [-4, 4]

  friend bool operator==(const Score&, const Score&) = default;
};

// pos is the strongest positive term, neg the strongest negative, both
// after the one-token modifier window: an immediately preceding booster
// shifts the term's magnitude, an immediately preceding negator flips its
// sign. Unscorable text is neutral (1, -1, 0).
Score score_text(std::string_view text, const Lexicon& lexicon);

// Parallel scoring kernel; scores[i] belongs to texts[i].
std::vector<Score> score_texts(std::span<const std::string> texts, const Lexicon& lexicon);

struct ScoredItem {
  std::string lang;
  std::int64_t ts = 0;
  int composite = 0;
};

struct BucketStats {
  std::uint64_t n = 0;
  std::int64_t sum = 0;
  std::int64_t sum_sq = 0;

  double mean() const { return static_cast<double>(sum) / static_cast<double>(n); }
  // Population variance; exact integer arithmetic until the final divide.
  double variance() const {
    const auto nn = static_cast<double>(n);
    return (static_cast<double>(n * sum_sq) - static_cast<double>(sum) * static_cast<double>(sum)) /
           (nn * nn);
  }
};

enum class Granularity { Daily, Weekly };

// Buckets with n = 0 are absent. Daily keys format as dates, weekly keys
// as ISO weeks.
std::map<std::pair<std::string, std::string>, BucketStats> aggregate_scores(
    std::span<const ScoredItem> items, Granularity granularity, UtcOffset tz);

struct ExtremeStats {
  std::uint64_t total_tokens = 0;
  std::uint64_t extreme_tokens = 0;  // |strength| == 5
  double fraction() const {
    return total_tokens == 0 ? 0.0
                             : static_cast<double>(extreme_tokens) /
                                   static_cast<double>(total_tokens);
  }
};

std::map<std::string, ExtremeStats> extreme_word_stats(
    std::span<const std::pair<std::string, std::string>> lang_texts,
    const std::map<std::string, Lexicon>& lexicons);

}  // namespace bflux::sentiment
