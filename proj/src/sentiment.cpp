#include "borderflux/sentiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "borderflux/csv.hpp"
#include "borderflux/error.hpp"

namespace bflux::sentiment {

Lexicon parse_lexicon_csv(std::string_view text) {
  Lexicon lex;
  bool first = true;
  csv::for_each_line(text, [&](std::size_t idx, std::string_view line) {
    if (line.empty()) return;
    auto fields = csv::split_line(line);
    if (first) {
      if (fields.size() < 2 || fields[0] != "token") {
        throw DataError("lexicon header must be token,kind,value");
      }
      first = false;
      return;
    }
    if (fields.size() < 2) {
      throw DataError("lexicon: bad row at line " + std::to_string(idx + 1));
    }
    std::string token = fields[0];
    std::transform(token.begin(), token.end(), token.begin(), [](unsigned char c) {
      return c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
    });
    const std::string& kind = fields[1];
    auto taken = [&](const std::string& t) {
      return lex.terms.count(t) || lex.boosters.count(t) || lex.negators.count(t);
    };
    if (taken(token)) {
      throw DataError("lexicon: token '" + token + "' appears in more than one entry");
    }
    int value = 0;
    if (kind != "negator") {
      if (fields.size() < 3 ||
          std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), value).ec !=
              std::errc{}) {
        throw DataError("lexicon: bad value at line " + std::to_string(idx + 1));
      }
    }
    if (kind == "term") {
      int mag = value < 0 ? -value : value;
      if (mag < 2 || mag > 5) {
        throw DataError("lexicon: term strength must be +-2..+-5 at line " +
                        std::to_string(idx + 1));
      }
      lex.terms.emplace(token, value);
    } else if (kind == "booster") {
      if (value != 1 && value != -1) {
        throw DataError("lexicon: booster modifier must be +-1 at line " +
                        std::to_string(idx + 1));
      }
      lex.boosters.emplace(token, value);
    } else if (kind == "negator") {
      lex.negators.insert(token);
    } else {
      throw DataError("lexicon: unknown kind '" + kind + "' at line " + std::to_string(idx + 1));
    }
  });
  return lex;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) tokens.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    bool word_char = (c < 0x80) ? (std::isalnum(c) != 0) : true;
    if (word_char) {
      cur += (c < 0x80) ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
    } else if (c == '#' && cur.empty()) {
      // Hashtag marker before a token: dropped, not a boundary.
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

Score score_text(std::string_view text, const Lexicon& lexicon) {
  auto tokens = tokenize(text);
  Score score;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto it = lexicon.terms.find(tokens[i]);
    if (it == lexicon.terms.end()) continue;
    int strength = it->second;
    if (i > 0) {
      auto booster = lexicon.boosters.find(tokens[i - 1]);
      if (booster != lexicon.boosters.end()) {
        // Shift magnitude, clamped to [1, 5].
        int mag = strength < 0 ? -strength : strength;
        mag = std::clamp(mag + booster->second, 1, 5);
        strength = strength < 0 ? -mag : mag;
      } else if (lexicon.negators.count(tokens[i - 1])) {
        strength = -strength;
      }
    }
    if (strength > 0) {
      score.pos = std::max(score.pos, std::min(strength, 5));
    } else if (strength < 0) {
      score.neg = std::min(score.neg, std::max(strength, -5));
    }
  }
  score.composite = score.pos + score.neg;
  return score;
}

std::vector<Score> score_texts(std::span<const std::string> texts, const Lexicon& lexicon) {
  std::vector<Score> scores(texts.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::size_t i = 0; i < texts.size(); ++i) {
    scores[i] = score_text(texts[i], lexicon);
  }
  return scores;
}

std::map<std::pair<std::string, std::string>, BucketStats> aggregate_scores(
    std::span<const ScoredItem> items, Granularity granularity, UtcOffset tz) {
  std::map<std::pair<std::string, std::string>, BucketStats> out;
  for (const ScoredItem& item : items) {
    Date d = local_date_of(item.ts, tz);
    std::string key = granularity == Granularity::Daily ? format_date(d)
                                                        : format_iso_week(iso_week_of(d));
    BucketStats& b = out[{item.lang, key}];
    ++b.n;
    b.sum += item.composite;
    b.sum_sq += static_cast<std::int64_t>(item.composite) * item.composite;
  }
  return out;
}

std::map<std::string, ExtremeStats> extreme_word_stats(
    std::span<const std::pair<std::string, std::string>> lang_texts,
    const std::map<std::string, Lexicon>& lexicons) {
  std::map<std::string, ExtremeStats> out;
  for (const auto& [lang, text] : lang_texts) {
    auto lex_it = lexicons.find(lang);
    if (lex_it == lexicons.end()) continue;
    ExtremeStats& stats = out[lang];
    for (const std::string& token : tokenize(text)) {
      ++stats.total_tokens;
      auto it = lex_it->second.terms.find(token);
      if (it != lex_it->second.terms.end() && (it->second == 5 || it->second == -5)) {
        ++stats.extreme_tokens;
      }
    }
  }
  return out;
}

}  // namespace bflux::sentiment
