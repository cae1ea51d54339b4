#include <doctest.h>

#include <algorithm>
#include <iterator>
#include <map>

#include "borderflux/error.hpp"
#include "borderflux/reference.hpp"
#include "borderflux/rng.hpp"
#include "borderflux/sentiment.hpp"

using namespace bflux;
using namespace bflux::sentiment;

namespace {

Lexicon fixture_lexicon() {
  return parse_lexicon_csv(
      "token,kind,value\n"
      "love,term,3\n"
      "hate,term,-4\n"
      "great,term,5\n"
      "awful,term,-5\n"
      "good,term,2\n"
      "very,booster,1\n"
      "slightly,booster,-1\n"
      "not,negator,\n");
}

}  // namespace

TEST_CASE("tokenizer lowercases, splits on non-word bytes, strips hashtags") {
  auto tokens = tokenize("Love, #Refugees2020! çok-iyi");
  REQUIRE(tokens.size() == 4);
  CHECK(tokens[0] == "love");
  CHECK(tokens[1] == "refugees2020");
  CHECK(tokens[2] == "çok");
  CHECK(tokens[3] == "iyi");
  CHECK(tokenize("").empty());
}

TEST_CASE("lexicon validation") {
  CHECK_THROWS_AS(parse_lexicon_csv("token,kind,value\nx,term,1\n"), DataError);   // |s| < 2
  CHECK_THROWS_AS(parse_lexicon_csv("token,kind,value\nx,term,6\n"), DataError);   // |s| > 5
  CHECK_THROWS_AS(parse_lexicon_csv("token,kind,value\nx,booster,2\n"), DataError);
  CHECK_THROWS_AS(parse_lexicon_csv("token,kind,value\nx,term,3\nx,negator,\n"), DataError);
  CHECK_THROWS_AS(parse_lexicon_csv("token,kind,value\nx,verb,3\n"), DataError);
}

TEST_CASE("scoring matches the hand-evaluated fixtures") {
  auto lex = fixture_lexicon();
  CHECK(score_text("love", lex) == Score{3, -1, 2});
  CHECK(score_text("", lex) == Score{1, -1, 0});
  CHECK(score_text("very hate", lex) == Score{1, -5, -4});
  CHECK(score_text("not hate", lex) == Score{4, -1, 3});
}

TEST_CASE("scoring details") {
  auto lex = fixture_lexicon();
  SUBCASE("booster cannot push strength past the caps") {
    CHECK(score_text("very great", lex).pos == 5);
    CHECK(score_text("very awful", lex).neg == -5);
  }
  SUBCASE("de-booster lowers magnitude, floored at 1") {
    CHECK(score_text("slightly good", lex).pos == 1);
    CHECK(score_text("slightly hate", lex).neg == -3);
  }
  SUBCASE("negation flips the sign") {
    CHECK(score_text("not love", lex) == Score{1, -3, -2});
  }
  SUBCASE("only the immediately preceding token modifies") {
    // "very" binds to "hate"; the earlier "not" modifies nothing.
    CHECK(score_text("not very hate", lex).neg == -5);
  }
  SUBCASE("strongest term wins per polarity") {
    CHECK(score_text("love great hate awful", lex) == Score{5, -5, 0});
  }
  SUBCASE("bounds hold on random token soup") {
    Rng rng(17);
    const char* words[] = {"love", "hate", "great",    "awful", "good",
                           "very", "not",  "slightly", "and",   "the"};
    for (int trial = 0; trial < 2000; ++trial) {
      std::string text;
      int n = static_cast<int>(rng.below(12));
      for (int i = 0; i < n; ++i) {
        text += words[rng.below(std::size(words))];
        text += ' ';
      }
      Score s = score_text(text, lex);
      CHECK(s.pos >= 1);
      CHECK(s.pos <= 5);
      CHECK(s.neg >= -5);
      CHECK(s.neg <= -1);
      CHECK(s.composite == s.pos + s.neg);
      CHECK(s.composite >= -4);
      CHECK(s.composite <= 4);
    }
  }
  SUBCASE("parallel kernel equals the serial loop") {
    Rng rng(23);
    std::vector<std::string> texts;
    const char* words[] = {"love", "hate", "very", "not", "x"};
    for (int i = 0; i < 3000; ++i) {
      std::string text;
      for (int w = 0; w < 6; ++w) {
        text += words[rng.below(std::size(words))];
        text += ' ';
      }
      texts.push_back(text);
    }
    CHECK(score_texts(texts, lex) == ref::score_texts(texts, lex));
  }
}

TEST_CASE("weekly aggregation with population variance") {
  UtcOffset tz{0};
  std::int64_t monday = make_date(2020, 2, 24).days * 86400LL + 12 * 3600;

  SUBCASE("single tweet") {
    std::vector<ScoredItem> items{{"tr", monday, 2}};
    auto buckets = aggregate_scores(items, Granularity::Weekly, tz);
    REQUIRE(buckets.size() == 1);
    const auto& b = buckets.at({"tr", "2020-W09"});
    CHECK(b.n == 1);
    CHECK(b.mean() == doctest::Approx(2.0));
    CHECK(b.variance() == doctest::Approx(0.0));
  }
  SUBCASE("mean 0, variance 4 for +2/-2") {
    std::vector<ScoredItem> items{{"tr", monday, 2}, {"tr", monday + 60, -2}};
    auto buckets = aggregate_scores(items, Granularity::Weekly, tz);
    const auto& b = buckets.at({"tr", "2020-W09"});
    CHECK(b.n == 2);
    CHECK(b.mean() == doctest::Approx(0.0));
    CHECK(b.variance() == doctest::Approx(4.0));
  }
  SUBCASE("languages aggregate independently") {
    std::vector<ScoredItem> items{{"tr", monday, 2}, {"en", monday, -4}};
    auto buckets = aggregate_scores(items, Granularity::Weekly, tz);
    CHECK(buckets.at({"tr", "2020-W09"}).mean() == doctest::Approx(2.0));
    CHECK(buckets.at({"en", "2020-W09"}).mean() == doctest::Approx(-4.0));
  }
  SUBCASE("daily granularity keys by local date") {
    std::vector<ScoredItem> items{{"tr", monday, 1}, {"tr", monday + 86400, 3}};
    auto buckets = aggregate_scores(items, Granularity::Daily, tz);
    CHECK(buckets.size() == 2);
    CHECK(buckets.count({"tr", "2020-02-24"}) == 1);
    CHECK(buckets.count({"tr", "2020-02-25"}) == 1);
  }
  SUBCASE("mean stays within member bounds, variance non-negative") {
    Rng rng(31);
    std::vector<ScoredItem> items;
    for (int i = 0; i < 500; ++i) {
      items.push_back({"tr", monday + static_cast<std::int64_t>(rng.below(86400L * 40)),
                       static_cast<int>(rng.below(9)) - 4});
    }
    for (const auto& [key, b] : aggregate_scores(items, Granularity::Weekly, tz)) {
      CHECK(b.mean() >= -4.0);
      CHECK(b.mean() <= 4.0);
      CHECK(b.variance() >= 0.0);
    }
  }
}

TEST_CASE("extreme word statistics") {
  auto lex = fixture_lexicon();
  std::map<std::string, Lexicon> lexicons;
  lexicons["en"] = lex;

  SUBCASE("one strength-5 token in ten") {
    std::vector<std::pair<std::string, std::string>> corpus{
        {"en", "a b c d e f g h i great"}};
    auto stats = extreme_word_stats(corpus, lexicons);
    CHECK(stats.at("en").total_tokens == 10);
    CHECK(stats.at("en").extreme_tokens == 1);
    CHECK(stats.at("en").fraction() == doctest::Approx(0.1));
  }
  SUBCASE("no extreme terms") {
    std::vector<std::pair<std::string, std::string>> corpus{{"en", "love hate good"}};
    auto stats = extreme_word_stats(corpus, lexicons);
    CHECK(stats.at("en").extreme_tokens == 0);
    CHECK(stats.at("en").fraction() == doctest::Approx(0.0));
  }
  SUBCASE("fraction is order-invariant (bag of words)") {
    std::vector<std::pair<std::string, std::string>> a{{"en", "great x y"}, {"en", "z awful w"}};
    std::vector<std::pair<std::string, std::string>> b{{"en", "z awful w"}, {"en", "great x y"}};
    auto sa = extreme_word_stats(a, lexicons);
    auto sb = extreme_word_stats(b, lexicons);
    CHECK(sa.at("en").total_tokens == sb.at("en").total_tokens);
    CHECK(sa.at("en").extreme_tokens == sb.at("en").extreme_tokens);
  }
  SUBCASE("concatenated corpus equals per-tweet accumulation") {
    std::vector<std::pair<std::string, std::string>> split{{"en", "great day"}, {"en", "awful x"}};
    std::vector<std::pair<std::string, std::string>> joined{{"en", "great day awful x"}};
    CHECK(extreme_word_stats(split, lexicons).at("en").extreme_tokens ==
          extreme_word_stats(joined, lexicons).at("en").extreme_tokens);
  }
}
