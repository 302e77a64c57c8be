#include <catch2/catch_amalgamated.hpp>

#include "emeval/label.hpp"

using namespace emeval;

TEST_CASE("normalize_label strips case and punctuation") {
  CHECK(normalize_label("  Happy! ") == "happy");
  CHECK(normalize_label("ANGRY") == "angry");
  CHECK(normalize_label("relieved,") == "relieved");
}

TEST_CASE("normalize_label collapses whitespace") {
  CHECK(normalize_label("caught  off guard") == "caught off guard");
  CHECK(normalize_label("\tcaught\noff\r guard ") == "caught off guard");
}

TEST_CASE("normalize_label keeps internal hyphens only") {
  CHECK(normalize_label("self-conscious") == "self-conscious");
  CHECK(normalize_label("-happy-") == "happy");
  CHECK(normalize_label("well--meaning") == "well-meaning");
  CHECK(normalize_label("co- dependent") == "co dependent");
}

TEST_CASE("normalize_label rejects degenerate input") {
  CHECK_THROWS_AS(normalize_label("!!!"), EmptyLabelError);
  CHECK_THROWS_AS(normalize_label(""), EmptyLabelError);
  CHECK_THROWS_AS(normalize_label("   "), EmptyLabelError);
  CHECK_THROWS_AS(normalize_label("123"), EmptyLabelError);
}

TEST_CASE("normalize_label passes non-ASCII bytes through") {
  CHECK(normalize_label("  生气 ") == "生气");
}

TEST_CASE("normalize_label is idempotent") {
  for (const char* s : {"happy", "caught off guard", "self-conscious", "  Mixed CASE!! "}) {
    auto once = normalize_label(s);
    CHECK(normalize_label(once) == once);
    CHECK(is_normalized(once));
  }
}
