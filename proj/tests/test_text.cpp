#include <gtest/gtest.h>

#include "taskforge/digest.hpp"
#include "taskforge/text.hpp"

namespace taskforge {
namespace {

TEST(Text, CollapsesAsciiAndUnicodeWhitespace) {
  EXPECT_EQ(text::collapse_whitespace("  Enough with that.  "), "Enough with that.");
  EXPECT_EQ(text::collapse_whitespace("a\t\t b\r\nc"), "a b c");
  EXPECT_EQ(text::collapse_whitespace("a\xC2\xA0\xE3\x80\x80" "b"), "a b");  // NBSP + ideographic space
  EXPECT_EQ(text::collapse_whitespace(" \t "), "");
}

TEST(Text, Utf8Validation) {
  EXPECT_FALSE(text::find_invalid_utf8("plain ascii"));
  EXPECT_FALSE(text::find_invalid_utf8("caf\xC3\xA9 \xE2\x80\x9Cq\xE2\x80\x9D \xF0\x9F\x98\x80"));
  EXPECT_EQ(text::find_invalid_utf8("ab\xFF"), 2u);
  EXPECT_EQ(text::find_invalid_utf8("\xC0\xAF"), 0u);          // overlong
  EXPECT_EQ(text::find_invalid_utf8("x\xED\xA0\x80"), 1u);     // surrogate
  EXPECT_EQ(text::find_invalid_utf8("\xE2\x82"), 0u);          // truncated
}

TEST(Text, WordsSplitOnUnicodeWhitespace) {
  EXPECT_EQ(text::count_words("one two three\n four"), 4u);
  EXPECT_EQ(text::count_words(""), 0u);
  EXPECT_EQ(text::count_words("   "), 0u);
}

TEST(Text, SplitLinesDropsCarriageReturns) {
  const auto lines = text::split_lines("a\r\nb\n\nc\n");
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "a");
  EXPECT_EQ(lines[2], "");
  EXPECT_EQ(lines[3], "c");
}

TEST(Digest, KnownSha256Vectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_u64("abc"), 0xba7816bf8f01cfeaULL);
}

}  // namespace
}  // namespace taskforge
