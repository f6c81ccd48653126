#include <gtest/gtest.h>

#include <array>
#include <sstream>

#include "taskforge/corpus.hpp"
#include "test_util.hpp"

namespace taskforge {
namespace {

using testing::TempDir;
using testing::write_file;

std::vector<std::string> texts(const SentenceStore& s) {
  std::vector<std::string> out;
  for (const auto& x : s.sentences()) out.push_back(x.text);
  return out;
}

SentenceStore store_of(std::initializer_list<const char*> items) {
  std::vector<Sentence> v;
  for (const char* t : items) v.push_back(Sentence{v.size(), t, "mem"});
  return SentenceStore(std::move(v), {SourceEntry{"mem", v.size(), 0}});
}

TEST(Ingest, DropsBlankLinesAndNormalizes) {
  TempDir dir;
  write_file(dir / "childes.txt", "This is Big Bird.\n\n  Enough with that.  \n");
  const std::array paths{dir / "childes.txt"};
  const auto store = ingest(paths);
  EXPECT_EQ(texts(store), (std::vector<std::string>{"This is Big Bird.", "Enough with that."}));
  EXPECT_EQ(store.at(0).source, "childes.txt");
  EXPECT_EQ(store.at(1).id, 1u);
  ASSERT_EQ(store.source_manifest().size(), 1u);
  EXPECT_EQ(store.source_manifest()[0].ingested, 2u);
  EXPECT_EQ(store.source_manifest()[0].dropped, 1u);
}

TEST(Ingest, EmptyFileYieldsEmptyStore) {
  TempDir dir;
  write_file(dir / "empty.txt", "");
  const std::array paths{dir / "empty.txt"};
  EXPECT_TRUE(ingest(paths).empty());
}

TEST(Ingest, FollowsInputOrder) {
  TempDir dir;
  write_file(dir / "a.txt", "alpha\n");
  write_file(dir / "b.txt", "beta\n");
  const std::array ab{dir / "a.txt", dir / "b.txt"};
  const std::array ba{dir / "b.txt", dir / "a.txt"};
  const auto s1 = texts(ingest(ab));
  const auto s2 = texts(ingest(ba));
  EXPECT_EQ(s1, (std::vector<std::string>{"alpha", "beta"}));
  EXPECT_EQ(s2, (std::vector<std::string>{"beta", "alpha"}));
}

TEST(Ingest, HandlesCrlfAndBom) {
  TempDir dir;
  write_file(dir / "win.txt", "\xEF\xBB\xBFHello there.\r\nSecond line.\r\n");
  const std::array paths{dir / "win.txt"};
  EXPECT_EQ(texts(ingest(paths)), (std::vector<std::string>{"Hello there.", "Second line."}));
}

TEST(Ingest, InvalidUtf8ReportsLine) {
  TempDir dir;
  write_file(dir / "bad.txt", "fine\nalso fine\nbroken \xFF byte\n");
  const std::array paths{dir / "bad.txt"};
  try {
    ingest(paths);
    FAIL() << "expected EncodingError";
  } catch (const EncodingError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.kind(), "EncodingError");
  }
}

TEST(Ingest, MissingFileIsUnreadable) {
  TempDir dir;
  const std::array paths{dir / "nope.txt"};
  EXPECT_THROW(ingest(paths), FileUnreadable);
  const std::array dirs{dir.path()};
  EXPECT_THROW(ingest(dirs), FileUnreadable);
}

TEST(Deduplicate, KeepsFirstOccurrence) {
  const auto out = deduplicate(store_of({"a", "a", "b"}));
  EXPECT_EQ(texts(out), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(out.at(1).id, 1u);
  EXPECT_EQ(out.source_manifest()[0].dropped, 1u);
}

TEST(Deduplicate, IsCaseSensitive) {
  EXPECT_EQ(texts(deduplicate(store_of({"a", "A"}))), (std::vector<std::string>{"a", "A"}));
}

TEST(Deduplicate, IdempotentAndUnique) {
  const auto s = store_of({"x", "y", "x", "z", "y", "x", "w"});
  const auto once = deduplicate(s);
  EXPECT_EQ(deduplicate(once), once);
  const auto t = texts(once);
  EXPECT_EQ(t, (std::vector<std::string>{"x", "y", "z", "w"}));
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(once.at(i).id, i);
}

TEST(Deduplicate, DuplicatesAfterWhitespaceNormalization) {
  TempDir dir;
  write_file(dir / "a.txt", "Hello   world\nHello world\n hello world\n");
  const std::array paths{dir / "a.txt"};
  EXPECT_EQ(texts(deduplicate(ingest(paths))), (std::vector<std::string>{"Hello world", "hello world"}));
}

TEST(StoreJsonl, DeterministicAndReadable) {
  TempDir dir;
  write_file(dir / "a.txt", "one\ntwo\none\nthree \"quoted\"\n");
  const std::array paths{dir / "a.txt"};
  const auto s1 = store_to_jsonl(deduplicate(ingest(paths)));
  const auto s2 = store_to_jsonl(deduplicate(ingest(paths)));
  EXPECT_EQ(s1, s2);
  EXPECT_EQ(s1.substr(0, s1.find('\n')), R"({"id":0,"source":"a.txt","text":"one"})");
  std::istringstream in(s1);
  const auto back = read_store_jsonl(in);
  EXPECT_EQ(texts(back), (std::vector<std::string>{"one", "two", "three \"quoted\""}));
}

TEST(Store, UnknownIdThrows) {
  const auto s = store_of({"a"});
  EXPECT_THROW(s.at(1), UnknownSentenceId);
}

}  // namespace
}  // namespace taskforge
