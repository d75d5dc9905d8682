#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "rnngraph/data.hpp"

using namespace rnngraph;

namespace {

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::vector<Sequence> numbered(std::size_t count, std::size_t len) {
  std::vector<Sequence> seqs;
  for (std::size_t i = 0; i < count; ++i) seqs.push_back(Sequence(len, i));
  return seqs;
}

}  // namespace

TEST(Vocab, FrequencyOrder) {
  const auto v = build_vocab(words("a a b"), 10);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(v.token(0), "a");
  EXPECT_EQ(v.token(1), "b");
  EXPECT_EQ(v.token(v.unk()), "<unk>");
  EXPECT_EQ(v.token(v.eos()), "<eos>");
  EXPECT_EQ(v.id("zzz"), v.unk());
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v.id(v.token(i)), i);
}

TEST(Vocab, CapAndTies) {
  const auto v = build_vocab(words("c b b a a"), 1);
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v.token(0), "b");  // tie with a, b appears first
  EXPECT_FALSE(v.contains("a"));
  EXPECT_EQ(v.encode(words("a b")), (Sequence{v.unk(), 0}));
  EXPECT_THROW(build_vocab({}, 10), Error);
}

TEST(Vocab, LargeCap) {
  std::vector<std::string> corpus;
  for (int i = 0; i < 50000; ++i) corpus.push_back("w" + std::to_string(i % 40000));
  EXPECT_EQ(build_vocab(corpus, 38000).size(), 38002u);
}

TEST(Corpus, WordAndCharModes) {
  std::istringstream a("the cat\n\n  sat  down \n");
  const auto w = read_corpus(a, TokenMode::kWord);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[1], (std::vector<std::string>{"sat", "down"}));
  std::istringstream b("añb\n");
  const auto c = read_corpus(b, TokenMode::kChar);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0], (std::vector<std::string>{"a", "ñ", "b"}));
}

TEST(Streams, SingleTapeHoldsEverySequence) {
  const auto seqs = numbered(5, 3);
  const auto tapes = make_streams(seqs, 1, 9, 99);
  ASSERT_EQ(tapes.size(), 1u);
  const auto& tape = tapes[0].tape;
  EXPECT_EQ(tape.size(), 1 + 5 * 4u);
  EXPECT_EQ(tape.front(), 99u);
  std::map<std::size_t, int> counts;
  for (auto id : tape) ++counts[id];
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(counts[i], 3);
  EXPECT_EQ(counts[99], 6);
}

TEST(Streams, RoundRobinAndDeterminism) {
  const auto seqs = numbered(4, 5);
  const auto tapes = make_streams(seqs, 2, 3, 99);
  ASSERT_EQ(tapes.size(), 2u);
  for (const auto& t : tapes) EXPECT_EQ(t.sequences.size(), 2u);
  const auto again = make_streams(seqs, 2, 3, 99);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(tapes[i].tape, again[i].tape);
  const auto other = make_streams(numbered(40, 2), 1, 4, 99);
  EXPECT_NE(other[0].tape, make_streams(numbered(40, 2), 1, 5, 99)[0].tape);
  EXPECT_THROW(make_streams(seqs, 0, 1, 99), Error);
  EXPECT_EQ(make_streams(numbered(1, 2), 3, 1, 99).size(), 3u);
}

TEST(Batches, TargetsAreNextInputs) {
  auto tapes = make_streams(numbered(6, 4), 2, 1, 99);
  const auto first = tapes[0].tape;
  const auto b = next_batch(tapes, 1);
  EXPECT_EQ(b.frames, 1u);
  EXPECT_EQ(b.inputs.size(), 2u);
  EXPECT_EQ(b.inputs[0], first[0]);
  EXPECT_EQ(b.targets[0], first[1]);
  const auto c = next_batch(tapes, 3);
  for (std::size_t t = 0; t + 1 < 3; ++t)
    for (std::size_t n = 0; n < 2; ++n) EXPECT_EQ(c.targets[t * 2 + n], c.inputs[(t + 1) * 2 + n]);
}

TEST(Batches, OneEpochTilesTheTape) {
  auto tapes = make_streams(numbered(3, 4), 1, 2, 99);
  const auto tape = tapes[0].tape;
  const std::size_t positions = tapes[0].positions();
  ASSERT_EQ(positions % 5, 0u);
  std::vector<std::size_t> inputs, targets;
  for (std::size_t i = 0; i < positions / 5; ++i) {
    const auto b = next_batch(tapes, 5);
    inputs.insert(inputs.end(), b.inputs.begin(), b.inputs.end());
    targets.insert(targets.end(), b.targets.begin(), b.targets.end());
    for (auto r : b.resets) EXPECT_EQ(r, 0);
  }
  for (std::size_t p = 0; p < positions; ++p) {
    EXPECT_EQ(inputs[p], tape[p]);
    EXPECT_EQ(targets[p], tape[p + 1]);
  }
  EXPECT_EQ(tapes[0].epoch, 0u);
  const auto wrapped = next_batch(tapes, 1);
  EXPECT_EQ(tapes[0].epoch, 1u);
  EXPECT_EQ(wrapped.resets[0], 1);
  EXPECT_EQ(wrapped.inputs[0], 99u);
}

TEST(Batches, SequenceBoundaryResets) {
  auto tapes = make_streams(numbered(2, 2), 1, 1, 99);
  const auto b = next_batch(tapes, 6, true);
  for (std::size_t t = 0; t < 6; ++t)
    EXPECT_EQ(b.resets[t] != 0, b.inputs[t] == 99 && t > 0) << t;
}

TEST(Synthetic, RangeAndDeterminism) {
  const auto a = synthetic_sequences(20, 3, 7, 11, 5);
  EXPECT_EQ(a, synthetic_sequences(20, 3, 7, 11, 5));
  ASSERT_EQ(a.size(), 20u);
  for (const auto& s : a) {
    EXPECT_GE(s.size(), 3u);
    EXPECT_LE(s.size(), 7u);
    for (auto id : s) EXPECT_LT(id, 11u);
  }
}
