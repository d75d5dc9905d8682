#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rnngraph/netdef.hpp"

namespace rnngraph {

using TokenId = std::size_t;
using Sequence = std::vector<TokenId>;

inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kEosToken = "<eos>";

/// Bijection token <-> id. Corpus tokens come first by descending
/// frequency (ties by first appearance), followed by <unk> and <eos>.
class Vocab {
 public:
  std::size_t size() const { return tokens_.size(); }
  TokenId id(std::string_view token) const;  // <unk> for unknown tokens
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  TokenId unk() const { return unk_; }
  TokenId eos() const { return eos_; }
  bool contains(std::string_view token) const;

  Sequence encode(std::span<const std::string> tokens) const;

 private:
  friend Vocab build_vocab(std::span<const std::string> corpus, std::size_t max_size);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId unk_ = 0;
  TokenId eos_ = 0;
};

/// Keeps the `max_size` most frequent tokens plus <unk> and <eos>.
Vocab build_vocab(std::span<const std::string> corpus, std::size_t max_size);

enum class TokenMode { kWord, kChar };

/// One sequence per non-empty line; whitespace tokens or UTF-8 characters.
std::vector<std::vector<std::string>> read_corpus(std::istream& in, TokenMode mode);

/// A continuous tape for one stream: <eos> s_a <eos> s_b <eos> ... Position
/// p pairs input tape[p] with target tape[p + 1]; positions run over
/// [0, tape.size() - 1) and wrap with a reshuffle of the tape's sequences.
struct StreamTape {
  std::vector<Sequence> sequences;
  std::vector<TokenId> tape;
  std::size_t cursor = 0;
  std::size_t epoch = 0;
  TokenId eos = 0;
  std::mt19937_64 rng;
  /// Set when the next position starts a fresh pass over the tape.
  bool fresh = true;

  std::size_t positions() const { return tape.empty() ? 0 : tape.size() - 1; }
};

/// Shuffles sequences with `seed` and deals them round-robin to N tapes.
/// With fewer sequences than streams, sequences are reused so that every
/// tape is non-empty.
std::vector<StreamTape> make_streams(std::span<const Sequence> sequences, std::size_t streams,
                                     std::uint64_t seed, TokenId eos);

struct TokenBatch {
  std::size_t frames = 0;
  std::size_t streams = 0;
  /// frames * streams ids, column (t, n) at t * streams + n.
  std::vector<TokenId> inputs;
  std::vector<TokenId> targets;
  /// Nonzero where a stream's context restarts (tape wrap, and <eos> inputs
  /// when resetting on sequence boundaries).
  std::vector<std::uint8_t> resets;
};

TokenBatch next_batch(std::span<StreamTape> tapes, std::size_t frames,
                      bool reset_on_sequence_boundary = false);

/// Random token sequences for throughput measurements.
std::vector<Sequence> synthetic_sequences(std::size_t count, std::size_t min_len,
                                          std::size_t max_len, std::size_t vocab,
                                          std::uint64_t seed);

}  // namespace rnngraph
