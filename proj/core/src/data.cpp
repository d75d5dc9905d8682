#include "rnngraph/data.hpp"

#include <algorithm>
#include <istream>
#include <sstream>

#include "rnngraph/netdef.hpp"

namespace rnngraph {

TokenId Vocab::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? unk_ : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

Sequence Vocab::encode(std::span<const std::string> tokens) const {
  Sequence out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

Vocab build_vocab(std::span<const std::string> corpus, std::size_t max_size) {
  if (corpus.empty()) throw Error("build_vocab: empty corpus");
  struct Entry {
    std::string token;
    std::size_t count;
    std::size_t first_seen;
  };
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& t = corpus[i];
    if (t == kUnkToken || t == kEosToken) continue;
    auto [it, inserted] = slot.try_emplace(t, entries.size());
    if (inserted) entries.push_back({t, 0, i});
    ++entries[it->second].count;
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.count != b.count ? a.count > b.count : a.first_seen < b.first_seen;
  });
  if (entries.size() > max_size) entries.resize(max_size);

  Vocab v;
  for (auto& e : entries) {
    v.index_.emplace(e.token, v.tokens_.size());
    v.tokens_.push_back(std::move(e.token));
  }
  v.unk_ = v.tokens_.size();
  v.tokens_.emplace_back(kUnkToken);
  v.index_.emplace(std::string(kUnkToken), v.unk_);
  v.eos_ = v.tokens_.size();
  v.tokens_.emplace_back(kEosToken);
  v.index_.emplace(std::string(kEosToken), v.eos_);
  return v;
}

std::vector<std::vector<std::string>> read_corpus(std::istream& in, TokenMode mode) {
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> tokens;
    if (mode == TokenMode::kWord) {
      std::istringstream words(line);
      for (std::string w; words >> w;) tokens.push_back(std::move(w));
    } else {
      for (std::size_t i = 0; i < line.size();) {
        std::size_t len = 1;
        const auto lead = static_cast<unsigned char>(line[i]);
        if (lead >= 0xF0) len = 4;
        else if (lead >= 0xE0) len = 3;
        else if (lead >= 0xC0) len = 2;
        tokens.push_back(line.substr(i, len));
        i += len;
      }
    }
    if (!tokens.empty()) out.push_back(std::move(tokens));
  }
  return out;
}

namespace {

void rebuild_tape(StreamTape& tape) {
  tape.tape.clear();
  tape.tape.push_back(tape.eos);
  for (const auto& s : tape.sequences) {
    tape.tape.insert(tape.tape.end(), s.begin(), s.end());
    tape.tape.push_back(tape.eos);
  }
  tape.cursor = 0;
  tape.fresh = true;
}

}  // namespace

std::vector<StreamTape> make_streams(std::span<const Sequence> sequences, std::size_t streams,
                                     std::uint64_t seed, TokenId eos) {
  if (streams < 1) throw Error("make_streams: need at least one stream");
  if (sequences.empty()) throw Error("make_streams: no sequences");
  std::vector<std::size_t> order(sequences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<StreamTape> tapes(streams);
  const std::size_t deal = std::max(order.size(), streams);
  for (std::size_t i = 0; i < deal; ++i)
    tapes[i % streams].sequences.push_back(sequences[order[i % order.size()]]);
  for (std::size_t n = 0; n < streams; ++n) {
    tapes[n].eos = eos;
    tapes[n].rng.seed(seed ^ (0x9e3779b97f4a7c15ULL * (n + 1)));
    rebuild_tape(tapes[n]);
  }
  return tapes;
}

TokenBatch next_batch(std::span<StreamTape> tapes, std::size_t frames,
                      bool reset_on_sequence_boundary) {
  const std::size_t n = tapes.size();
  TokenBatch batch;
  batch.frames = frames;
  batch.streams = n;
  batch.inputs.resize(frames * n);
  batch.targets.resize(frames * n);
  batch.resets.assign(frames * n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    auto& tape = tapes[s];
    if (tape.positions() == 0) throw Error("next_batch: empty tape");
    for (std::size_t f = 0; f < frames; ++f) {
      if (tape.cursor >= tape.positions()) {
        ++tape.epoch;
        std::shuffle(tape.sequences.begin(), tape.sequences.end(), tape.rng);
        rebuild_tape(tape);
      }
      const std::size_t col = f * n + s;
      batch.inputs[col] = tape.tape[tape.cursor];
      batch.targets[col] = tape.tape[tape.cursor + 1];
      const bool boundary = reset_on_sequence_boundary && batch.inputs[col] == tape.eos;
      // The very first pass starts from the zero context anyway.
      if ((tape.fresh && tape.epoch > 0) || (boundary && !tape.fresh)) batch.resets[col] = 1;
      tape.fresh = false;
      ++tape.cursor;
    }
  }
  return batch;
}

std::vector<Sequence> synthetic_sequences(std::size_t count, std::size_t min_len,
                                          std::size_t max_len, std::size_t vocab,
                                          std::uint64_t seed) {
  if (vocab < 1 || min_len < 1 || max_len < min_len) throw Error("synthetic_sequences: bad arguments");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> length(min_len, max_len);
  std::uniform_int_distribution<TokenId> token(0, vocab - 1);
  std::vector<Sequence> out(count);
  for (auto& s : out) {
    s.resize(length(rng));
    for (auto& t : s) t = token(rng);
  }
  return out;
}

}  // namespace rnngraph
