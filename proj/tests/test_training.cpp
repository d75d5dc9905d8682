#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rnngraph/bench.hpp"
#include "rnngraph/builders.hpp"
#include "rnngraph/checkpoint.hpp"
#include "rnngraph/trainer.hpp"

using namespace rnngraph;

namespace {

std::vector<Sequence> char_corpus(Vocab& vocab) {
  std::ifstream in(RNNGRAPH_TEST_DATA "/tiny_corpus.txt");
  const auto lines = read_corpus(in, TokenMode::kChar);
  std::vector<std::string> flat;
  for (const auto& l : lines) flat.insert(flat.end(), l.begin(), l.end());
  vocab = build_vocab(flat, 100);
  std::vector<Sequence> seqs;
  for (const auto& l : lines) seqs.push_back(vocab.encode(l));
  return seqs;
}

}  // namespace

TEST(Checkpoint, RoundTripAndHeader) {
  const auto net = build_lstm({3, 4, 3});
  const Params p = init_params(net, 8);
  std::stringstream buf;
  save_checkpoint(buf, net, p);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 8), "RNNGCKPT");
  EXPECT_EQ(load_checkpoint(buf, net), p);
}

TEST(Checkpoint, RejectsOtherNetworks) {
  const auto net = build_elman({2, 3, 2});
  std::stringstream buf;
  save_checkpoint(buf, net, init_params(net, 1));
  EXPECT_THROW(load_checkpoint(buf, build_elman({2, 4, 2})), Error);
  std::stringstream junk("not a checkpoint at all");
  EXPECT_THROW(load_checkpoint(junk, net), Error);
  std::stringstream truncated(std::string(buf.str(), 0, 30));
  EXPECT_THROW(load_checkpoint(truncated, net), Error);
  EXPECT_NE(network_hash(net), network_hash(build_lstm({})));
}

TEST(Checkpoint, FileRoundTrip) {
  const auto net = build_elman({2, 3, 2});
  const Params p = init_params(net, 2);
  const auto path = std::filesystem::temp_directory_path() / "rnngraph_test.ckpt";
  save_checkpoint(path, net, p);
  EXPECT_EQ(load_checkpoint(path, net), p);
  std::filesystem::remove(path);
}

TEST(Trainer, LossDecreasesOnCharCorpus) {
  Vocab vocab;
  const auto seqs = char_corpus(vocab);
  ElmanSpec s{vocab.size(), 16, vocab.size()};
  const auto net = build_elman(s);
  Engine engine(net);
  Params p = init_params(net, 3);
  TrainConfig tc;
  tc.streams = 4;
  tc.h_prime = 8;
  tc.h = 16;
  tc.lr = 0.02;
  tc.iterations = 200;
  const auto metrics = train_loop(engine, p, make_streams(seqs, 4, 3, vocab.eos()), tc);
  ASSERT_EQ(metrics.size(), 200u);
  double tail = 0.0;
  for (std::size_t i = 190; i < 200; ++i) tail += metrics[i].mean_loss / 10.0;
  EXPECT_LT(tail, 0.8 * metrics[0].mean_loss);
}

TEST(Trainer, RejectsBadConfigurations) {
  const auto net = build_elman({5, 3, 5});
  Engine engine(net);
  Params p = init_params(net, 1);
  const auto seqs = synthetic_sequences(4, 2, 5, 4, 1);
  TrainConfig tc;
  tc.streams = 2;
  EXPECT_THROW(TrainSession(engine, p, make_streams(seqs, 1, 1, 4), tc), Error);
  tc.h = 1;
  tc.h_prime = 2;
  EXPECT_THROW(TrainSession(engine, p, make_streams(seqs, 2, 1, 4), tc), Error);

  ElmanSpec mse{5, 3, 5};
  mse.output_activation = Activation::kIdentity;
  Engine mse_engine(build_elman(mse));
  Params q = init_params(mse_engine.network(), 1);
  EXPECT_THROW(TrainSession(mse_engine, q, make_streams(seqs, 1, 1, 4), TrainConfig{}), Error);
}

TEST(Trainer, DeterministicAcrossThreadCounts) {
  const auto net = build_lstm({12, 6, 12});
  const auto seqs = synthetic_sequences(10, 3, 9, 11, 4);
  TrainConfig tc;
  tc.streams = 3;
  tc.h_prime = 4;
  tc.h = 8;
  tc.iterations = 10;
  std::vector<std::string> blobs;
  for (std::size_t threads : {1, 4}) {
    Engine engine(net, {threads});
    Params p = init_params(net, 6);
    train_loop(engine, p, make_streams(seqs, 3, 6, 11), tc);
    std::stringstream buf;
    save_checkpoint(buf, net, p);
    blobs.push_back(buf.str());
  }
  EXPECT_EQ(blobs[0], blobs[1]);
}

TEST(Bench, RecordsAndCsv) {
  BenchConfig c;
  c.streams = {1, 2, 4};
  c.minibatch = 8;
  c.duration_seconds = 0.0;
  c.min_iterations = 2;
  const auto net = build_elman({30, 8, 30});
  const auto records = run_bench(net, c);
  ASSERT_EQ(records.size(), 3u);
  for (const auto& r : records) {
    EXPECT_EQ(r.minibatch, 8u);
    EXPECT_EQ(r.h_prime * r.n_streams, 8u);
    EXPECT_EQ(r.h, 2 * r.h_prime);
    EXPECT_EQ(r.frames, 2 * r.h_prime);
    EXPECT_EQ(r.flops, count_flops(net, r.frames * r.n_streams));
    EXPECT_GT(r.words_per_sec, 0.0);
  }
  EXPECT_EQ(bench_csv_header(), "n_streams,h,h_prime,minibatch,seconds,frames,words_per_sec,flops,gflops");
  EXPECT_EQ(to_csv_row(records[1]).rfind("2,8,4,8,", 0), 0u);
  c.streams = {3};
  EXPECT_THROW(run_bench(net, c), Error);
}
