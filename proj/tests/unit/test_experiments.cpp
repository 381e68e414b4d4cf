// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <stdexcept>

#include "pald/error.hpp"
#include "pald/experiments/checkpoint.hpp"
#include "pald/experiments/config.hpp"
#include "pald/experiments/csv.hpp"
#include "pald/experiments/parallel.hpp"
#include "pald/experiments/recon_sweep.hpp"
#include "pald/experiments/surprisal.hpp"

namespace pald::exp {
namespace {

std::string error_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

// --- configuration -------------------------------------------------------------

TEST(Config, CanonicalTextRoundTrips) {
  ExperimentConfig c;
  c.seed = 42;
  c.run_id = "roundtrip";
  c.ic.t_grid = {0.0, 0.25, 0.5};
  c.sweep.modes = {ae::NtMode::kNone};
  const auto text = to_text(c);
  const auto back = parse_config(text);
  EXPECT_EQ(to_text(back), text);
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, CommentsAndBlankLinesAreIgnored) {
  const auto c = parse_config("# header\n\n  run.seed = 9   # trailing\nmelody.n_eval=4\n");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.melody.n_eval, 4u);
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_NE(error_of("run.seed = 1\nrun.nope = 2\n").find("line 2: unknown key 'run.nope'"), std::string::npos);
  EXPECT_NE(error_of("run.seed = 1\n\nrun.seed = 2\n").find("line 3: duplicate key"), std::string::npos);
  EXPECT_NE(error_of("run.seed =\n").find("line 1: empty value"), std::string::npos);
  EXPECT_NE(error_of("just words\n").find("line 1: expected"), std::string::npos);
  EXPECT_NE(error_of("#\nrun.kind = sideways\n").find("line 2 (run.kind)"), std::string::npos);
  EXPECT_NE(error_of("ae.steps = -3\n").find("line 1 (ae.steps)"), std::string::npos);
  EXPECT_NE(error_of("ic.t_grid = 0.5, 1.0\n"), "");
  EXPECT_NE(error_of("run.threads = 0\n"), "");
}

TEST(Config, HashIsStableAndSensitive) {
  ExperimentConfig a, b;
  const auto h = config_hash(a);
  EXPECT_EQ(h.size(), 16u);
  EXPECT_EQ(h.find_first_not_of("0123456789abcdef"), std::string::npos);
  EXPECT_EQ(config_hash(b), h);
  b.threads = 4;
  EXPECT_EQ(config_hash(b), h);
  b.seed = 1;
  EXPECT_NE(config_hash(b), h);
}

TEST(Config, DigestsMatchKnownValues) {
  EXPECT_EQ(sha1_hex("abc"), "a9993e364706816aba3e25717850c26c9cd0d89d");
  // Empty blob id as computed by git.
  EXPECT_EQ(blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

// --- CSV and files -------------------------------------------------------------

TEST(Csv, WriterParserRoundTrip) {
  CsvWriter w({"name", "x", "n", "flag"});
  w.field("a").field(0.1).field(3).field(true).end_row();
  w.field("b").field(-1e-300).field(std::size_t(7)).field(false).end_row();
  EXPECT_EQ(w.rows(), 2u);
  const auto t = parse_csv(w.str());
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][t.column("x")], "0.1");
  EXPECT_EQ(std::stod(t.rows[1][t.column("x")]), -1e-300);
  EXPECT_EQ(t.rows[1][t.column("flag")], "false");
  EXPECT_THROW(t.column("missing"), FormatError);
}

TEST(Csv, RowWidthIsChecked) {
  CsvWriter w({"a", "b"});
  w.field(1);
  EXPECT_THROW(w.end_row(), std::logic_error);
}

TEST(Csv, ShortestRoundTripNumbers) {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -0.0, 5e-324}) EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  EXPECT_EQ(format_double(2.0), "2");
}

TEST(Files, AtomicWriteThenRead) {
  const auto dir = std::filesystem::temp_directory_path() / "pald_test_files";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.csv";
  atomic_write(path, "a,b\n1,2\n");
  EXPECT_EQ(read_file(path), "a,b\n1,2\n");
  atomic_write(path, "x\n");
  EXPECT_EQ(read_file(path), "x\n");
  std::filesystem::remove_all(dir);
}

// --- checkpoints -----------------------------------------------------------------

ParameterSet sample_params() {
  Rng rng(3);
  ParameterSet p;
  p.add("a.w", rng.normal_tensor({3, 4}));
  p.add("a.b", rng.normal_tensor({4}));
  p.add("z", Tensor::scalar(1.0 / 3.0));
  return p;
}

TEST(Checkpoint, RoundTripRoundsToFloat) {
  Checkpoint c{sample_params(), "note = hello\n"};
  const auto bytes = serialize_checkpoint(c);
  const auto back = deserialize_checkpoint(bytes);
  EXPECT_TRUE(back.params == round_to_f32(c.params));
  EXPECT_EQ(metadata_value(back.metadata, "note"), "hello");
  EXPECT_EQ(metadata_value(back.metadata, "content_hash").size(), 40u);
  // Rounded parameters survive a second trip unchanged.
  EXPECT_EQ(serialize_checkpoint({back.params, c.metadata}), bytes);
}

TEST(Checkpoint, CorruptionIsDetected) {
  const auto bytes = serialize_checkpoint({sample_params(), ""});
  auto flipped = bytes;
  flipped[flipped.size() - 2] ^= 0x40;
  EXPECT_THROW(deserialize_checkpoint(flipped), FormatError);
  EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), FormatError);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(deserialize_checkpoint(magic), FormatError);
  auto version = bytes;
  version[4] = 9;
  EXPECT_THROW(deserialize_checkpoint(version), FormatError);
  EXPECT_THROW(deserialize_checkpoint(bytes + "x"), FormatError);
}

TEST(Checkpoint, RestoreRequiresMatchingShapes) {
  auto target = sample_params();
  auto loaded = sample_params();
  loaded.at("a.b") = Tensor({5});
  EXPECT_THROW(restore_params(target, loaded), std::exception);
  auto missing = sample_params();
  missing = ParameterSet{};
  missing.add("a.w", Tensor({3, 4}));
  EXPECT_THROW(restore_params(target, missing), std::exception);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "pald_test.ckpt";
  save_checkpoint({sample_params(), "k = v\n"}, path);
  const auto back = load_checkpoint(path);
  EXPECT_TRUE(back.params == round_to_f32(sample_params()));
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), std::exception);
}

// --- parallel ---------------------------------------------------------------------

TEST(Parallel, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(37);
  parallel_for(hits.size(), 3, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Parallel, LowestFailingIndexWins) {
  try {
    parallel_for(10, 4, [](std::size_t i) {
      if (i == 7 || i == 3) throw std::runtime_error("cell " + std::to_string(i));
    });
    FAIL() << "no exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "cell 3");
  }
}

// --- experiment drivers ---------------------------------------------------------

TEST(Surprisal, NoteAggregation) {
  RowMatrix f(1, 4);
  f << 1, 3, 2, 6;
  const auto mean = note_ic(f, 2, NoteAggregate::kMean);
  const auto mx = note_ic(f, 2, NoteAggregate::kMax);
  ASSERT_EQ(mean.cols(), 2);
  EXPECT_EQ(mean(0, 0), 2.0);
  EXPECT_EQ(mean(0, 1), 4.0);
  EXPECT_EQ(mx(0, 0), 3.0);
  EXPECT_EQ(mx(0, 1), 6.0);
}

ExperimentConfig tiny_recon() {
  ExperimentConfig c;
  c.kind = Kind::kReconSweep;
  c.data.groups = 4;
  c.data.group_dim = 4;
  c.data.n_train = 256;
  c.data.n_eval = 64;
  c.ae.input_dim = 16;
  c.ae.latent_dim = 8;
  c.ae.hidden = 16;
  c.ae.steps = 40;
  c.ae.warmup = 5;
  c.ae.batch = 32;
  c.sweep.draws = 2;
  c.sweep.finetune_steps = 20;
  return c;
}

ExperimentConfig tiny_surprisal() {
  ExperimentConfig c;
  c.kind = Kind::kSurprisal;
  c.melody.notes = 8;
  c.melody.n_train = 32;
  c.melody.n_eval = 4;
  c.flow.steps = 30;
  c.flow.warmup = 5;
  c.flow.batch = 8;
  c.flow.context_hidden = 16;
  c.flow.velocity_hidden = 16;
  c.ic.t_grid = {0.0, 0.5};
  c.ic.n_draws = 2;
  c.ic.ode_steps = 4;
  return c;
}

TEST(Determinism, ReconSweepCsvIsByteIdentical) {
  auto c = tiny_recon();
  const auto a = run_recon_sweep(c).csv;
  const auto b = run_recon_sweep(c).csv;
  EXPECT_EQ(a, b);
  c.threads = 3;
  EXPECT_EQ(run_recon_sweep(c).csv, a) << "thread count changed the output";
  EXPECT_NE(a.find(config_hash(tiny_recon())), std::string::npos);
}

TEST(Determinism, SurprisalCsvIsByteIdentical) {
  auto c = tiny_surprisal();
  const auto a = run_surprisal(c);
  const auto b = run_surprisal(c);
  EXPECT_EQ(a.curve_csv, b.curve_csv);
  EXPECT_EQ(a.series_csv, b.series_csv);
  c.threads = 2;
  EXPECT_EQ(run_surprisal(c).series_csv, a.series_csv);
}

TEST(Determinism, CheckpointPreservesIcBitExactly) {
  const auto c = tiny_surprisal();
  const auto data = make_melody_data(c, synth::Construction::kAligned);
  auto model = flow::FlowModel::create(c.flow_config(), 5);
  flow::train_flow(model, data.train, 5);
  model.params = round_to_f32(model.params);
  const auto opts = c.ic_options(0.5);
  const RowMatrix before = flow::sequence_ic(model, data.eval, opts, 17);

  const auto bytes = serialize_checkpoint({model.params, ""});
  auto fresh = flow::FlowModel::create(c.flow_config(), 999);
  restore_params(fresh.params, deserialize_checkpoint(bytes).params);
  const RowMatrix after = flow::sequence_ic(fresh, data.eval, opts, 17);
  ASSERT_EQ(before.size(), after.size());
  EXPECT_EQ(std::memcmp(before.data(), after.data(), sizeof(double) * std::size_t(before.size())), 0);
}

}  // namespace
}  // namespace pald::exp
