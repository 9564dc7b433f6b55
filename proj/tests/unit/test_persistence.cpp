#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "test_support.hpp"
#include "viscest/basis_cache.hpp"
#include "viscest/errors.hpp"
#include "viscest/text_format.hpp"
#include "viscest/trajectory_io.hpp"

using namespace viscest;
using viscest::testing::scratch_dir;
using viscest::testing::small_model;

TEST(TextFormat, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 10000; ++i) {
    double x;
    const std::uint64_t b = bits(rng);
    std::memcpy(&x, &b, sizeof x);
    if (!std::isfinite(x)) continue;
    EXPECT_EQ(parse_double(format_double(x)), x);
  }
}

TEST(TextFormat, StrictParsing) {
  EXPECT_EQ(parse_double("2.5e-3"), 2.5e-3);
  EXPECT_THROW(parse_double("2.5x"), FormatError);
  EXPECT_THROW(parse_double(""), FormatError);
  EXPECT_EQ(parse_integer("-42"), -42);
  EXPECT_THROW(parse_integer("4.2"), FormatError);
  const auto parts = split_whitespace("  a bb\t c ");
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[1], "bb");
  // FNV-1a 64 reference values.
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(BasisCache, SaveLoadReproducesBasis) {
  ChannelGeometry g;
  g.max_wavenumber = 2;
  g.wall_order = 24;
  g.modes = 8;
  const StokesBasis built = assemble_basis(g);
  std::stringstream buf;
  save_basis(built, buf);
  const StokesBasis loaded = load_basis(buf, g);
  ASSERT_EQ(loaded.size(), built.size());
  for (int j = 0; j < built.size(); ++j) {
    EXPECT_EQ(loaded.alphas()[j], built.alphas()[j]);
    EXPECT_EQ(loaded.mode(j).k, built.mode(j).k);
    EXPECT_EQ(loaded.mode(j).parity, built.mode(j).parity);
  }
  EXPECT_EQ(loaded.u1(), built.u1());
  EXPECT_EQ(loaded.d2u2(), built.d2u2());

  ChannelGeometry other = g;
  other.modes = 7;
  std::stringstream again;
  save_basis(built, again);
  EXPECT_THROW(load_basis(again, other), FormatError);
  std::stringstream garbage("not a basis file\n");
  EXPECT_THROW(load_basis(garbage, g), FormatError);
}

TEST(BasisCache, DirectoryReuse) {
  ChannelGeometry g;
  g.max_wavenumber = 1;
  g.wall_order = 16;
  g.modes = 4;
  const auto dir = scratch_dir("cache");
  bool built = false;
  const auto a = load_or_build_basis(g, dir, &built);
  EXPECT_TRUE(built);
  EXPECT_TRUE(std::filesystem::exists(dir / basis_cache_filename(g)));
  const auto b = load_or_build_basis(g, dir, &built);
  EXPECT_FALSE(built);
  EXPECT_EQ(a.u1(), b.u1());
  ChannelGeometry h = g;
  h.period = 3.0;
  EXPECT_NE(basis_cache_key(g), basis_cache_key(h));
}

namespace {

CheckpointHeader header_for(int modes) {
  CheckpointHeader h;
  h.config_hash = "0123456789abcdef";
  h.modes = modes;
  h.dt = 0.01;
  h.nu = 0.5;
  h.noise_total = modes * 0.49;
  h.seed = 4;
  h.stream = 2;
  return h;
}

}  // namespace

TEST(Checkpoint, RoundTripAndTornLine) {
  const auto& model = small_model();
  SimConfig c;
  c.dt = 0.01;
  c.horizon = 0.5;
  c.output_stride = 10;
  const NoiseSpec spec(std::vector<double>(static_cast<std::size_t>(model.size()), 0.7));
  const auto run = simulate(model, {0.0, std::vector<double>(static_cast<std::size_t>(model.size()), 0.0)}, c, spec,
                            RandomStream{4, 2, 0});
  std::stringstream buf;
  CheckpointHeader header = header_for(model.size());
  header.noise_total = spec.total();
  write_checkpoint_header(buf, header);
  for (std::size_t i = 0; i < run.samples.size(); ++i) {
    write_checkpoint_record(buf, make_record(static_cast<std::int64_t>(10 * i), run.samples[i]));
  }
  const std::string text = buf.str();
  std::stringstream in(text);
  const CheckpointData data = read_checkpoint(in);
  EXPECT_EQ(data.header.config_hash, "0123456789abcdef");
  ASSERT_EQ(data.records.size(), run.samples.size());
  const auto& last = data.records.back();
  EXPECT_EQ(last.u, run.samples.back().u);
  EXPECT_EQ(last.martingale, run.trace.martingale);
  const auto trace = trace_from_record(data.header, last, model.alphas());
  EXPECT_EQ(trace.enstrophy_integral, run.trace.enstrophy_integral);
  EXPECT_EQ(trace.energy, run.trace.energy);

  // An interrupted write leaves a partial last line, which is discarded.
  std::stringstream torn(text.substr(0, text.size() - 7));
  EXPECT_EQ(read_checkpoint(torn).records.size(), run.samples.size() - 1);

  std::ostringstream direct, rebuilt;
  write_timeseries_csv(direct, "h", run.samples);
  write_timeseries_csv(rebuilt, "h", samples_from_checkpoint(data, model.alphas()));
  EXPECT_EQ(direct.str(), rebuilt.str());
  EXPECT_EQ(direct.str().rfind("# config_hash=h\n", 0), 0u);
}

TEST(Checkpoint, WriterReopensForAppend) {
  const auto dir = scratch_dir("ckpt");
  const auto path = dir / "run.ckpt";
  CheckpointRecord r;
  r.u = {1.0, 2.0};
  {
    CheckpointWriter w(path, header_for(2));
    for (int i = 0; i < 3; ++i) {
      r.step = i;
      r.t = 0.01 * i;
      w.append(r);
    }
  }
  auto data = read_checkpoint(path);
  ASSERT_EQ(data.records.size(), 3u);
  data.records.pop_back();
  {
    auto w = CheckpointWriter::reopen(path, data);
    r.step = 7;
    w.append(r);
  }
  const auto again = read_checkpoint(path);
  ASSERT_EQ(again.records.size(), 3u);
  EXPECT_EQ(again.records.back().step, 7);
}
