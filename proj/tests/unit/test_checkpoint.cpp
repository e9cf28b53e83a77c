#include <doctest.h>

#include <cstring>
#include <fstream>

#include "gdse/checkpoint.hpp"
#include "gdse/errors.hpp"
#include "support/util.hpp"

using namespace gdse;
using gdse::testing::TempDir;

namespace {

CheckpointMeta meta_for(const NetConfig& net) {
  CheckpointMeta m;
  m.net = net;
  m.step = 42;
  return m;
}

std::vector<char> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<char>& b) {
  std::ofstream(p, std::ios::binary).write(b.data(), static_cast<std::streamsize>(b.size()));
}

}  // namespace

TEST_CASE("checkpoint round trip is bit-exact") {
  TempDir dir("ckpt");
  Model m(NetConfig::toy(), 6, 77);
  // Awkward values survive unchanged.
  m.denoiser.params()[0]->value[0] = -0.0;
  m.denoiser.params()[0]->value[1] = 1e-310;
  m.cmen.params()[0]->value[0] = 0.1 + 0.2;
  const auto path = dir.path() / "a.ckpt";
  save_checkpoint(path, m, meta_for(m.config));
  const LoadedCheckpoint ck = load_checkpoint(path);
  CHECK(ck.meta.step == 42);
  CHECK(ck.meta.net == m.config);
  CHECK(ck.meta.spectral == SpectralConfig{});
  CHECK(ck.meta.schedule == ScheduleSettings{});
  const auto a = m.denoiser.params();
  const auto b = ck.model.denoiser.params();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i]->name == b[i]->name);
    CHECK(std::memcmp(a[i]->value.data(), b[i]->value.data(), a[i]->value.size() * sizeof(double)) == 0);
  }
  const auto c = m.cmen.params();
  const auto d = ck.model.cmen.params();
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i]->value == d[i]->value);
  CHECK(std::signbit(b[0]->value[0]));

  // Saving the loaded model reproduces the file byte for byte.
  save_checkpoint(dir.path() / "b.ckpt", ck.model, ck.meta);
  CHECK(read_bytes(path) == read_bytes(dir.path() / "b.ckpt"));
}

TEST_CASE("checkpoint config checks") {
  TempDir dir("ckpt_cfg");
  const Model m(NetConfig::toy(), 6, 1);
  const auto path = dir.path() / "a.ckpt";
  save_checkpoint(path, m, meta_for(m.config));
  ScheduleSettings s;
  CHECK_NOTHROW(load_checkpoint(path, SpectralConfig{}, s));
  s.kappa = 0.4;
  CHECK_THROWS_AS(load_checkpoint(path, SpectralConfig{}, s), ConfigMismatchError);
  CHECK_NOTHROW(load_checkpoint(path, SpectralConfig{}, s, true));
  SpectralConfig sp;
  sp.hop = 64;
  CHECK_THROWS_AS(load_checkpoint(path, sp, ScheduleSettings{}), ConfigMismatchError);
}

TEST_CASE("damaged checkpoints are rejected") {
  TempDir dir("ckpt_bad");
  const Model m(NetConfig::toy(), 6, 1);
  const auto path = dir.path() / "a.ckpt";
  save_checkpoint(path, m, meta_for(m.config));
  const auto bytes = read_bytes(path);

  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    write_bytes(dir.path() / "t.ckpt", std::vector<char>(bytes.begin(), bytes.begin() + static_cast<long>(cut)));
    CHECK_THROWS_AS(load_checkpoint(dir.path() / "t.ckpt"), CorruptCheckpointError);
  }
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  write_bytes(dir.path() / "f.ckpt", flipped);
  CHECK_THROWS_AS(load_checkpoint(dir.path() / "f.ckpt"), CorruptCheckpointError);

  auto version = bytes;
  version[8] = 9;
  write_bytes(dir.path() / "v.ckpt", version);
  CHECK_THROWS_AS(load_checkpoint(dir.path() / "v.ckpt"), VersionMismatchError);

  CHECK_THROWS_AS(load_checkpoint(dir.path() / "missing.ckpt"), IoError);
}
