#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "gdse/data.hpp"
#include "gdse/errors.hpp"
#include "gdse/wav.hpp"
#include "support/synth.hpp"
#include "support/util.hpp"

using namespace gdse;
using gdse::testing::random_waveform;
using gdse::testing::TempDir;

namespace {

double power(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s / static_cast<double>(v.size());
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("snr gain spot values") {
  Waveform a, b;
  a.samples = {1.0, -1.0, 1.0, -1.0};
  b.samples = {-1.0, -1.0, 1.0, 1.0};
  CHECK(snr_gain(a, b, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(snr_gain(a, b, 20.0) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("property: mixing hits the requested snr and keeps the clean part") {
  Rng rng(71);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 16 + rng.below(4000);
    const auto clean = random_waveform(n, rng, 16000, rng.uniform(0.01, 1.0));
    const auto noise = random_waveform(n + rng.below(100), rng, 16000, rng.uniform(0.01, 1.0));
    const double snr = trial == 0 ? -5.0 : rng.uniform(-20.0, 30.0);
    const double g = snr_gain(clean, noise, snr);
    const Waveform y = mix_at_snr(clean, noise, snr);
    std::vector<double> scaled(n), recovered(n);
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = g * noise.samples[i];
      recovered[i] = y.samples[i] - scaled[i];
    }
    CHECK(std::abs(10.0 * std::log10(power(clean.samples) / power(scaled)) - snr) < 1e-6);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::abs(recovered[i] - clean.samples[i]) <= 4e-16 * (std::abs(clean.samples[i]) + std::abs(scaled[i])));
  }
}

TEST_CASE("mixing errors") {
  Rng rng(72);
  const auto clean = random_waveform(100, rng);
  Waveform silent;
  silent.samples.assign(100, 0.0);
  CHECK_THROWS_AS(mix_at_snr(silent, clean, 0.0), DegenerateInputError);
  CHECK_THROWS_AS(mix_at_snr(clean, silent, 0.0), DegenerateInputError);
  auto other_rate = random_waveform(100, rng, 8000);
  CHECK_THROWS_AS(mix_at_snr(clean, other_rate, 0.0), InvalidInputError);
  CHECK_THROWS_AS(mix_at_snr(clean, random_waveform(50, rng), 0.0), InvalidInputError);
}

TEST_CASE("manifest parsing") {
  TempDir dir("data");
  Rng rng(73);
  write_wav(dir.path() / "a.wav", random_waveform(1000, rng));
  write_wav(dir.path() / "b.wav", random_waveform(1000, rng));

  write_text(dir.path() / "empty.csv", "clean_path,noise_path,snr_db\n");
  CHECK(load_manifest(dir.path() / "empty.csv").empty());

  write_text(dir.path() / "m.csv", "clean_path,noise_path,snr_db\na.wav,b.wav,0\n\na.wav,b.wav,-5:15\n");
  const auto m = load_manifest(dir.path() / "m.csv");
  REQUIRE(m.size() == 2);
  CHECK(m[0].snr_lo == 0.0);
  CHECK(m[0].snr_hi == 0.0);
  CHECK_FALSE(m[0].is_range());
  CHECK(m[0].clean_path == dir.path() / "a.wav");
  CHECK(m[1].snr_lo == -5.0);
  CHECK(m[1].snr_hi == 15.0);
  CHECK(m[1].line == 4);

  auto expect_line = [&](const std::string& body, const std::string& tag) {
    write_text(dir.path() / "bad.csv", "clean_path,noise_path,snr_db\na.wav,b.wav,1\n" + body);
    try {
      (void)load_manifest(dir.path() / "bad.csv");
      FAIL("expected an error for: " << body);
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find(tag) != std::string::npos);
    }
  };
  expect_line("a.wav,b.wav\n", "bad.csv:3");
  expect_line("a.wav,b.wav,loud\n", "bad.csv:3");
  expect_line("a.wav,b.wav,15:-5\n", "bad.csv:3");
  expect_line("a.wav,missing.wav,0\n", "bad.csv:3");
  CHECK_THROWS_AS(load_manifest(dir.path() / "nope.csv"), IoError);
  write_text(dir.path() / "nohdr.csv", "a.wav,b.wav,0\n");
  CHECK_THROWS_AS(load_manifest(dir.path() / "nohdr.csv"), InvalidInputError);
}

TEST_CASE("make_pair: determinism, fixed snr and reassembly") {
  Rng rng(74);
  const auto items = gdse::testing::synth_items(1, 24000, 5);
  DataConfig dc;
  dc.crop_seconds = 1.0;
  const TrainPair a = make_pair(items[0].clean, items[0].noise, -5.0, 15.0, 99, dc);
  const TrainPair b = make_pair(items[0].clean, items[0].noise, -5.0, 15.0, 99, dc);
  CHECK(a.y.values == b.y.values);
  CHECK(a.x0.values == b.x0.values);
  CHECK(a.snr_db == b.snr_db);
  CHECK(a.snr_db >= -5.0);
  CHECK(a.snr_db <= 15.0);
  CHECK(a.clean.size() == 16000);
  const TrainPair c = make_pair(items[0].clean, items[0].noise, -5.0, 15.0, 100, dc);
  CHECK(c.y.values != a.y.values);

  const TrainPair fixed = make_pair(items[0].clean, items[0].noise, 7.5, 7.5, 3, dc);
  CHECK(fixed.snr_db == 7.5);
  CHECK(10.0 * std::log10(power(fixed.clean.samples) / power(fixed.noise.samples)) ==
        doctest::Approx(7.5).epsilon(1e-9));

  // Rebuild y from the clean part and the pair's noise realization.
  Waveform mix = a.clean;
  for (std::size_t i = 0; i < mix.size(); ++i) mix.samples[i] += a.noise.samples[i];
  const auto y2 = compress(stft(mix, dc.spectral));
  double worst = 0.0;
  for (std::size_t i = 0; i < y2.values.size(); ++i) worst = std::max(worst, std::abs(y2.values[i] - a.y.values[i]));
  CHECK(worst < 1e-10);
  double peak = 0.0;
  for (double s : a.mixture.samples) peak = std::max(peak, std::abs(s));
  CHECK(peak == doctest::Approx(1.0));
  CHECK(a.oracle_mask.values == phase_sensitive_mask(a.x0, a.y).values);
  CHECK_NOTHROW(a.oracle_mask.validate());
}

TEST_CASE("make_pair tiles short noise and rejects short clips") {
  Rng rng(75);
  DataConfig dc;
  dc.crop_seconds = 0.0;
  const auto clean = gdse::testing::harmonic_speech(4000, rng);
  const auto noise = gdse::testing::filtered_noise(700, rng);
  const TrainPair p = make_pair(clean, noise, 0.0, 0.0, 1, dc);
  CHECK(p.noise.size() == 4000);
  // The tiled noise is periodic with the source length.
  for (std::size_t i = 0; i + 700 < 4000; ++i)
    CHECK(p.noise.samples[i] == doctest::Approx(p.noise.samples[i + 700]).epsilon(1e-12));
  CHECK_THROWS_AS(make_pair(gdse::testing::harmonic_speech(300, rng), noise, 0.0, 0.0, 1, dc),
                  DegenerateInputError);
}

TEST_CASE("make_pair from manifest files") {
  TempDir dir("data");
  const auto items = gdse::testing::synth_items(1, 20000, 8);
  write_wav(dir.path() / "c.wav", items[0].clean);
  write_wav(dir.path() / "n.wav", items[0].noise);
  write_text(dir.path() / "m.csv", "clean_path,noise_path,snr_db\nc.wav,n.wav,0:5\n");
  const auto m = load_manifest(dir.path() / "m.csv");
  DataConfig dc;
  const TrainPair a = make_pair(m[0], 11, dc), b = make_pair(m[0], 11, dc);
  CHECK(a.y.values == b.y.values);
  CHECK(a.id == "c@2");
  CHECK(a.x0.frames() == frame_count(20000, dc.spectral));
}

TEST_CASE("epoch order is a seeded permutation") {
  const auto a = epoch_order(50, 1, 0), b = epoch_order(50, 1, 0), c = epoch_order(50, 1, 1);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 50);
  CHECK(epoch_order(0, 1, 0).empty());
}

TEST_CASE("wav round trip and resampling") {
  TempDir dir("data");
  Rng rng(76);
  auto w = random_waveform(3000, rng, 22050, 0.2);
  write_wav(dir.path() / "f.wav", w, WavFormat::float32);
  const auto f = read_wav(dir.path() / "f.wav");
  CHECK(f.sample_rate == 22050);
  REQUIRE(f.size() == w.size());
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(f.samples[i] == doctest::Approx(w.samples[i]).epsilon(1e-6));
  write_wav(dir.path() / "p.wav", w, WavFormat::pcm16);
  const auto p = read_wav(dir.path() / "p.wav");
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(p.samples[i] - w.samples[i]) <= 1.0 / 32768.0);
  CHECK_THROWS_AS(read_wav(dir.path() / "none.wav"), IoError);
  write_text(dir.path() / "junk.wav", "RIFF1234WAVEjunk");
  CHECK_THROWS_AS(read_wav(dir.path() / "junk.wav"), InputError);

  // A 440 Hz tone survives 48 kHz -> 16 kHz -> 48 kHz in the interior.
  Waveform tone;
  tone.sample_rate = 48000;
  for (int i = 0; i < 48000; ++i) tone.samples.push_back(0.5 * std::sin(2.0 * std::numbers::pi * 440.0 * i / 48000.0));
  const auto down = resample(tone, 16000);
  CHECK(down.sample_rate == 16000);
  CHECK(down.size() == 16000);
  for (int i = 100; i < 15900; i += 37)
    CHECK(std::abs(down.samples[i] - 0.5 * std::sin(2.0 * std::numbers::pi * 440.0 * i / 16000.0)) < 5e-3);
  const auto back = resample(down, 48000);
  CHECK(back.size() == 48000);
}
