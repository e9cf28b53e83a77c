#include <doctest.h>

#include <fstream>

#include "gdse/errors.hpp"
#include "gdse/image.hpp"
#include "support/synth.hpp"
#include "support/util.hpp"

using namespace gdse;

TEST_CASE("render grid layout and ramp") {
  RealGrid g(3, 2);
  g(0, 0) = 0.0;
  g(2, 1) = 1.0;
  g(1, 0) = 0.5;
  const Image img = render_grid(g, 0.0, 1.0);
  CHECK(img.width == 3);
  CHECK(img.height == 2);
  CHECK(img.rgb.size() == 18);
  auto px = [&](int x, int y) { return &img.rgb[(static_cast<std::size_t>(y) * 3 + x) * 3]; };
  // Bin 0 sits on the bottom row; the top-right pixel is the brightest.
  const std::uint8_t* dark = px(0, 1);
  const std::uint8_t* bright = px(2, 0);
  CHECK(dark[0] + dark[1] + dark[2] < bright[0] + bright[1] + bright[2]);
  CHECK_THROWS_AS(render_grid(g, 1.0, 1.0), InvalidInputError);
  CHECK_THROWS_AS(render_grid(RealGrid{}, 0.0, 1.0), InvalidInputError);
}

TEST_CASE("log magnitude") {
  ComplexGrid s(1, 3);
  s[0] = Complex(10.0, 0.0);
  s[1] = Complex(0.0, 0.1);
  const RealGrid m = log_magnitude(s);
  CHECK(m[0] == doctest::Approx(20.0));
  CHECK(m[1] == doctest::Approx(-20.0));
  CHECK(m[2] == -120.0);
}

TEST_CASE("visualize writes the expected panels") {
  gdse::testing::TempDir dir("viz");
  const auto items = gdse::testing::synth_items(1, 4000, 4);
  VisualizeInputs in;
  in.noisy = items[0].clean;
  for (std::size_t i = 0; i < in.noisy.size(); ++i) in.noisy.samples[i] += items[0].noise.samples[i];
  const auto only = visualize(in, dir.path() / "a");
  REQUIRE(only.size() == 1);
  CHECK(only[0].filename() == "noisy.png");

  in.clean = items[0].clean;
  LoadedCheckpoint ck{Model(NetConfig::toy(), 6, 1), CheckpointMeta{}};
  ck.meta.net = NetConfig::toy();
  in.checkpoint = ck;
  const auto all = visualize(in, dir.path() / "b");
  CHECK(all.size() == 6);
  for (const auto& p : all) {
    std::ifstream f(p, std::ios::binary);
    char sig[8] = {};
    f.read(sig, 8);
    CHECK(std::string(sig + 1, 3) == "PNG");
  }
}
