#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "tecnet/checkpoint.hpp"
#include "tecnet/dataset.hpp"
#include "tecnet/errors.hpp"
#include "tecnet/pgm.hpp"
#include "tecnet/synth.hpp"
#include "tecnet/tensor_io.hpp"

using namespace tecnet;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tecnet_io_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("pgm round trip") {
  const fs::path dir = scratch("pgm");
  fs::create_directories(dir);
  GrayImage img{5, 3, {}};
  for (int i = 0; i < 15; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 17));
  write_pgm(dir / "a.pgm", img);
  const GrayImage back = read_pgm(dir / "a.pgm");
  CHECK(back.width == 5);
  CHECK(back.height == 3);
  CHECK(back.pixels == img.pixels);

  std::ofstream(dir / "c.pgm", std::ios::binary) << "P5\n# note\n2 1\n255\n" << char(7) << char(9);
  const GrayImage commented = read_pgm(dir / "c.pgm");
  CHECK(commented.pixels == std::vector<std::uint8_t>{7, 9});
  std::ofstream(dir / "bad.pgm", std::ios::binary) << "P2\n2 1\n255\n1 2\n";
  CHECK_THROWS_AS(read_pgm(dir / "bad.pgm"), IoError);
  std::ofstream(dir / "short.pgm", std::ios::binary) << "P5\n4 4\n255\nab";
  CHECK_THROWS_AS(read_pgm(dir / "short.pgm"), IoError);
}

TEST_CASE("tensor record round trip narrows to f32") {
  Tensor t({2, 3}, {0.1, -2.5, 3.0, 1e-3, 7.0, -0.0});
  std::stringstream ss;
  write_tensor(ss, t);
  CHECK(ss.str().size() == tensor_record_size({2, 3}));
  CHECK(ss.str().substr(0, 4) == "TECT");
  const Tensor back = read_tensor(ss);
  CHECK(back.shape() == Shape{2, 3});
  for (std::size_t i = 0; i < 6; ++i) CHECK(back[i] == double(float(t[i])));
}

TEST_CASE("synthetic generation is reproducible") {
  SynthSpec spec;
  spec.seed = 21;
  spec.count = 4;
  const SynthSample a = generate_sample(spec, 2), b = generate_sample(spec, 2);
  CHECK(a.image.pixels == b.image.pixels);
  CHECK(a.mask.pixels == b.mask.pixels);
  CHECK(generate_sample(spec, 3).image.pixels != a.image.pixels);

  const fs::path d1 = scratch("gen1"), d2 = scratch("gen2");
  generate(spec, d1);
  generate(spec, d2);
  for (const char* f : {"img_0000.pgm", "msk_0000.pgm", "img_0003.pgm", "msk_0003.pgm"}) {
    CHECK(slurp(d1 / f) == slurp(d2 / f));
    CHECK_FALSE(slurp(d1 / f).empty());
  }
  CHECK(read_pgm(d1 / "img_0002.pgm").pixels == a.image.pixels);
}

TEST_CASE("synthetic masks are binary, nonempty, and recoverable at full contrast") {
  for (ShapeFamily family : {ShapeFamily::ellipse, ShapeFamily::blob_union}) {
    SynthSpec spec;
    spec.seed = 5;
    spec.family = family;
    spec.gap = 1.0;
    spec.noise = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
      const SynthSample s = generate_sample(spec, i);
      std::size_t fg = 0;
      for (std::size_t k = 0; k < s.mask.pixels.size(); ++k) {
        const std::uint8_t m = s.mask.pixels[k];
        CHECK((m == 0 || m == 255));
        fg += m == 255;
        CHECK((s.image.pixels[k] >= 128) == (m == 255));
      }
      CHECK(fg > 0);
      CHECK(fg < s.mask.pixels.size());
    }
  }
  CHECK(parse_shape_family("blob-union") == ShapeFamily::blob_union);
  CHECK_THROWS_AS(parse_shape_family("square"), ConfigError);
  SynthSpec tiny;
  tiny.size = 16;
  CHECK_THROWS_AS(generate_sample(tiny, 0), ConfigError);
  SynthSpec flat;
  flat.gap = 0.0;
  CHECK_THROWS_AS(generate_sample(flat, 0), ConfigError);
}

TEST_CASE("dataset loading and split") {
  SynthSpec spec;
  spec.seed = 3;
  spec.count = 5;
  spec.size = 32;
  const fs::path dir = scratch("data");
  generate(spec, dir);
  const std::vector<SegSample> data = load_dataset(dir);
  REQUIRE(data.size() == 5);
  CHECK(data[0].id == "0000");
  CHECK(data[4].id == "0004");
  CHECK(data[1].image.shape() == Shape{1, 32, 32});
  for (double v : data[1].mask.values()) CHECK((v == 0.0 || v == 1.0));
  for (double v : data[1].image.values()) CHECK((v >= 0.0 && v <= 1.0));

  const DatasetSplit s = split_dataset(data, 0.3);
  CHECK(s.train.size() == 3);
  REQUIRE(s.validation.size() == 2);
  CHECK(s.validation[0].id == "0003");
  CHECK(split_dataset(data, 0.0).validation.empty());
  CHECK_THROWS_AS(split_dataset(data, 1.0), ConfigError);
  CHECK_THROWS_AS(load_dataset(scratch("missing")), IoError);
}

TEST_CASE("checkpoint round trip is byte identical") {
  const TecNet model(TecNetConfig::nano(), 9);
  round_parameters_to_f32(model);
  TrainingInfo info;
  info.seed = 9;
  info.steps = 12;
  info.validation_dice = 87.5;
  info.data_dir = "somewhere";
  const fs::path a = scratch("ck_a"), b = scratch("ck_b");
  save_checkpoint(a, model, info);

  Checkpoint cp;
  const TecNet loaded = load_model(a, nullptr, &cp);
  CHECK(cp.info.steps == 12);
  CHECK(cp.info.validation_dice == 87.5);
  CHECK(cp.info.data_dir == "somewhere");
  CHECK(cp.config_hash == model.config().hash());
  const ParameterList p0 = model.parameters(), p1 = loaded.parameters();
  REQUIRE(p0.size() == p1.size());
  for (std::size_t i = 0; i < p0.size(); ++i) {
    CHECK(p0[i].name == p1[i].name);
    CHECK(std::equal(p0[i].tensor.values().begin(), p0[i].tensor.values().end(),
                     p1[i].tensor.values().begin()));
  }
  save_checkpoint(b, loaded, cp.info);
  CHECK(slurp(a / "model.tect") == slurp(b / "model.tect"));
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));

  TecNetConfig other = TecNetConfig::nano();
  other.window = 2;
  CHECK_THROWS_AS(load_model(a, &other), ConfigError);
  const TecNetConfig same = TecNetConfig::nano();
  CHECK_NOTHROW(load_model(a, &same));

  // A truncated weights file is caught while reading the records.
  fs::resize_file(a / "model.tect", fs::file_size(a / "model.tect") - 4);
  CHECK_THROWS_AS(read_checkpoint(a), IoError);
}

}  // TEST_SUITE
