// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "support.hpp"
#include "tfopt/commands.hpp"
#include "tfopt/config.hpp"
#include "tfopt/image_io.hpp"
#include "tfopt/synthetic.hpp"

using namespace tfopt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// A 10^3 two-shell volume and its reference TF inside a temp dir.
struct Fixture {
  tfopt::testing::TempDir dir;
  fs::path volume;
  fs::path reference;

  Fixture()
  {
    volume = cmd_synth("two-shell", 10, dir.path());
    reference = dir / "two-shell_reference_tf.txt";
  }

  fs::path write_config(const json& doc, const std::string& name = "run.json") const
  {
    tfopt::testing::write_text(dir / name, doc.dump(2));
    return dir / name;
  }

  json minimal() const
  {
    return {{"volume", {{"path", volume.filename().string()}}},
            {"scorer", {{"reference_tf", reference.filename().string()}}},
            {"render", {{"width", 8}, {"height", 8}}},
            {"optimizer", {{"total_steps", 3}, {"views_per_step", 1}}},
            {"tf", {{"control_points", 6}}},
            {"output", {{"directory", "out"}, {"timestamped", false}}},
            {"seed", 4}};
  }
};

std::string read_file(const fs::path& p)
{
  return tfopt::testing::read_bytes(p);
}

}  // namespace

TEST_CASE("config defaults and relative paths")
{
  Fixture fx;
  const RunConfig c = load_run_config(fx.write_config(fx.minimal()));
  CHECK(c.volume.path == fx.volume);
  CHECK(c.scorer.reference_tf == fx.reference);
  CHECK(c.output_directory == fx.dir / "out");
  CHECK(c.engine.control_points == 6);
  CHECK(c.engine.optimizer.learning_rate == 10.0);
  CHECK(c.engine.optimizer.momentum == 0.75);
  CHECK(c.engine.objective.prior_start_step == 100);
  CHECK(c.engine.objective.augment_start_step == 26);
  CHECK(c.engine.render.fov_y_degrees == 60.0);
  CHECK(c.engine.seed == 4);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config validation names the field")
{
  Fixture fx;
  auto field_of = [&](const json& doc) -> std::string {
    try {
      load_run_config(fx.write_config(doc)).validate();
    } catch (const ValidationError& e) {
      return e.field();
    }
    return "";
  };
  json doc = fx.minimal();
  doc["scorer"]["endpoint"] = "tcp://localhost:1";
  CHECK(field_of(doc) == "scorer");

  doc = fx.minimal();
  doc["scorer"].erase("reference_tf");
  CHECK(field_of(doc) == "scorer");

  doc = fx.minimal();
  doc["volume"]["path"] = "missing.raw";
  CHECK(field_of(doc) == "volume.path");

  doc = fx.minimal();
  doc["render"]["colour"] = 1;
  CHECK(field_of(doc) == "render.colour");

  doc = fx.minimal();
  doc["bogus"] = true;
  CHECK(field_of(doc) == "bogus");

  doc = fx.minimal();
  doc["tf"]["control_points"] = 1;
  CHECK(field_of(doc) == "tf.control_points");

  doc = fx.minimal();
  doc["optimizer"]["momentum"] = "fast";
  CHECK(field_of(doc) == "optimizer.momentum");

  doc = fx.minimal();
  doc["scorer"] = {{"endpoint", "tcp://localhost:1"}};
  CHECK(field_of(doc) == "prompt.positive");

  CHECK_THROWS_AS(load_run_config(fx.dir / "nope.json"), ValidationError);
  tfopt::testing::write_text(fx.dir / "broken.json", "{ not json");
  CHECK_THROWS_AS(load_run_config(fx.dir / "broken.json"), ValidationError);
}

TEST_CASE("overrides")
{
  json doc = {{"optimizer", {{"total_steps", 3}}}};
  apply_overrides(doc, {"optimizer.total_steps=7", "prompt.positive=a red tree",
                        "render.width=32", "optimizer.resample_negatives_per_view=true"});
  CHECK(doc["optimizer"]["total_steps"] == 7);
  CHECK(doc["prompt"]["positive"] == "a red tree");
  CHECK(doc["render"]["width"] == 32);
  CHECK(doc["optimizer"]["resample_negatives_per_view"] == true);
  CHECK_THROWS_AS(apply_overrides(doc, {"no-equals"}), ValidationError);
  CHECK_THROWS_AS(apply_overrides(doc, {"a..b=1"}), ValidationError);
  CHECK_THROWS_AS(apply_overrides(doc, {"render.width.x=1"}), ValidationError);

  Fixture fx;
  const RunConfig c = load_run_config(fx.write_config(fx.minimal()), {"seed=99", "tf.control_points=9"});
  CHECK(c.engine.seed == 99);
  CHECK(c.engine.control_points == 9);
}

TEST_CASE("optimize writes artifacts and replays bit-identically")
{
  Fixture fx;
  json doc = fx.minimal();
  doc["output"]["snapshot_interval"] = 2;
  const RunConfig c = load_run_config(fx.write_config(doc));
  std::ostringstream log;
  const OptimizeArtifacts a = cmd_optimize(c, log);
  CHECK(a.directory == fx.dir / "out");
  for (const char* name : {"tf.txt", "log.csv", "resolved_config.json", "final.png",
                           "snapshots/step_0002.png"})
    CHECK(fs::exists(a.directory / name));
  CHECK_FALSE(fs::exists(a.directory / "snapshots/step_0001.png"));

  // log: header plus one row per step
  std::istringstream csv(read_file(a.directory / "log.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(csv, line))
    ++rows;
  CHECK(rows == 4);

  // replay from the resolved config into a different directory
  const json resolved = json::parse(read_file(a.directory / "resolved_config.json"));
  json replay = resolved;
  replay["output"]["directory"] = (fx.dir / "replay").string();
  const RunConfig rc = load_run_config(fx.write_config(replay, "replay.json"));
  std::ostringstream log2;
  const OptimizeArtifacts b = cmd_optimize(rc, log2);
  CHECK(read_file(a.directory / "tf.txt") == read_file(b.directory / "tf.txt"));
  CHECK(read_file(a.directory / "log.csv") == read_file(b.directory / "log.csv"));
  CHECK(read_file(a.directory / "final.png") == read_file(b.directory / "final.png"));
}

TEST_CASE("timestamped output directories do not collide")
{
  tfopt::testing::TempDir dir;
  const fs::path a = make_timestamped_directory(dir.path());
  const fs::path b = make_timestamped_directory(dir.path());
  CHECK(a != b);
  CHECK(fs::is_directory(a));
  CHECK(a.filename().string().rfind("run-", 0) == 0);
}

TEST_CASE("render command")
{
  Fixture fx;
  VolumeSource src;
  src.path = fx.volume;
  const ScalarField field = load_volume(src);
  const CameraPose pose{0.3, 0.1, 3.0 * field.bounding_radius()};

  SUBCASE("zero density gives uniform preview gray")
  {
    TFRealized empty;
    empty.positions = {field.value_min(), field.value_max()};
    empty.density = {0.0, 0.0};
    empty.color = {Rgb{1, 0, 0}, Rgb{0, 1, 0}};
    export_tf(empty, fx.dir / "empty.txt");
    const RgbImage img = cmd_render(src, fx.dir / "empty.txt", pose, 6, 5, fx.dir / "e.png");
    for (double v : img.pixels)
      CHECK(v == kPreviewGray);
  }
  SUBCASE("repeat renders are byte-identical")
  {
    cmd_render(src, fx.reference, pose, 12, 10, fx.dir / "a.png", fx.dir / "a.f32");
    cmd_render(src, fx.reference, pose, 12, 10, fx.dir / "b.png", fx.dir / "b.f32");
    CHECK(read_file(fx.dir / "a.png") == read_file(fx.dir / "b.png"));
    CHECK(read_file(fx.dir / "a.f32") == read_file(fx.dir / "b.f32"));
    CHECK(read_file(fx.dir / "a.f32").size() == 12 * 10 * 3 * 4);
    const std::string png = read_file(fx.dir / "a.png");
    CHECK(png.substr(1, 3) == "PNG");
  }
  SUBCASE("TF range must fit the volume")
  {
    TFRealized wide;
    // the interior point lies below the volume's minimum
    wide.positions = {field.value_min() - 50.0, field.value_min() - 10.0, field.value_max()};
    wide.density = {1.0, 1.0, 1.0};
    wide.color = {Rgb{1, 0, 0}, Rgb{0, 1, 0}, Rgb{0, 0, 1}};
    export_tf(wide, fx.dir / "wide.txt");
    CHECK_THROWS_AS(cmd_render(src, fx.dir / "wide.txt", pose, 4, 4, fx.dir / "w.png"),
                    ValidationError);
  }
}

TEST_CASE("render matches the frozen golden image")
{
  // tests/data/golden_shell.f32 was produced once by this renderer for the
  // 12^3 two-shell volume and tests/data/golden_tf.txt; any change beyond
  // 1 ulp in float32 is a regression.
  tfopt::testing::TempDir dir;
  const fs::path vol = cmd_synth("two-shell", 12, dir.path());
  VolumeSource src;
  src.path = vol;
  const ScalarField field = load_volume(src);
  const CameraPose pose{0.7, -0.1, 3.0 * field.bounding_radius()};
  cmd_render(src, fs::path(TFOPT_TEST_DATA) / "golden_tf.txt", pose, 16, 16, dir / "g.png",
             dir / "g.f32");
  const std::string got = read_file(dir / "g.f32");
  const std::string want = read_file(fs::path(TFOPT_TEST_DATA) / "golden_shell.f32");
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); i += 4) {
    std::int32_t a = 0, b = 0;
    std::memcpy(&a, got.data() + i, 4);
    std::memcpy(&b, want.data() + i, 4);
    CHECK(std::abs(static_cast<long>(a) - static_cast<long>(b)) <= 1);
  }
}

TEST_CASE("init-density command")
{
  Fixture fx;
  VolumeSource src;
  src.path = fx.volume;
  RenderConfig rc;
  rc.width = 32;
  rc.height = 32;
  const InitResult r = cmd_init_density(src, 8, 0.05, fx.dir / "init.txt", 1, rc);
  CHECK(r.converged);
  const TFRealized tf = import_tf(fx.dir / "init.txt");
  CHECK(tf.density.size() == 8);
  CHECK_THROWS_AS(cmd_init_density(src, 1, 0.05, fx.dir / "x.txt"), ValidationError);
  CHECK_THROWS_AS(cmd_init_density(src, 8, 1.5, fx.dir / "x.txt"), ValidationError);
}

TEST_CASE("density peaks and inspect")
{
  TFRealized tf;
  tf.positions = {0, 1, 2, 3, 4, 5, 6};
  tf.color = std::vector<Rgb>(7, Rgb{0.5, 0.5, 0.5});

  tf.density = {0, 10, 0, 0, 5, 5, 0};
  CHECK(density_peaks(tf) == std::vector<std::size_t>{1, 4});
  tf.density = std::vector<double>(7, 3.0);
  CHECK(density_peaks(tf).empty());
  tf.density = {9, 1, 1, 1, 1, 1, 4};
  CHECK(density_peaks(tf) == std::vector<std::size_t>{0, 6});

  tfopt::testing::TempDir dir;
  tf.density = {0, 10, 0, 0, 5, 5, 0};
  export_tf(tf, dir / "tf.txt");
  std::ostringstream out;
  cmd_inspect_tf(dir / "tf.txt", out);
  const std::string text = out.str();
  CHECK(text.find("control points: 7") != std::string::npos);
  CHECK(text.find("density peaks: 2") != std::string::npos);
}

TEST_CASE("synth writes loadable volumes")
{
  tfopt::testing::TempDir dir;
  const fs::path shell = cmd_synth("two-shell", 8, dir.path());
  CHECK(shell.filename() == "two-shell_8x8x8_float32.raw");
  CHECK(fs::file_size(shell) == 8 * 8 * 8 * 4);
  CHECK(fs::exists(dir / "two-shell_reference_tf.txt"));
  const fs::path tree = cmd_synth("tree", 8, dir.path());
  VolumeSource src;
  src.path = tree;
  const ScalarField f = load_volume(src);
  CHECK(f.dims()[0] == 8);
  CHECK(f.value_min() >= 0.0);
  CHECK(f.value_max() <= 255.0);
  CHECK_THROWS_AS(cmd_synth("cube", 8, dir.path()), ValidationError);
}
