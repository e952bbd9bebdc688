#include <set>

#include "doctest.h"
#include "sdfforge/config.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/hash.hpp"
#include "support.hpp"

using namespace sdfforge;

TEST_CASE("key/value parsing") {
  const auto kv = KeyValues::parse("# comment\n  a.b = 1 \n\nc=two words # trailing\n");
  CHECK(kv.get("a.b") == "1");
  CHECK(kv.get("c") == "two words");
  CHECK_FALSE(kv.get("missing"));
  try {
    KeyValues::parse("a = 1\nnot a pair\n", "demo.conf");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("demo.conf:2") != std::string::npos);
  }
  CHECK_THROWS_AS(KeyValues::parse(" = 3\n"), ConfigError);
  CHECK_THROWS_AS(KeyValues::load("/nonexistent/file.conf"), ConfigError);
}

TEST_CASE("defaults parse") {
  const auto cfg = parse_config(KeyValues{});
  CHECK(cfg.videos == 1);
  CHECK(cfg.bench.context_length == 5);
  CHECK(cfg.bench.strides == std::vector<int>{2, 4});
  CHECK(plan_videos(cfg).size() == 1);
}

TEST_CASE("invalid configs are rejected") {
  for (const char* text : {"scene.dt = 0\n", "scene.dt = -1\n", "bogus.key = 1\n", "videos = 0\n", "preset = boil\n",
                           "bench.strides = 2,0\n", "bench.tau = 2\n", "sft.options = 1\n", "sft.mix_ratio = 1\n",
                           "sft.mix_ratio = 0:0\n", "scene.viscosity = runny\n", "camera.resolution = 64\n",
                           "scene.emitter.speed = fast\n", "scene.liquid_color = 1,2,300\n", "seed = -4\n",
                           "sdf.kappa = nan\n", "bench.tcv_balance = maybe\n", "sdf.normalization = none\n"}) {
    CHECK_THROWS_AS_MESSAGE(parse_config(KeyValues::parse(text)), ConfigError, text);
  }
}

TEST_CASE("overrides apply after variation") {
  const auto cfg = parse_config(KeyValues::parse("videos = 4\nscene.viscosity = high\nscene.steps = 12\n"));
  for (const auto& v : plan_videos(cfg)) {
    CHECK(v.scene.viscosity == Viscosity::high);
    CHECK(v.scene.steps == 12);
  }
}

TEST_CASE("variation covers viscosities and views") {
  const auto cfg = parse_config(KeyValues::parse("videos = 6\n"));
  const auto vids = plan_videos(cfg);
  std::set<int> visc;
  std::set<std::string> ids;
  for (const auto& v : vids) {
    visc.insert(static_cast<int>(v.scene.viscosity));
    ids.insert(v.id);
  }
  CHECK(visc.size() == 3);
  CHECK(ids.size() == 6);
  CHECK(vids[0].id == "v000");
  CHECK_FALSE(vids[0].camera.position == vids[1].camera.position);
  CHECK(vids[0].scene.seed != vids[1].scene.seed);
}

TEST_CASE("no variation gives identical scenes apart from the seed") {
  const auto vids = plan_videos(parse_config(KeyValues::parse("videos = 3\nvary = false\n")));
  CHECK(vids[0].camera.position == vids[2].camera.position);
  CHECK(vids[0].scene.viscosity == vids[2].scene.viscosity);
}

TEST_CASE("every preset is valid") {
  for (const auto& name : preset_names()) {
    const auto s = preset_scene(name);
    CHECK_NOTHROW(s.validate());
    CHECK(s.steps >= 1);
  }
  CHECK_THROWS_AS(preset_scene("pour_thick"), ConfigError);
}

TEST_CASE("video descriptions round trip") {
  const auto vids = plan_videos(parse_config(KeyValues::parse("videos = 5\nseed = 99\n")));
  for (const auto& v : vids) {
    const auto kv = video_to_kv(v);
    const auto back = video_from_kv(KeyValues::parse(kv.dump()));
    CHECK(back.id == v.id);
    CHECK(back.scene.emitter.speed == v.scene.emitter.speed);
    CHECK(back.scene.dt == v.scene.dt);
    CHECK(back.scene.seed == v.scene.seed);
    CHECK(back.camera.position == v.camera.position);
    CHECK(back.camera.resolution == v.camera.resolution);
    CHECK(back.sdf.v_ref == v.sdf.v_ref);
    CHECK(video_to_kv(back).dump() == kv.dump());
  }
  CHECK_THROWS_AS(video_from_kv(KeyValues::parse("weird = 1\n")), ConfigError);
}

TEST_CASE("set_seed reaches every section") {
  auto cfg = parse_config(KeyValues{});
  set_seed(cfg, 123);
  CHECK(cfg.seed == 123);
  CHECK(cfg.bench.seed == 123);
  const auto first = cfg.sft.seed;
  set_seed(cfg, 124);
  CHECK(cfg.sft.seed != first);
}

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK_THROWS_AS(sha256_file("/nonexistent/x"), IoError);
}

TEST_CASE("checksum tree detects tampering") {
  testing::TempDir dir("sums");
  testing::spit(dir / "a.txt", "alpha");
  testing::spit(dir / "sub/b.txt", "beta");
  testing::spit(dir / "review/log.jsonl", "{}");
  write_checksums(dir.path(), {"review"});
  CHECK(list_tree(dir.path()) == std::vector<std::string>{"a.txt", "checksums.sha256", "review/log.jsonl", "sub/b.txt"});
  CHECK(verify_checksums(dir.path(), {"review"}).empty());

  testing::spit(dir / "review/log.jsonl", "{\"x\":1}");
  CHECK(verify_checksums(dir.path(), {"review"}).empty());

  testing::spit(dir / "sub/b.txt", "BETA");
  testing::spit(dir / "extra.txt", "new");
  std::filesystem::remove(dir / "a.txt");
  std::map<std::string, std::string> got;
  for (const auto& p : verify_checksums(dir.path(), {"review"})) got[p.path] = p.reason;
  CHECK(got == std::map<std::string, std::string>{{"a.txt", "missing"}, {"sub/b.txt", "modified"}, {"extra.txt", "untracked"}});
}
