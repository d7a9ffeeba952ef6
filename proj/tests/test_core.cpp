#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>

#include <opencv2/imgcodecs.hpp>

#include "ganov/artifact.hpp"
#include "ganov/config.hpp"
#include "ganov/dataset.hpp"
#include "ganov/errors.hpp"
#include "testutil.hpp"

using namespace ganov;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

void write_pngs(const std::string& dir, int count, int side = 16,
                uint64_t seed = 5) {
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    cv::Mat m(side, side, CV_8UC3);
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x)
        for (int c = 0; c < 3; ++c)
          m.at<cv::Vec3b>(y, x)[c] =
              static_cast<uint8_t>(rng.randint(0, 255));
    char name[32];
    std::snprintf(name, sizeof(name), "img_%03d.png", i);
    cv::imwrite(dir + "/" + name, m);
  }
}

}  // namespace

TEST_CASE("config: empty file yields the documented defaults") {
  testutil::TempDir tmp("cfg_empty");
  write_file(tmp.str() + "/empty.cfg", "");
  ExperimentConfig cfg = load_config(tmp.str() + "/empty.cfg");
  CHECK(cfg.nu == 0.35);
  CHECK(cfg.lambda == 0.5);
  CHECK(cfg.suspicion_threshold == 0.60);
  CHECK(cfg.verification_batch_size == 500);
  CHECK(cfg.use_pearson_loss);
}

TEST_CASE("config: out-of-range nu raises a validation error naming the key") {
  testutil::TempDir tmp("cfg_nu");
  write_file(tmp.str() + "/bad.cfg", "nu = 1.5\n");
  try {
    load_config(tmp.str() + "/bad.cfg");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("nu") != std::string::npos);
  }
}

TEST_CASE("config: explicit threshold 0.60 round-trips exactly") {
  testutil::TempDir tmp("cfg_thr");
  write_file(tmp.str() + "/t.cfg", "# comment\nsuspicion_threshold = 0.60\n");
  CHECK(load_config(tmp.str() + "/t.cfg").suspicion_threshold == 0.60);
}

TEST_CASE("config: missing file is a load error") {
  CHECK_THROWS_AS(load_config("/nonexistent/nowhere.cfg"), IoError);
}

TEST_CASE("config: unknown keys and bad values rejected") {
  ExperimentConfig cfg;
  CHECK_THROWS_AS(apply_config_line(cfg, "not_a_key = 3"), ValidationError);
  CHECK_THROWS_AS(apply_config_line(cfg, "latent_dim = banana"), ValidationError);
  CHECK_THROWS_AS(apply_config_line(cfg, "no equals sign"), ValidationError);
}

TEST_CASE("ingest: limit semantics") {
  testutil::TempDir tmp("ingest_limit");
  write_pngs(tmp.str(), 10);
  Dataset ds = ingest_dataset(tmp.str(), {3, 8, 8}, 5);
  CHECK(ds.count() == 5);
}

TEST_CASE("ingest: non-square images are resized to the target shape") {
  testutil::TempDir tmp("ingest_aspect");
  cv::Mat m(20, 40, CV_8UC3, cv::Scalar(10, 200, 30));
  cv::imwrite(tmp.str() + "/wide.png", m);
  Dataset ds = ingest_dataset(tmp.str(), {3, 8, 8});
  REQUIRE(ds.count() == 1);
  CHECK(ds.items[0].shape == std::vector<int64_t>{3, 8, 8});
  for (float v : ds.items[0].data) {
    CHECK(v >= -1.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("ingest: two ingests of one directory agree item by item") {
  testutil::TempDir tmp("ingest_det");
  write_pngs(tmp.str(), 6);
  Dataset a = ingest_dataset(tmp.str(), {3, 8, 8});
  Dataset b = ingest_dataset(tmp.str(), {3, 8, 8});
  REQUIRE(a.count() == b.count());
  for (int64_t i = 0; i < a.count(); ++i)
    CHECK(a.items[i].data == b.items[i].data);
}

TEST_CASE("ingest: empty directory raises") {
  testutil::TempDir tmp("ingest_empty");
  CHECK_THROWS_AS(ingest_dataset(tmp.str(), {3, 8, 8}), IoError);
}

TEST_CASE("split: 9 items into 3x3 is an exact partition") {
  Dataset ds = testutil::blob_dataset(9, {1, 8, 8}, 3);
  auto parts = split_disjoint(ds, 3, 3, 42);
  REQUIRE(parts.size() == 3);
  std::set<std::vector<float>> seen;
  for (const auto& p : parts) {
    CHECK(p.count() == 3);
    for (const auto& item : p.items) seen.insert(item.data);
  }
  CHECK(seen.size() == 9);
}

TEST_CASE("split: insufficient items is a capacity error") {
  Dataset ds = testutil::blob_dataset(10, {1, 8, 8}, 3);
  try {
    split_disjoint(ds, 3, 4, 1);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    CHECK(msg.find("12") != std::string::npos);
    CHECK(msg.find("10") != std::string::npos);
  }
}

TEST_CASE("split: fixed seed reproduces the split") {
  Dataset ds = testutil::blob_dataset(20, {1, 8, 8}, 9);
  auto a = split_disjoint(ds, 2, 7, 123);
  auto b = split_disjoint(ds, 2, 7, 123);
  for (size_t p = 0; p < a.size(); ++p)
    for (int64_t i = 0; i < a[p].count(); ++i)
      CHECK(a[p].items[i].data == b[p].items[i].data);
}

TEST_CASE("split: property - subsets pairwise disjoint for random inputs") {
  Rng rng(77);
  for (int t = 0; t < 20; ++t) {
    int64_t n = rng.randint(4, 40);
    Dataset ds = testutil::blob_dataset(n, {1, 8, 8}, 100 + t);
    int64_t parts = rng.randint(1, 4);
    int64_t size = rng.randint(1, std::max<int64_t>(1, n / parts));
    if (parts * size > n) continue;
    auto out = split_disjoint(ds, parts, size, t);
    std::set<std::vector<float>> seen;
    int64_t total = 0;
    for (const auto& p : out) {
      total += p.count();
      for (const auto& item : p.items) seen.insert(item.data);
    }
    CHECK(total == parts * size);
    CHECK(static_cast<int64_t>(seen.size()) == parts * size);
  }
}

TEST_CASE("artifact: save/load round-trip is bit-exact") {
  testutil::TempDir tmp("artifact_rt");
  Tensor w({3, 4});
  Rng rng(5);
  for (float& v : w.data) v = rng.normal();
  Tensor c({4});
  for (float& v : c.data) v = rng.normal();
  save_artifact(tmp.str() + "/h", "hypersphere", {{"W", &w}, {"center", &c}},
                {{"R", 1.25}, {"nu", 0.35}});
  Artifact a = load_artifact(tmp.str() + "/h");
  CHECK(a.tensor("W").data == w.data);
  CHECK(a.tensor("W").shape == w.shape);
  CHECK(a.tensor("center").data == c.data);
  CHECK(a.scalar("R") == 1.25);
  CHECK(a.scalar("nu") == 0.35);
}

TEST_CASE("artifact: future format version is an incompatibility error") {
  testutil::TempDir tmp("artifact_ver");
  Tensor w({2});
  save_artifact(tmp.str() + "/g", "generator", {{"w", &w}}, {});
  // Bump the version in place.
  std::ifstream in(tmp.str() + "/g/manifest.json");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  in.close();
  size_t pos = text.find("\"format_version\": 1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 19, "\"format_version\": 2");
  write_file(tmp.str() + "/g/manifest.json", text);
  CHECK_THROWS_AS(load_artifact(tmp.str() + "/g"), IoError);
}

TEST_CASE("artifact: truncated tensor blob is an integrity error") {
  testutil::TempDir tmp("artifact_trunc");
  Tensor w({16});
  save_artifact(tmp.str() + "/g", "generator", {{"w", &w}}, {});
  std::filesystem::resize_file(tmp.path() / "g" / "tensors.bin", 8);
  CHECK_THROWS_AS(load_artifact(tmp.str() + "/g"), IoError);
}

TEST_CASE("artifact: unknown kind rejected on save") {
  testutil::TempDir tmp("artifact_kind");
  Tensor w({1});
  CHECK_THROWS_AS(save_artifact(tmp.str() + "/x", "wavelet", {{"w", &w}}, {}),
                  ValidationError);
}
