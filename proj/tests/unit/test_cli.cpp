#include <doctest.h>

#include "anomforge/genpipe.hpp"
#include "test_support.hpp"

using namespace anomforge;

TEST_CASE("cli usage errors") {
  std::string out;
  CHECK(testing::run_cli("", &out) == 1);
  CHECK(out.find("Usage") != std::string::npos);
  CHECK(testing::run_cli("frobnicate", &out) == 1);
  CHECK(out.find("usage error") != std::string::npos);
  CHECK(testing::run_cli("gen --images x", &out) == 1);
  CHECK(testing::run_cli("eval --dataset d --out r.json --top 2", &out) == 1);
  CHECK(testing::run_cli("--help", &out) == 0);
  for (const char* sub : {"gen", "filter", "detect", "eval", "stats", "make-fixtures"})
    CHECK(out.find(sub) != std::string::npos);
}

TEST_CASE("cli errors name the stage and map to exit codes") {
  testing::TempDir dir;
  std::string out;
  CHECK(testing::run_cli(fmt::format("filter --dataset {}", (dir / "nope").string()), &out) == 4);
  CHECK(out.find("anomforge filter: error:") != std::string::npos);

  std::ofstream(dir / "bad.json") << R"({"mock": {"epsilon": -1}})";
  CHECK(testing::run_cli(fmt::format("--config {} stats {}", (dir / "bad.json").string(), dir.path().string()),
                         &out) == 4);
  CHECK(testing::run_cli(fmt::format("--config {} make-fixtures --out {}", (dir / "bad.json").string(),
                                     (dir / "fx").string()),
                         &out) == 2);
  CHECK(out.find("anomforge make-fixtures: error: config.mock.epsilon: must be >= 0") != std::string::npos);

  std::ofstream(dir / "garbled.jsonl") << "{oops\n";
  CHECK(testing::run_cli(fmt::format("stats {}", (dir / "garbled.jsonl").string()), &out) == 2);
  CHECK(out.find("anomforge stats: error:") != std::string::npos);
}

TEST_CASE("cli runs the whole pipeline") {
  testing::TempDir dir;
  const auto fx = (dir / "fx").string();
  const auto ds = (dir / "ds").string();
  std::string out;
  REQUIRE(testing::run_cli(fmt::format("make-fixtures --out {} --images-per-scene 1 --masks-per-image 1", fx), &out) ==
          0);
  REQUIRE(testing::run_cli(fmt::format("--jobs 2 gen --images {0} --masks {0}/masks.json --out {1} --candidates 3 "
                                       "--per-pair 2",
                                       fx, ds),
                           &out) == 0);
  CHECK(out.find("16 tasks, 48 candidates") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "ds" / "manifest.jsonl"));

  REQUIRE(testing::run_cli(fmt::format("filter --dataset {}", ds), &out) == 0);
  CHECK(out.find("48 lines decided; 48 of 48 candidates accepted") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "ds" / "candidates"));
  const auto records = read_manifest(dir / "ds" / "manifest.jsonl");
  REQUIRE(records.size() == 48);
  for (const auto& r : records) {
    CHECK(r.decision.is_accepted());
    CHECK(std::filesystem::exists(dir / "ds" / r.image_path));
  }

  REQUIRE(testing::run_cli(fmt::format("filter --dataset {}", ds), &out) == 0);
  CHECK(out.find("0 lines decided") != std::string::npos);

  REQUIRE(testing::run_cli(fmt::format("detect --dataset {0} --functions visual --out {0}/det.jsonl", ds), &out) == 0);
  CHECK(out.find("48 samples") != std::string::npos);
  REQUIRE(testing::run_cli(
              fmt::format("eval --dataset {0} --detections {0}/det.jsonl --top 3 --out {0}/det_report.json", ds),
              &out) == 0);
  CHECK(out.find("top-1 1.0000") != std::string::npos);

  REQUIRE(testing::run_cli(fmt::format("eval --dataset {0} --metric broad --out {0}/broad.json", ds), &out) == 0);
  CHECK(out.find("broad_match: top-1 1.0000") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "ds" / "broad.confusion.csv"));
  const auto report = nlohmann::json::parse(testing::read_file(dir / "ds" / "broad.json"));
  CHECK(report.at("total") == 48);

  REQUIRE(testing::run_cli(fmt::format("stats {}", ds), &out) == 0);
  CHECK(out == "generated: 48\naccepted: 48\nrejected: 0\npending: 0\nacceptance rate: 100.0%\n");
}
