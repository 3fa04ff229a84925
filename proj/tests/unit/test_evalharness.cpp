#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "anomforge/evalharness.hpp"
#include "test_support.hpp"

using namespace anomforge;

namespace {

class FlakyVqa final : public VqaProvider {
 protected:
  std::string raw_answer(const RasterImage&, std::string_view, const QueryContext& ctx) const override {
    if (ctx.truth_label == "alpaca") throw provider_error("vqa: simulated outage");
    return ctx.truth_label;
  }
};

std::vector<CandidateRecord> accepted_records(const std::vector<std::string>& targets) {
  std::vector<CandidateRecord> out;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    CandidateRecord r;
    r.task = {fmt::format("t{:05d}", i), "img", "bathroom", {"img", {0, 0, 4, 4}, SizeClass::Small}, targets[i], i};
    r.decision = Decision::accepted();
    out.push_back(std::move(r));
  }
  return out;
}

const ImageLoader kBlank = [](const CandidateRecord&) { return RasterImage(8, 8); };

struct MockStack {
  std::shared_ptr<const Ontology> ontology = testing::bundled_ontology();
  std::shared_ptr<MockSemanticSpace> space = std::make_shared<MockSemanticSpace>(*ontology, MockSettings{});
  MockEmbeddingProvider embed{space};
  MockDescriptionProvider describe{ontology};
};

}  // namespace

TEST_CASE("vqa prompt") {
  CHECK(build_prompt() ==
        "Question: A context-dependent anomaly is an object that is anomalous based only on the context in which it "
        "is found. What object is the context-dependent anomaly in this scene? Short answer: ");
  CHECK(build_prompt("What is odd here?") == "What is odd here?");
  CHECK_THROWS_AS(build_prompt("   "), Error);
  EvalConfig c;
  c.prompt = "";
  CHECK_THROWS_AS(c.validate(), Error);
  c.prompt.reset();
  c.top_n = 2;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("word_match") {
  CHECK(word_match("a fire hydrant", "fire hydrant"));
  CHECK(word_match("There is a Fire-Hydrant!", "fire hydrant"));
  CHECK(word_match("APPLE", "apple"));
  CHECK_FALSE(word_match("hydrant fire", "fire hydrant"));
  CHECK_FALSE(word_match("pineapple", "apple"));
  CHECK_FALSE(word_match("apples", "apple"));
  CHECK_FALSE(word_match("", "apple"));
  CHECK(parse_metric("broad") == Metric::BroadMatch);
  CHECK(parse_metric("class_match") == Metric::ClassMatch);
  CHECK_THROWS_AS(parse_metric("fuzzy"), Error);
}

TEST_CASE("zero-shot ranking on four labels in the plane") {
  const auto ontology = testing::bundled_ontology();
  const std::vector<std::string> labels{"apple", "alpaca", "spoon", "violin"};
  const std::vector<double> angles{0.0, 0.5 * std::numbers::pi, std::numbers::pi, 1.5 * std::numbers::pi};
  testing::LookupEmbeddingProvider embed(2);
  MockDescriptionProvider describe(ontology);
  for (std::size_t i = 0; i < labels.size(); ++i)
    embed.add_text(ontology->describe_label(labels[i]), {std::cos(angles[i]), std::sin(angles[i])});
  for (int step = 0; step < 72; ++step) {
    const double theta = (5.0 * step + 2.5) * std::numbers::pi / 180.0;
    embed.add_text(fmt::format("r{}", step), {std::cos(theta), std::sin(theta)});
  }
  const ZeroShotMatcher matcher(embed, describe, labels, *ontology);

  for (int step = 0; step < 72; ++step) {
    const double theta = (5.0 * step + 2.5) * std::numbers::pi / 180.0;
    std::vector<std::pair<double, std::string>> expected;
    for (std::size_t i = 0; i < labels.size(); ++i) expected.emplace_back(-std::cos(theta - angles[i]), labels[i]);
    std::sort(expected.begin(), expected.end());
    const auto got = matcher.rank(fmt::format("r{}", step), 3, false);
    REQUIRE(got.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(got[i] == expected[i].second);
    CHECK(matcher.rank(fmt::format("r{}", step), 1, false).front() == got.front());
  }
  CHECK(matcher.response_text(" r1 ", false) == "r1");
  CHECK(matcher.response_text("apple", true) == "apple\n" + description_of(*ontology, "apple"));
}

TEST_CASE("class and broad match with mock providers") {
  MockStack m;
  for (const auto& o : m.ontology->objects()) {
    const auto top3 = class_match(o.label, *m.ontology, m.embed, m.describe, 3, true);
    REQUIRE(top3.size() == 3);
    CHECK(top3.front() == o.label);
    CHECK(class_match(o.label, *m.ontology, m.embed, m.describe, 1, true).front() == top3.front());
    const auto broad = broad_match(o.label, *m.ontology, m.embed, m.describe, 3);
    CHECK(broad.front() == o.broad_category);
  }
}

TEST_CASE("broad match of unrelated responses is at chance") {
  MockStack m;
  std::mt19937_64 rng(11);
  const auto& cats = m.ontology->broad_categories();
  std::uniform_int_distribution<std::size_t> pick(0, cats.size() - 1);
  const int trials = 2000;
  int hits = 0;
  for (int i = 0; i < trials; ++i) {
    const auto top = broad_match(fmt::format("noise{}", rng()), *m.ontology, m.embed, m.describe, 1, false);
    if (top.front() == cats[pick(rng)].label) ++hits;
  }
  CHECK(static_cast<double>(hits) / trials == doctest::Approx(0.1).epsilon(0.3));
}

TEST_CASE("evaluate") {
  MockStack m;
  const std::vector<std::string> targets{"alpaca", "apple", "alpaca", "fire hydrant", "violin"};
  const auto records = accepted_records(targets);

  SUBCASE("echoing the truth scores 1 under every metric") {
    EchoTruthVqaProvider vqa;
    for (auto metric : {Metric::WordMatch, Metric::ClassMatch, Metric::BroadMatch}) {
      EvalConfig c;
      c.metric = metric;
      c.top_n = 3;
      const auto r = evaluate(records, kBlank, {vqa, m.embed, m.describe}, c, *m.ontology);
      CHECK(r.total == 5);
      CHECK(r.top1_accuracy == 1.0);
      if (metric == Metric::WordMatch)
        CHECK_FALSE(r.top3_accuracy.has_value());
      else
        CHECK(*r.top3_accuracy == 1.0);
    }
  }
  SUBCASE("an answer that never matches scores 0") {
    FixedAnswerVqaProvider vqa("nothing unusual");
    const auto r = evaluate(records, kBlank, {vqa, m.embed, m.describe}, {}, *m.ontology);
    CHECK(r.top1_accuracy == 0.0);
  }
  SUBCASE("a fixed answer scores its label's share") {
    FixedAnswerVqaProvider vqa("an alpaca");
    const auto r = evaluate(records, kBlank, {vqa, m.embed, m.describe}, {}, *m.ontology);
    CHECK(r.top1_accuracy == doctest::Approx(0.4));
    CHECK(r.per_class.at("alpaca").top1 == 2);
    CHECK(r.per_class.at("violin").top1 == 0);
  }
  SUBCASE("provider failures leave the denominator") {
    FlakyVqa vqa;
    const auto r = evaluate(records, kBlank, {vqa, m.embed, m.describe}, {}, *m.ontology);
    CHECK(r.total == 3);
    CHECK(r.top1_accuracy == 1.0);
    REQUIRE(r.failures.size() == 2);
    CHECK(r.failures[0].sample_id == "t00000-0");
    CHECK(to_json(r).at("errors") == 2);
  }
  SUBCASE("broad match fills a 10x10 confusion matrix") {
    EchoTruthVqaProvider vqa;
    EvalConfig c;
    c.metric = Metric::BroadMatch;
    const auto r = evaluate(records, kBlank, {vqa, m.embed, m.describe}, c, *m.ontology);
    REQUIRE(r.confusion.size() == 10);
    std::size_t sum = 0;
    for (const auto& row : r.confusion) {
      CHECK(row.size() == 10);
      for (auto v : row) sum += v;
    }
    CHECK(sum == r.total);
    std::ostringstream csv;
    write_confusion_csv(r, csv);
    const auto text = csv.str();
    CHECK(text.rfind("true\\predicted,", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 11);
  }
  SUBCASE("no accepted records") {
    EchoTruthVqaProvider vqa;
    auto pending = records;
    for (auto& r : pending) r.decision = Decision::pending();
    CHECK_THROWS_AS(evaluate(pending, kBlank, {vqa, m.embed, m.describe}, {}, *m.ontology), Error);
  }
  SUBCASE("results do not depend on the worker count") {
    EchoTruthVqaProvider vqa;
    EvalConfig c;
    c.metric = Metric::ClassMatch;
    const auto one = evaluate(records, kBlank, {vqa, m.embed, m.describe}, c, *m.ontology);
    c.jobs = 4;
    CHECK(evaluate(records, kBlank, {vqa, m.embed, m.describe}, c, *m.ontology) == one);
  }
}

TEST_CASE("score_detector_results") {
  const auto manifest = accepted_records({"alpaca", "apple"});
  auto ranked = [](std::vector<std::string> labels) {
    DetectionResult d;
    for (auto& l : labels) d.ranked.push_back({{{0, 0, 1, 1}, 1.0}, l, 0.0, {}, {}, {}});
    return d;
  };
  const std::vector<SampleDetection> results{{"t00001-0", ranked({"spoon", "violin", "apple"})},
                                             {"t00000-0", ranked({"alpaca", "spoon"})}};
  const auto top1 = score_detector_results(results, manifest, 1);
  CHECK(top1.metric == "detector_all");
  CHECK(top1.top1_accuracy == 0.5);
  CHECK_FALSE(top1.top3_accuracy.has_value());
  const auto top3 = score_detector_results(results, manifest, 3);
  CHECK(*top3.top3_accuracy == 1.0);
  CHECK_THROWS_AS(score_detector_results({{"t09999-0", ranked({"alpaca"})}}, manifest, 1), Error);
  CHECK_THROWS_AS(score_detector_results({}, manifest, 1), Error);
}
