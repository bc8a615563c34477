#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dcl/data.hpp"
#include "dcl/rng.hpp"

using namespace dcl;

namespace {

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& name, const std::string& content) {
    path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
  }
  ~TempFile() { std::error_code ec; std::filesystem::remove(path, ec); }
};

std::vector<Sample> labeled_samples(const std::vector<int>& label_ids) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < label_ids.size(); ++i) {
    Sample s;
    s.id = static_cast<int>(i);
    s.label_id = label_ids[i];
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("ingest_csv reads rows in order") {
  TempFile f("dcl_test_a.csv", "text,category\ntransfer failed,failed_transfer\n");
  const auto records = ingest_csv(f.path.string(), "text", "category");
  REQUIRE(records.size() == 1);
  CHECK(records[0].text == "transfer failed");
  CHECK(records[0].label == "failed_transfer");
}

TEST_CASE("ingest_csv header-only file yields empty list") {
  TempFile f("dcl_test_b.csv", "text,category\n");
  CHECK(ingest_csv(f.path.string(), "text", "category").empty());
}

TEST_CASE("ingest_csv handles quoting and reports bad arity with row numbers") {
  TempFile f("dcl_test_c.csv",
             "text,category\n\"hello, world\",greet\n\"she said \"\"hi\"\"\",quote\r\n");
  const auto records = ingest_csv(f.path.string(), "text", "category");
  REQUIRE(records.size() == 2);
  CHECK(records[0].text == "hello, world");
  CHECK(records[1].text == "she said \"hi\"");

  TempFile bad("dcl_test_d.csv", "text,category\nonly_one_field\n");
  try {
    ingest_csv(bad.path.string(), "text", "category");
    FAIL("expected io_error");
  } catch (const io_error& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("ingest_csv errors") {
  CHECK_THROWS_AS(ingest_csv("/nonexistent/file.csv", "text", "category"), io_error);
  TempFile f("dcl_test_e.csv", "text,intent\na,b\n");
  CHECK_THROWS_AS(ingest_csv(f.path.string(), "text", "category"), io_error);
}

TEST_CASE("ingest_jsonl basics") {
  TempFile f("dcl_test_f.jsonl",
             "{\"text\":\"book a flight\",\"label\":\"book_flight\"}\n\n");
  const auto records = ingest_jsonl(f.path.string());
  REQUIRE(records.size() == 1);
  CHECK(records[0].text == "book a flight");
  CHECK(records[0].label == "book_flight");
}

TEST_CASE("ingest_jsonl reports line numbers") {
  TempFile f("dcl_test_g.jsonl",
             "{\"text\":\"ok\",\"label\":\"a\"}\n{not json}\n");
  try {
    ingest_jsonl(f.path.string());
    FAIL("expected io_error");
  } catch (const io_error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  TempFile g("dcl_test_h.jsonl", "{\"text\":\"no label\"}\n");
  CHECK_THROWS_AS(ingest_jsonl(g.path.string()), io_error);
}

TEST_CASE("emit then ingest round-trips text and label exactly") {
  std::vector<RawRecord> records = {
      {"plain text", "a"},
      {"newline\\n and \"quotes\"", "b"},
      {"unicode \xc3\xa9\xe4\xbd\xa0 text", "c"},
      {"", "empty_text"},
  };
  // Some seeded random strings as well.
  SplitMix64 rng(42);
  for (int i = 0; i < 20; ++i) {
    std::string t;
    for (int j = 0; j < 12; ++j) t.push_back(static_cast<char>(32 + rng.below(95)));
    records.push_back({t, "label_" + std::to_string(rng.below(5))});
  }

  const auto path = std::filesystem::temp_directory_path() / "dcl_test_roundtrip.jsonl";
  emit_jsonl(records, path.string());
  const auto back = ingest_jsonl(path.string());
  std::filesystem::remove(path);
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i].text == records[i].text);
    CHECK(back[i].label == records[i].label);
  }
}

TEST_CASE("clinc-style json ingestion") {
  TempFile f("dcl_test_i.json",
             "{\"train\":[[\"a\",\"x\"],[\"b\",\"y\"]],\"val\":[[\"c\",\"x\"]],"
             "\"test\":[[\"d\",\"y\"]],\"oos_train\":[[\"e\",\"oos\"]]}");
  CHECK(ingest_clinc_json(f.path.string(), "all").size() == 4);
  CHECK(ingest_clinc_json(f.path.string(), "train").size() == 2);
  CHECK(ingest_clinc_json(f.path.string(), "val").size() == 1);
  CHECK_THROWS_AS(ingest_clinc_json(f.path.string(), "oos_train"), usage_error);

  TempFile g("dcl_test_j.json", "{\"train\":[[\"only text\"]]}");
  CHECK_THROWS_AS(ingest_clinc_json(g.path.string(), "train"), io_error);
}

TEST_CASE("build_vocab thresholds and orders deterministically") {
  // corpus {"a a b"}, min_count 2: only "a" survives.
  {
    const auto v = build_vocab({{"a", "a", "b"}}, 2);
    CHECK(v.size() == 1);
    CHECK(v.id_of("a") == 1);
    CHECK(v.id_of("b") == 0);
  }
  // Equal frequency -> lexicographic tie-break.
  {
    const auto v = build_vocab({{"x", "y"}, {"y", "x"}}, 1);
    CHECK(v.size() == 2);
    CHECK(v.id_of("x") == 1);
    CHECK(v.id_of("y") == 2);
  }
}

TEST_CASE("build_vocab is permutation invariant") {
  std::vector<std::vector<std::string>> corpus = {
      {"red", "green"}, {"green", "blue"}, {"blue", "green", "red"}, {"solo"}};
  auto shuffled = corpus;
  SplitMix64 rng(3);
  shuffle(shuffled, rng);
  const auto v1 = build_vocab(corpus, 1);
  const auto v2 = build_vocab(shuffled, 1);
  CHECK(v1.id_to_token == v2.id_to_token);
}

TEST_CASE("split is stratified and exact on balanced labels") {
  std::vector<int> labels;
  for (int i = 0; i < 100; ++i) labels.push_back(i % 2);
  const auto samples = labeled_samples(labels);
  const auto sr = split(samples, 0.2, 7);
  CHECK(sr.train.size() == 80);
  CHECK(sr.valid.size() == 20);
  int v0 = 0, v1 = 0;
  for (const auto& s : sr.valid) (s.label_id == 0 ? v0 : v1)++;
  CHECK(v0 == 10);
  CHECK(v1 == 10);
}

TEST_CASE("split is deterministic and a partition") {
  std::vector<int> labels;
  for (int i = 0; i < 333; ++i) labels.push_back(i % 7);
  const auto samples = labeled_samples(labels);
  const auto a = split(samples, 0.25, 99);
  const auto b = split(samples, 0.25, 99);
  REQUIRE(a.valid.size() == b.valid.size());
  for (std::size_t i = 0; i < a.valid.size(); ++i) CHECK(a.valid[i].id == b.valid[i].id);

  CHECK(a.train.size() + a.valid.size() == samples.size());
  std::set<int> ids;
  for (const auto& s : a.train) ids.insert(s.id);
  for (const auto& s : a.valid) CHECK(ids.insert(s.id).second);
  CHECK(ids.size() == samples.size());
}

TEST_CASE("split by exact count") {
  std::vector<int> labels;
  for (int i = 0; i < 534; ++i) labels.push_back(i % 3);
  const auto samples = labeled_samples(labels);
  const auto sr = split_by_count(samples, 50, 13);
  CHECK(sr.valid.size() == 50);
  CHECK(sr.train.size() == 484);
}

TEST_CASE("split keeps tiny labels in train with a warning") {
  std::vector<int> labels = {0, 0, 0, 0, 0, 0, 0, 0, 1};  // label 1 has one sample
  const auto samples = labeled_samples(labels);
  const auto sr = split(samples, 0.25, 5);
  for (const auto& s : sr.valid) CHECK(s.label_id == 0);
  REQUIRE(sr.warnings.size() == 1);
  CHECK(sr.warnings[0].find("label id 1") != std::string::npos);
}

TEST_CASE("split rejects bad arguments") {
  CHECK_THROWS_AS(split({}, 0.5, 1), usage_error);
  const auto samples = labeled_samples({0, 1});
  CHECK_THROWS_AS(split(samples, 0.0, 1), usage_error);
  CHECK_THROWS_AS(split(samples, 1.0, 1), usage_error);
}
