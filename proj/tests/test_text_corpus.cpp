#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "wassos/errors.hpp"
#include "wassos/text_corpus.hpp"

using namespace wassos::corpus;
using wassos::ConfigError;
using wassos::DataError;

namespace {

DocumentCluster make_cluster(const std::string& id,
                             const std::vector<std::string>& texts) {
  DocumentCluster c;
  c.cluster_id = id;
  for (const auto& t : texts) {
    Document d;
    d.text = t;
    d.tokens = tokenize(t);
    c.documents.push_back(std::move(d));
  }
  return c;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace

TEST_CASE("tokenize basics") {
  CHECK(tokenize("The cat, sat!") ==
        std::vector<std::string>{"the", "cat", ",", "sat", "!"});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("   \t\n ") == std::vector<std::string>{});
  CHECK(tokenize("COVID-19 vaccine") ==
        std::vector<std::string>{"covid-19", "vaccine"});
  CHECK(tokenize("a-b c- -d") ==
        std::vector<std::string>{"a-b", "c", "-", "-", "d"});
  CHECK(tokenize("it's \"quoted\"") ==
        std::vector<std::string>{"it", "'", "s", "\"", "quoted", "\""});
}

TEST_CASE("tokenize is idempotent on rejoined output") {
  const std::vector<std::string> samples = {
      "The cat, sat!", "COVID-19 vaccine works... mostly",
      "Don't stop -- ever (really?)", "3.5 stars, would buy again!"};
  for (const auto& s : samples) {
    const auto once = tokenize(s);
    CHECK(tokenize(join(once)) == once);
  }
}

TEST_CASE("build_vocab reserved layout and frequency cutoff") {
  const std::vector<DocumentCluster> corpus = {make_cluster("c1", {"a a b"})};

  const Vocabulary v1 = Vocabulary::build(corpus, 1);
  REQUIRE(v1.size() == 6);
  CHECK(v1.token_at(0) == "<pad>");
  CHECK(v1.token_at(1) == "<unk>");
  CHECK(v1.token_at(2) == "<bos>");
  CHECK(v1.token_at(3) == "<eos>");
  CHECK(v1.token_at(4) == "a");  // freq 2 ahead of freq 1
  CHECK(v1.token_at(5) == "b");
  CHECK(v1.index_of("a") == 4);

  const Vocabulary v2 = Vocabulary::build(corpus, 2);
  REQUIRE(v2.size() == 5);
  CHECK(v2.contains("a"));
  CHECK(!v2.contains("b"));
  CHECK(v2.index_of("b") == Vocabulary::kUnk);
}

TEST_CASE("build_vocab deterministic ordering with ties") {
  const std::vector<DocumentCluster> corpus = {
      make_cluster("c1", {"pear apple pear", "kiwi apple banana"})};
  const Vocabulary a = Vocabulary::build(corpus, 1);
  const Vocabulary b = Vocabulary::build(corpus, 1);
  CHECK(a.tokens() == b.tokens());
  // pear and apple tie at 2 -> lexicographic; banana/kiwi tie at 1.
  CHECK(a.token_at(4) == "apple");
  CHECK(a.token_at(5) == "pear");
  CHECK(a.token_at(6) == "banana");
  CHECK(a.token_at(7) == "kiwi");
}

TEST_CASE("build_vocab errors") {
  CHECK_THROWS_AS(Vocabulary::build({}, 1), DataError);
  CHECK_THROWS_AS(Vocabulary::build({make_cluster("c", {"a"})}, 0),
                  ConfigError);
}

TEST_CASE("bow_target pinned values") {
  const std::vector<DocumentCluster> corpus = {
      make_cluster("c1", {"a a b c"})};
  const Vocabulary v = Vocabulary::build(corpus, 1);

  const BowTarget t = bow_target({"a", "a", "b"}, v);
  CHECK(t.distribution[v.index_of("a")] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(t.distribution[v.index_of("b")] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(t.distribution[v.index_of("c")] == 0.0);

  CHECK(bow_target({"a"}, v).distribution[v.index_of("a")] == 1.0);
  CHECK(bow_target({"a", "zzz"}, v).distribution[v.index_of("a")] == 1.0);

  CHECK_THROWS_AS(bow_target({"zzz", "qqq"}, v), DataError);
  CHECK_THROWS_AS(bow_target({}, v), DataError);
}

TEST_CASE("bow_target sums to 1 and keeps reserved entries at zero") {
  const std::vector<DocumentCluster> corpus = {
      make_cluster("c1", {"red green blue red", "green red yellow"})};
  const Vocabulary v = Vocabulary::build(corpus, 1);
  const BowTarget t =
      bow_target({"red", "red", "green", "blue", "mystery"}, v);
  const double total = std::accumulate(t.distribution.begin(),
                                       t.distribution.end(), 0.0);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  for (int r = 0; r < Vocabulary::kReservedCount; ++r) {
    CHECK(t.distribution[r] == 0.0);
  }
}

TEST_CASE("tag_sequence rules") {
  Document doc;
  doc.tokens = {"the", "cat", "sat"};
  CHECK(tag_sequence(doc) ==
        std::vector<std::string>{"DET", "NOUN", "VERB"});

  Document punct;
  punct.tokens = {"!"};
  CHECK(tag_sequence(punct) == std::vector<std::string>{"PUNCT"});

  Document tagged;
  tagged.tokens = {"x", "y"};
  tagged.tags = {"FOO", "BAR"};
  CHECK(tag_sequence(tagged) == std::vector<std::string>{"FOO", "BAR"});

  Document mixed;
  mixed.tokens = {"she", "quickly", "painted", "42", "colorful",
                  "walls", "and", "rested", "."};
  const auto tags = tag_sequence(mixed);
  CHECK(tags == std::vector<std::string>{"PRON", "ADV", "VERB", "NUM", "ADJ",
                                         "NOUN", "CONJ", "VERB", "PUNCT"});
}

TEST_CASE("tag_sequence length always matches token count") {
  const std::vector<std::string> texts = {
      "The quick brown fox jumps over the lazy dog!",
      "COVID-19 spread in 2020, sadly.", "???", "a"};
  for (const auto& t : texts) {
    Document doc;
    doc.tokens = tokenize(t);
    CHECK(tag_sequence(doc).size() == doc.tokens.size());
  }
}

TEST_CASE("tag inventory covers every built-in tag") {
  const std::vector<std::string> texts = {
      "The cat sat on 3 mats, quickly!", "she is very happy-ish"};
  for (const auto& t : texts) {
    Document doc;
    doc.tokens = tokenize(t);
    for (const auto& tag : tag_sequence(doc)) {
      CHECK_NOTHROW(tag_index(tag));
    }
  }
  CHECK_THROWS_AS(tag_index("FOO"), DataError);
}

TEST_CASE("jsonl round-trip reproduces clusters exactly") {
  std::vector<DocumentCluster> clusters;
  clusters.push_back(make_cluster("alpha", {"The cat, sat!", "a dog ran."}));
  clusters[0].references = {"the cat sat", "a cat sat down"};
  clusters[0].split = "train";
  clusters.push_back(make_cluster("beta", {"COVID-19 vaccine works"}));
  clusters[1].documents[0].tags =
      std::vector<std::string>{"NOUN", "NOUN", "VERB"};

  std::stringstream buf;
  save_jsonl(clusters, buf);
  const auto parsed = load_jsonl(buf);
  CHECK(parsed == clusters);
}

TEST_CASE("jsonl loader names the offending line") {
  auto load_str = [](const std::string& s) {
    std::stringstream buf(s);
    return load_jsonl(buf);
  };

  const std::string good =
      R"({"cluster_id": "c1", "documents": [{"text": "hello there"}]})";

  CHECK(load_str(good).size() == 1);
  CHECK(load_str(good + "\n\n").size() == 1);

  auto check_line2 = [&](const std::string& bad_line) {
    try {
      load_str(good + "\n" + bad_line);
      FAIL_CHECK("expected DataError for: " << bad_line);
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  };

  check_line2("{not json");
  check_line2(R"([1, 2])");
  check_line2(R"({"documents": [{"text": "x"}]})");
  check_line2(R"({"cluster_id": "c2"})");
  check_line2(R"({"cluster_id": "c2", "documents": []})");
  check_line2(R"({"cluster_id": "c2", "documents": [{"text": ""}]})");
  check_line2(R"({"cluster_id": "c2", "documents": [{"tags": ["A"]}]})");
  check_line2(
      R"({"cluster_id": "c2", "documents": [{"text": "a b", "tags": ["A"]}]})");
  check_line2(good);  // duplicate cluster_id
}

TEST_CASE("jsonl loader ignores unknown fields and reads split") {
  std::stringstream buf(
      R"({"cluster_id": "c", "documents": [{"text": "hi", "extra": 1}], "split": "eval", "zzz": true})");
  const auto clusters = load_jsonl(buf);
  REQUIRE(clusters.size() == 1);
  CHECK(clusters[0].split == "eval");
  CHECK(clusters[0].documents[0].tokens == std::vector<std::string>{"hi"});
}
