#include "doctest.h"

#include <set>

#include "lyricsense/corpus.hpp"
#include "lyricsense/error.hpp"
#include "lyricsense/synthetic.hpp"
#include "test_util.hpp"

using namespace lyricsense;
using testutil::TempDir;
using testutil::write_file;

namespace {

std::string record(const std::string& id, const std::string& kind,
                   const std::vector<std::string>& files, int violence = 0) {
  nlohmann::json j = {{"item_id", id},
                      {"title", "T " + id},
                      {"kind", kind},
                      {"ratings",
                       {{"violence", violence},
                        {"substance", 1},
                        {"sex", 2},
                        {"consumerism", 4},
                        {"positive", 5}}},
                      {"lyrics", files}};
  return j.dump() + "\n";
}

MusicItem item_with(const std::string& id, std::array<int, 5> raw,
                    ItemKind kind = ItemKind::Album) {
  MusicItem it;
  it.item_id = id;
  it.title = id;
  it.kind = kind;
  it.ratings = AspectRatings::from_raw(raw, id);
  it.songs = {Song{id + ".txt", {"line one", "line two"}}};
  return it;
}

// Corpus whose per-level counts for one aspect follow `counts`.
Corpus corpus_with_counts(Aspect a, std::array<int, 3> counts) {
  Corpus c;
  int n = 0;
  for (int lv = 0; lv < 3; ++lv) {
    for (int k = 0; k < counts[static_cast<std::size_t>(lv)]; ++k) {
      std::array<int, 5> raw{};
      raw[index(a)] = 2 * lv;
      c.push_back(item_with("i" + std::to_string(n++), raw));
    }
  }
  return c;
}

}  // namespace

TEST_CASE("project_rating splits at the medians") {
  CHECK(project_rating(0) == SeverityLevel::Low);
  CHECK(project_rating(1) == SeverityLevel::Low);
  CHECK(project_rating(2) == SeverityLevel::Medium);
  CHECK(project_rating(3) == SeverityLevel::Medium);
  CHECK(project_rating(4) == SeverityLevel::High);
  CHECK(project_rating(5) == SeverityLevel::High);
  for (int a = 0; a <= 5; ++a)
    for (int b = a; b <= 5; ++b) CHECK(project_rating(a) <= project_rating(b));
}

TEST_CASE("project_rating rejects out-of-range scores with context") {
  try {
    project_rating(7, "alb1", "violence");
    FAIL("expected rejection");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("score out of range") != std::string::npos);
    CHECK(msg.find("alb1") != std::string::npos);
    CHECK(msg.find("violence") != std::string::npos);
  }
  CHECK_THROWS_AS(project_rating(-1), InputError);
}

TEST_CASE("aspect order and codes are fixed") {
  CHECK(index(Aspect::Violence) == 0);
  CHECK(index(Aspect::Positive) == 4);
  CHECK(code(SeverityLevel::Low) == 0);
  CHECK(code(SeverityLevel::High) == 2);
  CHECK(aspect_key(Aspect::Consumerism) == "consumerism");
  CHECK(parse_aspect("sex") == Aspect::Sex);
  CHECK_FALSE(parse_aspect("drugs").has_value());
}

TEST_CASE("normalize_sentence trims and drops content-free lines") {
  CHECK(normalize_sentence("  hello world \r") == "hello world");
  CHECK(normalize_sentence("") == "");
  CHECK(normalize_sentence("   \t ") == "");
  CHECK(normalize_sentence("...!!! --") == "");
  CHECK(normalize_sentence("(Star)") == "(Star)");
}

TEST_CASE("load_manifest reads items in manifest order") {
  TempDir dir("corpus_load");
  write_file(dir / "lyrics/a/1.txt", "first line\nsecond line\n\nthird line\n");
  write_file(dir / "lyrics/b/1.txt", "x one\n  x two  \n---\nx three\n");
  write_file(dir / "manifest.jsonl",
             record("a", "album", {"a/1.txt"}) + record("b", "single", {"b/1.txt"}, 4));
  const Corpus c = load_manifest(dir / "manifest.jsonl", dir / "lyrics");
  REQUIRE(c.size() == 2);
  CHECK(c[0].item_id == "a");
  CHECK(c[1].item_id == "b");
  CHECK(c[0].songs.at(0).sentences ==
        std::vector<std::string>{"first line", "second line", "third line"});
  CHECK(c[1].songs.at(0).sentences ==
        std::vector<std::string>{"x one", "x two", "x three"});
  CHECK(c[1].kind == ItemKind::Single);
  CHECK(c[1].ratings.level(Aspect::Violence) == SeverityLevel::High);
  CHECK(c[0].ratings.level(Aspect::Consumerism) == SeverityLevel::High);
  CHECK(c[0].ratings.raw_score(Aspect::Sex) == 2);
}

TEST_CASE("load_manifest rejects bad records with the record index") {
  TempDir dir("corpus_bad");
  write_file(dir / "lyrics/a.txt", "line\n");
  auto expect_error = [&](const std::string& manifest, const std::string& needle) {
    write_file(dir / "m.jsonl", manifest);
    try {
      load_manifest(dir / "m.jsonl", dir / "lyrics");
      FAIL("expected rejection for: " << needle);
    } catch (const InputError& e) {
      INFO(e.what());
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_error(record("a", "album", {"a.txt"}) + record("a", "album", {"a.txt"}),
               "duplicate item_id");
  expect_error(record("a", "album", {"a.txt"}) + record("b", "album", {"a.txt"}, 7),
               "manifest record 1");
  expect_error(record("a", "album", {"a.txt"}, 7), "score out of range");
  expect_error(record("a", "tape", {"a.txt"}), "kind");
  expect_error("{not json}\n", "manifest record 0");

  nlohmann::json missing = nlohmann::json::parse(record("a", "album", {"a.txt"}));
  missing["ratings"].erase("positive");
  expect_error(missing.dump() + "\n", "positive");

  nlohmann::json extra = nlohmann::json::parse(record("a", "album", {"a.txt"}));
  extra["ratings"]["drugs"] = 1;
  expect_error(extra.dump() + "\n", "unknown rating aspect");
}

TEST_CASE("missing lyrics files: skipped with a warning, fatal when none resolve") {
  TempDir dir("corpus_missing");
  write_file(dir / "lyrics/a.txt", "line\n");
  write_file(dir / "m.jsonl", record("a", "album", {"a.txt", "gone.txt"}));
  {
    testutil::WarningCapture w;
    const Corpus c = load_manifest(dir / "m.jsonl", dir / "lyrics");
    CHECK(c.at(0).songs.size() == 1);
    CHECK(w.messages.find("gone.txt") != std::string::npos);
  }
  write_file(dir / "m.jsonl", record("a", "album", {"absent.txt"}));
  testutil::WarningCapture quiet;
  try {
    load_manifest(dir / "m.jsonl", dir / "lyrics");
    FAIL("expected rejection");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("absent.txt") != std::string::npos);
  }
}

TEST_CASE("write_manifest and load_manifest round-trip") {
  TempDir dir("corpus_roundtrip");
  SyntheticCorpusConfig cfg;
  cfg.n_items = 12;
  cfg.seed = 5;
  const Corpus original = synthetic_corpus(cfg);
  write_manifest(original, dir / "m.jsonl", dir / "lyrics");
  const Corpus loaded = load_manifest(dir / "m.jsonl", dir / "lyrics");
  CHECK(loaded == original);
}

TEST_CASE("label_distribution counts per level") {
  const Corpus c = corpus_with_counts(Aspect::Violence, {844, 190, 85});
  auto d = label_distribution(c, Aspect::Violence);
  CHECK(d[SeverityLevel::Low] == 844);
  CHECK(d[SeverityLevel::Medium] == 190);
  CHECK(d[SeverityLevel::High] == 85);

  const Corpus sex = corpus_with_counts(Aspect::Sex, {663, 319, 137});
  auto ds = label_distribution(sex, Aspect::Sex);
  CHECK(ds[SeverityLevel::Low] == 663);
  CHECK(ds[SeverityLevel::Medium] == 319);
  CHECK(ds[SeverityLevel::High] == 137);

  const Corpus one = {item_with("m", {2, 0, 0, 0, 0})};
  auto d1 = label_distribution(one, Aspect::Violence);
  CHECK(d1[SeverityLevel::Low] == 0);
  CHECK(d1[SeverityLevel::Medium] == 1);
  CHECK(d1[SeverityLevel::High] == 0);

  SyntheticCorpusConfig cfg;
  cfg.n_items = 57;
  const Corpus syn = synthetic_corpus(cfg);
  for (Aspect a : kAllAspects) {
    std::size_t total = 0;
    for (auto [lv, n] : label_distribution(syn, a)) total += n;
    CHECK(total == syn.size());
  }
}

TEST_CASE("kind_distribution gives fractions per kind") {
  Corpus c;
  for (int i = 0; i < 3; ++i) c.push_back(item_with("a" + std::to_string(i), {}, ItemKind::Album));
  for (int i = 0; i < 2; ++i) c.push_back(item_with("s" + std::to_string(i), {}, ItemKind::Single));
  auto d = kind_distribution(c);
  CHECK(d["album"] == doctest::Approx(0.6));
  CHECK(d["single"] == doctest::Approx(0.4));

  Corpus big;
  for (int i = 0; i < 1119; ++i)
    big.push_back(item_with(std::to_string(i), {}, i < 696 ? ItemKind::Album : ItemKind::Single));
  auto db = kind_distribution(big);
  CHECK(db["album"] == doctest::Approx(0.622).epsilon(0.001));
  CHECK(db["single"] == doctest::Approx(0.378).epsilon(0.001));
}

TEST_CASE("make_folds partitions with balanced, stratified folds") {
  SyntheticCorpusConfig cfg;
  cfg.n_items = 100;
  cfg.seed = 3;
  const Corpus c = synthetic_corpus(cfg);
  const FoldPlan plan = make_folds(c, 10, 7);
  CHECK(plan.n_folds == 10);
  CHECK(plan.assignments.size() == 100);
  CHECK(plan.stratified_on == "violence");
  CHECK(plan.dev_fraction == doctest::Approx(1.0 / 9.0));
  for (auto n : plan.fold_sizes()) CHECK(n == 10);

  // Per-level counts differ by at most one across folds.
  for (int lv = 0; lv < 3; ++lv) {
    std::vector<int> per_fold(10, 0);
    for (const auto& it : c)
      if (code(it.ratings.level(Aspect::Violence)) == lv) ++per_fold[static_cast<std::size_t>(plan.fold_of(it.item_id))];
    const auto [lo, hi] = std::minmax_element(per_fold.begin(), per_fold.end());
    CHECK(*hi - *lo <= 1);
  }

  const FoldPlan again = make_folds(c, 10, 7);
  CHECK(again.assignments == plan.assignments);
  const FoldPlan other = make_folds(c, 10, 8);
  CHECK(other.assignments != plan.assignments);

  const FoldPlan odd = make_folds(std::span(c).first(23), 10, 1);
  auto sizes = odd.fold_sizes();
  CHECK(*std::max_element(sizes.begin(), sizes.end()) -
            *std::min_element(sizes.begin(), sizes.end()) <= 1);
}

TEST_CASE("make_folds preconditions") {
  SyntheticCorpusConfig cfg;
  cfg.n_items = 9;
  const Corpus c = synthetic_corpus(cfg);
  CHECK_THROWS_AS(make_folds(c, 10, 0), InputError);
  CHECK_THROWS_AS(make_folds(c, 1, 0), InputError);
}

TEST_CASE("split_fold separates test, dev and train") {
  SyntheticCorpusConfig cfg;
  cfg.n_items = 90;
  const Corpus c = synthetic_corpus(cfg);
  const FoldPlan plan = make_folds(c, 10, 2);
  std::set<std::size_t> all_test;
  for (int f = 0; f < 10; ++f) {
    const FoldSplit s = split_fold(plan, c, f);
    CHECK(s.test.size() == 9);
    CHECK(s.dev.size() == 9);
    CHECK(s.train.size() == 72);
    std::set<std::size_t> seen;
    for (const auto* part : {&s.train, &s.dev, &s.test})
      for (auto i : *part) CHECK(seen.insert(i).second);
    CHECK(seen.size() == c.size());
    for (auto i : s.test) {
      CHECK(plan.fold_of(c[i].item_id) == f);
      all_test.insert(i);
    }
    const FoldSplit again = split_fold(plan, c, f);
    CHECK(again.dev == s.dev);
  }
  CHECK(all_test.size() == c.size());
  CHECK_THROWS_AS(split_fold(plan, c, 10), InputError);
}

TEST_CASE("FoldPlan JSON round-trip") {
  SyntheticCorpusConfig cfg;
  cfg.n_items = 20;
  const Corpus c = synthetic_corpus(cfg);
  const FoldPlan plan = make_folds(c, 4, 11);
  const FoldPlan back = FoldPlan::from_json(plan.to_json());
  CHECK(back.assignments == plan.assignments);
  CHECK(back.n_folds == plan.n_folds);
  CHECK(back.seed == plan.seed);
  CHECK(back.dev_fraction == plan.dev_fraction);
  CHECK(back.stratified_on == plan.stratified_on);
}
