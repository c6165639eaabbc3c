#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "prt/data.hpp"
#include "prt/errors.hpp"
#include "scratch.hpp"

namespace data = prt::data;

namespace {

data::LabeledSet two_class(std::size_t neg, std::size_t pos) {
  data::LabeledSet s{oracle::random_matrix(neg + pos, 2, neg * 31 + pos), {}, 2};
  for (std::size_t i = 0; i < neg + pos; ++i) s.labels.push_back(i < neg ? 0 : 1);
  return s;
}

data::SynthConfig small_synth() {
  data::SynthConfig c;
  c.samples_per_source_class = 20;
  c.unlabeled_count = 50;
  c.target_positives = 30;
  c.target_negatives = 25;
  return c;
}

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("block sizes: 10 gives 2s and 349 gives 70,70,70,70,69") {
    CHECK(data::block_sizes(10, 5) == std::vector<std::size_t>{2, 2, 2, 2, 2});
    CHECK(data::block_sizes(349, 5) == std::vector<std::size_t>{70, 70, 70, 70, 69});
  }

  TEST_CASE("test blocks partition the set and are class-stratified") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      prt::Rng rng(seed);
      const std::size_t folds = 2 + rng() % 6;
      const auto set = two_class(folds + rng() % 40, folds + rng() % 40);
      const auto plan = data::make_folds(set, folds);
      REQUIRE(plan.folds.size() == folds);
      std::vector<int> hits(set.size(), 0);
      for (const auto& f : plan.folds) {
        CHECK(f.train.size() + f.test.size() == set.size());
        for (auto i : f.test) ++hits[i];
        std::vector<std::size_t> both = f.train;
        both.insert(both.end(), f.test.begin(), f.test.end());
        std::sort(both.begin(), both.end());
        CHECK(std::adjacent_find(both.begin(), both.end()) == both.end());
      }
      CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
      for (int c = 0; c < 2; ++c) {
        const auto sizes = data::block_sizes(set.count(c), folds);
        for (std::size_t f = 0; f < folds; ++f) {
          const auto n = std::count_if(plan.folds[f].test.begin(), plan.folds[f].test.end(),
                                       [&](std::size_t i) { return set.labels[i] == c; });
          CHECK(static_cast<std::size_t>(n) == sizes[f]);
        }
      }
    }
  }

  TEST_CASE("a class smaller than the fold count is rejected") {
    CHECK_THROWS_AS(data::make_folds(two_class(10, 3), 5), prt::ValidationError);
  }

  TEST_CASE("imbalance keeps a ceiling fraction of positives") {
    CHECK(data::kept_positives(280, 10) == 28);
    CHECK(data::kept_positives(279, 10) == 28);
    CHECK(data::kept_positives(279, 25) == 70);
    CHECK(data::kept_positives(279, 100) == 279);
    CHECK_THROWS_AS(data::kept_positives(100, 30), prt::ValidationError);
    CHECK_THROWS_AS(data::kept_positives(100, 0), prt::ValidationError);

    const auto train = two_class(279, 280);
    const auto cut = data::apply_imbalance(train, 1, 10);
    CHECK(cut.count(1) == 28);
    CHECK(cut.count(0) == 279);
    const auto same = data::apply_imbalance(train, 1, 100);
    CHECK(same == train);
  }

  TEST_CASE("imbalance keeps the earliest positives in order") {
    const auto train = two_class(5, 20);
    const auto cut = data::apply_imbalance(train, 1, 25);
    REQUIRE(cut.size() == 10);
    for (std::size_t i = 0; i < cut.size(); ++i)
      CHECK(std::ranges::equal(cut.features.row(i), train.features.row(i)));
  }

  TEST_CASE("default counts and determinism") {
    data::SynthConfig def;
    CHECK(def.target_positives == 349);
    CHECK(def.target_negatives == 349);
    const auto cfg = small_synth();
    const auto a = data::generate_domains(cfg);
    const auto b = data::generate_domains(cfg);
    CHECK(a.source == b.source);
    CHECK(a.target == b.target);
    CHECK(a.unlabeled == b.unlabeled);
    CHECK(a.source.size() == 200);
    CHECK(a.target.count(1) == 30);
    CHECK(a.target.count(0) == 25);
    CHECK(a.unlabeled.features.rows() == 50);
    auto other = cfg;
    other.seed = 2;
    CHECK_FALSE(data::generate_domains(other).target == a.target);
  }

  TEST_CASE("target class means are anchor plus shift") {
    for (double shift : {0.0, 13.3}) {
      auto cfg = small_synth();
      cfg.shift = shift;
      cfg.target_positives = cfg.target_negatives = 2000;
      const auto d = data::generate_domains(cfg);
      CHECK(std::abs(oracle::norm(d.shift_vector) - shift) < 1e-12);
      for (std::size_t c = 0; c < 2; ++c) {
        const std::size_t anchor = c == 0 ? cfg.negative_anchor : cfg.positive_anchor;
        for (std::size_t k = 0; k < cfg.dim; ++k) {
          CHECK(d.target_means(c, k) ==
                doctest::Approx(d.source_means(anchor, k) + d.shift_vector[k]).epsilon(1e-12));
          double mean = 0.0;
          for (std::size_t i = 0; i < d.target.size(); ++i)
            if (d.target.labels[i] == static_cast<int>(c)) mean += d.target.features(i, k);
          mean /= 2000.0;
          CHECK(std::abs(mean - d.target_means(c, k)) < 0.1);
        }
      }
    }
  }

  TEST_CASE("negatives are stored before positives") {
    const auto d = data::generate_domains(small_synth());
    CHECK(std::is_sorted(d.target.labels.begin(), d.target.labels.end()));
  }

  TEST_CASE("invalid synthesis settings are rejected") {
    auto c = small_synth();
    c.positive_anchor = c.negative_anchor;
    CHECK_THROWS_AS(data::validate(c), prt::ValidationError);
    c = small_synth();
    c.noise = 0.0;
    CHECK_THROWS_AS(data::validate(c), prt::ValidationError);
  }

  TEST_CASE("dataset files round trip") {
    ScratchDir dir("dataset");
    const auto d = data::generate_domains(small_synth());
    data::save_dataset(dir.path / "t.bin", d.target);
    data::save_dataset(dir.path / "u.bin", d.unlabeled);
    CHECK(data::load_labeled(dir.path / "t.bin") == d.target);
    CHECK(data::load_unlabeled(dir.path / "u.bin") == d.unlabeled);
    CHECK_THROWS_AS(data::load_labeled(dir.path / "u.bin"), prt::IoError);
  }
}
