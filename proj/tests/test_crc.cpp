#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "prt/crc.hpp"
#include "prt/errors.hpp"
#include "scratch.hpp"

using prt::Matrix;
using prt::Vector;
namespace crc = prt::crc;

namespace {

struct Instance {
  Matrix features;  // N x p
  std::vector<int> labels;
  std::size_t classes = 2;
};

// Random instance with every class present, labels in random order.
Instance random_instance(prt::Rng& rng, std::size_t p, std::size_t n, std::size_t classes) {
  Instance in{oracle::random_matrix(n, p, rng()), std::vector<int>(n), classes};
  for (std::size_t i = 0; i < n; ++i)
    in.labels[i] = static_cast<int>(i < classes ? i : rng() % classes);
  std::shuffle(in.labels.begin(), in.labels.end(), rng);
  return in;
}

std::vector<int> column_classes(const crc::FeatureDictionary& d) {
  std::vector<int> out(d.size());
  for (const auto& b : d.classes)
    for (std::size_t j = b.start; j < b.start + b.count; ++j) out[j] = static_cast<int>(b.label);
  return out;
}

double sum(const Vector& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_SUITE("crc") {
  TEST_CASE("dictionary blocks follow class counts and columns are unit norm") {
    Instance in;
    in.features = oracle::random_matrix(384, 6, 3);
    in.labels.assign(384, 0);
    for (std::size_t i = 0; i < 35; ++i) in.labels[i * 10 + 3] = 1;
    const auto d = crc::make_dictionary(in.features, in.labels, 2);
    REQUIRE(d.classes.size() == 2);
    CHECK(d.classes[0].count == 349);
    CHECK(d.classes[1].count == 35);
    CHECK(d.classes[1].start == 349);
    for (std::size_t j = 0; j < d.size(); ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < d.dim(); ++r) s += d.columns(r, j) * d.columns(r, j);
      CHECK(std::abs(std::sqrt(s) - 1.0) < 1e-9);
    }
  }

  TEST_CASE("identity projection gives the normalized samples") {
    const std::vector<prt::nn::LayerSpec> specs = {
        {3, 3, prt::nn::Activation::identity, prt::nn::Group::representation},
        {3, 2, prt::nn::Activation::identity, prt::nn::Group::classification}};
    auto net = prt::nn::init_network(specs, 1);
    auto& w = net.layers[0].weights;
    std::fill(w.values().begin(), w.values().end(), 0.0);
    for (std::size_t i = 0; i < 3; ++i) w(i, i) = 1.0;
    prt::data::LabeledSet train{oracle::random_matrix(2, 3, 8), {1, 0}, 2};
    const auto d = crc::build_dictionary(net, train);
    for (std::size_t r = 0; r < 3; ++r) {
      CHECK(d.columns(r, 0) == doctest::Approx(train.features(1, r) / oracle::norm(train.features.row(1))));
      CHECK(d.columns(r, 1) == doctest::Approx(train.features(0, r) / oracle::norm(train.features.row(0))));
    }
  }

  TEST_CASE("missing classes and zero features are rejected") {
    const Matrix x = oracle::random_matrix(4, 3, 1);
    try {
      crc::make_dictionary(x, std::vector<int>{0, 0, 2, 2}, 3);
      FAIL("expected ValidationError");
    } catch (const prt::ValidationError& e) {
      CHECK(std::string(e.what()).find("class 1") != std::string::npos);
    }
    Matrix z = x;
    for (double& v : z.row(2)) v = 0.0;
    CHECK_THROWS_AS(crc::make_dictionary(z, std::vector<int>{0, 1, 0, 1}, 2),
                    prt::ValidationError);
  }

  TEST_CASE("self representation with tiny lambda selects the matching column") {
    prt::Rng rng(5);
    const auto in = random_instance(rng, 8, 5, 2);
    const auto d = crc::make_dictionary(in.features, in.labels, 2);
    const crc::CrcConfig cfg{1e-10, 1e-12};
    for (std::size_t j = 0; j < d.size(); ++j) {
      Vector y(d.dim());
      for (std::size_t r = 0; r < d.dim(); ++r) y[r] = 3.0 * d.columns(r, j);
      const auto alpha = crc::crc_code(d, y, cfg);
      for (std::size_t i = 0; i < alpha.size(); ++i)
        CHECK(std::abs(alpha[i] - (i == j ? 1.0 : 0.0)) < 1e-6);
      const auto q = crc::crc_probability(d, alpha, y, cfg);
      CHECK(q[static_cast<std::size_t>(column_classes(d)[j])] > 0.999999);
    }
  }

  TEST_CASE("coding matches the inversion oracle on random instances") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
      prt::Rng rng(seed);
      const std::size_t p = 1 + rng() % 16, n = 2 + rng() % 49, classes = 2 + rng() % 3;
      const auto in = random_instance(rng, p, std::max(n, classes), classes);
      const auto d = crc::make_dictionary(in.features, in.labels, classes);
      const crc::CrcConfig cfg{1e-3, 1e-12};
      const Matrix y = oracle::random_matrix(1, p, seed + 1000);
      const auto alpha = crc::crc_code(d, y.row(0), cfg);
      const auto expect = oracle::ridge_by_inversion(d.columns, y.row(0), cfg.lambda);
      for (std::size_t i = 0; i < alpha.size(); ++i)
        CHECK(std::abs(alpha[i] - expect[i]) <= 1e-8 * std::max(1.0, std::abs(expect[i])));
      const auto q = crc::crc_probability(d, alpha, y.row(0), cfg);
      CHECK(std::abs(sum(q) - 1.0) < 1e-9);
      const auto cc = column_classes(d);
      const auto qo = oracle::masked_residual_probability(d.columns, cc, classes, alpha, y.row(0),
                                                          cfg.epsilon);
      for (std::size_t c = 0; c < classes; ++c) CHECK(std::abs(q[c] - qo[c]) < 1e-9);
    }
  }

  TEST_CASE("huge lambda shrinks the code to nearly zero") {
    prt::Rng rng(2);
    const auto in = random_instance(rng, 8, 5, 2);
    const auto d = crc::make_dictionary(in.features, in.labels, 2);
    const Matrix y = oracle::random_matrix(1, 8, 3);
    CHECK(oracle::norm(crc::crc_code(d, y.row(0), {1e6, 1e-12})) < 1e-3);
  }

  TEST_CASE("equal residuals give equal probabilities") {
    Matrix x(2, 2);
    x(0, 0) = 1.0;
    x(1, 1) = 1.0;
    const auto d = crc::make_dictionary(x, std::vector<int>{0, 1}, 2);
    const Vector y = {1.0, 1.0};
    const auto q = crc::crc_probability(d, Vector{0.0, 0.0}, y, {});
    CHECK(q[0] == doctest::Approx(0.5));
    CHECK(q[1] == doctest::Approx(0.5));
  }

  TEST_CASE("permuting columns within a class leaves q unchanged") {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
      prt::Rng rng(seed);
      const auto in = random_instance(rng, 6, 20, 3);
      std::vector<std::size_t> order(20);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      Instance perm{prt::gather_rows(in.features, order), {}, 3};
      for (auto i : order) perm.labels.push_back(in.labels[i]);
      const crc::CrcSolver a(crc::make_dictionary(in.features, in.labels, 3), {});
      const crc::CrcSolver b(crc::make_dictionary(perm.features, perm.labels, 3), {});
      const Matrix y = oracle::random_matrix(1, 6, seed + 77);
      const auto qa = a.probability(y.row(0));
      const auto qb = b.probability(y.row(0));
      for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(qa[c] - qb[c]) < 1e-9);
    }
  }

  TEST_CASE("duplicating a class keeps a valid probability vector") {
    prt::Rng rng(4);
    auto in = random_instance(rng, 6, 12, 2);
    const std::size_t n = in.labels.size();
    Matrix x(2 * n, 6);
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) {
      std::ranges::copy(in.features.row(i), x.row(i).begin());
      labels.push_back(in.labels[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::ranges::copy(in.features.row(i), x.row(n + i).begin());
      labels.push_back(in.labels[i] + 2);
    }
    const crc::CrcSolver s(crc::make_dictionary(x, labels, 4), {});
    const auto q = s.probability(oracle::random_matrix(1, 6, 9).row(0));
    CHECK(std::abs(sum(q) - 1.0) < 1e-9);
    for (double v : q) CHECK((v >= 0.0 && v <= 1.0));
  }

  TEST_CASE("batch probabilities equal per-row probabilities") {
    prt::Rng rng(6);
    const auto in = random_instance(rng, 5, 30, 2);
    const crc::CrcSolver s(crc::make_dictionary(in.features, in.labels, 2), {});
    const Matrix ys = oracle::random_matrix(40, 5, 10);
    const Matrix q = s.probabilities(ys);
    for (std::size_t i = 0; i < ys.rows(); ++i) {
      const auto qi = s.probability(ys.row(i));
      CHECK(std::ranges::equal(q.row(i), qi));
    }
  }

  TEST_CASE("zero test feature and bad config are rejected") {
    prt::Rng rng(6);
    const auto in = random_instance(rng, 5, 10, 2);
    const auto d = crc::make_dictionary(in.features, in.labels, 2);
    CHECK_THROWS_AS(crc::crc_code(d, Vector(5, 0.0), {}), prt::ValidationError);
    CHECK_THROWS_AS(crc::crc_code(d, Vector(5, 1.0), {0.0, 1e-12}), prt::ValidationError);
  }

  TEST_CASE("dictionary round trip") {
    ScratchDir dir("dict");
    prt::Rng rng(7);
    const auto in = random_instance(rng, 4, 15, 3);
    const auto d = crc::make_dictionary(in.features, in.labels, 3);
    crc::save_dictionary(dir.path / "d.ckpt", d);
    CHECK(crc::load_dictionary(dir.path / "d.ckpt") == d);
  }
}
