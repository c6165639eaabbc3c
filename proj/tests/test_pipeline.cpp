#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "prt/clustering.hpp"
#include "prt/data.hpp"
#include "prt/errors.hpp"
#include "prt/experiment.hpp"
#include "prt/pipeline.hpp"

namespace pl = prt::pipeline;
namespace nn = prt::nn;
using prt::Matrix;

namespace {

struct Fixture {
  prt::experiment::ExperimentConfig cfg;
  prt::data::Domains domains;
  nn::NetworkState source;

  Fixture() {
    domains = prt::data::generate_domains(cfg.synth);
    auto stage = cfg.source;
    stage.train.seed = 11;
    source = pl::pretrain_source(prt::experiment::network_specs(cfg), domains.source, stage);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

bool classifier_equal(const nn::NetworkState& a, const nn::NetworkState& b) {
  for (std::size_t l = a.representation_depth(); l < a.layers.size(); ++l)
    if (!(a.layers[l] == b.layers[l])) return false;
  return true;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("stage defaults") {
    const auto prt = pl::default_stage(pl::Stage::prt);
    CHECK(prt.train.epochs == 15);
    CHECK(prt.train.base_lr == 3e-4);
    CHECK(prt.train.batch_size == 16);
    CHECK(prt.train.frozen_groups == std::set<nn::Group>{nn::Group::classification});
    const auto tl = pl::default_stage(pl::Stage::tl);
    CHECK(tl.train.epochs == 7);
    CHECK(tl.train.classifier_lr_multiplier == 10.0);
    CHECK(tl.train.frozen_groups.empty());
  }

  TEST_CASE("stage validation enforces freezing and the multiplier") {
    auto prt = pl::default_stage(pl::Stage::prt);
    prt.train.frozen_groups.clear();
    CHECK_THROWS_AS(pl::validate(prt), prt::ConfigError);
    auto tl = pl::default_stage(pl::Stage::tl);
    tl.train.classifier_lr_multiplier = 1.0;
    CHECK_THROWS_AS(pl::validate(tl), prt::ConfigError);
  }

  TEST_CASE("source pretraining: label count, loss and accuracy") {
    const auto& f = fixture();
    CHECK(f.source.label_count == 10);
    CHECK(nn::mean_loss(f.source, f.domains.source.features, f.domains.source.labels) <
          std::log(10.0));
    CHECK(pl::accuracy(f.source, f.domains.source) >= 0.9);
  }

  TEST_CASE("source pretraining is deterministic") {
    prt::experiment::ExperimentConfig cfg;
    cfg.synth.samples_per_source_class = 30;
    const auto d = prt::data::generate_domains(cfg.synth);
    auto stage = cfg.source;
    stage.train.epochs = 3;
    stage.train.seed = 5;
    std::ostringstream log_a, log_b;
    const auto specs = prt::experiment::network_specs(cfg);
    const auto a = pl::pretrain_source(specs, d.source, stage, &log_a);
    const auto b = pl::pretrain_source(specs, d.source, stage, &log_b);
    CHECK(a == b);
    const std::string text = log_a.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  }

  TEST_CASE("prt keeps the classifier bit-identical and lowers the loss") {
    const auto& f = fixture();
    const auto pseudo = prt::clustering::make_pseudo_labels(
        f.source, f.domains.unlabeled.features, 10, 3);
    auto stage = pl::default_stage(pl::Stage::prt);
    stage.train.seed = 4;
    const auto m1 = pl::prt_train(f.source, pseudo.pseudo, stage);
    CHECK(classifier_equal(m1, f.source));
    CHECK_FALSE(m1.layers[0] == f.source.layers[0]);
    CHECK(nn::mean_loss(m1, pseudo.pseudo.features, pseudo.pseudo.labels) <
          nn::mean_loss(f.source, pseudo.pseudo.features, pseudo.pseudo.labels));
  }

  TEST_CASE("prt rejects a pseudo-label count that differs from the source labels") {
    const auto& f = fixture();
    const auto pseudo =
        prt::clustering::make_pseudo_labels(f.source, f.domains.unlabeled.features, 4, 3);
    CHECK_THROWS_AS(pl::prt_train(f.source, pseudo.pseudo, pl::default_stage(pl::Stage::prt)),
                    prt::ConfigError);
  }

  TEST_CASE("tl produces a two-label model and warns on a missing class") {
    const auto& f = fixture();
    const auto train = prt::data::subset(
        f.domains.target, std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
    std::ostringstream log;
    auto stage = pl::default_stage(pl::Stage::tl);
    stage.train.epochs = 1;
    const auto m2 = pl::tl_train(f.source, train, stage, 2, &log);
    CHECK(m2.label_count == 2);
    CHECK(m2.layers.back().weights.rows() == 2);
    CHECK(log.str().find("class 1 has no training samples") != std::string::npos);
  }

  TEST_CASE("tl wiring: one unit-gradient step moves the classifier 10x further") {
    const auto& f = fixture();
    auto s = nn::replace_head(f.source, 2, 1);
    for (auto& l : s.layers) {
      std::fill(l.weights.values().begin(), l.weights.values().end(), 0.0);
      std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    auto g = nn::Gradients::zeros_like(s);
    for (auto& w : g.weights) std::fill(w.values().begin(), w.values().end(), 1.0);
    for (auto& b : g.biases) std::fill(b.begin(), b.end(), 1.0);
    auto v = nn::Gradients::zeros_like(s);
    auto cfg = pl::default_stage(pl::Stage::tl).train;
    cfg.momentum = 0.0;
    nn::sgd_update(s, g, v, cfg);
    const double rep = s.layers.front().weights(0, 0);
    const double cls = s.layers.back().weights(0, 0);
    CHECK(rep == -cfg.base_lr);
    CHECK(cls == 10.0 * rep);
  }
}
