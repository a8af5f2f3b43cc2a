#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "streamhar/classifiers.hpp"
#include "streamhar/error.hpp"
#include "streamhar/hoeffding_tree.hpp"
#include "streamhar/learners.hpp"

using namespace streamhar;
using doctest::Approx;

namespace {

LearnerConfig small(std::size_t dim, std::uint64_t seed = 1) {
  LearnerConfig c;
  c.dim = dim;
  c.seed = seed;
  return c;
}

std::vector<double> point(std::initializer_list<double> head, std::size_t dim) {
  std::vector<double> v(head);
  v.resize(dim, 0.0);
  return v;
}

// Two or three Gaussian blobs in `dim` dimensions.
struct Blobs {
  std::vector<std::vector<double>> x;
  std::vector<LabelId> y;
};

Blobs blobs(std::size_t n, std::size_t dim, int classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.5);
  Blobs b;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<LabelId>(i % static_cast<std::size_t>(classes));
    std::vector<double> v(dim);
    for (std::size_t d = 0; d < dim; ++d) v[d] = 3.0 * ((d + static_cast<std::size_t>(c)) % 3) + noise(rng);
    b.x.push_back(v);
    b.y.push_back(c);
  }
  return b;
}

}  // namespace

TEST_SUITE("learners") {
  TEST_CASE("algorithm ids round-trip") {
    for (Algorithm a : kAllAlgorithms) CHECK(parse_algorithm(algorithm_id(a)) == a);
    CHECK(parse_algorithm("nse") == Algorithm::LearnNSE);
    CHECK_THROWS_AS(parse_algorithm("svm"), Error);
  }

  TEST_CASE("untrained learners predict nothing") {
    for (Algorithm a : kAllAlgorithms) {
      auto m = make_classifier(a, small(4));
      CHECK_FALSE(m->predict(point({1, 2}, 4)).has_value());
    }
  }

  TEST_CASE("one example is remembered by every learner") {
    for (Algorithm a : kAllAlgorithms) {
      INFO(algorithm_id(a));
      auto m = make_classifier(a, small(4));
      const auto v = point({1, -2, 3}, 4);
      m->learn(v, 0);
      const auto p = m->predict(v);
      REQUIRE(p);
      CHECK(p->label == 0);
      CHECK(m->examples_seen() == 1);
    }
  }

  TEST_CASE("dimension mismatches are rejected") {
    for (Algorithm a : kAllAlgorithms) {
      auto m = make_classifier(a, small(4));
      try {
        m->learn(point({1}, 3), 0);
        FAIL("expected DimensionMismatch");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
      }
      m->learn(point({1}, 4), 0);
      CHECK_THROWS_AS(m->predict(point({1}, 5)), Error);
    }
  }

  TEST_CASE("property: predict is pure and learn counts by one") {
    const auto data = blobs(120, 6, 3, 4);
    for (Algorithm a : kAllAlgorithms) {
      INFO(algorithm_id(a));
      auto m = make_classifier(a, small(6));
      for (std::size_t i = 0; i < data.x.size(); ++i) {
        const auto before = m->snapshot();
        const auto p1 = m->predict(data.x[i]);
        const auto p2 = m->predict(data.x[i]);
        CHECK(p1 == p2);
        CHECK(m->snapshot() == before);
        m->learn(data.x[i], data.y[i]);
        CHECK(m->examples_seen() == i + 1);
      }
    }
  }

  TEST_CASE("property: scores cover seen classes and the label is their argmax") {
    const auto data = blobs(90, 5, 3, 9);
    for (Algorithm a : kAllAlgorithms) {
      auto m = make_classifier(a, small(5));
      for (std::size_t i = 0; i < data.x.size(); ++i) {
        m->learn(data.x[i], data.y[i]);
        const auto p = m->predict(data.x[(i * 7) % data.x.size()]);
        REQUIRE(p);
        double best = -1;
        for (std::size_t k = 0; k < p->scores.size(); ++k) {
          CHECK(p->scores[k].label == static_cast<LabelId>(k));
          best = std::max(best, p->scores[k].score);
        }
        CHECK(p->scores[static_cast<std::size_t>(p->label)].score == best);
      }
    }
  }

  TEST_CASE("well separated blobs are learned by every learner") {
    const auto data = blobs(600, 8, 3, 2);
    for (Algorithm a : kAllAlgorithms) {
      INFO(algorithm_id(a));
      auto m = make_classifier(a, small(8));
      for (std::size_t i = 0; i < 500; ++i) m->learn(data.x[i], data.y[i]);
      int correct = 0;
      for (std::size_t i = 500; i < 600; ++i) correct += m->predict(data.x[i])->label == data.y[i];
      CHECK(correct >= 90);
    }
  }

  TEST_CASE("snapshots restore identical predictions") {
    const auto data = blobs(300, 6, 3, 12);
    for (Algorithm a : kAllAlgorithms) {
      INFO(algorithm_id(a));
      auto m = make_classifier(a, small(6, 77));
      for (std::size_t i = 0; i < 150; ++i) m->learn(data.x[i], data.y[i]);
      std::stringstream ss;
      m->save(ss);
      auto restored = load_classifier(ss);
      CHECK(restored->algorithm() == a);
      CHECK(restored->examples_seen() == m->examples_seen());
      for (std::size_t i = 150; i < 300; ++i) {
        CHECK(restored->predict(data.x[i]) == m->predict(data.x[i]));
        m->learn(data.x[i], data.y[i]);
        restored->learn(data.x[i], data.y[i]);
      }
      CHECK(restored->snapshot() == m->snapshot());
    }
  }

  TEST_CASE("corrupt snapshots are rejected") {
    std::stringstream junk("{\"not\": \"a model\"}");
    try {
      load_classifier(junk);
      FAIL("expected SnapshotFormat");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SnapshotFormat);
    }
    std::stringstream garbage("xyz");
    CHECK_THROWS_AS(load_classifier(garbage), Error);
  }

  TEST_CASE("seeded learners are reproducible") {
    const auto data = blobs(200, 6, 3, 5);
    for (Algorithm a : {Algorithm::IRF, Algorithm::IAdaBoost}) {
      auto m1 = make_classifier(a, small(6, 3));
      auto m2 = make_classifier(a, small(6, 3));
      for (std::size_t i = 0; i < data.x.size(); ++i) {
        m1->learn(data.x[i], data.y[i]);
        m2->learn(data.x[i], data.y[i]);
      }
      CHECK(m1->snapshot() == m2->snapshot());
    }
  }
}

TEST_SUITE("knn") {
  TEST_CASE("k=1 picks the nearest stored vector") {
    auto c = small(4);
    c.knn_k = 1;
    IncrementalKnn knn(c);
    knn.learn(point({0, 0}, 4), 0);
    knn.learn(point({5, 5}, 4), 1);
    CHECK(knn.predict(point({0.1, 0, 0}, 4))->label == 0);
    CHECK(knn.predict(point({5, 5}, 4))->label == 1);
  }

  TEST_CASE("k=3 majority vote") {
    auto c = small(2);
    c.knn_k = 3;
    IncrementalKnn knn(c);
    knn.learn(std::vector<double>{0, 0}, 0);
    knn.learn(std::vector<double>{0, 1}, 0);
    knn.learn(std::vector<double>{5, 5}, 1);
    const auto p = knn.predict(std::vector<double>{0, 0.5});
    CHECK(p->label == 0);
    CHECK(p->scores[0].score == Approx(2.0 / 3));
    CHECK(p->scores[1].score == Approx(1.0 / 3));
  }

  TEST_CASE("k larger than memory votes over everything") {
    IncrementalKnn knn(small(2));
    knn.learn(std::vector<double>{0, 0}, 1);
    knn.learn(std::vector<double>{9, 9}, 0);
    const auto p = knn.predict(std::vector<double>{1, 1});
    CHECK(p->scores[0].score == Approx(0.5));
    // tie broken by the smaller summed distance
    CHECK(p->label == 1);
  }

  TEST_CASE("memory evicts first in first out") {
    auto c = small(1);
    c.knn_capacity = 3;
    IncrementalKnn knn(c);
    for (double v : {1.0, 2.0, 3.0}) knn.learn(std::vector<double>{v}, 0);
    CHECK(knn.oldest() == std::vector<double>{1.0});
    knn.learn(std::vector<double>{4.0}, 1);
    CHECK(knn.memory_size() == 3);
    CHECK(knn.oldest() == std::vector<double>{2.0});
    for (int i = 0; i < 10; ++i) {
      knn.learn(std::vector<double>{10.0 + i}, 1);
      CHECK(knn.memory_size() <= 3);
    }
  }
}

TEST_SUITE("naive_bayes") {
  TEST_CASE("closed form Gaussian comparison") {
    IncrementalNaiveBayes nb(small(1));
    for (double v : {0.0, 0.5, -0.5}) nb.learn(std::vector<double>{v}, 0);
    for (double v : {10.0, 10.5, 9.5}) nb.learn(std::vector<double>{v}, 1);
    CHECK(nb.predict(std::vector<double>{1.0})->label == 0);
    CHECK(nb.predict(std::vector<double>{9.0})->label == 1);
  }

  TEST_CASE("priors sum to examples seen and variances respect the floor") {
    IncrementalNaiveBayes nb(small(2));
    for (int i = 0; i < 10; ++i) nb.learn(std::vector<double>{1.0, 1.0}, i % 3);
    double total = 0;
    for (std::size_t k = 0; k < nb.stats().n_classes(); ++k) total += nb.stats().class_weight(static_cast<LabelId>(k));
    CHECK(total == 10);
    const auto post = nb.stats().posterior(std::vector<double>{1.0, 1.0});
    for (double p : post) CHECK(std::isfinite(p));
  }

  TEST_CASE("weighted Welford matches a direct computation") {
    GaussianEstimator g;
    const std::vector<double> xs{1, 4, 2, 8, 5};
    const std::vector<double> ws{1, 2, 0.5, 1, 3};
    double sw = 0, swx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      g.add(xs[i], ws[i]);
      sw += ws[i];
      swx += ws[i] * xs[i];
    }
    const double mean = swx / sw;
    double var = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) var += ws[i] * (xs[i] - mean) * (xs[i] - mean);
    var /= sw;
    CHECK(g.mean == Approx(mean).epsilon(1e-12));
    CHECK(g.variance() == Approx(var).epsilon(1e-12));
    CHECK(g.min == 1);
    CHECK(g.max == 8);
  }
}

TEST_SUITE("hoeffding") {
  TEST_CASE("bound values") {
    CHECK(hoeffding_bound(1.0, 1e-7, 1000) == Approx(std::sqrt(16.118095650958317 / 2000)).epsilon(1e-12));
    CHECK(hoeffding_bound(1.0, 1e-7, 1000) == Approx(0.089772).epsilon(1e-5));
    CHECK(hoeffding_bound(std::log2(5.0), 1e-7, 200) == Approx(0.466099).epsilon(1e-5));
    const double e = hoeffding_bound(1.0, 1e-7, 50);
    CHECK(hoeffding_bound(1.0, 1e-7, 200) == Approx(e / 2).epsilon(1e-12));
    CHECK_THROWS_AS(hoeffding_bound(0.0, 1e-7, 10), Error);
    CHECK_THROWS_AS(hoeffding_bound(1.0, 1.0, 10), Error);
    CHECK_THROWS_AS(hoeffding_bound(1.0, 0.1, 0.5), Error);
  }

  TEST_CASE("a clean threshold split is found") {
    HoeffdingConfig cfg;
    cfg.delta = 0.01;
    cfg.grace_period = 20;
    cfg.leaf = LeafPrediction::MajorityClass;
    HoeffdingTree tree(2, cfg);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
      const double a = u(rng), b = u(rng);
      tree.learn(std::vector<double>{a, b}, a > 0.5 ? 1 : 0);
    }
    CHECK(tree.n_leaves() >= 2);
    CHECK(tree.depth() >= 1);
    const auto lo = tree.distribution(std::vector<double>{0.1, 0.5});
    const auto hi = tree.distribution(std::vector<double>{0.9, 0.5});
    CHECK(lo[0] > 0.8);
    CHECK(hi[1] > 0.8);
  }

  TEST_CASE("split candidates are ordered by merit") {
    HoeffdingTree tree(3, HoeffdingConfig{});
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 15; ++i) {
      const LabelId y = i % 2;
      tree.learn(std::vector<double>{y * 4.0 + n(rng), n(rng), n(rng)}, y);
    }
    const auto ranked = tree.rank_splits(std::vector<double>{0, 0, 0});
    REQUIRE(ranked.size() >= 2);
    CHECK(ranked[0].merit >= ranked[1].merit);
    CHECK(ranked[0].attribute == 0);
  }

  TEST_CASE("tree serialization round-trips") {
    HoeffdingConfig cfg;
    cfg.delta = 0.01;
    HoeffdingTree tree(2, cfg);
    for (int i = 0; i < 500; ++i) tree.learn(std::vector<double>{i % 10 / 10.0, 0.5}, i % 10 >= 5);
    const auto copy = HoeffdingTree::from_json(tree.to_json());
    CHECK(copy.n_nodes() == tree.n_nodes());
    CHECK(copy.distribution(std::vector<double>{0.2, 0.5}) == tree.distribution(std::vector<double>{0.2, 0.5}));
  }
}

TEST_SUITE("boosting") {
  TEST_CASE("fresh stage lambda update, misclassified and correct") {
    std::vector<BoostStageState> wrong(2), right(2);
    for (auto* stages : {&wrong, &right})
      for (auto& s : *stages) s.model = GaussianClassStats(1);
    // stage 0 has never seen class 1, so with zero copies it cannot be right
    std::vector<double> lambdas;
    oza_boost_update(wrong, std::vector<double>{0.0}, 1, [&](double l) {
      lambdas.push_back(l);
      return 0;
    });
    CHECK(wrong[0].lambda_wrong == 1.0);
    CHECK(wrong[0].lambda_correct == 0.0);
    REQUIRE(lambdas.size() == 2);
    CHECK(lambdas[1] == 0.5);

    lambdas.clear();
    oza_boost_update(right, std::vector<double>{0.0}, 0, [&](double l) {
      lambdas.push_back(l);
      return 1;
    });
    CHECK(right[0].lambda_correct == 1.0);
    CHECK(lambdas[1] == 0.5);
  }

  TEST_CASE("stage error and vote weight") {
    BoostStageState s;
    s.lambda_correct = 2;
    s.lambda_wrong = 2;
    CHECK(s.error() == 0.5);
    CHECK(s.vote_weight() == Approx(0.0));
    s.lambda_wrong = 0;
    CHECK(s.error() == 0);
    CHECK(std::isfinite(s.vote_weight()));
    CHECK(s.vote_weight() > 0);
    s.lambda_correct = 0;
    s.lambda_wrong = 3;
    CHECK(s.vote_weight() == Approx(0.0));
  }

  TEST_CASE("property: stage lambdas stay non-negative and errors in [0,1]") {
    IncrementalAdaBoost boost(small(3, 8));
    const auto data = blobs(200, 3, 3, 8);
    for (std::size_t i = 0; i < data.x.size(); ++i) {
      boost.learn(data.x[i], data.y[i]);
      for (const auto& s : boost.stages()) {
        CHECK(s.lambda_correct >= 0);
        CHECK(s.lambda_wrong >= 0);
        CHECK(s.error() >= 0);
        CHECK(s.error() <= 1);
      }
    }
  }

  TEST_CASE("Poisson sampling") {
    std::mt19937_64 a(5), b(5);
    for (int i = 0; i < 100; ++i) CHECK(online_bagging_sample(1.0, a) == online_bagging_sample(1.0, b));
    std::mt19937_64 rng(6);
    double sum = 0;
    for (int i = 0; i < 100000; ++i) sum += static_cast<double>(online_bagging_sample(1.0, rng));
    CHECK(sum / 100000 == Approx(1.0).epsilon(0.02));
    std::mt19937_64 c(7), d(7);
    for (int i = 0; i < 10; ++i) CHECK(online_bagging_sample(0.0, c) == 0);
    CHECK(c() == d());
  }
}

TEST_SUITE("forest") {
  TEST_CASE("trees receive fixed feature subsets") {
    auto c = small(20, 4);
    c.forest_size = 10;
    c.forest_subset = 5;
    IncrementalRandomForest rf(c);
    CHECK(rf.size() == 10);
    for (std::size_t t = 0; t < rf.size(); ++t) {
      const auto& s = rf.subset(t);
      CHECK(s.size() == 5);
      for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] > s[i - 1]);
      CHECK(s.back() < 20);
    }
    auto d = small(98);
    IncrementalRandomForest def(d);
    CHECK(def.subset(0).size() == 10);
  }
}

TEST_SUITE("nse") {
  TEST_CASE("chunk of three: two learns buffer, the third updates") {
    auto c = small(2);
    c.nse_chunk = 3;
    LearnNse nse(c);
    nse.learn(std::vector<double>{0, 0}, 0);
    nse.learn(std::vector<double>{1, 1}, 1);
    CHECK(nse.buffered() == 2);
    CHECK(nse.members().empty());
    nse.learn(std::vector<double>{0, 0.1}, 0);
    CHECK(nse.buffered() == 0);
    CHECK(nse.members().size() == 1);
    CHECK(nse.chunks_processed() == 1);
  }

  TEST_CASE("empty chunks are rejected") {
    LearnNse nse(small(2));
    try {
      nse.update({});
      FAIL("expected EmptyChunk");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyChunk);
    }
  }

  TEST_CASE("error 0.1 gives beta 1/9 and weight ln 9") {
    NseMember m;
    m.born = 1;
    m.betas = {0.1 / 0.9};
    const NseParams p;
    CHECK(nse_weighted_beta(m, p) == Approx(1.0 / 9).epsilon(1e-12));
    CHECK(std::log(1.0 / nse_weighted_beta(m, p)) == Approx(std::log(9.0)).epsilon(1e-12));
  }

  TEST_CASE("a singleton lifetime weight is exactly one") {
    NseMember m;
    m.betas = {0.37};
    CHECK(nse_weighted_beta(m, NseParams{}) == 0.37);
  }

  TEST_CASE("sigmoid weights favour recent errors") {
    NseMember m;
    m.betas.assign(30, 0.5);
    m.betas.back() = 0.01;
    NseParams p;
    const double recent_good = nse_weighted_beta(m, p);
    m.betas.assign(30, 0.5);
    m.betas.front() = 0.01;
    CHECK(recent_good < nse_weighted_beta(m, p));
  }

  TEST_CASE("property: voting weights are non-negative and the buffer stays below B") {
    auto c = small(4, 3);
    LearnNse nse(c);
    const auto data = blobs(400, 4, 3, 10);
    for (std::size_t i = 0; i < data.x.size(); ++i) {
      nse.learn(data.x[i], data.y[i]);
      CHECK(nse.buffered() < nse.chunk_size());
      for (const auto& m : nse.members()) CHECK(m.weight >= 0);
    }
    CHECK(nse.members().size() == 20);
  }
}
