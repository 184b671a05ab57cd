// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "ovad/error.hpp"
#include "ovad/textcorr.hpp"
#include "test_util.hpp"

using namespace ovad;
using ovad::testing::random_matrix;

namespace {

TextBank bank(const Matrix& emb) {
  TextBank b;
  for (std::size_t i = 0; i < emb.rows(); ++i) b.labels.push_back("l" + std::to_string(i));
  b.embeddings = emb;
  return b;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("correlation_weights examples") {
  const TextBank t = bank(Matrix::from_rows({{1, 0}, {std::log(3.0), 0}}));
  const Matrix p = Matrix::from_rows({{0, 2}, {1, 0}});
  const Matrix w = correlation_weights(t, p, Activation::sigmoid);
  CHECK(w(0, 0) == 0.5);
  CHECK(w(1, 1) == doctest::Approx(0.75).epsilon(1e-15));

  const TextBank r = bank(random_matrix(3, 4, 1));
  const Matrix q = random_matrix(6, 4, 2);
  const Matrix id = correlation_weights(r, q, Activation::identity);
  CHECK(testing::max_abs_diff(id, matmul_nt(r.embeddings, q)) < 1e-12);
  CHECK_THROWS_AS(correlation_weights(r, Matrix(6, 5), Activation::sigmoid), DimensionError);
}

TEST_CASE("text_attention_features examples") {
  const TextBank t = bank(random_matrix(2, 3, 3));
  const Matrix one = Matrix::from_rows({{0.3, -0.7, 1.1}});
  const Matrix w1 = correlation_weights(t, one, Activation::identity);
  const Matrix that1 = text_attention_features(t, one, w1, Activation::identity);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t d = 0; d < 3; ++d) CHECK(that1(i, d) == doctest::Approx(one(0, d)).epsilon(1e-14));

  const Matrix same = Matrix::from_rows({{0.3, -0.7, 1.1}, {0.3, -0.7, 1.1}, {0.3, -0.7, 1.1}});
  const Matrix ws = correlation_weights(t, same, Activation::identity);
  const Matrix thats = text_attention_features(t, same, ws, Activation::identity);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t d = 0; d < 3; ++d) CHECK(thats(i, d) == doctest::Approx(same(0, d)).epsilon(1e-14));
}

TEST_CASE("text_attention_features matches a loop oracle") {
  const TextBank t = bank(random_matrix(3, 4, 5));
  const Matrix p = random_matrix(7, 4, 6);
  const Matrix w = correlation_weights(t, p, Activation::sigmoid);
  const Matrix that = text_attention_features(t, p, w, Activation::sigmoid);
  for (std::size_t i = 0; i < 3; ++i) {
    double wsum = 0.0;
    for (std::size_t j = 0; j < 7; ++j) wsum += w(i, j);
    for (std::size_t d = 0; d < 4; ++d) {
      double num = 0.0;
      for (std::size_t j = 0; j < 7; ++j) num += sigmoid(w(i, j) * p(j, d));
      CHECK(std::abs(that(i, d) - num / wsum) < 1e-12);
    }
  }
}

TEST_CASE("zero weight sum names the label") {
  const TextBank t = bank(Matrix::from_rows({{1, 0}, {-1, 0}}));
  const Matrix p = Matrix::from_rows({{1, 0}, {2, 0}});
  const Matrix w = correlation_weights(t, p, Activation::relu);
  try {
    text_attention_features(t, p, w, Activation::relu);
    FAIL("expected DegenerateCorrelationError");
  } catch (const DegenerateCorrelationError& e) {
    CHECK(std::string(e.what()).find("l1") != std::string::npos);
  }
}

TEST_CASE("relevance_matrix examples") {
  const Matrix p = Matrix::from_rows({{2, 0}, {0, 3}});
  const Matrix that = Matrix::from_rows({{1, 0}});
  const Matrix a = relevance_matrix(p, that);
  CHECK(a(0, 0) == 1.0);
  CHECK(a(1, 0) == 0.0);

  const Matrix q = random_matrix(8, 5, 7);
  const Matrix th = random_matrix(3, 5, 8);
  const Matrix r = relevance_matrix(q, th);
  for (std::size_t j = 0; j < 8; ++j)
    for (std::size_t i = 0; i < 3; ++i) {
      double d = 0.0, nq = 0.0, nt = 0.0;
      for (std::size_t k = 0; k < 5; ++k) {
        d += q(j, k) * th(i, k);
        nq += q(j, k) * q(j, k);
        nt += th(i, k) * th(i, k);
      }
      CHECK(std::abs(r(j, i) - d / std::sqrt(nq * nt)) < 1e-12);
      CHECK(r(j, i) >= -1.0);
      CHECK(r(j, i) <= 1.0);
    }

  std::size_t degenerate = 0;
  const Matrix z = relevance_matrix(Matrix::from_rows({{0, 0}}), that, &degenerate);
  CHECK(z(0, 0) == 0.0);
  CHECK(degenerate == 1);
}

TEST_CASE("pointwise_softmax examples") {
  const Matrix u = pointwise_softmax(Matrix::from_rows({{0.2, 0.2, 0.2, 0.2}}), Temperature{2.0});
  for (const double v : u.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  const Matrix s = pointwise_softmax(Matrix::from_rows({{1, 0}}), Temperature{1.0});
  CHECK(s(0, 0) == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1.0)).epsilon(1e-15));
  CHECK(Temperature{}.value == doctest::Approx(2.6593).epsilon(1e-4));
  CHECK(Temperature::initial() == std::log(1.0 / 0.07));
}

TEST_CASE("argmax is invariant to tau") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix a = random_matrix(20, 5, seed);
    const auto base = predict(a);
    for (const double tau : {0.5, 2.659, 10.0}) {
      const Matrix s = pointwise_softmax(a, Temperature{tau});
      CHECK(predict(s) == base);
      for (std::size_t j = 0; j < s.rows(); ++j) {
        double sum = 0.0;
        for (const double v : s.row(j)) {
          CHECK(v > 0.0);
          CHECK(v < 1.0);
          sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
      }
    }
  }
}

TEST_CASE("weighted_nll examples") {
  const std::vector<LabelIndex> y{0, 1, 1};
  const Matrix perfect = Matrix::from_rows({{1, 0}, {0, 1}, {0, 1}});
  CHECK(weighted_nll(perfect, y, ClassWeights::uniform(2)) == 0.0);
  const Matrix uniform(3, 4, 0.25);
  CHECK(weighted_nll(uniform, y, ClassWeights::uniform(4)) ==
        doctest::Approx(3.0 * std::log(4.0)).epsilon(1e-14));

  const Matrix s = pointwise_softmax(random_matrix(6, 3, 9), Temperature{0.7});
  const std::vector<LabelIndex> g{0, 2, 1, 1, 0, 2};
  const ClassWeights w{{0.5, 2.0, 1.25}};
  double oracle = 0.0;
  for (std::size_t j = 0; j < 6; ++j) oracle -= w.omega[g[j]] * std::log(s(j, g[j]));
  CHECK(std::abs(weighted_nll(s, g, w) - oracle) < 1e-12);

  double plain = 0.0;
  for (std::size_t j = 0; j < 6; ++j) plain -= std::log(s(j, g[j]));
  CHECK(weighted_nll(s, g, ClassWeights::uniform(3)) == doctest::Approx(plain).epsilon(1e-15));
  CHECK_THROWS_AS(weighted_nll(s, std::vector<LabelIndex>{0, 0, 0, 0, 0, 3}, w), LabelError);
}

TEST_CASE("predict examples") {
  CHECK(predict(Matrix::from_rows({{0.3}, {-2}})) == std::vector<LabelIndex>{0, 0});
  CHECK(predict(Matrix::from_rows({{0.1, 0.9, 0.2, 0.9}})) == std::vector<LabelIndex>{1});
}

TEST_CASE("label permutation permutes relevance columns") {
  const TextBank t = bank(random_matrix(4, 6, 21));
  const Matrix p = random_matrix(10, 6, 22);
  const std::vector<std::string> order{"l2", "l0", "l3", "l1"};
  const TextBank tp = t.select(order);
  for (const ThatMode mode : {ThatMode::literal, ThatMode::weighted_mean, ThatMode::direct}) {
    const TextHeadConfig cfg{Activation::sigmoid, mode};
    const TextHeadTrace a = text_head_forward(t, p, Temperature{}, cfg);
    const TextHeadTrace b = text_head_forward(tp, p, Temperature{}, cfg);
    const auto pa = predict(a.relevance);
    const auto pb = predict(b.relevance);
    for (std::size_t j = 0; j < 10; ++j) {
      for (std::size_t c = 0; c < 4; ++c) {
        const std::size_t src = *t.index_of(order[c]);
        CHECK(b.relevance(j, c) == a.relevance(j, src));
        CHECK(b.probs(j, c) == doctest::Approx(a.probs(j, src)).epsilon(1e-14));
      }
      CHECK(order[pb[j]] == t.labels[pa[j]]);
    }
  }
}

TEST_CASE("duplicate embeddings give identical columns") {
  Matrix e = random_matrix(3, 5, 31);
  for (std::size_t d = 0; d < 5; ++d) e(2, d) = e(0, d);
  const TextBank t = bank(e);
  const Matrix p = random_matrix(12, 5, 32);
  const TextHeadTrace tr = text_head_forward(t, p, Temperature{}, TextHeadConfig{});
  for (std::size_t j = 0; j < 12; ++j) CHECK(tr.relevance(j, 0) == tr.relevance(j, 2));
}

TEST_CASE("full text head passes grad_check for every mode and activation") {
  const TextBank t = bank(random_matrix(4, 6, 41));
  const std::vector<LabelIndex> y{0, 1, 2, 3, 1, 2, 0, 3, 3, 1};
  const ClassWeights w{{1.2, 0.8, 1.0, 1.5}};
  for (const ThatMode mode : {ThatMode::literal, ThatMode::weighted_mean, ThatMode::direct}) {
    for (const Activation act : {Activation::sigmoid, Activation::identity}) {
      const TextHeadConfig cfg{act, mode};
      ParamSet params;
      params.add("p", random_matrix(10, 6, 42, 0.1, 1.0));
      params.add("tau", Matrix::from_rows({{0.9}}), false);
      const Objective obj = [&](ParamSet& ps, bool with_grad) {
        const Temperature tau{ps.value("tau")(0, 0)};
        const TextHeadTrace tr = text_head_forward(t, ps.value("p"), tau, cfg);
        if (with_grad) {
          const TextHeadGrads g = point_wise_loss_backward(tr, t, ps.value("p"), tau, cfg, y, w);
          ps.grad("p") = g.d_embeddings;
          ps.grad("tau")(0, 0) = g.d_tau;
        }
        return weighted_nll(tr.probs, y, w);
      };
      const GradCheckReport r = grad_check(obj, params);
      INFO(to_string(mode), " ", to_string(act), " ", r.worst_param, " ", r.max_rel_error);
      CHECK(r.passed);
    }
  }
}

TEST_CASE("text bank files round trip") {
  TextBank t = bank(random_matrix(3, 4, 51));
  const auto dir = testing::scratch_dir("textbank");
  save_textbank(t, dir / "textbank.json");
  CHECK(std::filesystem::exists(dir / "textbank.bin"));
  const TextBank back = load_textbank(dir);
  CHECK(back.labels == t.labels);
  for (std::size_t i = 0; i < 12; ++i)
    CHECK(back.embeddings.values()[i] == static_cast<double>(static_cast<float>(t.embeddings.values()[i])));
  CHECK_THROWS_AS(load_textbank(dir / "nope.json"), MissingFileError);

  TextBank dup = t;
  dup.labels[1] = "l0";
  CHECK_THROWS(dup.validate());
}
