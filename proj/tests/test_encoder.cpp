// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "ovad/checkpoint.hpp"
#include "ovad/binio.hpp"
#include "ovad/encoder.hpp"
#include "ovad/error.hpp"
#include "test_util.hpp"

using namespace ovad;

namespace {

const EncoderConfig kSmall{4, {4}, 2, ModelRole::student};

PointCloud unit_tetra() {
  return {Matrix::from_rows({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}), std::nullopt};
}

}  // namespace

TEST_CASE("encoder golden fixture") {
  // recorded from the first verified build: seed-0 weights, D = 4, one hidden layer of 4, k = 2
  const Matrix expected = Matrix::from_rows({
      {-0.23438031147690083, -0.2365544068994419, 0.49912627079014832, 0.67217875287736228},
      {0.087629965652153127, 0.2282308772868486, 0.25811518134977945, 0.30019666683059254},
      {-0.38657944421312462, -0.42292212019361364, 0.3728686103118532, 0.63236432747960658},
      {0.42760452756982825, -0.49496732459637011, 0.3100985909407768, 0.50192761331417024},
  });
  const Matrix e = encode(unit_tetra(), init_encoder_weights(kSmall, 0), kSmall);
  CHECK(testing::max_abs_diff(e, expected) < 1e-12);
}

TEST_CASE("encode is permutation equivariant") {
  const EncoderConfig cfg;
  const ParamSet w = init_encoder_weights(cfg, 3);
  const PointCloud c = testing::random_cloud(64, 4);
  const Matrix e = encode(c, w, cfg);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto perm = testing::random_permutation(64, 50 + s);
    const Matrix ep = encode(testing::permute_cloud(c, perm), w, cfg);
    CHECK(testing::max_abs_diff(ep, testing::permute_rows(e, perm)) < 1e-9);
  }
}

TEST_CASE("identical points get identical embeddings") {
  PointCloud c = testing::random_cloud(10, 5);
  for (std::size_t d = 0; d < 3; ++d) c.coords(7, d) = c.coords(2, d);
  const Matrix e = encode(c, init_encoder_weights(kSmall, 1), kSmall);
  for (std::size_t j = 0; j < e.cols(); ++j) CHECK(e(2, j) == e(7, j));
}

TEST_CASE("aggregation is local") {
  // two clusters 100 apart; moving a point inside the far cluster
  Matrix m(8, 3);
  Rng rng(6);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t d = 0; d < 3; ++d) m(i, d) = rng.uniform(0.0, 0.1) + (i >= 4 ? 100.0 : 0.0);
  }
  const PointCloud a{m, std::nullopt};
  PointCloud b = a;
  b.coords(6, 1) += 0.05;
  const ParamSet w = init_encoder_weights(kSmall, 2);
  const Matrix ea = encode(a, w, kSmall);
  const Matrix eb = encode(b, w, kSmall);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < ea.cols(); ++j) CHECK(ea(i, j) == eb(i, j));
}

TEST_CASE("init_encoder_weights") {
  const EncoderConfig cfg{4, {8}, 2, ModelRole::student};
  const ParamSet a = init_encoder_weights(cfg, 11);
  const ParamSet b = init_encoder_weights(cfg, 11);
  const ParamSet c = init_encoder_weights(cfg, 12);
  Checkpoint ca{cfg, std::nullopt, a, {}};
  Checkpoint cb{cfg, std::nullopt, b, {}};
  CHECK(serialize_checkpoint(ca) == serialize_checkpoint(cb));
  CHECK_FALSE(a.value(encoder_weight_name(0)) == c.value(encoder_weight_name(0)));

  const Matrix& w0 = a.value(encoder_weight_name(0));
  REQUIRE(w0.rows() == 3);
  REQUIRE(w0.cols() == 8);
  for (const double v : w0.values()) CHECK(std::abs(v) <= std::sqrt(6.0 / 11.0));
  CHECK_FALSE(a.entry(encoder_bias_name(0)).decay);
  CHECK(a.entry(encoder_weight_name(0)).decay);
}

TEST_CASE("encoder gradient passes grad_check") {
  const EncoderConfig cfg{5, {6, 4}, 3, ModelRole::student};
  ParamSet w = init_encoder_weights(cfg, 21);
  const PointCloud c = testing::random_cloud(12, 22);
  const AnchorSet nb = knn_all(c, cfg.neighborhood_k);
  const Matrix probe = testing::random_matrix(12, 5, 23);
  const Objective obj = [&](ParamSet& ps, bool with_grad) {
    EncoderTrace trace;
    const Matrix e = encode(c, ps, cfg, nb, &trace);
    double loss = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      loss += probe.values()[i] * e.values()[i] + 0.5 * e.values()[i] * e.values()[i];
    }
    if (with_grad) {
      ps.zero_grad();
      Matrix d = probe;
      d += e;
      encode_backward(trace, d, ps, cfg);
    }
    return loss;
  };
  const GradCheckReport r = grad_check(obj, w);
  CHECK(r.passed);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("checkpoint round trip") {
  const EncoderConfig cfg{6, {5}, 2, ModelRole::student};
  Checkpoint ck{cfg, AttentionConfig{3, 3}, init_encoder_weights(cfg, 1), {{"note", "x"}}};
  ck.params.merge(init_projector_weights(6, {3, 3}, 2));
  const auto dir = testing::scratch_dir("ckpt");
  save_checkpoint(ck, dir / "a.ckpt");
  const Checkpoint back = load_checkpoint(dir / "a.ckpt");
  CHECK(back.encoder == cfg);
  CHECK(back.attention == ck.attention);
  CHECK(back.meta == ck.meta);
  const ParamSet truncated = truncate_to_f32(ck.params);
  for (const auto& [name, e] : truncated) CHECK(back.params.value(name) == e.value);

  // idempotent after the first truncation
  save_checkpoint(back, dir / "b.ckpt");
  CHECK(binio::read_file(dir / "a.ckpt") == binio::read_file(dir / "b.ckpt"));
}

TEST_CASE("checkpoint error kinds") {
  const EncoderConfig cfg{6, {5}, 2, ModelRole::student};
  const Checkpoint ck{cfg, std::nullopt, init_encoder_weights(cfg, 1), {}};
  const auto dir = testing::scratch_dir("ckpt_err");
  save_checkpoint(ck, dir / "a.ckpt");
  const std::string bytes = binio::read_file(dir / "a.ckpt");

  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), MissingFileError);
  binio::write_file(dir / "cut.ckpt", bytes.substr(0, bytes.size() - 7));
  CHECK_THROWS_AS(load_checkpoint(dir / "cut.ckpt"), CorruptFileError);
  binio::write_file(dir / "junk.ckpt", "not a checkpoint");
  CHECK_THROWS_AS(load_checkpoint(dir / "junk.ckpt"), CorruptFileError);
  CHECK_THROWS_AS(load_checkpoint(dir / "a.ckpt", 7), ShapeMismatchError);

  std::string versioned = bytes;
  const auto pos = versioned.find("\"format_version\":1");
  REQUIRE(pos != std::string::npos);
  versioned.replace(pos, 18, "\"format_version\":9");
  binio::write_file(dir / "v9.ckpt", versioned);
  CHECK_THROWS_AS(load_checkpoint(dir / "v9.ckpt"), VersionMismatchError);
}

TEST_CASE("check_encoder_weights rejects wrong shapes") {
  const EncoderConfig cfg{6, {5}, 2, ModelRole::student};
  const ParamSet w = init_encoder_weights(cfg, 1);
  EncoderConfig other = cfg;
  other.embed_dim = 7;
  CHECK_THROWS_AS(check_encoder_weights(w, other), ShapeMismatchError);
  CHECK_NOTHROW(check_encoder_weights(w, cfg));
}

TEST_CASE("teacher variant doubles widths") {
  const EncoderConfig t = EncoderConfig{}.teacher_variant();
  CHECK(t.hidden_widths == std::vector<std::size_t>{64, 64});
  CHECK(t.embed_dim == 32);
  CHECK(t.role == ModelRole::teacher);
}
