/*
 * Copyright 2026 The scs2s Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "oracles.hpp"
#include "scs2s/model.hpp"

namespace scs2s {
namespace {

ModelConfig small_config(CellType cell, std::size_t layers, bool attention,
                         std::size_t hidden = 8, std::size_t vocab = 12) {
  ModelConfig c;
  c.cell = cell;
  c.layers = layers;
  c.hidden = hidden;
  c.vocab_size = vocab;
  c.attention = attention;
  c.dropout_keep = 1.0;
  return c;
}

struct GradCase {
  CellType cell;
  std::size_t layers;
  bool attention;
};

class FullModelGradient : public ::testing::TestWithParam<GradCase> {};

TEST_P(FullModelGradient, MatchesCentralDifferences) {
  const auto p = GetParam();
  const double err = seq2seq_grad_check(small_config(p.cell, p.layers, p.attention), 6, 2, 11);
  EXPECT_LT(err, 1e-4);
}

INSTANTIATE_TEST_SUITE_P(
    AllShapes, FullModelGradient,
    ::testing::Values(GradCase{CellType::gru, 1, true}, GradCase{CellType::gru, 2, true},
                      GradCase{CellType::gru, 3, true}, GradCase{CellType::gru, 1, false},
                      GradCase{CellType::gru, 2, false}, GradCase{CellType::gru, 3, false},
                      GradCase{CellType::simple_rnn, 1, true}, GradCase{CellType::simple_rnn, 2, true},
                      GradCase{CellType::simple_rnn, 3, true}, GradCase{CellType::simple_rnn, 1, false},
                      GradCase{CellType::simple_rnn, 2, false}, GradCase{CellType::simple_rnn, 3, false}),
    [](const auto& info) {
      return to_string(info.param.cell) + "_l" + std::to_string(info.param.layers) +
             (info.param.attention ? "_att" : "_fixed");
    });

TEST(Precision, ExtendedModelAgreesWithDoubleModel) {
  const ModelConfig cfg = small_config(CellType::gru, 2, true);
  Rng rng(5);
  Seq2Seq narrow(cfg);
  narrow.initialize(rng, 0.5);
  BasicSeq2Seq<long double> wide(cfg);
  for (std::size_t s = 0; s < narrow.params().size(); ++s)
    wide.params()[s].value = narrow.params()[s].value.cast<long double>();
  TokenMatrix src(1, 4), tin(1, 3), tout(1, 3);
  src << 4, 5, 6, 7;
  tin << 1, 8, 9;
  tout << 8, 9, 2;
  const Matrix sm = Matrix::Ones(1, 4), tm = Matrix::Ones(1, 3);
  const double a = narrow.loss_and_grad(src, sm, tin, tout, tm);
  const long double b = wide.loss_and_grad(src, sm, tin, tout, tm);
  EXPECT_NEAR(a, static_cast<double>(b), 1e-12);
  for (std::size_t s = 0; s < narrow.params().size(); ++s) {
    const Matrix g = wide.params()[s].grad.cast<double>();
    EXPECT_LT((narrow.params()[s].grad - g).cwiseAbs().maxCoeff(), 1e-12) << narrow.params()[s].name;
  }
}

TEST(Precision, DoubleOnlyCheckStaysClose) {
  // Without extended precision the quotient noise is ~1e-11 absolute, so
  // only a loose bound holds for every coordinate.
  const double err = seq2seq_grad_check(small_config(CellType::gru, 1, true), 6, 2, 11, 1e-5, 0.5,
                                        /*extended=*/false);
  EXPECT_LT(err, 1e-2);
}

TEST(GruCell, SingleStepCrossEntropyGradient) {
  // One GRU step (hidden 4) followed by a softmax cross-entropy readout.
  ParamStore store;
  const auto cell = RecurrentCell::add_to(store, "g", CellType::gru, 3, 4);
  const auto w = store.add("w", 4, 5);
  Rng rng(3);
  for (auto& s : store) fill_uniform(s.value, rng, -0.7, 0.7);
  Matrix x(2, 3), h0(2, 4);
  fill_uniform(x, rng, -1, 1);
  fill_uniform(h0, rng, -1, 1);
  const int labels[2] = {1, 4};

  const auto loss_fn = [&](ParamStore& ps) {
    ps.zero_grad();
    RecurrentCell::Cache cache;
    const Matrix h = cell.forward(ps, x, h0, nullptr, &cache);
    const Matrix logits = h * ps[w].value;
    const Matrix p = softmax_rows(logits);
    double loss = 0.0;
    Matrix d_logits = p;
    for (int b = 0; b < 2; ++b) {
      loss -= std::log(p(b, labels[b]));
      d_logits(b, labels[b]) -= 1.0;
    }
    ps[w].grad += h.transpose() * d_logits;
    Matrix d_x, d_h0;
    cell.backward(ps, cache, d_logits * ps[w].value.transpose(), d_x, d_h0);
    return loss;
  };
  EXPECT_LT(grad_check(loss_fn, store), 1e-4);
}

TEST(Encoder, ZeroWeightSimpleRnnSaturatesAtOneHalf) {
  Seq2Seq model(small_config(CellType::simple_rnn, 2, false, 4, 9));
  TokenMatrix src(1, 3);
  src << 4, 5, 6;
  const auto enc = model.encode(src, Matrix::Ones(1, 3));
  for (const auto& h : enc.states) EXPECT_TRUE(h.isApprox(Matrix::Constant(1, 4, 0.5)));
  EXPECT_TRUE(enc.context().isApprox(Matrix::Constant(1, 4, 0.5)));
}

TEST(Encoder, ZeroWeightGruStaysAtZero) {
  Seq2Seq model(small_config(CellType::gru, 1, false, 4, 9));
  TokenMatrix src(1, 4);
  src << 4, 5, 6, 7;
  const auto enc = model.encode(src, Matrix::Ones(1, 4));
  for (const auto& h : enc.states) EXPECT_EQ(h.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Encoder, TrailingPadLeavesContextUnchanged) {
  for (bool attention : {false, true}) {
    Seq2Seq model(small_config(CellType::gru, 2, attention, 6, 10));
    Rng rng(5);
    model.initialize(rng, 0.5);
    TokenMatrix a(1, 4), b(1, 7);
    a << 4, 7, 9, 5;
    b << 4, 7, 9, 5, 0, 0, 0;
    Matrix mb = Matrix::Zero(1, 7);
    mb.leftCols(4).setOnes();
    const auto ea = model.encode(a, Matrix::Ones(1, 4));
    const auto eb = model.encode(b, mb);
    EXPECT_LT((ea.context() - eb.context()).cwiseAbs().maxCoeff(), 1e-12);

    TokenMatrix tin(1, 3);
    tin << Vocabulary::kBos, 6, 8;
    const auto da = model.step_distributions(a, Matrix::Ones(1, 4), tin);
    const auto db = model.step_distributions(b, mb, tin);
    for (std::size_t i = 0; i < da.size(); ++i)
      EXPECT_LT((da[i] - db[i]).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Encoder, RejectsOutOfRangeTokens) {
  Seq2Seq model(small_config(CellType::gru, 1, false, 4, 9));
  TokenMatrix src(1, 2);
  src << 4, 9;
  EXPECT_THROW(model.encode(src, Matrix::Ones(1, 2)), InputError);
}

TEST(Decoder, ZeroWeightsGiveUniformLoss) {
  for (bool attention : {false, true}) {
    Seq2Seq model(small_config(CellType::gru, 1, attention, 4, 11));
    TokenMatrix src(2, 3), tin(2, 3), tout(2, 3);
    src << 4, 5, 6, 7, 8, 0;
    Matrix sm(2, 3);
    sm << 1, 1, 1, 1, 1, 0;
    tin << 1, 9, 10, 1, 4, 0;
    tout << 9, 10, 2, 4, 2, 0;
    Matrix tm(2, 3);
    tm << 1, 1, 1, 1, 1, 0;
    EXPECT_NEAR(model.loss(src, sm, tin, tout, tm), std::log(11.0), 1e-12);
  }
}

TEST(Decoder, EmptyMaskGivesZeroLossAndZeroGradient) {
  Seq2Seq model(small_config(CellType::gru, 2, true));
  Rng rng(1);
  model.initialize(rng, 0.3);
  TokenMatrix src(1, 2), tin(1, 2), tout(1, 2);
  src << 4, 5;
  tin << 1, 6;
  tout << 6, 2;
  EXPECT_EQ(model.loss_and_grad(src, Matrix::Ones(1, 2), tin, tout, Matrix::Zero(1, 2)), 0.0);
  for (const auto& slot : model.params()) EXPECT_EQ(slot.grad.cwiseAbs().maxCoeff(), 0.0) << slot.name;
}

TEST(Decoder, OutputDistributionsSumToOne) {
  Seq2Seq model(small_config(CellType::gru, 2, true, 8, 15));
  Rng rng(2);
  model.initialize(rng, 0.5);
  TokenMatrix src(2, 5), tin(2, 4);
  src << 4, 5, 6, 7, 8, 9, 10, 0, 0, 0;
  Matrix sm(2, 5);
  sm << 1, 1, 1, 1, 1, 1, 1, 0, 0, 0;
  tin << 1, 11, 12, 13, 1, 14, 4, 5;
  for (const auto& p : model.step_distributions(src, sm, tin))
    for (Eigen::Index b = 0; b < p.rows(); ++b) EXPECT_NEAR(p.row(b).sum(), 1.0, 1e-9);
}

TEST(Decoder, DropoutIsDeterministicUnderSeed) {
  ModelConfig c = small_config(CellType::gru, 2, true);
  c.dropout_keep = 0.5;
  Seq2Seq model(c);
  Rng init(4);
  model.initialize(init, 0.3);
  TokenMatrix src(1, 3), tin(1, 2), tout(1, 2);
  src << 4, 5, 6;
  tin << 1, 7;
  tout << 7, 2;
  Rng a(9), b(9), other(10);
  const double la = model.loss(src, Matrix::Ones(1, 3), tin, tout, Matrix::Ones(1, 2), &a);
  const double lb = model.loss(src, Matrix::Ones(1, 3), tin, tout, Matrix::Ones(1, 2), &b);
  const double lc = model.loss(src, Matrix::Ones(1, 3), tin, tout, Matrix::Ones(1, 2), &other);
  EXPECT_EQ(la, lb);
  EXPECT_NE(la, lc);
}

TEST(Attention, SingleSourcePositionTakesAllWeight) {
  Seq2Seq model(small_config(CellType::gru, 1, true, 5, 9));
  Rng rng(8);
  model.initialize(rng, 0.5);
  TokenMatrix src(1, 1);
  src << 6;
  const auto enc = model.encode(src, Matrix::Ones(1, 1));
  Matrix s(1, 5);
  fill_uniform(s, rng, -1, 1);
  const auto st = model.attention_step(s, enc);
  EXPECT_DOUBLE_EQ(st.weights(0, 0), 1.0);
  EXPECT_LT((st.context - enc.states[0]).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Attention, IdenticalStatesGiveUniformWeights) {
  Seq2Seq model(small_config(CellType::gru, 1, true, 5, 9));
  Rng rng(8);
  model.initialize(rng, 0.5);
  EncoderOutput enc;
  Matrix h(1, 5);
  fill_uniform(h, rng, -1, 1);
  for (int j = 0; j < 4; ++j) {
    enc.states.push_back(h);
    enc.keys.push_back(h * model.params().at("att.U_h").value);
  }
  enc.mask = Matrix::Ones(1, 4);
  Matrix s(1, 5);
  fill_uniform(s, rng, -1, 1);
  const auto st = model.attention_step(s, enc);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(st.weights(0, j), 0.25, 1e-15);
}

TEST(Attention, ContextIsTheWeightedSumOfStates) {
  Seq2Seq model(small_config(CellType::gru, 2, true, 6, 12));
  Rng rng(21);
  model.initialize(rng, 0.6);
  TokenMatrix src(2, 5);
  src << 4, 9, 5, 11, 7, 6, 6, 8, 0, 0;
  Matrix mask(2, 5);
  mask << 1, 1, 1, 1, 1, 1, 1, 1, 0, 0;
  const auto enc = model.encode(src, mask);
  Matrix s(2, 6);
  fill_uniform(s, rng, -1, 1);
  const auto st = model.attention_step(s, enc);
  for (Eigen::Index b = 0; b < 2; ++b) {
    Vector direct = Vector::Zero(6);
    double total = 0.0;
    for (Eigen::Index j = 0; j < 5; ++j) {
      direct += st.weights(b, j) * enc.states[static_cast<std::size_t>(j)].row(b).transpose();
      total += st.weights(b, j);
    }
    EXPECT_LT((direct - st.context.row(b).transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  EXPECT_EQ(st.weights(1, 3), 0.0);
  EXPECT_EQ(st.weights(1, 4), 0.0);
}

TEST(Predict, BeamOfOneMatchesGreedy) {
  Seq2Seq model(small_config(CellType::gru, 2, true, 8, 14));
  Rng rng(17);
  model.initialize(rng, 1.0);
  for (int k = 0; k < 100; ++k) {
    Sequence src;
    const std::size_t n = 1 + rng.below(8);
    for (std::size_t i = 0; i < n; ++i) src.push_back(static_cast<Token>(4 + rng.below(10)));
    EXPECT_EQ(model.predict(src, 8, Seq2Seq::Decoding::beam, 1),
              model.predict(src, 8, Seq2Seq::Decoding::greedy));
  }
}

TEST(Predict, RespectsMaxLength) {
  Seq2Seq model(small_config(CellType::gru, 1, false, 8, 14));
  Rng rng(3);
  model.initialize(rng, 0.5);
  // Push EOS down so decoding never stops early.
  model.params().at("out.b_y").value(0, Vocabulary::kEos) = -50.0;
  const Sequence src{4, 5, 6};
  EXPECT_EQ(model.predict(src, 3).size(), 3u);
  EXPECT_LE(model.predict(src, 3, Seq2Seq::Decoding::beam, 3).size(), 3u);
}

TEST(Predict, ZeroWeightsBreakTiesTowardLowestToken) {
  Seq2Seq model(small_config(CellType::gru, 1, false, 4, 9));
  // Every logit equal: EOS (2) is the lowest emittable id, so output is empty.
  EXPECT_TRUE(model.predict({4, 5}, 5).empty());
  model.params().at("out.b_y").value(0, Vocabulary::kEos) = -1.0;
  EXPECT_EQ(model.predict({4, 5}, 3), (Sequence{4, 4, 4}));
}

TEST(Predict, RejectsEmptySource) {
  Seq2Seq model(small_config(CellType::gru, 1, false, 4, 9));
  EXPECT_THROW(model.predict({}, 3), InputError);
}

TEST(Semantic, EncodingIsTheContextVector) {
  Seq2Seq model(small_config(CellType::gru, 3, true, 6, 10));
  Rng rng(9);
  model.initialize(rng, 0.5);
  const Sequence s{4, 8, 9, 5};
  TokenMatrix src(1, 4);
  src << 4, 8, 9, 5;
  const Vector v = model.encode_semantic(s);
  EXPECT_EQ(v, model.encode(src, Matrix::Ones(1, 4)).context().row(0).transpose());
  EXPECT_EQ(v, model.encode_semantic(s));
  EXPECT_NEAR(compare_vectors(v, v).cosine, 1.0, 1e-15);
  EXPECT_THROW(model.encode_semantic({}), InputError);
}

TEST(Semantic, AntipodalVectors) {
  Vector v(3);
  v << 1.0, -2.0, 2.0;
  const auto s = compare_vectors(v, -v);
  EXPECT_NEAR(s.cosine, -1.0, 1e-15);
  EXPECT_NEAR(s.euclidean, 2.0 * v.norm(), 1e-12);
  const auto z = compare_vectors(v, Vector::Zero(3));
  EXPECT_TRUE(z.degenerate);
  EXPECT_EQ(z.cosine, 0.0);
}

TEST(ModelConfig, Validation) {
  ModelConfig c = small_config(CellType::gru, 4, false);
  EXPECT_THROW(c.validate(), InputError);
  c.layers = 1;
  c.dropout_keep = 0.0;
  EXPECT_THROW(c.validate(), InputError);
  c.dropout_keep = 1.0;
  c.vocab_size = 4;
  EXPECT_THROW(c.validate(), InputError);
}

}  // namespace
}  // namespace scs2s
