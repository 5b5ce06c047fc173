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

#ifndef SCS2S_MODEL_HPP
#define SCS2S_MODEL_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "scs2s/corpus.hpp"
#include "scs2s/numeric.hpp"

namespace scs2s {

enum class CellType { gru, simple_rnn };

std::string to_string(CellType cell);
CellType parse_cell(const std::string& name);

/// Update convention written into checkpoints.
inline constexpr const char* kGruConvention =
    "z=sig(xWz+hUz+bz);r=sig(xWr+hUr+br);n=tanh(xWh+(r*h)Uh+bh);h'=(1-z)*h+z*n";

struct ModelConfig {
  CellType cell = CellType::gru;
  std::size_t layers = 1;
  std::size_t hidden = 256;
  std::size_t vocab_size = 0;
  bool attention = true;
  double dropout_keep = 0.5;

  /// Embedding width always equals the hidden width.
  std::size_t embed() const { return hidden; }
  void validate() const;
};

/// One recurrent layer's parameters inside a ParamStore. Row-vector
/// convention: states are batch x hidden and x*W multiplies on the right.
template <typename Scalar>
class BasicRecurrentCell {
 public:
  using Mat = MatrixX<Scalar>;
  using Store = BasicParamStore<Scalar>;

  struct Cache {
    Mat x, h_prev, z, r, rh, n, h_out;
    Mat mask;  // batch x 1, empty when every row is live
  };

  BasicRecurrentCell() = default;
  /// Registers `<prefix>.W_z`, ... (GRU) or `<prefix>.W_x`, `.W_h`, `.b`.
  static BasicRecurrentCell add_to(Store& store, const std::string& prefix, CellType type,
                                   std::size_t input, std::size_t hidden);

  /// Rows whose mask is 0 carry h_prev through unchanged.
  Mat forward(const Store& store, const Mat& x, const Mat& h_prev, const Mat* mask,
              Cache* cache) const;
  /// Accumulates parameter gradients into `store` and writes input/state grads.
  void backward(Store& store, const Cache& cache, const Mat& d_h_out, Mat& d_x,
                Mat& d_h_prev) const;

  CellType type() const { return type_; }

 private:
  CellType type_ = CellType::gru;
  // gru: W_z U_z b_z W_r U_r b_r W_h U_h b_h; simple_rnn: W_x W_h b
  std::array<std::size_t, 9> slot_{};
};

/// Per-decode-step alignment over the source positions.
template <typename Scalar>
struct BasicAttentionState {
  MatrixX<Scalar> scores;   // batch x Tx, e_ij
  MatrixX<Scalar> weights;  // batch x Tx, a_ij (0 on PAD)
  MatrixX<Scalar> context;  // batch x hidden, c_i
};

template <typename Scalar>
struct BasicEncoderOutput {
  std::vector<MatrixX<Scalar>> states;        // top-layer h_t per source step, batch x hidden
  std::vector<MatrixX<Scalar>> final_states;  // per layer
  std::vector<MatrixX<Scalar>> keys;          // U_h * h_t per step (attention only)
  MatrixX<Scalar> mask;                       // batch x Tx

  /// Context vector c: the top layer's final state.
  const MatrixX<Scalar>& context() const { return final_states.back(); }
};

/// Encoder-decoder over token ids. Masks arrive as f64 0/1 matrices
/// whatever the compute scalar.
template <typename Scalar>
class BasicSeq2Seq {
 public:
  using Mat = MatrixX<Scalar>;
  using Vec = VectorX<Scalar>;
  using Store = BasicParamStore<Scalar>;
  using Cell = BasicRecurrentCell<Scalar>;
  using Attention = BasicAttentionState<Scalar>;
  using Encoded = BasicEncoderOutput<Scalar>;

  explicit BasicSeq2Seq(ModelConfig config);

  /// Uniform in (-range, range).
  void initialize(Rng& rng, double range = 0.08);

  const ModelConfig& config() const { return config_; }
  Store& params() { return params_; }
  const Store& params() const { return params_; }

  /// Source tokens (batch x Tx) with a 0/1 mask; PAD steps keep the state.
  Encoded encode(const TokenMatrix& source, const Matrix& mask) const;

  Attention attention_step(const Mat& s_prev, const Encoded& enc) const;

  /// Masked mean negative log-likelihood under teacher forcing. With a
  /// dropout rng the training-time masks are drawn from it; `attention_log`
  /// receives one state per decode step when attention is on.
  Scalar loss(const Batch& batch, Rng* dropout = nullptr,
              std::vector<Attention>* attention_log = nullptr) const;
  Scalar loss(const TokenMatrix& source, const Matrix& source_mask, const TokenMatrix& target_in,
              const TokenMatrix& target_out, const Matrix& target_mask, Rng* dropout = nullptr,
              std::vector<Attention>* attention_log = nullptr) const;

  /// Same as loss() but zeroes and fills the gradient buffers.
  Scalar loss_and_grad(const Batch& batch, Rng* dropout = nullptr);
  Scalar loss_and_grad(const TokenMatrix& source, const Matrix& source_mask,
                       const TokenMatrix& target_in, const TokenMatrix& target_out,
                       const Matrix& target_mask, Rng* dropout = nullptr);

  /// Output distribution at every decode step, batch x vocab per step.
  std::vector<Mat> step_distributions(const TokenMatrix& source, const Matrix& source_mask,
                                      const TokenMatrix& target_in) const;

  enum class Decoding { greedy, beam };
  /// Decodes from BOS until EOS or `max_len` tokens. EOS is not returned.
  /// Ties resolve to the lowest token id.
  Sequence predict(const Sequence& source, std::size_t max_len,
                   Decoding mode = Decoding::greedy, std::size_t beam_width = 4) const;

  /// Top-layer final encoder state for a single sequence.
  Vec encode_semantic(const Sequence& seq) const;

 private:
  struct Forward;
  struct DecoderState {
    std::vector<Mat> layer_states;
  };

  void check_tokens(const TokenMatrix& tokens) const;
  Mat embed(const TokenMatrix& tokens, Eigen::Index col) const;
  Scalar run(const TokenMatrix& source, const Matrix& source_mask, const TokenMatrix& target_in,
             const TokenMatrix& target_out, const Matrix& target_mask, Rng* dropout,
             std::vector<Attention>* attention_log, bool backward);
  Scalar run_const(const TokenMatrix& source, const Matrix& source_mask,
                   const TokenMatrix& target_in, const TokenMatrix& target_out,
                   const Matrix& target_mask, Rng* dropout,
                   std::vector<Attention>* attention_log) const;
  /// One inference step; returns log-probabilities (rows x vocab).
  Mat decode_step(const Encoded& enc, DecoderState& state, const TokenMatrix& input) const;

  ModelConfig config_;
  Store params_;
  std::size_t embedding_ = 0;
  std::vector<Cell> encoder_;
  std::vector<Cell> decoder_;
  std::size_t att_ws_ = 0, att_uh_ = 0, att_b_ = 0, att_v_ = 0;
  std::size_t out_w_ = 0, out_b_ = 0;
};

extern template class BasicRecurrentCell<double>;
extern template class BasicRecurrentCell<long double>;
extern template class BasicSeq2Seq<double>;
extern template class BasicSeq2Seq<long double>;

using RecurrentCell = BasicRecurrentCell<double>;
using AttentionState = BasicAttentionState<double>;
using EncoderOutput = BasicEncoderOutput<double>;
using Seq2Seq = BasicSeq2Seq<double>;

/// Cosine and Euclidean distance of two vectors; cosine is 0 if either is zero.
struct VectorSimilarity {
  double cosine = 0.0;
  double euclidean = 0.0;
  bool degenerate = false;
};
VectorSimilarity compare_vectors(const Vector& a, const Vector& b);

/// Central-difference check of the full teacher-forced loss on a random
/// batch of `seq_len`-token sources and targets (the last row is shorter and
/// PAD-filled so masking is exercised). Dropout is off. Returns the maximum
/// relative error over every parameter.
///
/// With `extended` the weights drawn for the f64 model are evaluated in long
/// double. At epsilon 1e-5 an f64 loss carries about 1e-11 of roundoff in
/// each difference quotient, which is already 1e-4 of a 1e-7 gradient.
double seq2seq_grad_check(const ModelConfig& config, std::size_t seq_len, std::size_t batch_rows,
                          std::uint64_t seed, double epsilon = 1e-5, double init_range = 0.5,
                          bool extended = true);

}  // namespace scs2s

#endif  // SCS2S_MODEL_HPP
