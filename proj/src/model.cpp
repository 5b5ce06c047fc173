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

#include "scs2s/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace scs2s {

std::string to_string(CellType cell) { return cell == CellType::gru ? "gru" : "simple_rnn"; }

CellType parse_cell(const std::string& name) {
  if (name == "gru") return CellType::gru;
  if (name == "simple_rnn" || name == "rnn") return CellType::simple_rnn;
  throw InputError("unknown cell type '" + name + "' (expected gru or simple_rnn)");
}

void ModelConfig::validate() const {
  if (layers < 1 || layers > 3) throw InputError("layers must be 1, 2 or 3");
  if (hidden < 1) throw InputError("hidden must be >= 1");
  if (vocab_size <= static_cast<std::size_t>(Vocabulary::kFirstCall))
    throw InputError("vocab_size must exceed the 4 special tokens");
  if (!(dropout_keep > 0.0 && dropout_keep <= 1.0))
    throw InputError("dropout_keep must lie in (0, 1]");
}

// ---------------------------------------------------------------------------
// Recurrent cells

namespace {

enum GruSlot { kWz, kUz, kBz, kWr, kUr, kBr, kWh, kUh, kBh };
enum RnnSlot { kWx, kWhh, kB };

// sum over rows -> 1 x cols
template <typename Scalar>
RowVectorX<Scalar> col_sum(const MatrixX<Scalar>& m) {
  return m.colwise().sum();
}

}  // namespace

template <typename Scalar>
BasicRecurrentCell<Scalar> BasicRecurrentCell<Scalar>::add_to(Store& store,
                                                              const std::string& prefix,
                                                              CellType type, std::size_t input,
                                                              std::size_t hidden) {
  BasicRecurrentCell cell;
  cell.type_ = type;
  const auto in = static_cast<Eigen::Index>(input);
  const auto h = static_cast<Eigen::Index>(hidden);
  if (type == CellType::gru) {
    const char* gates[] = {"z", "r", "h"};
    for (int g = 0; g < 3; ++g) {
      cell.slot_[3 * g + 0] = store.add(prefix + ".W_" + gates[g], in, h);
      cell.slot_[3 * g + 1] = store.add(prefix + ".U_" + gates[g], h, h);
      cell.slot_[3 * g + 2] = store.add(prefix + ".b_" + gates[g], 1, h);
    }
  } else {
    cell.slot_[kWx] = store.add(prefix + ".W_x", in, h);
    cell.slot_[kWhh] = store.add(prefix + ".W_h", h, h);
    cell.slot_[kB] = store.add(prefix + ".b", 1, h);
  }
  return cell;
}

template <typename Scalar>
MatrixX<Scalar> BasicRecurrentCell<Scalar>::forward(const Store& store, const Mat& x,
                                                    const Mat& h_prev, const Mat* mask,
                                                    Cache* cache) const {
  const auto p = [&](int i) -> const Mat& { return store[slot_[static_cast<std::size_t>(i)]].value; };
  Mat h_new;
  if (type_ == CellType::gru) {
    Mat z = sigmoid((x * p(kWz) + h_prev * p(kUz)).rowwise() + p(kBz).row(0));
    Mat r = sigmoid((x * p(kWr) + h_prev * p(kUr)).rowwise() + p(kBr).row(0));
    Mat rh = r.cwiseProduct(h_prev);
    Mat n = tanh((x * p(kWh) + rh * p(kUh)).rowwise() + p(kBh).row(0));
    h_new = h_prev + z.cwiseProduct(n - h_prev);
    if (cache) {
      cache->z = std::move(z);
      cache->r = std::move(r);
      cache->rh = std::move(rh);
      cache->n = std::move(n);
    }
  } else {
    h_new = sigmoid((x * p(kWx) + h_prev * p(kWhh)).rowwise() + p(kB).row(0));
    if (cache) cache->n = h_new;
  }
  if (mask) {
    for (Eigen::Index b = 0; b < h_new.rows(); ++b)
      if ((*mask)(b, 0) == Scalar(0)) h_new.row(b) = h_prev.row(b);
  }
  if (cache) {
    cache->x = x;
    cache->h_prev = h_prev;
    cache->mask = mask ? *mask : Mat();
    cache->h_out = h_new;
  }
  return h_new;
}

template <typename Scalar>
void BasicRecurrentCell<Scalar>::backward(Store& store, const Cache& c, const Mat& d_h_out,
                                          Mat& d_x, Mat& d_h_prev) const {
  const auto p = [&](int i) -> const Mat& { return store[slot_[static_cast<std::size_t>(i)]].value; };
  const auto g = [&](int i) -> Mat& { return store[slot_[static_cast<std::size_t>(i)]].grad; };
  const Scalar one(1);

  // Masked rows pass the gradient straight to h_prev.
  Mat d_new = d_h_out;
  d_h_prev = Mat::Zero(d_h_out.rows(), d_h_out.cols());
  if (c.mask.size() != 0) {
    for (Eigen::Index b = 0; b < d_new.rows(); ++b) {
      if (c.mask(b, 0) == Scalar(0)) {
        d_h_prev.row(b) = d_new.row(b);
        d_new.row(b).setZero();
      }
    }
  }

  if (type_ == CellType::gru) {
    d_h_prev += d_new.cwiseProduct((one - c.z.array()).matrix());
    const Mat d_z = d_new.cwiseProduct(c.n - c.h_prev);
    const Mat d_n = d_new.cwiseProduct(c.z);
    const Mat d_an = d_n.cwiseProduct((one - c.n.array().square()).matrix());
    g(kWh).noalias() += c.x.transpose() * d_an;
    g(kUh).noalias() += c.rh.transpose() * d_an;
    g(kBh) += col_sum(d_an);
    d_x = d_an * p(kWh).transpose();
    const Mat d_rh = d_an * p(kUh).transpose();
    d_h_prev += d_rh.cwiseProduct(c.r);
    const Mat d_ar =
        d_rh.cwiseProduct(c.h_prev).cwiseProduct((c.r.array() * (one - c.r.array())).matrix());
    const Mat d_az = d_z.cwiseProduct((c.z.array() * (one - c.z.array())).matrix());
    g(kWr).noalias() += c.x.transpose() * d_ar;
    g(kUr).noalias() += c.h_prev.transpose() * d_ar;
    g(kBr) += col_sum(d_ar);
    g(kWz).noalias() += c.x.transpose() * d_az;
    g(kUz).noalias() += c.h_prev.transpose() * d_az;
    g(kBz) += col_sum(d_az);
    d_x.noalias() += d_ar * p(kWr).transpose();
    d_x.noalias() += d_az * p(kWz).transpose();
    d_h_prev.noalias() += d_ar * p(kUr).transpose();
    d_h_prev.noalias() += d_az * p(kUz).transpose();
  } else {
    const Mat d_a = d_new.cwiseProduct((c.n.array() * (one - c.n.array())).matrix());
    g(kWx).noalias() += c.x.transpose() * d_a;
    g(kWhh).noalias() += c.h_prev.transpose() * d_a;
    g(kB) += col_sum(d_a);
    d_x = d_a * p(kWx).transpose();
    d_h_prev.noalias() += d_a * p(kWhh).transpose();
  }
}

// ---------------------------------------------------------------------------
// Seq2Seq

template <typename Scalar>
BasicSeq2Seq<Scalar>::BasicSeq2Seq(ModelConfig config) : config_(config) {
  config_.validate();
  const std::size_t h = config_.hidden;
  const std::size_t e = config_.embed();
  const auto v = static_cast<Eigen::Index>(config_.vocab_size);
  embedding_ = params_.add("embedding", v, static_cast<Eigen::Index>(e));
  for (std::size_t l = 0; l < config_.layers; ++l) {
    encoder_.push_back(
        Cell::add_to(params_, "enc.l" + std::to_string(l), config_.cell, l == 0 ? e : h, h));
  }
  for (std::size_t l = 0; l < config_.layers; ++l) {
    // Layer 0 reads [embedding ; context].
    decoder_.push_back(
        Cell::add_to(params_, "dec.l" + std::to_string(l), config_.cell, l == 0 ? e + h : h, h));
  }
  const auto hi = static_cast<Eigen::Index>(h);
  if (config_.attention) {
    att_ws_ = params_.add("att.W_s", hi, hi);
    att_uh_ = params_.add("att.U_h", hi, hi);
    att_b_ = params_.add("att.b", 1, hi);
    att_v_ = params_.add("att.v", hi, 1);
  }
  out_w_ = params_.add("out.W_y", config_.attention ? 2 * hi : hi, v);
  out_b_ = params_.add("out.b_y", 1, v);
}

template <typename Scalar>
void BasicSeq2Seq<Scalar>::initialize(Rng& rng, double range) {
  for (auto& slot : params_) fill_uniform(slot.value, rng, -range, range);
  params_.zero_grad();
}

template <typename Scalar>
void BasicSeq2Seq<Scalar>::check_tokens(const TokenMatrix& tokens) const {
  const auto v = static_cast<int>(config_.vocab_size);
  for (Eigen::Index i = 0; i < tokens.size(); ++i) {
    const int t = tokens.data()[i];
    if (t < 0 || t >= v)
      throw InputError("token " + std::to_string(t) + " outside vocabulary of size " + std::to_string(v));
  }
}

template <typename Scalar>
MatrixX<Scalar> BasicSeq2Seq<Scalar>::embed(const TokenMatrix& tokens, Eigen::Index col) const {
  const Mat& table = params_[embedding_].value;
  Mat x(tokens.rows(), table.cols());
  for (Eigen::Index b = 0; b < tokens.rows(); ++b) x.row(b) = table.row(tokens(b, col));
  return x;
}

namespace {

template <typename Scalar>
MatrixX<Scalar> dropout_mask(Rng& rng, Eigen::Index rows, Eigen::Index cols, double keep) {
  MatrixX<Scalar> m(rows, cols);
  const Scalar scale = Scalar(1) / Scalar(keep);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.bernoulli(keep) ? scale : Scalar(0);
  return m;
}

template <typename Scalar>
MatrixX<Scalar> hcat(const MatrixX<Scalar>& a, const MatrixX<Scalar>& b) {
  MatrixX<Scalar> out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

template <typename Scalar>
MatrixX<Scalar> log_softmax_rows(const MatrixX<Scalar>& logits) {
  MatrixX<Scalar> out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Scalar peak = logits.row(i).maxCoeff();
    const Scalar lse = peak + std::log((logits.row(i).array() - peak).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

}  // namespace

template <typename Scalar>
BasicEncoderOutput<Scalar> BasicSeq2Seq<Scalar>::encode(const TokenMatrix& source,
                                                        const Matrix& mask) const {
  check_tokens(source);
  if (mask.rows() != source.rows() || mask.cols() != source.cols())
    throw DimensionError("encode: mask " + shape_string(mask.rows(), mask.cols()) +
                         " does not match source " + shape_string(source.rows(), source.cols()));
  const Eigen::Index batch = source.rows();
  const auto h = static_cast<Eigen::Index>(config_.hidden);
  Encoded enc;
  enc.mask = mask.cast<Scalar>();
  std::vector<Mat> states(config_.layers, Mat::Zero(batch, h));
  for (Eigen::Index t = 0; t < source.cols(); ++t) {
    Mat step_mask = enc.mask.col(t);
    Mat x = embed(source, t);
    for (std::size_t l = 0; l < config_.layers; ++l) {
      states[l] = encoder_[l].forward(params_, x, states[l], &step_mask, nullptr);
      x = states[l];
    }
    enc.states.push_back(states.back());
  }
  enc.final_states = std::move(states);
  if (config_.attention) {
    for (const auto& s : enc.states) enc.keys.push_back(s * params_[att_uh_].value);
  }
  return enc;
}

template <typename Scalar>
BasicAttentionState<Scalar> BasicSeq2Seq<Scalar>::attention_step(const Mat& s_prev,
                                                                 const Encoded& enc) const {
  if (!config_.attention) throw InputError("attention_step: model has no attention");
  const Eigen::Index batch = s_prev.rows();
  const auto tx = static_cast<Eigen::Index>(enc.states.size());
  const Mat query = (s_prev * params_[att_ws_].value).rowwise() + params_[att_b_].value.row(0);
  const Mat& v = params_[att_v_].value;
  Attention st;
  st.scores = Mat::Zero(batch, tx);
  for (Eigen::Index j = 0; j < tx; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    st.scores.col(j) = (query + enc.keys[jj]).array().tanh().matrix() * v;
  }
  st.weights = Mat::Zero(batch, tx);
  for (Eigen::Index b = 0; b < batch; ++b) {
    Scalar peak = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index j = 0; j < tx; ++j)
      if (enc.mask(b, j) != Scalar(0)) peak = std::max(peak, st.scores(b, j));
    Scalar total = 0;
    for (Eigen::Index j = 0; j < tx; ++j) {
      if (enc.mask(b, j) == Scalar(0)) continue;
      const Scalar w = std::exp(st.scores(b, j) - peak);
      st.weights(b, j) = w;
      total += w;
    }
    if (total > Scalar(0)) st.weights.row(b) /= total;
  }
  st.context = Mat::Zero(batch, static_cast<Eigen::Index>(config_.hidden));
  for (Eigen::Index j = 0; j < tx; ++j)
    st.context +=
        (enc.states[static_cast<std::size_t>(j)].array().colwise() * st.weights.col(j).array()).matrix();
  return st;
}

// Caches for one teacher-forced pass.
template <typename Scalar>
struct BasicSeq2Seq<Scalar>::Forward {
  Eigen::Index batch = 0, tx = 0, ty = 0;
  Scalar mask_total = 0;
  Scalar loss = 0;
  Encoded enc;
  std::vector<std::vector<typename Cell::Cache>> enc_cache;  // [t][layer]
  std::vector<std::vector<Mat>> enc_drop;                    // [t][layer]
  std::vector<std::vector<typename Cell::Cache>> dec_cache;  // [i][layer]
  std::vector<std::vector<Mat>> dec_drop;                    // [i][layer]
  std::vector<Mat> out_drop;                                 // [i]
  std::vector<Attention> att;                                // [i]
  std::vector<Mat> s_prev;                                   // [i] top state fed to attention
  std::vector<Mat> features;                                 // [i]
  std::vector<Mat> probs;                                    // [i]
};

template <typename Scalar>
Scalar BasicSeq2Seq<Scalar>::loss(const Batch& b, Rng* dropout, std::vector<Attention>* log) const {
  return loss(b.source, b.source_mask, b.target_in, b.target_out, b.target_mask, dropout, log);
}

template <typename Scalar>
Scalar BasicSeq2Seq<Scalar>::loss(const TokenMatrix& source, const Matrix& source_mask,
                                  const TokenMatrix& target_in, const TokenMatrix& target_out,
                                  const Matrix& target_mask, Rng* dropout,
                                  std::vector<Attention>* log) const {
  return run_const(source, source_mask, target_in, target_out, target_mask, dropout, log);
}

template <typename Scalar>
Scalar BasicSeq2Seq<Scalar>::loss_and_grad(const Batch& b, Rng* dropout) {
  return loss_and_grad(b.source, b.source_mask, b.target_in, b.target_out, b.target_mask, dropout);
}

template <typename Scalar>
Scalar BasicSeq2Seq<Scalar>::loss_and_grad(const TokenMatrix& source, const Matrix& source_mask,
                                           const TokenMatrix& target_in,
                                           const TokenMatrix& target_out,
                                           const Matrix& target_mask, Rng* dropout) {
  return run(source, source_mask, target_in, target_out, target_mask, dropout, nullptr, true);
}

template <typename Scalar>
Scalar BasicSeq2Seq<Scalar>::run_const(const TokenMatrix& source, const Matrix& source_mask,
                                       const TokenMatrix& target_in, const TokenMatrix& target_out,
                                       const Matrix& target_mask, Rng* dropout,
                                       std::vector<Attention>* log) const {
  // The forward path only reads parameters; backward=false never writes.
  return const_cast<BasicSeq2Seq*>(this)->run(source, source_mask, target_in, target_out,
                                              target_mask, dropout, log, false);
}

template <typename Scalar>
Scalar BasicSeq2Seq<Scalar>::run(const TokenMatrix& source, const Matrix& source_mask,
                                 const TokenMatrix& target_in, const TokenMatrix& target_out,
                                 const Matrix& target_mask_f64, Rng* dropout,
                                 std::vector<Attention>* attention_log, bool backward) {
  check_tokens(source);
  check_tokens(target_in);
  check_tokens(target_out);
  if (source.rows() != target_in.rows() || target_in.rows() != target_out.rows() ||
      target_in.cols() != target_out.cols() || target_mask_f64.rows() != target_out.rows() ||
      target_mask_f64.cols() != target_out.cols() || source_mask.rows() != source.rows() ||
      source_mask.cols() != source.cols()) {
    throw DimensionError("seq2seq: inconsistent batch shapes");
  }
  if (source.cols() < 1 || target_in.cols() < 1) throw InputError("seq2seq: empty batch");

  const bool drop = dropout != nullptr && config_.dropout_keep < 1.0;
  const double keep = config_.dropout_keep;
  const std::size_t layers = config_.layers;
  const auto h = static_cast<Eigen::Index>(config_.hidden);
  const auto e = static_cast<Eigen::Index>(config_.embed());
  const Mat target_mask = target_mask_f64.cast<Scalar>();

  Forward f;
  f.batch = source.rows();
  f.tx = source.cols();
  f.ty = target_in.cols();
  f.mask_total = target_mask.sum();

  // Encoder.
  f.enc.mask = source_mask.cast<Scalar>();
  f.enc_cache.assign(static_cast<std::size_t>(f.tx), std::vector<typename Cell::Cache>(layers));
  f.enc_drop.assign(static_cast<std::size_t>(f.tx), std::vector<Mat>(layers));
  std::vector<Mat> states(layers, Mat::Zero(f.batch, h));
  for (Eigen::Index t = 0; t < f.tx; ++t) {
    const auto tt = static_cast<std::size_t>(t);
    Mat step_mask = f.enc.mask.col(t);
    Mat x = embed(source, t);
    for (std::size_t l = 0; l < layers; ++l) {
      if (drop) {
        f.enc_drop[tt][l] = dropout_mask<Scalar>(*dropout, x.rows(), x.cols(), keep);
        x = x.cwiseProduct(f.enc_drop[tt][l]);
      }
      states[l] = encoder_[l].forward(params_, x, states[l], &step_mask, &f.enc_cache[tt][l]);
      x = states[l];
    }
    f.enc.states.push_back(states.back());
  }
  f.enc.final_states = states;
  if (config_.attention) {
    for (const auto& s : f.enc.states) f.enc.keys.push_back(s * params_[att_uh_].value);
  }

  // Decoder under teacher forcing.
  const Mat& w_out = params_[out_w_].value;
  const Mat& b_out = params_[out_b_].value;
  f.dec_cache.assign(static_cast<std::size_t>(f.ty), std::vector<typename Cell::Cache>(layers));
  f.dec_drop.assign(static_cast<std::size_t>(f.ty), std::vector<Mat>(layers));
  f.out_drop.resize(static_cast<std::size_t>(f.ty));
  Scalar nll = 0;
  for (Eigen::Index i = 0; i < f.ty; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    Mat ctx;
    if (config_.attention) {
      f.s_prev.push_back(states.back());
      f.att.push_back(attention_step(states.back(), f.enc));
      ctx = f.att.back().context;
    } else {
      ctx = f.enc.context();
    }
    Mat x = hcat<Scalar>(embed(target_in, i), ctx);
    for (std::size_t l = 0; l < layers; ++l) {
      if (drop) {
        f.dec_drop[ii][l] = dropout_mask<Scalar>(*dropout, x.rows(), x.cols(), keep);
        x = x.cwiseProduct(f.dec_drop[ii][l]);
      }
      states[l] = decoder_[l].forward(params_, x, states[l], nullptr, &f.dec_cache[ii][l]);
      x = states[l];
    }
    Mat top = states.back();
    if (drop) {
      f.out_drop[ii] = dropout_mask<Scalar>(*dropout, top.rows(), top.cols(), keep);
      top = top.cwiseProduct(f.out_drop[ii]);
    }
    Mat feat = config_.attention ? hcat<Scalar>(top, ctx) : top;
    const Mat logits = (feat * w_out).rowwise() + b_out.row(0);
    const Mat logp = log_softmax_rows<Scalar>(logits);
    for (Eigen::Index b = 0; b < f.batch; ++b) {
      const Scalar m = target_mask(b, i);
      if (m != Scalar(0)) nll -= m * logp(b, target_out(b, i));
    }
    f.features.push_back(std::move(feat));
    if (backward) f.probs.push_back(logp.array().exp().matrix());
  }
  f.loss = f.mask_total > Scalar(0) ? nll / f.mask_total : Scalar(0);
  if (!std::isfinite(static_cast<double>(f.loss))) throw NumericError("seq2seq: non-finite loss");
  if (attention_log) *attention_log = f.att;
  if (!backward) return f.loss;

  // Backward pass through time.
  params_.zero_grad();
  if (f.mask_total <= Scalar(0)) return f.loss;

  Mat& g_emb = params_[embedding_].grad;
  std::vector<Mat> d_state(layers, Mat::Zero(f.batch, h));  // grad into state after step i-1
  std::vector<Mat> d_enc_states(static_cast<std::size_t>(f.tx), Mat::Zero(f.batch, h));
  Mat d_context = Mat::Zero(f.batch, h);  // fixed context (no attention)
  const Scalar inv_total = Scalar(1) / f.mask_total;
  const Scalar one(1);

  for (Eigen::Index i = f.ty - 1; i >= 0; --i) {
    const auto ii = static_cast<std::size_t>(i);
    Mat d_logits = f.probs[ii];
    for (Eigen::Index b = 0; b < f.batch; ++b) {
      const Scalar m = target_mask(b, i);
      if (m == Scalar(0)) {
        d_logits.row(b).setZero();
        continue;
      }
      d_logits(b, target_out(b, i)) -= one;
      d_logits.row(b) *= m * inv_total;
    }
    params_[out_w_].grad.noalias() += f.features[ii].transpose() * d_logits;
    params_[out_b_].grad += col_sum(d_logits);
    const Mat d_feat = d_logits * w_out.transpose();
    Mat d_top = d_feat.leftCols(h);
    if (drop) d_top = d_top.cwiseProduct(f.out_drop[ii]);
    Mat d_ctx = config_.attention ? Mat(d_feat.rightCols(h)) : Mat::Zero(f.batch, h);

    Mat d_below = d_top;
    for (std::size_t l = layers; l-- > 0;) {
      Mat d_out = d_state[l] + d_below;
      Mat d_x, d_prev;
      decoder_[l].backward(params_, f.dec_cache[ii][l], d_out, d_x, d_prev);
      d_state[l] = std::move(d_prev);
      if (drop) d_x = d_x.cwiseProduct(f.dec_drop[ii][l]);
      d_below = std::move(d_x);
    }
    // d_below is the gradient of [embedding ; context] at layer 0.
    for (Eigen::Index b = 0; b < f.batch; ++b) g_emb.row(target_in(b, i)) += d_below.row(b).leftCols(e);
    d_ctx += d_below.rightCols(h);

    if (!config_.attention) {
      d_context += d_ctx;
      continue;
    }
    // Attention backward for step i.
    const Attention& st = f.att[ii];
    const Mat& v = params_[att_v_].value;
    const Mat& u_h = params_[att_uh_].value;
    const Mat query =
        (f.s_prev[ii] * params_[att_ws_].value).rowwise() + params_[att_b_].value.row(0);
    Mat d_scores(f.batch, f.tx);
    for (Eigen::Index j = 0; j < f.tx; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      d_enc_states[jj] += (d_ctx.array().colwise() * st.weights.col(j).array()).matrix();
      d_scores.col(j) = (d_ctx.cwiseProduct(f.enc.states[jj])).rowwise().sum();
    }
    // Softmax backward: de_j = a_j (da_j - sum_k a_k da_k).
    const Vec weighted = st.weights.cwiseProduct(d_scores).rowwise().sum();
    Mat d_e = st.weights.cwiseProduct((d_scores.colwise() - weighted));
    Mat d_query = Mat::Zero(f.batch, h);
    for (Eigen::Index j = 0; j < f.tx; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      const Mat act = (query + f.enc.keys[jj]).array().tanh().matrix();
      params_[att_v_].grad.noalias() += act.transpose() * d_e.col(j);
      const Mat d_pre = (d_e.col(j) * v.transpose()).cwiseProduct((one - act.array().square()).matrix());
      d_query += d_pre;
      params_[att_uh_].grad.noalias() += f.enc.states[jj].transpose() * d_pre;
      d_enc_states[jj].noalias() += d_pre * u_h.transpose();
    }
    params_[att_b_].grad += col_sum(d_query);
    params_[att_ws_].grad.noalias() += f.s_prev[ii].transpose() * d_query;
    d_state.back().noalias() += d_query * params_[att_ws_].value.transpose();
  }

  // Decoder initial states are the encoder final states.
  std::vector<Mat> d_enc_next = d_state;
  d_enc_next.back() += d_context;
  for (Eigen::Index t = f.tx - 1; t >= 0; --t) {
    const auto tt = static_cast<std::size_t>(t);
    Mat d_below = d_enc_states[tt];
    for (std::size_t l = layers; l-- > 0;) {
      Mat d_out = d_enc_next[l] + d_below;
      Mat d_x, d_prev;
      encoder_[l].backward(params_, f.enc_cache[tt][l], d_out, d_x, d_prev);
      d_enc_next[l] = std::move(d_prev);
      if (drop) d_x = d_x.cwiseProduct(f.enc_drop[tt][l]);
      d_below = std::move(d_x);
    }
    for (Eigen::Index b = 0; b < f.batch; ++b) g_emb.row(source(b, t)) += d_below.row(b);
  }
  return f.loss;
}

template <typename Scalar>
std::vector<MatrixX<Scalar>> BasicSeq2Seq<Scalar>::step_distributions(
    const TokenMatrix& source, const Matrix& source_mask, const TokenMatrix& target_in) const {
  const Encoded enc = encode(source, source_mask);
  check_tokens(target_in);
  DecoderState state{enc.final_states};
  std::vector<Mat> out;
  for (Eigen::Index i = 0; i < target_in.cols(); ++i) {
    TokenMatrix input = target_in.col(i);
    out.push_back(decode_step(enc, state, input).array().exp().matrix());
  }
  return out;
}

template <typename Scalar>
MatrixX<Scalar> BasicSeq2Seq<Scalar>::decode_step(const Encoded& enc, DecoderState& state,
                                                  const TokenMatrix& input) const {
  Mat ctx = config_.attention ? attention_step(state.layer_states.back(), enc).context
                              : enc.context();
  Mat x = hcat<Scalar>(embed(input, 0), ctx);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    state.layer_states[l] = decoder_[l].forward(params_, x, state.layer_states[l], nullptr, nullptr);
    x = state.layer_states[l];
  }
  Mat feat = config_.attention ? hcat<Scalar>(x, ctx) : x;
  const Mat logits = (feat * params_[out_w_].value).rowwise() + params_[out_b_].value.row(0);
  return log_softmax_rows<Scalar>(logits);
}

namespace {

// PAD, BOS and UNK are never emitted.
bool emittable(Token t) { return t == Vocabulary::kEos || t >= Vocabulary::kFirstCall; }

}  // namespace

template <typename Scalar>
Sequence BasicSeq2Seq<Scalar>::predict(const Sequence& source, std::size_t max_len,
                                       Decoding mode, std::size_t beam_width) const {
  if (source.empty()) throw InputError("predict: empty source sequence");
  if (max_len < 1) throw InputError("predict: max_len must be >= 1");
  if (mode == Decoding::beam && beam_width < 1) throw InputError("predict: beam width must be >= 1");
  const auto tx = static_cast<Eigen::Index>(source.size());
  TokenMatrix src(1, tx);
  for (Eigen::Index j = 0; j < tx; ++j) src(0, j) = source[static_cast<std::size_t>(j)];
  const Encoded enc = encode(src, Matrix::Ones(1, tx));
  const Token vocab = static_cast<Token>(config_.vocab_size);

  if (mode == Decoding::greedy) {
    DecoderState state{enc.final_states};
    Sequence out;
    TokenMatrix input(1, 1);
    input(0, 0) = Vocabulary::kBos;
    for (std::size_t step = 0; step < max_len; ++step) {
      const Mat logp = decode_step(enc, state, input);
      Token best = -1;
      for (Token t = 0; t < vocab; ++t) {
        if (!emittable(t)) continue;
        if (best < 0 || logp(0, t) > logp(0, best)) best = t;
      }
      if (best == Vocabulary::kEos) break;
      out.push_back(best);
      input(0, 0) = best;
    }
    return out;
  }

  struct Hypothesis {
    Sequence tokens;
    Scalar score = 0;
    DecoderState state;
  };
  struct Candidate {
    Scalar score;
    Scalar step;  // this step's log-probability, breaks exact score ties
    std::size_t parent;
    Token token;
  };
  std::vector<Hypothesis> alive{{{}, Scalar(0), DecoderState{enc.final_states}}};
  std::vector<Hypothesis> finished;
  for (std::size_t step = 0; step < max_len && !alive.empty(); ++step) {
    std::vector<Candidate> cands;
    std::vector<DecoderState> next_states;
    for (std::size_t h = 0; h < alive.size(); ++h) {
      TokenMatrix input(1, 1);
      input(0, 0) = alive[h].tokens.empty() ? Vocabulary::kBos : alive[h].tokens.back();
      DecoderState st = alive[h].state;
      const Mat logp = decode_step(enc, st, input);
      next_states.push_back(std::move(st));
      for (Token t = 0; t < vocab; ++t)
        if (emittable(t)) cands.push_back({alive[h].score + logp(0, t), logp(0, t), h, t});
    }
    // Stable on (parent, token) order, so ties go to the earlier hypothesis
    // and then the lowest token id.
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.step > b.step;
    });
    const std::size_t want = beam_width - std::min(beam_width, finished.size());
    std::vector<Hypothesis> next;
    for (const auto& c : cands) {
      if (next.size() >= want) break;
      Hypothesis hyp{alive[c.parent].tokens, c.score, next_states[c.parent]};
      if (c.token == Vocabulary::kEos) {
        finished.push_back(std::move(hyp));
        if (finished.size() >= beam_width) break;
        continue;
      }
      hyp.tokens.push_back(c.token);
      next.push_back(std::move(hyp));
    }
    alive = finished.size() >= beam_width ? std::vector<Hypothesis>{} : std::move(next);
  }
  for (auto& h : alive) finished.push_back(std::move(h));
  // Length-normalized selection; the EOS step counts toward the length.
  const Hypothesis* best = nullptr;
  Scalar best_score = -std::numeric_limits<Scalar>::infinity();
  for (const auto& h : finished) {
    const Scalar norm = h.score / static_cast<Scalar>(std::max<std::size_t>(1, h.tokens.size() + 1));
    if (best == nullptr || norm > best_score) {
      best = &h;
      best_score = norm;
    }
  }
  return best ? best->tokens : Sequence{};
}

template <typename Scalar>
VectorX<Scalar> BasicSeq2Seq<Scalar>::encode_semantic(const Sequence& seq) const {
  if (seq.empty()) throw InputError("encode_semantic: empty sequence");
  const auto n = static_cast<Eigen::Index>(seq.size());
  TokenMatrix src(1, n);
  for (Eigen::Index j = 0; j < n; ++j) src(0, j) = seq[static_cast<std::size_t>(j)];
  const Encoded enc = encode(src, Matrix::Ones(1, n));
  return enc.context().row(0).transpose();
}

template class BasicRecurrentCell<double>;
template class BasicRecurrentCell<long double>;
template class BasicSeq2Seq<double>;
template class BasicSeq2Seq<long double>;

VectorSimilarity compare_vectors(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw DimensionError("compare_vectors: sizes " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  VectorSimilarity s;
  s.euclidean = (a - b).norm();
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    s.degenerate = true;
    return s;
  }
  s.cosine = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  return s;
}

namespace {

template <typename Scalar>
double grad_check_model(BasicSeq2Seq<Scalar>& model, const TokenMatrix& source,
                        const Matrix& source_mask, const TokenMatrix& target_in,
                        const TokenMatrix& target_out, const Matrix& target_mask, double epsilon) {
  using Store = BasicParamStore<Scalar>;
  const std::function<Scalar(Store&)> with_grad = [&](Store&) {
    return model.loss_and_grad(source, source_mask, target_in, target_out, target_mask, nullptr);
  };
  const std::function<Scalar(Store&)> value = [&](Store&) {
    return model.loss(source, source_mask, target_in, target_out, target_mask, nullptr);
  };
  return grad_check<Scalar>(with_grad, value, model.params(), epsilon);
}

}  // namespace

double seq2seq_grad_check(const ModelConfig& config, std::size_t seq_len, std::size_t batch_rows,
                          std::uint64_t seed, double epsilon, double init_range, bool extended) {
  if (seq_len < 2) throw InputError("gradcheck: seq_len must be >= 2");
  if (batch_rows < 1) throw InputError("gradcheck: batch must be >= 1");
  ModelConfig cfg = config;
  cfg.validate();
  Rng rng(seed);
  Seq2Seq model(cfg);
  model.initialize(rng, init_range);

  const auto rows = static_cast<Eigen::Index>(batch_rows);
  const auto len = static_cast<Eigen::Index>(seq_len);
  const auto calls = static_cast<std::uint64_t>(cfg.vocab_size) - Vocabulary::kFirstCall;
  const auto draw = [&] { return static_cast<Token>(Vocabulary::kFirstCall + rng.below(calls)); };
  TokenMatrix source = TokenMatrix::Constant(rows, len, Vocabulary::kPad);
  Matrix source_mask = Matrix::Zero(rows, len);
  TokenMatrix target_in = TokenMatrix::Constant(rows, len + 1, Vocabulary::kPad);
  TokenMatrix target_out = TokenMatrix::Constant(rows, len + 1, Vocabulary::kPad);
  Matrix target_mask = Matrix::Zero(rows, len + 1);
  for (Eigen::Index b = 0; b < rows; ++b) {
    const Eigen::Index n = (b == rows - 1 && rows > 1) ? std::max<Eigen::Index>(1, len - 2) : len;
    for (Eigen::Index t = 0; t < n; ++t) {
      source(b, t) = draw();
      source_mask(b, t) = 1.0;
    }
    target_in(b, 0) = Vocabulary::kBos;
    for (Eigen::Index t = 0; t < n; ++t) {
      const Token y = draw();
      target_out(b, t) = y;
      target_in(b, t + 1) = y;
      target_mask(b, t) = 1.0;
    }
    target_out(b, n) = Vocabulary::kEos;
    target_mask(b, n) = 1.0;
  }

  if (!extended)
    return grad_check_model(model, source, source_mask, target_in, target_out, target_mask, epsilon);
  BasicSeq2Seq<long double> wide(cfg);
  for (std::size_t s = 0; s < model.params().size(); ++s)
    wide.params()[s].value = model.params()[s].value.cast<long double>();
  return grad_check_model(wide, source, source_mask, target_in, target_out, target_mask, epsilon);
}

}  // namespace scs2s
