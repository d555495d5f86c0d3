#include "elab/recurrent.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "elab/error.hpp"

namespace elab {

namespace {

using Eigen::MatrixXd;

// Per-step activations of one direction, indexed by processing step.
struct DirectionCache {
  std::vector<MatrixXd> i, f, g, o, c, tanh_c, h;
};

MatrixXd sigmoid(const MatrixXd& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

void glorot(MatrixXd& m, int fan_in, int fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = u(rng);
}

LstmWeights init_lstm(int in, int h, std::mt19937_64& rng) {
  LstmWeights w{MatrixXd(4 * h, in), MatrixXd(4 * h, h), MatrixXd::Zero(4 * h, 1)};
  glorot(w.wx, in, 4 * h, rng);
  glorot(w.wh, h, 4 * h, rng);
  w.b.block(h, 0, h, 1).setOnes();  // forget gate
  return w;
}

// Runs one direction over `inputs` (indexed by week). Returns the hidden
// state per week in `h_by_week` when non-null and the final state always.
MatrixXd run_direction(const LstmWeights& w, const std::vector<MatrixXd>& inputs, bool reverse,
                       DirectionCache* cache, std::vector<MatrixXd>* h_by_week) {
  const auto T = inputs.size();
  const Eigen::Index h = w.wh.cols();
  const Eigen::Index B = inputs.front().cols();
  MatrixXd hs = MatrixXd::Zero(h, B);
  MatrixXd cs = MatrixXd::Zero(h, B);
  MatrixXd z(4 * h, B);
  if (cache) {
    for (auto* v : {&cache->i, &cache->f, &cache->g, &cache->o, &cache->c, &cache->tanh_c, &cache->h}) v->resize(T);
  }
  if (h_by_week) h_by_week->resize(T);
  for (std::size_t k = 0; k < T; ++k) {
    const std::size_t t = reverse ? T - 1 - k : k;
    z.noalias() = w.wx * inputs[t];
    z.noalias() += w.wh * hs;
    z.colwise() += w.b.col(0);
    MatrixXd gi = sigmoid(z.topRows(h));
    MatrixXd gf = sigmoid(z.middleRows(h, h));
    MatrixXd gg = z.middleRows(2 * h, h).array().tanh().matrix();
    MatrixXd go = sigmoid(z.bottomRows(h));
    cs = gf.cwiseProduct(cs) + gi.cwiseProduct(gg);
    MatrixXd tc = cs.array().tanh().matrix();
    hs = go.cwiseProduct(tc);
    if (cache) {
      cache->i[k] = std::move(gi);
      cache->f[k] = std::move(gf);
      cache->g[k] = std::move(gg);
      cache->o[k] = std::move(go);
      cache->c[k] = cs;
      cache->tanh_c[k] = std::move(tc);
      cache->h[k] = hs;
    }
    if (h_by_week) (*h_by_week)[t] = hs;
  }
  return hs;
}

// Backpropagation through time for one direction. `dh_ext` holds the
// external gradient per processing step (empty matrix = zero). Input
// gradients are accumulated into `d_inputs` (indexed by week) when non-null.
void backprop_direction(const LstmWeights& w, const DirectionCache& cache, const std::vector<MatrixXd>& inputs,
                        bool reverse, const std::vector<MatrixXd>& dh_ext, LstmWeights& grad,
                        std::vector<MatrixXd>* d_inputs) {
  const auto T = inputs.size();
  const Eigen::Index h = w.wh.cols();
  const Eigen::Index B = inputs.front().cols();
  MatrixXd dh_rec = MatrixXd::Zero(h, B);
  MatrixXd dc_rec = MatrixXd::Zero(h, B);
  MatrixXd dz(4 * h, B);
  for (std::size_t kk = T; kk-- > 0;) {
    const std::size_t t = reverse ? T - 1 - kk : kk;
    MatrixXd dh = dh_rec;
    if (dh_ext[kk].size() > 0) dh += dh_ext[kk];
    const auto& i = cache.i[kk];
    const auto& f = cache.f[kk];
    const auto& g = cache.g[kk];
    const auto& o = cache.o[kk];
    const auto& tc = cache.tanh_c[kk];
    const MatrixXd dc = dc_rec + dh.cwiseProduct(o).cwiseProduct((1.0 - tc.array().square()).matrix());
    const MatrixXd c_prev = kk > 0 ? cache.c[kk - 1] : MatrixXd::Zero(h, B);
    dz.topRows(h) = (dc.array() * g.array() * i.array() * (1.0 - i.array())).matrix();
    dz.middleRows(h, h) = (dc.array() * c_prev.array() * f.array() * (1.0 - f.array())).matrix();
    dz.middleRows(2 * h, h) = (dc.array() * i.array() * (1.0 - g.array().square())).matrix();
    dz.bottomRows(h) = (dh.array() * tc.array() * o.array() * (1.0 - o.array())).matrix();
    dc_rec = dc.cwiseProduct(f);

    grad.wx.noalias() += dz * inputs[t].transpose();
    if (kk > 0) grad.wh.noalias() += dz * cache.h[kk - 1].transpose();
    grad.b += dz.rowwise().sum();
    dh_rec.noalias() = w.wh.transpose() * dz;
    if (d_inputs) (*d_inputs)[t].noalias() += w.wx.transpose() * dz;
  }
}

std::vector<MatrixXd> split_weeks(const MatrixXd& batch, int weeks, int features) {
  std::vector<MatrixXd> xs(static_cast<std::size_t>(weeks));
  for (int t = 0; t < weeks; ++t) xs[static_cast<std::size_t>(t)] = batch.middleCols(t * features, features).transpose();
  return xs;
}

std::vector<MatrixXd> stack_directions(const std::vector<MatrixXd>& fwd, const std::vector<MatrixXd>& bwd) {
  std::vector<MatrixXd> out(fwd.size());
  for (std::size_t t = 0; t < fwd.size(); ++t) {
    out[t].resize(fwd[t].rows() + bwd[t].rows(), fwd[t].cols());
    out[t] << fwd[t], bwd[t];
  }
  return out;
}

}  // namespace

BiLstmNetwork::BiLstmNetwork(int weeks, int features, std::vector<int> hidden, std::uint64_t seed)
    : weeks_(weeks), features_(features), hidden_(std::move(hidden)) {
  if (weeks_ < 1 || features_ < 1 || hidden_.empty()) throw ValidationError("BiLstmNetwork: bad shape");
  std::mt19937_64 rng(seed);
  int in = features_;
  for (int h : hidden_) {
    if (h < 1) throw ValidationError("BiLstmNetwork: hidden sizes must be positive");
    forward_.push_back(init_lstm(in, h, rng));
    backward_.push_back(init_lstm(in, h, rng));
    in = 2 * h;
  }
  dense_w_.resize(1, in);
  glorot(dense_w_, in, 1, rng);
  dense_b_ = MatrixXd::Zero(1, 1);
}

BiLstmNetwork BiLstmNetwork::zeros_like() const {
  BiLstmNetwork z = *this;
  for (auto* t : z.tensors()) t->setZero();
  return z;
}

std::vector<Eigen::MatrixXd*> BiLstmNetwork::tensors() {
  std::vector<MatrixXd*> out;
  for (std::size_t l = 0; l < hidden_.size(); ++l)
    for (auto* w : {&forward_[l], &backward_[l]}) {
      out.push_back(&w->wx);
      out.push_back(&w->wh);
      out.push_back(&w->b);
    }
  out.push_back(&dense_w_);
  out.push_back(&dense_b_);
  return out;
}

std::vector<const Eigen::MatrixXd*> BiLstmNetwork::tensors() const {
  auto mut = const_cast<BiLstmNetwork*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

Eigen::VectorXd BiLstmNetwork::forward(const Eigen::MatrixXd& batch) const {
  constexpr Eigen::Index kChunk = 512;
  Eigen::VectorXd out(batch.rows());
  for (Eigen::Index start = 0; start < batch.rows(); start += kChunk) {
    const Eigen::Index n = std::min(kChunk, batch.rows() - start);
    std::vector<MatrixXd> seq = split_weeks(batch.middleRows(start, n), weeks_, features_);
    MatrixXd final_state;
    for (std::size_t l = 0; l < hidden_.size(); ++l) {
      const bool last = l + 1 == hidden_.size();
      std::vector<MatrixXd> hf, hb;
      MatrixXd ff = run_direction(forward_[l], seq, false, nullptr, last ? nullptr : &hf);
      MatrixXd fb = run_direction(backward_[l], seq, true, nullptr, last ? nullptr : &hb);
      if (last) {
        final_state.resize(ff.rows() + fb.rows(), n);
        final_state << ff, fb;
      } else {
        seq = stack_directions(hf, hb);
      }
    }
    Eigen::RowVectorXd logits = dense_w_ * final_state;
    logits.array() += dense_b_(0, 0);
    out.segment(start, n) = (1.0 + (-logits.array()).exp()).inverse().matrix().transpose();
  }
  return out;
}

double BiLstmNetwork::loss_and_gradient(const Eigen::MatrixXd& batch, const Eigen::VectorXd& targets,
                                        BiLstmNetwork& grad) const {
  const std::size_t L = hidden_.size();
  const auto T = static_cast<std::size_t>(weeks_);
  const Eigen::Index B = batch.rows();
  for (auto* t : grad.tensors()) t->setZero();

  // Forward with caches.
  std::vector<std::vector<MatrixXd>> layer_inputs(L);
  std::vector<DirectionCache> cf(L), cb(L);
  layer_inputs[0] = split_weeks(batch, weeks_, features_);
  MatrixXd final_state;
  for (std::size_t l = 0; l < L; ++l) {
    std::vector<MatrixXd> hf, hb;
    MatrixXd ff = run_direction(forward_[l], layer_inputs[l], false, &cf[l], &hf);
    MatrixXd fb = run_direction(backward_[l], layer_inputs[l], true, &cb[l], &hb);
    if (l + 1 < L) {
      layer_inputs[l + 1] = stack_directions(hf, hb);
    } else {
      final_state.resize(ff.rows() + fb.rows(), B);
      final_state << ff, fb;
    }
  }
  Eigen::RowVectorXd logits = dense_w_ * final_state;
  logits.array() += dense_b_(0, 0);
  const Eigen::RowVectorXd p = (1.0 + (-logits.array()).exp()).inverse().matrix();

  constexpr double eps = 1e-12;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < B; ++i)
    loss -= targets(i) * std::log(std::max(p(i), eps)) + (1 - targets(i)) * std::log(std::max(1 - p(i), eps));
  loss /= static_cast<double>(B);

  // Backward.
  const Eigen::RowVectorXd dlogit = (p - targets.transpose()) / static_cast<double>(B);
  grad.dense_w_ = dlogit * final_state.transpose();
  grad.dense_b_(0, 0) = dlogit.sum();
  const MatrixXd dfinal = dense_w_.transpose() * dlogit;

  std::vector<MatrixXd> ext_f(T), ext_b(T);
  const Eigen::Index h_last = hidden_.back();
  ext_f[T - 1] = dfinal.topRows(h_last);
  ext_b[T - 1] = dfinal.bottomRows(h_last);
  for (std::size_t l = L; l-- > 0;) {
    std::vector<MatrixXd> d_in;
    if (l > 0) {
      d_in.assign(T, MatrixXd::Zero(layer_inputs[l].front().rows(), B));
    }
    backprop_direction(forward_[l], cf[l], layer_inputs[l], false, ext_f, grad.forward_[l], l > 0 ? &d_in : nullptr);
    backprop_direction(backward_[l], cb[l], layer_inputs[l], true, ext_b, grad.backward_[l], l > 0 ? &d_in : nullptr);
    if (l == 0) break;
    // Route the input gradient to the previous layer's two directions.
    const Eigen::Index h_prev = hidden_[l - 1];
    for (std::size_t t = 0; t < T; ++t) {
      ext_f[t] = d_in[t].topRows(h_prev);
      ext_b[T - 1 - t] = d_in[t].bottomRows(h_prev);
    }
  }
  return loss;
}

Eigen::VectorXd RecurrentPredictor::predict_rows(const Eigen::MatrixXd& batch) const { return net_.forward(batch); }

}  // namespace elab
