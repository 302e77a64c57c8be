#pragma once

// Finite-difference verification of the fusion kernels: every kernel gets a
// hand-written backward pass, and the checker compares it against central
// differences of the forward pass over all inputs and parameters.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "emeval/errors.hpp"
#include "emeval/fusion.hpp"

namespace emeval::fusion {

struct AttentionFuseGrads {
  std::vector<double> dza, dzv;
  Matrix dw;
};

// Gradients of upstream · attention_fuse(za, zv, p) for both modes.
inline AttentionFuseGrads attention_fuse_backward(const std::vector<double>& za,
                                                  const std::vector<double>& zv,
                                                  const AttentionFusionParams& p,
                                                  const std::vector<double>& upstream) {
  const std::size_t d = za.size();
  double s[2] = {0.0, 0.0};
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t j = 0; j < d; ++j) s[r] += p.w(r, j) * za[j] + p.w(r, d + j) * zv[j];
  }
  double weights[2] = {s[0], s[1]};
  if (p.mode == AttentionFusionParams::Mode::softmax) detail::softmax2(weights);

  // out_j = w0 za_j + w1 zv_j
  double dweights[2] = {0.0, 0.0};
  AttentionFuseGrads g;
  g.dza.assign(d, 0.0);
  g.dzv.assign(d, 0.0);
  g.dw = Matrix(2, 2 * d);
  for (std::size_t j = 0; j < d; ++j) {
    dweights[0] += upstream[j] * za[j];
    dweights[1] += upstream[j] * zv[j];
    g.dza[j] += weights[0] * upstream[j];
    g.dzv[j] += weights[1] * upstream[j];
  }
  double ds[2];
  if (p.mode == AttentionFusionParams::Mode::softmax) {
    const double dot = dweights[0] * weights[0] + dweights[1] * weights[1];
    ds[0] = weights[0] * (dweights[0] - dot);
    ds[1] = weights[1] * (dweights[1] - dot);
  } else {
    ds[0] = dweights[0];
    ds[1] = dweights[1];
  }
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      g.dw(r, j) = ds[r] * za[j];
      g.dw(r, d + j) = ds[r] * zv[j];
      g.dza[j] += ds[r] * p.w(r, j);
      g.dzv[j] += ds[r] * p.w(r, d + j);
    }
  }
  return g;
}

struct QFormerGrads {
  Matrix dq, dzav;
  QFormerParams dp;  // same shapes as the parameters
};

namespace detail {

inline void layer_norm_backward(const Matrix& dy, const Matrix& x_hat,
                                const std::vector<double>& sigma,
                                const std::vector<double>& gain, Matrix& dx,
                                std::vector<double>& dgain, std::vector<double>& dbias) {
  const std::size_t n = dy.rows(), d = dy.cols();
  dx = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double dxh = dy(i, j) * gain[j];
      mean_dxhat += dxh;
      mean_dxhat_xhat += dxh * x_hat(i, j);
      dgain[j] += dy(i, j) * x_hat(i, j);
      dbias[j] += dy(i, j);
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double dxh = dy(i, j) * gain[j];
      dx(i, j) = (dxh - mean_dxhat - x_hat(i, j) * mean_dxhat_xhat) / sigma[i];
    }
  }
}

}  // namespace detail

// Gradients of sum(upstream ⊙ qformer_fuse(q, zav, p)) with respect to the
// query tokens, the input sequence, and every parameter.
inline QFormerGrads qformer_backward(const QueryTokens& q, const FeatureSequence& zav,
                                     const QFormerParams& p, const QFormerTrace& tr,
                                     const Matrix& upstream) {
  const std::size_t d = q.data.cols();
  const std::size_t k_tokens = q.data.rows();
  const std::size_t t = zav.data.rows();
  const std::size_t dh = d / p.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  QFormerGrads g;
  g.dp = QFormerParams::zeros(d, p.heads);
  g.dp.ln1_gain.assign(d, 0.0);
  g.dp.ln1_bias.assign(d, 0.0);
  g.dp.ln2_gain.assign(d, 0.0);
  g.dp.ln2_bias.assign(d, 0.0);

  // out = LN2(r2)
  Matrix dr2;
  detail::layer_norm_backward(upstream, tr.n2_hat, tr.n2_sigma, p.ln2_gain, dr2,
                              g.dp.ln2_gain, g.dp.ln2_bias);

  // r2 = n1 + ff_act * W2
  Matrix dn1 = dr2;
  Matrix dff_act = matmul(dr2, transpose(p.w2));
  g.dp.w2 = matmul(transpose(tr.ff_act), dr2);

  // ff_act = gelu(ff_pre), ff_pre = n1 * W1
  Matrix dff_pre = dff_act;
  for (std::size_t i = 0; i < dff_pre.size(); ++i) {
    dff_pre.data()[i] *= gelu_grad(tr.ff_pre.data()[i]);
  }
  dn1 = add(dn1, matmul(dff_pre, transpose(p.w1)));
  g.dp.w1 = matmul(transpose(tr.n1), dff_pre);

  // n1 = LN1(r1)
  Matrix dr1;
  detail::layer_norm_backward(dn1, tr.n1_hat, tr.n1_sigma, p.ln1_gain, dr1, g.dp.ln1_gain,
                              g.dp.ln1_bias);

  // r1 = q + attn_out * Wo
  g.dq = dr1;
  Matrix dattn_out = matmul(dr1, transpose(p.wo));
  g.dp.wo = matmul(transpose(tr.attn_out), dr1);

  // Per-head attention backward.
  Matrix dq_proj(k_tokens, d);
  Matrix dk_proj(t, d);
  Matrix dv_proj(t, d);
  for (std::size_t h = 0; h < p.heads; ++h) {
    const std::size_t off = h * dh;
    const Matrix& a = tr.attn[h];
    // dA = dO V^T ; dV = A^T dO (per head slice)
    Matrix da(k_tokens, t);
    for (std::size_t i = 0; i < k_tokens; ++i) {
      for (std::size_t j = 0; j < t; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < dh; ++c) {
          acc += dattn_out(i, off + c) * tr.v_proj(j, off + c);
        }
        da(i, j) = acc;
      }
    }
    for (std::size_t j = 0; j < t; ++j) {
      for (std::size_t c = 0; c < dh; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < k_tokens; ++i) acc += a(i, j) * dattn_out(i, off + c);
        dv_proj(j, off + c) = acc;
      }
    }
    // Softmax rows: dS = A ⊙ (dA − rowsum(dA ⊙ A))
    Matrix ds(k_tokens, t);
    for (std::size_t i = 0; i < k_tokens; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < t; ++j) dot += da(i, j) * a(i, j);
      for (std::size_t j = 0; j < t; ++j) ds(i, j) = a(i, j) * (da(i, j) - dot);
    }
    // S = scale * Q K^T
    for (std::size_t i = 0; i < k_tokens; ++i) {
      for (std::size_t c = 0; c < dh; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < t; ++j) acc += ds(i, j) * tr.k_proj(j, off + c);
        dq_proj(i, off + c) = acc * scale;
      }
    }
    for (std::size_t j = 0; j < t; ++j) {
      for (std::size_t c = 0; c < dh; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < k_tokens; ++i) acc += ds(i, j) * tr.q_proj(i, off + c);
        dk_proj(j, off + c) = acc * scale;
      }
    }
  }

  // Projections.
  g.dq = add(g.dq, matmul(dq_proj, transpose(p.wq)));
  g.dp.wq = matmul(transpose(q.data), dq_proj);
  Matrix dx = matmul(dk_proj, transpose(p.wk));
  dx = add(dx, matmul(dv_proj, transpose(p.wv)));
  g.dp.wk = matmul(transpose(tr.x), dk_proj);
  g.dp.wv = matmul(transpose(tr.x), dv_proj);
  g.dzav = dx;  // the positional encoding is constant
  return g;
}

// dNLL/dlogits = softmax(row) − one_hot(target), row by row.
inline Matrix nll_backward(const Matrix& logits, const ResponseTokens& response) {
  Matrix grad(logits.rows(), logits.cols());
  for (std::size_t l = 0; l < logits.rows(); ++l) {
    double mx = logits(l, 0);
    for (std::size_t v = 1; v < logits.cols(); ++v) mx = std::max(mx, logits(l, v));
    long double z = 0.0L;
    for (std::size_t v = 0; v < logits.cols(); ++v) z += std::exp(logits(l, v) - mx);
    for (std::size_t v = 0; v < logits.cols(); ++v) {
      grad(l, v) = static_cast<double>(std::exp(logits(l, v) - mx) / z);
    }
    grad(l, response.ids[l]) -= 1.0;
  }
  return grad;
}

// ---------------------------------------------------------------------------
// The finite-difference harness.

enum class Kernel { attention_fuse, qformer_fuse, autoregressive_nll };

inline std::string to_string(Kernel k) {
  switch (k) {
    case Kernel::attention_fuse: return "attention_fuse";
    case Kernel::qformer_fuse: return "qformer_fuse";
    case Kernel::autoregressive_nll: return "autoregressive_nll";
  }
  return "attention_fuse";
}

struct GradCheckSpec {
  Kernel kernel = Kernel::attention_fuse;
  std::uint64_t seed = 1;
  double eps = 1e-5;
  // Feature dimension; qformer_fuse needs heads | dim.
  std::size_t dim = 4;
  AttentionFusionParams::Mode mode = AttentionFusionParams::Mode::softmax;
  // qformer_fuse
  std::size_t query_tokens = 2;
  std::size_t time_steps = 5;
  std::size_t heads = 2;
  // autoregressive_nll
  std::size_t length = 4;
  std::size_t vocab = 7;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;  // number of scalar parameters perturbed
};

namespace detail {

// Relative error with a unit floor, so near-zero gradients are compared
// absolutely.
inline double rel_error(double a, double b) {
  const double denom = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) / denom;
}

// Central differences of `loss` over every entry of `param`, compared to the
// already-computed analytic gradient `analytic`.
inline void check_block(std::vector<double>& param, const std::vector<double>& analytic,
                        double eps, const std::function<double()>& loss,
                        GradCheckResult& result) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double saved = param[i];
    param[i] = saved + eps;
    const double up = loss();
    param[i] = saved - eps;
    const double down = loss();
    param[i] = saved;
    const double fd = (up - down) / (2.0 * eps);
    if (!std::isfinite(fd)) throw NonFinite("finite difference is non-finite");
    result.max_rel_error = std::max(result.max_rel_error, rel_error(fd, analytic[i]));
    ++result.checked;
  }
}

inline void fill_uniform(std::vector<double>& v, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& x : v) x = u(rng);
}

}  // namespace detail

inline GradCheckResult finite_diff_check(const GradCheckSpec& spec) {
  if (!(spec.eps >= 1e-7 && spec.eps <= 1e-3)) {
    throw OutOfRange("finite_diff_check: eps must lie in [1e-7, 1e-3]");
  }
  std::mt19937_64 rng(spec.seed);
  GradCheckResult result;

  if (spec.kernel == Kernel::attention_fuse) {
    std::vector<double> za(spec.dim), zv(spec.dim);
    detail::fill_uniform(za, rng);
    detail::fill_uniform(zv, rng);
    AttentionFusionParams p;
    p.mode = spec.mode;
    p.w = Matrix(2, 2 * spec.dim);
    detail::fill_uniform(p.w.data(), rng);

    auto loss = [&] {
      const auto out = attention_fuse(za, zv, p);
      double s = 0.0;
      for (double v : out) s += v;
      return s;
    };
    const std::vector<double> ones(spec.dim, 1.0);
    const auto grads = attention_fuse_backward(za, zv, p, ones);
    detail::check_block(za, grads.dza, spec.eps, loss, result);
    detail::check_block(zv, grads.dzv, spec.eps, loss, result);
    detail::check_block(p.w.data(), grads.dw.data(), spec.eps, loss, result);
    return result;
  }

  if (spec.kernel == Kernel::qformer_fuse) {
    if (spec.heads == 0 || spec.dim % spec.heads != 0) {
      throw DimMismatch("finite_diff_check: qformer heads must divide dim");
    }
    const std::size_t d = spec.dim;
    QueryTokens q{Matrix(spec.query_tokens, d)};
    FeatureSequence zav{Matrix(spec.time_steps, d), Modality::fused};
    detail::fill_uniform(q.data.data(), rng);
    detail::fill_uniform(zav.data.data(), rng);
    QFormerParams p = QFormerParams::zeros(d, spec.heads);
    detail::fill_uniform(p.wq.data(), rng);
    detail::fill_uniform(p.wk.data(), rng);
    detail::fill_uniform(p.wv.data(), rng);
    detail::fill_uniform(p.wo.data(), rng);
    detail::fill_uniform(p.w1.data(), rng);
    detail::fill_uniform(p.w2.data(), rng);
    detail::fill_uniform(p.ln1_gain, rng);
    detail::fill_uniform(p.ln1_bias, rng);
    detail::fill_uniform(p.ln2_gain, rng);
    detail::fill_uniform(p.ln2_bias, rng);

    auto loss = [&] {
      QFormerTrace tr;
      const auto out = qformer_fuse_traced(q, zav, p, tr);
      double s = 0.0;
      for (double v : out.data()) s += v;
      return s;
    };
    QFormerTrace tr;
    const auto out = qformer_fuse_traced(q, zav, p, tr);
    Matrix ones(out.rows(), out.cols(), 1.0);
    auto grads = qformer_backward(q, zav, p, tr, ones);

    detail::check_block(q.data.data(), grads.dq.data(), spec.eps, loss, result);
    detail::check_block(zav.data.data(), grads.dzav.data(), spec.eps, loss, result);
    detail::check_block(p.wq.data(), grads.dp.wq.data(), spec.eps, loss, result);
    detail::check_block(p.wk.data(), grads.dp.wk.data(), spec.eps, loss, result);
    detail::check_block(p.wv.data(), grads.dp.wv.data(), spec.eps, loss, result);
    detail::check_block(p.wo.data(), grads.dp.wo.data(), spec.eps, loss, result);
    detail::check_block(p.w1.data(), grads.dp.w1.data(), spec.eps, loss, result);
    detail::check_block(p.w2.data(), grads.dp.w2.data(), spec.eps, loss, result);
    detail::check_block(p.ln1_gain, grads.dp.ln1_gain, spec.eps, loss, result);
    detail::check_block(p.ln1_bias, grads.dp.ln1_bias, spec.eps, loss, result);
    detail::check_block(p.ln2_gain, grads.dp.ln2_gain, spec.eps, loss, result);
    detail::check_block(p.ln2_bias, grads.dp.ln2_bias, spec.eps, loss, result);
    return result;
  }

  // autoregressive_nll
  Matrix logits(spec.length, spec.vocab);
  detail::fill_uniform(logits.data(), rng);
  ResponseTokens response;
  response.vocab_size = spec.vocab;
  std::uniform_int_distribution<std::size_t> pick(0, spec.vocab - 1);
  for (std::size_t i = 0; i < spec.length; ++i) response.ids.push_back(pick(rng));

  auto loss = [&] { return autoregressive_nll(logits, response); };
  const auto grads = nll_backward(logits, response);
  detail::check_block(logits.data(), grads.data(), spec.eps, loss, result);
  return result;
}

}  // namespace emeval::fusion
