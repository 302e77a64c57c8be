#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "emeval/errors.hpp"

namespace emeval::fusion {

// Small dense row-major matrix, double precision throughout. These kernels
// run at desk scale; clarity beats BLAS here.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != m.cols_) throw DimMismatch("ragged initializer");
      std::size_t j = 0;
      for (double v : row) m(i, j++) = v;
      ++i;
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return a_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  std::vector<double>& data() noexcept { return a_; }
  const std::vector<double>& data() const noexcept { return a_; }

  bool all_finite() const {
    for (double v : a_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const Matrix& x, const Matrix& y) {
    return x.rows_ == y.rows_ && x.cols_ == y.cols_ && x.a_ == y.a_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> a_;
};

inline Matrix matmul(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.rows()) {
    throw DimMismatch("matmul: " + std::to_string(x.cols()) + " vs " +
                      std::to_string(y.rows()));
  }
  Matrix out(x.rows(), y.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t k = 0; k < x.cols(); ++k) {
      const double v = x(i, k);
      if (v == 0.0) continue;
      for (std::size_t j = 0; j < y.cols(); ++j) out(i, j) += v * y(k, j);
    }
  }
  return out;
}

inline Matrix transpose(const Matrix& x) {
  Matrix out(x.cols(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) out(j, i) = x(i, j);
  }
  return out;
}

inline Matrix add(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw DimMismatch("add: shape mismatch");
  Matrix out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += y.data()[i];
  return out;
}

// Plain-text matrix format for regression fixtures: one row per line,
// whitespace-separated decimal values, '#' comment lines allowed, every row
// the same width.
inline Matrix load_matrix(std::istream& in, const std::string& origin = "<matrix>") {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!ls.eof()) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": not a number");
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(origin + ": empty matrix");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

inline Matrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return load_matrix(in, path.string());
}

inline void save_matrix(std::ostream& out, const Matrix& m) {
  out.precision(17);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ' ';
      out << m(i, j);
    }
    out << '\n';
  }
}

inline void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  save_matrix(out, m);
}

enum class Modality { audio, video, fused };

// A t x d feature sequence from one encoder (or the fusion output).
struct FeatureSequence {
  Matrix data;
  Modality modality = Modality::fused;

  void validate() const {
    if (data.rows() < 1 || data.cols() < 1) throw DimMismatch("feature sequence needs t,d >= 1");
    if (!data.all_finite()) throw NonFinite("feature sequence has non-finite entries");
  }
};

// K learnable query tokens, K x d.
struct QueryTokens {
  Matrix data;
};

// Symbolic holders for the raw sample pieces. Encoders and tokenizers live
// outside this toolkit, so nothing here consumes the media paths; the struct
// exists to keep shapes and naming in one place.
struct ModalInputs {
  std::string video_path;        // X_v
  std::string audio_path;        // X_a
  std::string text;              // X_t
  std::string instruction;       // Q
  std::string prompt;            // P (template-merged instruction + text)
  FeatureSequence video_tokens;  // H_v, when a projector has been applied
  FeatureSequence audio_tokens;  // H_a
};

// Rows of the audio sequence first, then the video sequence.
inline FeatureSequence concat_temporal(const FeatureSequence& za, const FeatureSequence& zv) {
  if (za.data.cols() != zv.data.cols()) {
    throw DimMismatch("concat_temporal: feature dims " + std::to_string(za.data.cols()) +
                      " vs " + std::to_string(zv.data.cols()));
  }
  Matrix out(za.data.rows() + zv.data.rows(), za.data.cols());
  for (std::size_t i = 0; i < za.data.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = za.data(i, j);
  }
  for (std::size_t i = 0; i < zv.data.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) out(za.data.rows() + i, j) = zv.data(i, j);
  }
  return {out, Modality::fused};
}

// Sinusoidal positional encoding:
//   PE[pos, 2i]   = sin(pos / 10000^(2i/d))
//   PE[pos, 2i+1] = cos(pos / 10000^(2i/d))
inline Matrix positional_encoding(std::size_t t, std::size_t d) {
  if (d % 2 != 0) throw OddDim("positional_encoding: d must be even, got " + std::to_string(d));
  Matrix pe(t, d);
  for (std::size_t pos = 0; pos < t; ++pos) {
    for (std::size_t i = 0; i * 2 < d; ++i) {
      const double freq = std::pow(10000.0, 2.0 * static_cast<double>(i) / static_cast<double>(d));
      pe(pos, 2 * i) = std::sin(static_cast<double>(pos) / freq);
      pe(pos, 2 * i + 1) = std::cos(static_cast<double>(pos) / freq);
    }
  }
  return pe;
}

// Column-wise mean over time.
inline std::vector<double> mean_pool(const FeatureSequence& z) {
  const auto& m = z.data;
  if (m.rows() < 1) throw DimMismatch("mean_pool: empty sequence");
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += m(i, j);
  }
  for (auto& v : out) v /= static_cast<double>(m.rows());
  return out;
}

// Pooled-attention fusion. exact: out = Zhat^T (W * flatten(Zhat)), the
// literal two-score weighting; softmax: the scores are softmax-normalized
// before weighting.
struct AttentionFusionParams {
  enum class Mode { exact, softmax };
  Matrix w;  // 2 x 2d
  Mode mode = Mode::exact;
};

namespace detail {

inline void softmax2(double s[2]) {
  const double m = s[0] > s[1] ? s[0] : s[1];
  const double e0 = std::exp(s[0] - m);
  const double e1 = std::exp(s[1] - m);
  const double z = e0 + e1;
  s[0] = e0 / z;
  s[1] = e1 / z;
}

}  // namespace detail

inline std::vector<double> attention_fuse(const std::vector<double>& za,
                                          const std::vector<double>& zv,
                                          const AttentionFusionParams& p) {
  const std::size_t d = za.size();
  if (zv.size() != d) throw DimMismatch("attention_fuse: za/zv dims differ");
  if (p.w.rows() != 2 || p.w.cols() != 2 * d) {
    throw DimMismatch("attention_fuse: W must be 2 x " + std::to_string(2 * d));
  }
  // flatten([za; zv]) row-major = za followed by zv.
  double s[2] = {0.0, 0.0};
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      s[r] += p.w(r, j) * za[j] + p.w(r, d + j) * zv[j];
    }
  }
  if (p.mode == AttentionFusionParams::Mode::softmax) detail::softmax2(s);
  std::vector<double> out(d);
  for (std::size_t j = 0; j < d; ++j) out[j] = s[0] * za[j] + s[1] * zv[j];
  return out;
}

inline constexpr double kLayerNormEps = 1e-5;

// erf-form GELU; smooth everywhere, which keeps finite-difference gradient
// checks well conditioned.
inline double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
}

inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::acos(-1.0));
  return cdf + x * pdf;
}

// One Q-Former block: multi-head cross-attention from the query tokens into
// the (position-encoded) multimodal sequence, then a position-wise
// feed-forward net, each with a residual connection and layer normalization.
struct QFormerParams {
  Matrix wq, wk, wv, wo;  // d x d
  Matrix w1;              // d x 4d
  Matrix w2;              // 4d x d
  std::vector<double> ln1_gain, ln1_bias;  // d
  std::vector<double> ln2_gain, ln2_bias;  // d
  std::size_t heads = 1;

  static QFormerParams zeros(std::size_t d, std::size_t heads) {
    QFormerParams p;
    p.wq = p.wk = p.wv = p.wo = Matrix(d, d);
    p.w1 = Matrix(d, 4 * d);
    p.w2 = Matrix(4 * d, d);
    p.ln1_gain.assign(d, 1.0);
    p.ln1_bias.assign(d, 0.0);
    p.ln2_gain.assign(d, 1.0);
    p.ln2_bias.assign(d, 0.0);
    p.heads = heads;
    return p;
  }

  void validate(std::size_t d) const {
    auto expect = [&](const Matrix& m, std::size_t r, std::size_t c, const char* name) {
      if (m.rows() != r || m.cols() != c) {
        throw DimMismatch(std::string("qformer: ") + name + " must be " + std::to_string(r) +
                          "x" + std::to_string(c));
      }
    };
    expect(wq, d, d, "Wq");
    expect(wk, d, d, "Wk");
    expect(wv, d, d, "Wv");
    expect(wo, d, d, "Wo");
    expect(w1, d, 4 * d, "W1");
    expect(w2, 4 * d, d, "W2");
    if (ln1_gain.size() != d || ln1_bias.size() != d || ln2_gain.size() != d ||
        ln2_bias.size() != d) {
      throw DimMismatch("qformer: layer-norm vectors must have length d");
    }
    if (heads < 1 || d % heads != 0) {
      throw DimMismatch("qformer: head count must divide d");
    }
  }
};

// Intermediates recorded by the forward pass; the gradient checker's
// backward pass consumes them.
struct QFormerTrace {
  Matrix x;                    // Z_av + PE
  Matrix q_proj, k_proj, v_proj;
  std::vector<Matrix> attn;    // per-head softmax rows, K x t
  Matrix attn_out;             // concatenated head outputs, K x d
  Matrix r1;                   // q + attention
  Matrix n1_hat;               // normalized r1 before gain/bias
  std::vector<double> n1_sigma;
  Matrix n1;
  Matrix ff_pre;               // n1 * W1
  Matrix ff_act;               // gelu(ff_pre)
  Matrix r2;                   // n1 + ff_act * W2
  Matrix n2_hat;
  std::vector<double> n2_sigma;
  Matrix out;
};

namespace detail {

// Row-wise layer norm with population variance; writes x_hat and sigma for
// the backward pass.
inline Matrix layer_norm(const Matrix& x, const std::vector<double>& gain,
                         const std::vector<double>& bias, Matrix& x_hat,
                         std::vector<double>& sigma) {
  const std::size_t n = x.rows(), d = x.cols();
  Matrix out(n, d);
  x_hat = Matrix(n, d);
  sigma.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += x(i, j);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x(i, j) - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double s = std::sqrt(var + kLayerNormEps);
    sigma[i] = s;
    for (std::size_t j = 0; j < d; ++j) {
      x_hat(i, j) = (x(i, j) - mean) / s;
      out(i, j) = gain[j] * x_hat(i, j) + bias[j];
    }
  }
  return out;
}

inline void softmax_rows(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double mx = m(i, 0);
    for (std::size_t j = 1; j < m.cols(); ++j) mx = std::max(mx, m(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      m(i, j) = std::exp(m(i, j) - mx);
      z += m(i, j);
    }
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) /= z;
  }
}

}  // namespace detail

inline Matrix qformer_fuse_traced(const QueryTokens& q, const FeatureSequence& zav,
                                  const QFormerParams& p, QFormerTrace& trace) {
  const std::size_t d = q.data.cols();
  const std::size_t k_tokens = q.data.rows();
  const std::size_t t = zav.data.rows();
  if (zav.data.cols() != d) {
    throw DimMismatch("qformer: query dim " + std::to_string(d) + " vs sequence dim " +
                      std::to_string(zav.data.cols()));
  }
  p.validate(d);
  const std::size_t dh = d / p.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  trace.x = add(zav.data, positional_encoding(t, d));
  trace.q_proj = matmul(q.data, p.wq);
  trace.k_proj = matmul(trace.x, p.wk);
  trace.v_proj = matmul(trace.x, p.wv);

  trace.attn.clear();
  trace.attn_out = Matrix(k_tokens, d);
  for (std::size_t h = 0; h < p.heads; ++h) {
    const std::size_t off = h * dh;
    Matrix scores(k_tokens, t);
    for (std::size_t i = 0; i < k_tokens; ++i) {
      for (std::size_t j = 0; j < t; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < dh; ++c) {
          dot += trace.q_proj(i, off + c) * trace.k_proj(j, off + c);
        }
        scores(i, j) = dot * scale;
      }
    }
    detail::softmax_rows(scores);
    for (std::size_t i = 0; i < k_tokens; ++i) {
      for (std::size_t c = 0; c < dh; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < t; ++j) acc += scores(i, j) * trace.v_proj(j, off + c);
        trace.attn_out(i, off + c) = acc;
      }
    }
    trace.attn.push_back(std::move(scores));
  }

  trace.r1 = add(q.data, matmul(trace.attn_out, p.wo));
  trace.n1 = detail::layer_norm(trace.r1, p.ln1_gain, p.ln1_bias, trace.n1_hat, trace.n1_sigma);

  trace.ff_pre = matmul(trace.n1, p.w1);
  trace.ff_act = trace.ff_pre;
  for (auto& v : trace.ff_act.data()) v = gelu(v);
  trace.r2 = add(trace.n1, matmul(trace.ff_act, p.w2));
  trace.out = detail::layer_norm(trace.r2, p.ln2_gain, p.ln2_bias, trace.n2_hat, trace.n2_sigma);

  if (!trace.out.all_finite()) throw NonFinite("qformer: non-finite output");
  return trace.out;
}

inline FeatureSequence qformer_fuse(const QueryTokens& q, const FeatureSequence& zav,
                                    const QFormerParams& p) {
  QFormerTrace trace;
  return {qformer_fuse_traced(q, zav, p, trace), Modality::fused};
}

// A tokenized target response scored by the autoregressive objective.
struct ResponseTokens {
  std::vector<std::size_t> ids;
  std::size_t vocab_size = 0;
};

// NLL = -sum_l log softmax(logits[l])[ids[l]], natural log units.
inline double autoregressive_nll(const Matrix& logits, const ResponseTokens& response) {
  if (response.ids.empty()) throw DimMismatch("autoregressive_nll: empty response");
  if (logits.rows() != response.ids.size()) {
    throw DimMismatch("autoregressive_nll: " + std::to_string(logits.rows()) +
                      " logit rows for " + std::to_string(response.ids.size()) + " tokens");
  }
  if (response.vocab_size != 0 && logits.cols() != response.vocab_size) {
    throw DimMismatch("autoregressive_nll: vocab size mismatch");
  }
  long double nll = 0.0L;
  for (std::size_t l = 0; l < logits.rows(); ++l) {
    const std::size_t target = response.ids[l];
    if (target >= logits.cols()) {
      throw IndexOutOfRange("autoregressive_nll: token id " + std::to_string(target) +
                            " >= vocab " + std::to_string(logits.cols()));
    }
    double mx = logits(l, 0);
    for (std::size_t v = 1; v < logits.cols(); ++v) mx = std::max(mx, logits(l, v));
    long double z = 0.0L;
    for (std::size_t v = 0; v < logits.cols(); ++v) z += std::exp(logits(l, v) - mx);
    nll += std::log(z) + mx - logits(l, target);
  }
  const double out = static_cast<double>(nll);
  if (!std::isfinite(out)) throw NonFinite("autoregressive_nll: non-finite result");
  return out;
}

}  // namespace emeval::fusion
