#include "racnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "racnn/threads.hpp"

namespace racnn {

using detail::TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

namespace detail {

void gemm_nn(const double* a, const double* b, double* c, int64_t m, int64_t k,
             int64_t n) {
#pragma omp parallel for schedule(static) num_threads(threads()) if (m > 1 && threads() > 1)
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_tn(const double* a, const double* b, double* c, int64_t m, int64_t k,
             int64_t n) {
#pragma omp parallel for schedule(static) num_threads(threads()) if (m > 1 && threads() > 1)
  for (int64_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double av = a[p * m + i];
      const double* brow = b + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(const double* a, const double* b, double* c, int64_t m, int64_t k,
             int64_t n) {
#pragma omp parallel for schedule(static) num_threads(threads()) if (m > 1 && threads() > 1)
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (int64_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

}  // namespace detail

static void im2col(const double* x, int64_t C, int64_t H, int64_t W, int64_t fh,
                   int64_t fw, int64_t pad, int64_t OH, int64_t OW, double* col) {
  const int64_t plane = OH * OW;
  for (int64_t c = 0; c < C; ++c) {
    const double* xc = x + c * H * W;
    for (int64_t kh = 0; kh < fh; ++kh) {
      for (int64_t kw = 0; kw < fw; ++kw) {
        double* row = col + ((c * fh + kh) * fw + kw) * plane;
        for (int64_t oy = 0; oy < OH; ++oy) {
          const int64_t iy = oy - pad + kh;
          double* out = row + oy * OW;
          if (iy < 0 || iy >= H) {
            std::fill(out, out + OW, 0.0);
            continue;
          }
          const double* xrow = xc + iy * W;
          for (int64_t ox = 0; ox < OW; ++ox) {
            const int64_t ix = ox - pad + kw;
            out[ox] = (ix >= 0 && ix < W) ? xrow[ix] : 0.0;
          }
        }
      }
    }
  }
}

// Gather form of col2im so each target element is reduced in one place.
static void col2im_add(const double* col, int64_t C, int64_t H, int64_t W,
                       int64_t fh, int64_t fw, int64_t pad, int64_t OH,
                       int64_t OW, double* dx) {
  const int64_t plane = OH * OW;
  for (int64_t c = 0; c < C; ++c) {
    for (int64_t y = 0; y < H; ++y) {
      for (int64_t x = 0; x < W; ++x) {
        double acc = 0.0;
        for (int64_t kh = 0; kh < fh; ++kh) {
          const int64_t oy = y + pad - kh;
          if (oy < 0 || oy >= OH) continue;
          for (int64_t kw = 0; kw < fw; ++kw) {
            const int64_t ox = x + pad - kw;
            if (ox < 0 || ox >= OW) continue;
            acc += col[((c * fh + kh) * fw + kw) * plane + oy * OW + ox];
          }
        }
        dx[(c * H + y) * W + x] += acc;
      }
    }
  }
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int64_t pad, Graph* tape) {
  if (input.ndim() != 4)
    throw std::invalid_argument("conv2d: input must be [N,C,H,W], got " +
                                shape_str(input.shape()));
  if (weight.ndim() != 4)
    throw std::invalid_argument("conv2d: weight must be [K,C,fh,fw], got " +
                                shape_str(weight.shape()));
  if (bias.ndim() != 1)
    throw std::invalid_argument("conv2d: bias must be [K], got " +
                                shape_str(bias.shape()));
  const int64_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const int64_t K = weight.dim(0), fh = weight.dim(2), fw = weight.dim(3);
  if (weight.dim(1) != C)
    throw std::invalid_argument("conv2d: weight channels " + std::to_string(weight.dim(1)) +
                                " do not match input channels " + std::to_string(C));
  if (bias.dim(0) != K)
    throw std::invalid_argument("conv2d: bias size " + std::to_string(bias.dim(0)) +
                                " does not match filter count " + std::to_string(K));
  if (fh % 2 == 0 || fw % 2 == 0)
    throw std::invalid_argument("conv2d: filter dims must be odd, got " +
                                std::to_string(fh) + "x" + std::to_string(fw));
  if (pad < 0) throw std::invalid_argument("conv2d: pad must be nonnegative");
  const int64_t OH = H + 2 * pad - fh + 1;
  const int64_t OW = W + 2 * pad - fw + 1;
  if (OH <= 0 || OW <= 0)
    throw std::invalid_argument("conv2d: spatial dims " + std::to_string(H) + "x" +
                                std::to_string(W) + " too small for filter " +
                                std::to_string(fh) + "x" + std::to_string(fw) +
                                " with pad " + std::to_string(pad));

  Tensor out = Tensor::zeros({N, K, OH, OW});
  const int64_t ckk = C * fh * fw;
  const int64_t plane = OH * OW;
  std::vector<double> col(static_cast<size_t>(ckk * plane));
  for (int64_t n = 0; n < N; ++n) {
    im2col(input.data() + n * C * H * W, C, H, W, fh, fw, pad, OH, OW, col.data());
    double* yn = out.data() + n * K * plane;
    detail::gemm_nn(weight.data(), col.data(), yn, K, ckk, plane);
    for (int64_t k = 0; k < K; ++k) {
      const double b = bias.data()[k];
      double* row = yn + k * plane;
      for (int64_t j = 0; j < plane; ++j) row[j] += b;
    }
  }

  if (tape && (input.node()->wants_grad() || weight.node()->wants_grad() ||
               bias.node()->wants_grad())) {
    NodePtr xn = input.node(), wn = weight.node(), bn = bias.node(), yn = out.node();
    tape->record(
        [xn, wn, bn, yn, N, C, H, W, K, fh, fw, pad, OH, OW]() {
          const int64_t ckk = C * fh * fw;
          const int64_t plane = OH * OW;
          const bool need_x = xn->wants_grad();
          const bool need_w = wn->wants_grad();
          const bool need_b = bn->wants_grad();
          if (need_x) xn->ensure_grad();
          if (need_w) wn->ensure_grad();
          if (need_b) bn->ensure_grad();
          std::vector<double> col(static_cast<size_t>(ckk * plane));
          std::vector<double> dcol;
          if (need_x) dcol.resize(static_cast<size_t>(ckk * plane));
          for (int64_t n = 0; n < N; ++n) {
            const double* dy = yn->grad.data() + n * K * plane;
            if (need_b) {
              for (int64_t k = 0; k < K; ++k) {
                double acc = 0.0;
                const double* row = dy + k * plane;
                for (int64_t j = 0; j < plane; ++j) acc += row[j];
                bn->grad[static_cast<size_t>(k)] += acc;
              }
            }
            if (need_w || need_x) {
              im2col(xn->data.data() + n * C * H * W, C, H, W, fh, fw, pad, OH,
                     OW, col.data());
            }
            if (need_w) {
              detail::gemm_nt(dy, col.data(), wn->grad.data(), K, plane, ckk);
            }
            if (need_x) {
              std::fill(dcol.begin(), dcol.end(), 0.0);
              detail::gemm_tn(wn->data.data(), dy, dcol.data(), ckk, K, plane);
              col2im_add(dcol.data(), C, H, W, fh, fw, pad, OH, OW,
                         xn->grad.data() + n * C * H * W);
            }
          }
        },
        out.node());
  }
  return out;
}

Tensor relu(const Tensor& input, Graph* tape) {
  Tensor out = Tensor::zeros(input.shape());
  const double* x = input.data();
  double* y = out.data();
  const int64_t n = input.numel();
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  if (tape && input.node()->wants_grad()) {
    NodePtr xn = input.node(), yn = out.node();
    tape->record(
        [xn, yn, n]() {
          xn->ensure_grad();
          for (int64_t i = 0; i < n; ++i) {
            if (xn->data[static_cast<size_t>(i)] > 0.0)
              xn->grad[static_cast<size_t>(i)] += yn->grad[static_cast<size_t>(i)];
          }
        },
        out.node());
  }
  return out;
}

Tensor maxpool2d(const Tensor& input, int64_t k, int64_t stride, Graph* tape) {
  if (input.ndim() != 4)
    throw std::invalid_argument("maxpool2d: input must be [N,C,H,W], got " +
                                shape_str(input.shape()));
  if (k <= 0 || stride <= 0)
    throw std::invalid_argument("maxpool2d: window and stride must be positive, got k=" +
                                std::to_string(k) + " stride=" + std::to_string(stride));
  const int64_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  if (H < k || W < k)
    throw std::invalid_argument("maxpool2d: input " + std::to_string(H) + "x" +
                                std::to_string(W) + " smaller than window " +
                                std::to_string(k));
  const int64_t OH = (H - k) / stride + 1;
  const int64_t OW = (W - k) / stride + 1;
  Tensor out = Tensor::zeros({N, C, OH, OW});
  // argmax flat offsets into each [H,W] plane, first hit wins on ties
  std::vector<int32_t> arg(static_cast<size_t>(N * C * OH * OW));
  const double* x = input.data();
  double* y = out.data();
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const double* plane = x + nc * H * W;
    double* yplane = y + nc * OH * OW;
    int32_t* aplane = arg.data() + nc * OH * OW;
    for (int64_t oy = 0; oy < OH; ++oy) {
      for (int64_t ox = 0; ox < OW; ++ox) {
        const int64_t y0 = oy * stride, x0 = ox * stride;
        double best = plane[y0 * W + x0];
        int32_t besti = static_cast<int32_t>(y0 * W + x0);
        for (int64_t dy = 0; dy < k; ++dy) {
          for (int64_t dx = 0; dx < k; ++dx) {
            const int64_t idx = (y0 + dy) * W + (x0 + dx);
            if (plane[idx] > best) {
              best = plane[idx];
              besti = static_cast<int32_t>(idx);
            }
          }
        }
        yplane[oy * OW + ox] = best;
        aplane[oy * OW + ox] = besti;
      }
    }
  }
  if (tape && input.node()->wants_grad()) {
    NodePtr xn = input.node(), yn = out.node();
    tape->record(
        [xn, yn, arg = std::move(arg), N, C, H, W, OH, OW]() {
          xn->ensure_grad();
          for (int64_t nc = 0; nc < N * C; ++nc) {
            double* gx = xn->grad.data() + nc * H * W;
            const double* gy = yn->grad.data() + nc * OH * OW;
            const int32_t* aplane = arg.data() + nc * OH * OW;
            for (int64_t j = 0; j < OH * OW; ++j) gx[aplane[j]] += gy[j];
          }
        },
        out.node());
  }
  return out;
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias,
              Graph* tape) {
  if (input.ndim() != 2)
    throw std::invalid_argument("linear: input must be [N,D], got " +
                                shape_str(input.shape()));
  if (weight.ndim() != 2)
    throw std::invalid_argument("linear: weight must be [M,D], got " +
                                shape_str(weight.shape()));
  if (bias.ndim() != 1)
    throw std::invalid_argument("linear: bias must be [M], got " +
                                shape_str(bias.shape()));
  const int64_t N = input.dim(0), D = input.dim(1), M = weight.dim(0);
  if (weight.dim(1) != D)
    throw std::invalid_argument("linear: weight inner dim " + std::to_string(weight.dim(1)) +
                                " does not match input dim " + std::to_string(D));
  if (bias.dim(0) != M)
    throw std::invalid_argument("linear: bias size " + std::to_string(bias.dim(0)) +
                                " does not match output dim " + std::to_string(M));
  Tensor out = Tensor::zeros({N, M});
  detail::gemm_nt(input.data(), weight.data(), out.data(), N, D, M);
  for (int64_t i = 0; i < N; ++i) {
    double* row = out.data() + i * M;
    const double* b = bias.data();
    for (int64_t j = 0; j < M; ++j) row[j] += b[j];
  }
  if (tape && (input.node()->wants_grad() || weight.node()->wants_grad() ||
               bias.node()->wants_grad())) {
    NodePtr xn = input.node(), wn = weight.node(), bn = bias.node(), yn = out.node();
    tape->record(
        [xn, wn, bn, yn, N, D, M]() {
          if (xn->wants_grad()) {
            xn->ensure_grad();
            detail::gemm_nn(yn->grad.data(), wn->data.data(), xn->grad.data(), N, M, D);
          }
          if (wn->wants_grad()) {
            wn->ensure_grad();
            detail::gemm_tn(yn->grad.data(), xn->data.data(), wn->grad.data(), M, N, D);
          }
          if (bn->wants_grad()) {
            bn->ensure_grad();
            for (int64_t i = 0; i < N; ++i) {
              const double* row = yn->grad.data() + i * M;
              for (int64_t j = 0; j < M; ++j) bn->grad[static_cast<size_t>(j)] += row[j];
            }
          }
        },
        out.node());
  }
  return out;
}

static void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

Tensor add(const Tensor& a, const Tensor& b, Graph* tape) {
  check_same_shape(a, b, "add");
  Tensor out = Tensor::zeros(a.shape());
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
  if (tape && (a.node()->wants_grad() || b.node()->wants_grad())) {
    NodePtr an = a.node(), bn = b.node(), yn = out.node();
    tape->record(
        [an, bn, yn, n]() {
          if (an->wants_grad()) {
            an->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
              an->grad[static_cast<size_t>(i)] += yn->grad[static_cast<size_t>(i)];
          }
          if (bn->wants_grad()) {
            bn->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
              bn->grad[static_cast<size_t>(i)] += yn->grad[static_cast<size_t>(i)];
          }
        },
        out.node());
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b, Graph* tape) {
  check_same_shape(a, b, "mul");
  Tensor out = Tensor::zeros(a.shape());
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
  if (tape && (a.node()->wants_grad() || b.node()->wants_grad())) {
    NodePtr an = a.node(), bn = b.node(), yn = out.node();
    tape->record(
        [an, bn, yn, n]() {
          if (an->wants_grad()) {
            an->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
              an->grad[static_cast<size_t>(i)] +=
                  yn->grad[static_cast<size_t>(i)] * bn->data[static_cast<size_t>(i)];
          }
          if (bn->wants_grad()) {
            bn->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
              bn->grad[static_cast<size_t>(i)] +=
                  yn->grad[static_cast<size_t>(i)] * an->data[static_cast<size_t>(i)];
          }
        },
        out.node());
  }
  return out;
}

Tensor sum(const Tensor& input, Graph* tape) {
  double acc = 0.0;
  const int64_t n = input.numel();
  for (int64_t i = 0; i < n; ++i) acc += input.data()[i];
  Tensor out = Tensor::scalar(acc);
  if (tape && input.node()->wants_grad()) {
    NodePtr xn = input.node(), yn = out.node();
    tape->record(
        [xn, yn, n]() {
          xn->ensure_grad();
          const double g = yn->grad[0];
          for (int64_t i = 0; i < n; ++i) xn->grad[static_cast<size_t>(i)] += g;
        },
        out.node());
  }
  return out;
}

Tensor reshape(const Tensor& input, std::vector<int64_t> shape, Graph* tape) {
  if (shape_numel(shape) != input.numel())
    throw std::invalid_argument("reshape: cannot view " + shape_str(input.shape()) +
                                " as " + shape_str(shape));
  Tensor out = Tensor::from(std::move(shape), input.data_vec());
  if (tape && input.node()->wants_grad()) {
    NodePtr xn = input.node(), yn = out.node();
    const int64_t n = input.numel();
    tape->record(
        [xn, yn, n]() {
          xn->ensure_grad();
          for (int64_t i = 0; i < n; ++i)
            xn->grad[static_cast<size_t>(i)] += yn->grad[static_cast<size_t>(i)];
        },
        out.node());
  }
  return out;
}

Tensor mse_loss(const Tensor& pred, const Tensor& target, Graph* tape) {
  check_same_shape(pred, target, "mse_loss");
  const int64_t n = pred.numel();
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double d = pred.data()[i] - target.data()[i];
    acc += d * d;
  }
  Tensor out = Tensor::scalar(0.5 * acc / static_cast<double>(n));
  if (tape && (pred.node()->wants_grad() || target.node()->wants_grad())) {
    NodePtr pn = pred.node(), tn = target.node(), yn = out.node();
    tape->record(
        [pn, tn, yn, n]() {
          const double g = yn->grad[0] / static_cast<double>(n);
          if (pn->wants_grad()) {
            pn->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
              pn->grad[static_cast<size_t>(i)] +=
                  g * (pn->data[static_cast<size_t>(i)] - tn->data[static_cast<size_t>(i)]);
          }
          if (tn->wants_grad()) {
            tn->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
              tn->grad[static_cast<size_t>(i)] -=
                  g * (pn->data[static_cast<size_t>(i)] - tn->data[static_cast<size_t>(i)]);
          }
        },
        out.node());
  }
  return out;
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                             Graph* tape) {
  if (logits.ndim() != 2)
    throw std::invalid_argument("softmax_cross_entropy: logits must be [N,l], got " +
                                shape_str(logits.shape()));
  const int64_t N = logits.dim(0), L = logits.dim(1);
  if (L < 2)
    throw std::invalid_argument("softmax_cross_entropy: needs at least 2 classes, got " +
                                std::to_string(L));
  if (static_cast<int64_t>(labels.size()) != N)
    throw std::invalid_argument("softmax_cross_entropy: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(N) + " rows");
  for (int64_t i = 0; i < N; ++i) {
    if (labels[static_cast<size_t>(i)] < 0 || labels[static_cast<size_t>(i)] >= L)
      throw std::invalid_argument("softmax_cross_entropy: label " +
                                  std::to_string(labels[static_cast<size_t>(i)]) +
                                  " out of range [0," + std::to_string(L) + ")");
  }
  double acc = 0.0;
  for (int64_t i = 0; i < N; ++i) {
    const double* row = logits.data() + i * L;
    double m = row[0];
    for (int64_t j = 1; j < L; ++j) m = std::max(m, row[j]);
    double lse = 0.0;
    for (int64_t j = 0; j < L; ++j) lse += std::exp(row[j] - m);
    lse = std::log(lse);
    acc += lse - (row[labels[static_cast<size_t>(i)]] - m);
  }
  Tensor out = Tensor::scalar(acc / static_cast<double>(N));
  if (tape && logits.node()->wants_grad()) {
    NodePtr xn = logits.node(), yn = out.node();
    tape->record(
        [xn, yn, labels, N, L]() {
          xn->ensure_grad();
          const double g = yn->grad[0] / static_cast<double>(N);
          for (int64_t i = 0; i < N; ++i) {
            const double* row = xn->data.data() + i * L;
            double* grow = xn->grad.data() + i * L;
            double m = row[0];
            for (int64_t j = 1; j < L; ++j) m = std::max(m, row[j]);
            double z = 0.0;
            for (int64_t j = 0; j < L; ++j) z += std::exp(row[j] - m);
            for (int64_t j = 0; j < L; ++j) {
              double p = std::exp(row[j] - m) / z;
              if (j == labels[static_cast<size_t>(i)]) p -= 1.0;
              grow[j] += g * p;
            }
          }
        },
        out.node());
  }
  return out;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  if (logits.ndim() != 2)
    throw std::invalid_argument("argmax_rows: input must be [N,l], got " +
                                shape_str(logits.shape()));
  const int64_t N = logits.dim(0), L = logits.dim(1);
  std::vector<int> out(static_cast<size_t>(N));
  for (int64_t i = 0; i < N; ++i) {
    const double* row = logits.data() + i * L;
    int best = 0;
    for (int64_t j = 1; j < L; ++j) {
      if (row[j] > row[best]) best = static_cast<int>(j);
    }
    out[static_cast<size_t>(i)] = best;
  }
  return out;
}

}  // namespace racnn
