// Copyright 2026 The Somnus Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "somnus/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <string>

#include "somnus/core/errors.hpp"

namespace somnus::ad {

namespace {

using std::ptrdiff_t;
using std::size_t;

// Gradient buffer of parent `i`, or nullptr when it takes no gradient.
double* parent_grad(Node& self, size_t i) {
  Node* p = self.parents[i].get();
  if (!p->requires_grad) return nullptr;
  p->ensure_grad();
  return p->grad.data();
}

const std::vector<double>& parent_data(const Node& self, size_t i) {
  return self.parents[i]->data;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

void require_rank(const Tensor& t, size_t rank, const char* op,
                  const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " +
                     std::to_string(rank) + ", got " + shape_str(t.shape()));
  }
}

double sigmoid_scalar(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv_from_xy) {
  const auto xs = x.data();
  std::vector<double> out(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) out[i] = fwd(xs[i]);
  return Tensor::make_result(
      x.shape(), std::move(out), {x}, [deriv_from_xy](Node& self) {
        double* gx = parent_grad(self, 0);
        if (!gx) return;
        const auto& xv = parent_data(self, 0);
        for (size_t i = 0; i < self.grad.size(); ++i) {
          gx[i] += self.grad[i] * deriv_from_xy(xv[i], self.data[i]);
        }
      });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (size_t k = 0; k < 2; ++k) {
      if (double* g = parent_grad(self, k)) {
        for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - b.at(i);
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (double* g = parent_grad(self, 0)) {
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (double* g = parent_grad(self, 1)) {
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& av = parent_data(self, 0);
    const auto& bv = parent_data(self, 1);
    if (double* g = parent_grad(self, 0)) {
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (double* g = parent_grad(self, 1)) {
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * factor;
  return Tensor::make_result(a.shape(), std::move(out), {a},
                             [factor](Node& self) {
                               if (double* g = parent_grad(self, 0)) {
                                 for (size_t i = 0; i < self.grad.size(); ++i)
                                   g[i] += self.grad[i] * factor;
                               }
                             });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return Tensor::make_result({1}, {total}, {a}, [](Node& self) {
    if (double* g = parent_grad(self, 0)) {
      const size_t n = self.parents[0]->data.size();
      for (size_t i = 0; i < n; ++i) g[i] += self.grad[0];
    }
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return Tensor::make_result(std::move(shape), std::move(out), {a},
                             [](Node& self) {
                               if (double* g = parent_grad(self, 0)) {
                                 for (size_t i = 0; i < self.grad.size(); ++i)
                                   g[i] += self.grad[i];
                               }
                             });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank(x, 2, "linear", "input");
  require_rank(w, 2, "linear", "weight");
  require_rank(b, 1, "linear", "bias");
  const size_t n = x.dim(0), in = x.dim(1), out_dim = w.dim(0);
  if (w.dim(1) != in || b.dim(0) != out_dim) {
    throw ShapeError("linear: input " + shape_str(x.shape()) + ", weight " +
                     shape_str(w.shape()) + ", bias " + shape_str(b.shape()));
  }
  const double* xv = x.data().data();
  const double* wv = w.data().data();
  const double* bv = b.data().data();
  std::vector<double> out(n * out_dim);
  for (size_t r = 0; r < n; ++r) {
    const double* xr = xv + r * in;
    for (size_t o = 0; o < out_dim; ++o) {
      const double* wr = wv + o * in;
      double acc = bv[o];
      for (size_t i = 0; i < in; ++i) acc += xr[i] * wr[i];
      out[r * out_dim + o] = acc;
    }
  }
  return Tensor::make_result(
      {n, out_dim}, std::move(out), {x, w, b}, [n, in, out_dim](Node& self) {
        const double* g = self.grad.data();
        const double* xv = parent_data(self, 0).data();
        const double* wv = parent_data(self, 1).data();
        if (double* gx = parent_grad(self, 0)) {
          for (size_t r = 0; r < n; ++r) {
            for (size_t o = 0; o < out_dim; ++o) {
              const double go = g[r * out_dim + o];
              if (go == 0.0) continue;
              const double* wr = wv + o * in;
              double* gxr = gx + r * in;
              for (size_t i = 0; i < in; ++i) gxr[i] += go * wr[i];
            }
          }
        }
        if (double* gw = parent_grad(self, 1)) {
          for (size_t r = 0; r < n; ++r) {
            const double* xr = xv + r * in;
            for (size_t o = 0; o < out_dim; ++o) {
              const double go = g[r * out_dim + o];
              if (go == 0.0) continue;
              double* gwr = gw + o * in;
              for (size_t i = 0; i < in; ++i) gwr[i] += go * xr[i];
            }
          }
        }
        if (double* gb = parent_grad(self, 2)) {
          for (size_t r = 0; r < n; ++r)
            for (size_t o = 0; o < out_dim; ++o) gb[o] += g[r * out_dim + o];
        }
      });
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b,
              std::size_t stride, std::size_t padding) {
  return conv1d(x, w, b, stride, padding, padding);
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b,
              std::size_t stride, std::size_t pad_left,
              std::size_t pad_right) {
  require_rank(x, 3, "conv1d", "input");
  require_rank(w, 3, "conv1d", "kernel");
  require_rank(b, 1, "conv1d", "bias");
  const size_t n = x.dim(0), cin = x.dim(1), len = x.dim(2);
  const size_t cout = w.dim(0), k = w.dim(2);
  if (w.dim(1) != cin) {
    throw ShapeError("conv1d: kernel expects " + std::to_string(w.dim(1)) +
                     " input channels, input has " + std::to_string(cin));
  }
  if (b.dim(0) != cout) throw ShapeError("conv1d: bias/out_channels mismatch");
  if (stride == 0) throw ShapeError("conv1d: stride must be positive");
  const size_t padded = len + pad_left + pad_right;
  if (padded < k) {
    throw ShapeError("conv1d: padded length " + std::to_string(padded) +
                     " shorter than kernel " + std::to_string(k));
  }
  const size_t lout = (padded - k) / stride + 1;

  // Valid output range [t0, t1) for kernel tap kk, so that the input index
  // t·stride + kk − pad_left lies inside [0, len).
  struct Range {
    size_t t0, t1;
  };
  std::vector<Range> ranges(k);
  const auto s = static_cast<ptrdiff_t>(stride);
  const auto pl = static_cast<ptrdiff_t>(pad_left);
  for (size_t kk = 0; kk < k; ++kk) {
    const ptrdiff_t lo = pl - static_cast<ptrdiff_t>(kk);  // need t·s ≥ lo
    const ptrdiff_t hi =
        static_cast<ptrdiff_t>(len) - 1 + pl - static_cast<ptrdiff_t>(kk);
    ptrdiff_t t0 = lo <= 0 ? 0 : (lo + s - 1) / s;
    ptrdiff_t t1 = hi < 0 ? 0 : hi / s + 1;
    t1 = std::min<ptrdiff_t>(t1, static_cast<ptrdiff_t>(lout));
    if (t1 < t0) t1 = t0;
    ranges[kk] = {static_cast<size_t>(t0), static_cast<size_t>(t1)};
  }

  const double* xv = x.data().data();
  const double* wv = w.data().data();
  const double* bv = b.data().data();
  std::vector<double> out(n * cout * lout);
  for (size_t bi = 0; bi < n; ++bi) {
    for (size_t oc = 0; oc < cout; ++oc) {
      double* o = out.data() + (bi * cout + oc) * lout;
      std::fill(o, o + lout, bv[oc]);
      for (size_t ic = 0; ic < cin; ++ic) {
        const double* xi = xv + (bi * cin + ic) * len;
        const double* wk = wv + (oc * cin + ic) * k;
        for (size_t kk = 0; kk < k; ++kk) {
          const double wval = wk[kk];
          const auto [t0, t1] = ranges[kk];
          const ptrdiff_t off = static_cast<ptrdiff_t>(kk) - pl;
          if (stride == 1) {
            const double* xs = xi + off;
            for (size_t t = t0; t < t1; ++t) o[t] += wval * xs[t];
          } else {
            for (size_t t = t0; t < t1; ++t)
              o[t] += wval * xi[static_cast<ptrdiff_t>(t) * s + off];
          }
        }
      }
    }
  }

  return Tensor::make_result(
      {n, cout, lout}, std::move(out), {x, w, b},
      [n, cin, len, cout, k, lout, s, pl, ranges](Node& self) {
        const double* g = self.grad.data();
        const double* xv = parent_data(self, 0).data();
        const double* wv = parent_data(self, 1).data();
        double* gx = parent_grad(self, 0);
        double* gw = parent_grad(self, 1);
        double* gb = parent_grad(self, 2);
        for (size_t bi = 0; bi < n; ++bi) {
          for (size_t oc = 0; oc < cout; ++oc) {
            const double* go = g + (bi * cout + oc) * lout;
            if (gb) {
              double acc = 0.0;
              for (size_t t = 0; t < lout; ++t) acc += go[t];
              gb[oc] += acc;
            }
            for (size_t ic = 0; ic < cin; ++ic) {
              const double* xi = xv + (bi * cin + ic) * len;
              const double* wk = wv + (oc * cin + ic) * k;
              double* gxi = gx ? gx + (bi * cin + ic) * len : nullptr;
              double* gwk = gw ? gw + (oc * cin + ic) * k : nullptr;
              for (size_t kk = 0; kk < k; ++kk) {
                const auto [t0, t1] = ranges[kk];
                const ptrdiff_t off = static_cast<ptrdiff_t>(kk) - pl;
                if (s == 1) {
                  if (gwk) {
                    double acc = 0.0;
                    const double* xs = xi + off;
                    for (size_t t = t0; t < t1; ++t) acc += go[t] * xs[t];
                    gwk[kk] += acc;
                  }
                  if (gxi) {
                    const double wval = wk[kk];
                    double* gxs = gxi + off;
                    for (size_t t = t0; t < t1; ++t) gxs[t] += wval * go[t];
                  }
                } else {
                  double acc = 0.0;
                  const double wval = wk[kk];
                  for (size_t t = t0; t < t1; ++t) {
                    const ptrdiff_t pos = static_cast<ptrdiff_t>(t) * s + off;
                    acc += go[t] * xi[pos];
                    if (gxi) gxi[pos] += wval * go[t];
                  }
                  if (gwk) gwk[kk] += acc;
                }
              }
            }
          }
        }
      });
}

Tensor maxpool1d(const Tensor& x, std::size_t window, std::size_t stride,
                 std::size_t pad_right) {
  if (x.rank() == 0) throw ShapeError("maxpool1d: scalar input");
  if (window == 0 || stride == 0) {
    throw ShapeError("maxpool1d: window and stride must be positive");
  }
  const size_t len = x.shape().back();
  if (window > len + pad_right || pad_right >= window) {
    throw ShapeError("maxpool1d: window " + std::to_string(window) +
                     " exceeds length " + std::to_string(len));
  }
  const size_t rows = x.numel() / len;
  const size_t lout = (len + pad_right - window) / stride + 1;
  Shape out_shape = x.shape();
  out_shape.back() = lout;
  std::vector<double> out(rows * lout);
  std::vector<size_t> argmax(rows * lout);
  const double* xv = x.data().data();
  for (size_t r = 0; r < rows; ++r) {
    const double* xr = xv + r * len;
    for (size_t j = 0; j < lout; ++j) {
      const size_t start = j * stride;
      const size_t end = std::min(start + window, len);
      size_t best = start;
      for (size_t i = start + 1; i < end; ++i) {
        if (xr[i] > xr[best]) best = i;
      }
      out[r * lout + j] = xr[best];
      argmax[r * lout + j] = r * len + best;
    }
  }
  return Tensor::make_result(std::move(out_shape), std::move(out), {x},
                             [argmax = std::move(argmax)](Node& self) {
                               double* gx = parent_grad(self, 0);
                               if (!gx) return;
                               for (size_t i = 0; i < argmax.size(); ++i)
                                 gx[argmax[i]] += self.grad[i];
                             });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0 ? v : 0.0; },
      [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  return unary(
      x, [slope](double v) { return v > 0 ? v : slope * v; },
      [slope](double v, double) { return v > 0 ? 1.0 : slope; });
}

Tensor tanh(const Tensor& x) {
  return unary(
      x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x, [](double v) { return sigmoid_scalar(v); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor softmax(const Tensor& x, int axis) {
  const auto rank = static_cast<int>(x.rank());
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw ShapeError("softmax: bad axis");
  const size_t dim = x.dim(static_cast<size_t>(axis));
  size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= x.dim(static_cast<size_t>(i));
  for (int i = axis + 1; i < rank; ++i) inner *= x.dim(static_cast<size_t>(i));
  const double* xv = x.data().data();
  std::vector<double> out(x.numel());
  for (size_t o = 0; o < outer; ++o) {
    for (size_t in = 0; in < inner; ++in) {
      const size_t base = o * dim * inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (size_t d = 0; d < dim; ++d) mx = std::max(mx, xv[base + d * inner]);
      double total = 0.0;
      for (size_t d = 0; d < dim; ++d) {
        const double e = std::exp(xv[base + d * inner] - mx);
        out[base + d * inner] = e;
        total += e;
      }
      for (size_t d = 0; d < dim; ++d) out[base + d * inner] /= total;
    }
  }
  return Tensor::make_result(
      x.shape(), std::move(out), {x}, [outer, inner, dim](Node& self) {
        double* gx = parent_grad(self, 0);
        if (!gx) return;
        const double* y = self.data.data();
        const double* g = self.grad.data();
        for (size_t o = 0; o < outer; ++o) {
          for (size_t in = 0; in < inner; ++in) {
            const size_t base = o * dim * inner + in;
            double dot = 0.0;
            for (size_t d = 0; d < dim; ++d)
              dot += g[base + d * inner] * y[base + d * inner];
            for (size_t d = 0; d < dim; ++d) {
              const size_t i = base + d * inner;
              gx[i] += y[i] * (g[i] - dot);
            }
          }
        }
      });
}

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw UsageError("dropout: rate must lie in [0, 1)");
  }
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> mask(x.numel());
  for (double& m : mask) m = uniform(rng) < rate ? 0.0 : keep_scale;
  std::vector<double> out(x.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = x.at(i) * mask[i];
  return Tensor::make_result(x.shape(), std::move(out), {x},
                             [mask = std::move(mask)](Node& self) {
                               double* gx = parent_grad(self, 0);
                               if (!gx) return;
                               for (size_t i = 0; i < mask.size(); ++i)
                                 gx[i] += self.grad[i] * mask[i];
                             });
}

void ClassWeights::validate() const {
  for (double w : values) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw ConfigError("class weights must be finite and positive");
    }
  }
}

Tensor weighted_cross_entropy(const Tensor& logits,
                              std::span<const int> labels,
                              const ClassWeights& weights) {
  require_rank(logits, 2, "weighted_cross_entropy", "logits");
  constexpr size_t kClasses = 5;
  if (logits.dim(1) != kClasses) {
    throw ShapeError("weighted_cross_entropy: expected 5 logits per row, got " +
                     shape_str(logits.shape()));
  }
  const size_t n = logits.dim(0);
  if (labels.size() != n) {
    throw ShapeError("weighted_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(n) + " rows");
  }
  if (n == 0) throw ShapeError("weighted_cross_entropy: empty batch");
  weights.validate();
  for (int y : labels) {
    if (y < 0 || y >= static_cast<int>(kClasses)) {
      throw DataError("weighted_cross_entropy: label " + std::to_string(y) +
                      " outside {0..4}");
    }
  }
  const double* z = logits.data().data();
  std::vector<double> probs(n * kClasses);
  double total = 0.0;
  for (size_t r = 0; r < n; ++r) {
    const double* zr = z + r * kClasses;
    const double mx = *std::max_element(zr, zr + kClasses);
    double denom = 0.0;
    for (size_t c = 0; c < kClasses; ++c) {
      probs[r * kClasses + c] = std::exp(zr[c] - mx);
      denom += probs[r * kClasses + c];
    }
    for (size_t c = 0; c < kClasses; ++c) probs[r * kClasses + c] /= denom;
    const auto y = static_cast<size_t>(labels[r]);
    const double log_p = zr[y] - mx - std::log(denom);
    total += weights.values[y] * -log_p;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<int> y_copy(labels.begin(), labels.end());
  return Tensor::make_result(
      {1}, {total * inv_n}, {logits},
      [probs = std::move(probs), y_copy = std::move(y_copy), weights, inv_n,
       n](Node& self) {
        double* g = parent_grad(self, 0);
        if (!g) return;
        const double up = self.grad[0] * inv_n;
        for (size_t r = 0; r < n; ++r) {
          const auto y = static_cast<size_t>(y_copy[r]);
          const double wy = weights.values[y] * up;
          for (size_t c = 0; c < kClasses; ++c) {
            const double p = probs[r * kClasses + c];
            g[r * kClasses + c] += wy * (p - (c == y ? 1.0 : 0.0));
          }
        }
      });
}

Tensor bce_loss(const Tensor& probabilities, const Tensor& targets) {
  require_same_shape(probabilities, targets, "bce_loss");
  const size_t n = probabilities.numel();
  if (n == 0) throw ShapeError("bce_loss: empty input");
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double p =
        std::clamp(probabilities.at(i), kBceEpsilon, 1.0 - kBceEpsilon);
    const double t = targets.at(i);
    total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return Tensor::make_result(
      {1}, {total * inv_n}, {probabilities, targets},
      [inv_n, n](Node& self) {
        const auto& pv = parent_data(self, 0);
        const auto& tv = parent_data(self, 1);
        const double up = self.grad[0] * inv_n;
        if (double* gp = parent_grad(self, 0)) {
          for (size_t i = 0; i < n; ++i) {
            const double raw = pv[i];
            if (raw <= kBceEpsilon || raw >= 1.0 - kBceEpsilon) continue;
            gp[i] += up * (-tv[i] / raw + (1.0 - tv[i]) / (1.0 - raw));
          }
        }
        if (double* gt = parent_grad(self, 1)) {
          for (size_t i = 0; i < n; ++i) {
            const double p = std::clamp(pv[i], kBceEpsilon, 1.0 - kBceEpsilon);
            gt[i] += up * (std::log(1.0 - p) - std::log(p));
          }
        }
      });
}

LstmState lstm_step(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                    const LstmWeights& weights) {
  require_rank(x, 2, "lstm_step", "input");
  require_rank(h_prev, 2, "lstm_step", "hidden state");
  require_rank(c_prev, 2, "lstm_step", "cell state");
  const size_t batch = x.dim(0), in = x.dim(1), hidden = h_prev.dim(1);
  if (h_prev.dim(0) != batch || c_prev.dim(0) != batch) {
    throw ShapeError("lstm_step: batch mismatch between input " +
                     shape_str(x.shape()) + " and state " +
                     shape_str(h_prev.shape()));
  }
  if (c_prev.dim(1) != hidden) {
    throw ShapeError("lstm_step: hidden/cell width mismatch");
  }
  const size_t g4 = 4 * hidden;
  if (weights.w_ih.shape() != Shape{g4, in} ||
      weights.w_hh.shape() != Shape{g4, hidden} ||
      weights.bias.shape() != Shape{g4}) {
    throw ShapeError("lstm_step: weights " + shape_str(weights.w_ih.shape()) +
                     "/" + shape_str(weights.w_hh.shape()) + "/" +
                     shape_str(weights.bias.shape()) + " inconsistent with in=" +
                     std::to_string(in) + " hidden=" + std::to_string(hidden));
  }

  const double* xv = x.data().data();
  const double* hv = h_prev.data().data();
  const double* cv = c_prev.data().data();
  const double* wih = weights.w_ih.data().data();
  const double* whh = weights.w_hh.data().data();
  const double* bv = weights.bias.data().data();

  // gates holds post-activation i, f, g, o; out holds [h | c].
  std::vector<double> gates(batch * g4);
  std::vector<double> tanh_c(batch * hidden);
  std::vector<double> out(batch * 2 * hidden);
  for (size_t b = 0; b < batch; ++b) {
    const double* xb = xv + b * in;
    const double* hb = hv + b * hidden;
    double* gb = gates.data() + b * g4;
    for (size_t j = 0; j < g4; ++j) {
      double acc = bv[j];
      const double* wi = wih + j * in;
      for (size_t i = 0; i < in; ++i) acc += wi[i] * xb[i];
      const double* wh = whh + j * hidden;
      for (size_t i = 0; i < hidden; ++i) acc += wh[i] * hb[i];
      gb[j] = acc;
    }
    for (size_t j = 0; j < hidden; ++j) {
      const double ig = sigmoid_scalar(gb[j]);
      const double fg = sigmoid_scalar(gb[hidden + j]);
      const double gg = std::tanh(gb[2 * hidden + j]);
      const double og = sigmoid_scalar(gb[3 * hidden + j]);
      gb[j] = ig;
      gb[hidden + j] = fg;
      gb[2 * hidden + j] = gg;
      gb[3 * hidden + j] = og;
      const double c = fg * cv[b * hidden + j] + ig * gg;
      const double tc = std::tanh(c);
      tanh_c[b * hidden + j] = tc;
      out[b * 2 * hidden + j] = og * tc;
      out[b * 2 * hidden + hidden + j] = c;
    }
  }

  Tensor hc = Tensor::make_result(
      {batch, 2 * hidden}, std::move(out),
      {x, h_prev, c_prev, weights.w_ih, weights.w_hh, weights.bias},
      [batch, in, hidden, g4, gates = std::move(gates),
       tanh_c = std::move(tanh_c)](Node& self) {
        const double* g = self.grad.data();
        const double* xv = parent_data(self, 0).data();
        const double* hv = parent_data(self, 1).data();
        const double* cv = parent_data(self, 2).data();
        const double* wih = parent_data(self, 3).data();
        const double* whh = parent_data(self, 4).data();
        double* gx = parent_grad(self, 0);
        double* gh = parent_grad(self, 1);
        double* gc = parent_grad(self, 2);
        double* gwih = parent_grad(self, 3);
        double* gwhh = parent_grad(self, 4);
        double* gbias = parent_grad(self, 5);
        std::vector<double> da(g4);
        for (size_t b = 0; b < batch; ++b) {
          const double* gates_b = gates.data() + b * g4;
          for (size_t j = 0; j < hidden; ++j) {
            const double ig = gates_b[j], fg = gates_b[hidden + j];
            const double gg = gates_b[2 * hidden + j];
            const double og = gates_b[3 * hidden + j];
            const double tc = tanh_c[b * hidden + j];
            const double dh = g[b * 2 * hidden + j];
            const double dc =
                g[b * 2 * hidden + hidden + j] + dh * og * (1.0 - tc * tc);
            da[j] = dc * gg * ig * (1.0 - ig);
            da[hidden + j] = dc * cv[b * hidden + j] * fg * (1.0 - fg);
            da[2 * hidden + j] = dc * ig * (1.0 - gg * gg);
            da[3 * hidden + j] = dh * tc * og * (1.0 - og);
            if (gc) gc[b * hidden + j] += dc * fg;
          }
          const double* xb = xv + b * in;
          const double* hb = hv + b * hidden;
          for (size_t j = 0; j < g4; ++j) {
            const double d = da[j];
            if (d == 0.0) continue;
            if (gbias) gbias[j] += d;
            if (gx) {
              const double* wi = wih + j * in;
              double* gxb = gx + b * in;
              for (size_t i = 0; i < in; ++i) gxb[i] += d * wi[i];
            }
            if (gh) {
              const double* wh = whh + j * hidden;
              double* ghb = gh + b * hidden;
              for (size_t i = 0; i < hidden; ++i) ghb[i] += d * wh[i];
            }
            if (gwih) {
              double* gw = gwih + j * in;
              for (size_t i = 0; i < in; ++i) gw[i] += d * xb[i];
            }
            if (gwhh) {
              double* gw = gwhh + j * hidden;
              for (size_t i = 0; i < hidden; ++i) gw[i] += d * hb[i];
            }
          }
        }
      });
  return {slice_cols(hc, 0, hidden), slice_cols(hc, hidden, 2 * hidden)};
}

Tensor select_step(const Tensor& x, std::size_t step) {
  require_rank(x, 3, "select_step", "input");
  const size_t batch = x.dim(0), steps = x.dim(1), feat = x.dim(2);
  if (step >= steps) throw ShapeError("select_step: step out of range");
  std::vector<double> out(batch * feat);
  const double* xv = x.data().data();
  for (size_t b = 0; b < batch; ++b) {
    std::copy_n(xv + (b * steps + step) * feat, feat, out.data() + b * feat);
  }
  return Tensor::make_result(
      {batch, feat}, std::move(out), {x}, [batch, steps, feat, step](Node& self) {
        double* gx = parent_grad(self, 0);
        if (!gx) return;
        for (size_t b = 0; b < batch; ++b) {
          double* dst = gx + (b * steps + step) * feat;
          const double* src = self.grad.data() + b * feat;
          for (size_t f = 0; f < feat; ++f) dst[f] += src[f];
        }
      });
}

Tensor stack_steps(std::span<const Tensor> steps) {
  if (steps.empty()) throw ShapeError("stack_steps: no steps");
  const Shape& first = steps.front().shape();
  if (first.size() != 2) throw ShapeError("stack_steps: steps must be [B, F]");
  for (const Tensor& t : steps) {
    if (t.shape() != first) throw ShapeError("stack_steps: ragged steps");
  }
  const size_t batch = first[0], feat = first[1], count = steps.size();
  std::vector<double> out(batch * count * feat);
  for (size_t t = 0; t < count; ++t) {
    const double* src = steps[t].data().data();
    for (size_t b = 0; b < batch; ++b) {
      std::copy_n(src + b * feat, feat, out.data() + (b * count + t) * feat);
    }
  }
  std::vector<Tensor> parents(steps.begin(), steps.end());
  return Tensor::make_result(
      {batch, count, feat}, std::move(out), std::move(parents),
      [batch, count, feat](Node& self) {
        for (size_t t = 0; t < count; ++t) {
          double* gs = parent_grad(self, t);
          if (!gs) continue;
          for (size_t b = 0; b < batch; ++b) {
            const double* src = self.grad.data() + (b * count + t) * feat;
            for (size_t f = 0; f < feat; ++f) gs[b * feat + f] += src[f];
          }
        }
      });
}

Tensor transpose12(const Tensor& x) {
  require_rank(x, 3, "transpose12", "input");
  const size_t batch = x.dim(0), rows = x.dim(1), cols = x.dim(2);
  std::vector<double> out(x.numel());
  const double* xv = x.data().data();
  for (size_t b = 0; b < batch; ++b)
    for (size_t r = 0; r < rows; ++r)
      for (size_t c = 0; c < cols; ++c)
        out[(b * cols + c) * rows + r] = xv[(b * rows + r) * cols + c];
  return Tensor::make_result(
      {batch, cols, rows}, std::move(out), {x}, [batch, rows, cols](Node& self) {
        double* gx = parent_grad(self, 0);
        if (!gx) return;
        for (size_t b = 0; b < batch; ++b)
          for (size_t r = 0; r < rows; ++r)
            for (size_t c = 0; c < cols; ++c)
              gx[(b * rows + r) * cols + c] +=
                  self.grad[(b * cols + c) * rows + r];
      });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank(x, 2, "slice_cols", "input");
  const size_t rows = x.dim(0), cols = x.dim(1);
  if (begin > end || end > cols) throw ShapeError("slice_cols: bad range");
  const size_t width = end - begin;
  std::vector<double> out(rows * width);
  const double* xv = x.data().data();
  for (size_t r = 0; r < rows; ++r)
    std::copy_n(xv + r * cols + begin, width, out.data() + r * width);
  return Tensor::make_result(
      {rows, width}, std::move(out), {x}, [rows, cols, begin, width](Node& self) {
        double* gx = parent_grad(self, 0);
        if (!gx) return;
        for (size_t r = 0; r < rows; ++r)
          for (size_t c = 0; c < width; ++c)
            gx[r * cols + begin + c] += self.grad[r * width + c];
      });
}

Tensor upsample_linear(const Tensor& x, std::size_t out_len) {
  require_rank(x, 2, "upsample_linear", "input");
  const size_t batch = x.dim(0), n = x.dim(1);
  if (n == 0 || out_len == 0) throw ShapeError("upsample_linear: empty");
  // Source coordinate of output j is j·(n−1)/(out_len−1).
  std::vector<size_t> lo(out_len);
  std::vector<double> frac(out_len);
  for (size_t j = 0; j < out_len; ++j) {
    if (n == 1 || out_len == 1) {
      lo[j] = 0;
      frac[j] = 0.0;
      continue;
    }
    const double pos = static_cast<double>(j) * static_cast<double>(n - 1) /
                       static_cast<double>(out_len - 1);
    size_t i0 = static_cast<size_t>(std::floor(pos));
    if (i0 >= n - 1) i0 = n - 2;
    lo[j] = i0;
    frac[j] = pos - static_cast<double>(i0);
  }
  std::vector<double> out(batch * out_len);
  const double* xv = x.data().data();
  for (size_t b = 0; b < batch; ++b) {
    const double* xb = xv + b * n;
    for (size_t j = 0; j < out_len; ++j) {
      const double a = xb[lo[j]];
      const double c = n > 1 ? xb[lo[j] + 1] : a;
      out[b * out_len + j] = a + (c - a) * frac[j];
    }
  }
  return Tensor::make_result(
      {batch, out_len}, std::move(out), {x},
      [batch, n, out_len, lo = std::move(lo), frac = std::move(frac)](Node& self) {
        double* gx = parent_grad(self, 0);
        if (!gx) return;
        for (size_t b = 0; b < batch; ++b) {
          for (size_t j = 0; j < out_len; ++j) {
            const double g = self.grad[b * out_len + j];
            gx[b * n + lo[j]] += g * (1.0 - frac[j]);
            if (n > 1) gx[b * n + lo[j] + 1] += g * frac[j];
          }
        }
      });
}

}  // namespace somnus::ad
