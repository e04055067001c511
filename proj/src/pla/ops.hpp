#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "pla/tensor.hpp"

namespace pla {

namespace detail {
template <class T>
void check_same_shape(const DiffTensor<T>& a, const DiffTensor<T>& b,
                      const char* what) {
  require(a.shape() == b.shape(), ErrorCode::shape,
          std::string(what) + ": operand shapes differ");
}
}  // namespace detail

template <class T>
DiffTensor<T> add(const DiffTensor<T>& a, const DiffTensor<T>& b) {
  detail::check_same_shape(a, b, "add");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_op<T>(a.shape(), std::move(out), {a.node(), b.node()},
                    [](Node<T>& n) {
                      for (int s = 0; s < 2; ++s) {
                        auto& p = *n.parents[s];
                        if (!p.requires_grad) continue;
                        for (std::size_t i = 0; i < n.grad.size(); ++i)
                          p.grad[i] += n.grad[i];
                      }
                    });
}

template <class T>
DiffTensor<T> sub(const DiffTensor<T>& a, const DiffTensor<T>& b) {
  detail::check_same_shape(a, b, "sub");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_op<T>(a.shape(), std::move(out), {a.node(), b.node()},
                    [](Node<T>& n) {
                      auto& pa = *n.parents[0];
                      auto& pb = *n.parents[1];
                      for (std::size_t i = 0; i < n.grad.size(); ++i) {
                        if (pa.requires_grad) pa.grad[i] += n.grad[i];
                        if (pb.requires_grad) pb.grad[i] -= n.grad[i];
                      }
                    });
}

template <class T>
DiffTensor<T> mul(const DiffTensor<T>& a, const DiffTensor<T>& b) {
  detail::check_same_shape(a, b, "mul");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_op<T>(a.shape(), std::move(out), {a.node(), b.node()},
                    [](Node<T>& n) {
                      auto& pa = *n.parents[0];
                      auto& pb = *n.parents[1];
                      for (std::size_t i = 0; i < n.grad.size(); ++i) {
                        if (pa.requires_grad) pa.grad[i] += n.grad[i] * pb.value[i];
                        if (pb.requires_grad) pb.grad[i] += n.grad[i] * pa.value[i];
                      }
                    });
}

// Elementwise alpha*x + beta.
template <class T>
DiffTensor<T> affine(const DiffTensor<T>& x, T alpha, T beta) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = alpha * x.data()[i] + beta;
  return make_op<T>(x.shape(), std::move(out), {x.node()},
                    [alpha](Node<T>& n) {
                      auto& p = *n.parents[0];
                      for (std::size_t i = 0; i < n.grad.size(); ++i)
                        p.grad[i] += alpha * n.grad[i];
                    });
}

template <class T>
DiffTensor<T> scale(const DiffTensor<T>& x, T s) {
  return affine(x, s, T(0));
}

// Broadcast add of a bias row onto every row of a matrix.
template <class T>
DiffTensor<T> add_rowwise(const DiffTensor<T>& x, const DiffTensor<T>& bias) {
  require(x.ndim() == 2 && bias.ndim() == 1 && x.dim(1) == bias.dim(0),
          ErrorCode::shape, "add_rowwise: expected [N,F] + [F]");
  int rows = x.dim(0), cols = x.dim(1);
  std::vector<T> out(x.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out[static_cast<std::size_t>(r) * cols + c] =
          x.data()[static_cast<std::size_t>(r) * cols + c] + bias.data()[c];
  return make_op<T>(x.shape(), std::move(out), {x.node(), bias.node()},
                    [rows, cols](Node<T>& n) {
                      auto& px = *n.parents[0];
                      auto& pb = *n.parents[1];
                      for (int r = 0; r < rows; ++r)
                        for (int c = 0; c < cols; ++c) {
                          T g = n.grad[static_cast<std::size_t>(r) * cols + c];
                          if (px.requires_grad)
                            px.grad[static_cast<std::size_t>(r) * cols + c] += g;
                          if (pb.requires_grad) pb.grad[c] += g;
                        }
                    });
}

template <class T>
DiffTensor<T> matmul(const DiffTensor<T>& a, const DiffTensor<T>& b) {
  require(a.ndim() == 2 && b.ndim() == 2, ErrorCode::shape,
          "matmul: operands must be 2-d");
  require(a.dim(1) == b.dim(0), ErrorCode::shape,
          "matmul: inner dimensions disagree");
  int n = a.dim(0), k = a.dim(1), m = b.dim(1);
  std::vector<T> out(static_cast<std::size_t>(n) * m, T(0));
  const T* A = a.data().data();
  const T* B = b.data().data();
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < k; ++p) {
      T av = A[static_cast<std::size_t>(i) * k + p];
      const T* brow = B + static_cast<std::size_t>(p) * m;
      T* orow = out.data() + static_cast<std::size_t>(i) * m;
      for (int j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  return make_op<T>({n, m}, std::move(out), {a.node(), b.node()},
                    [n, k, m](Node<T>& nd) {
                      auto& pa = *nd.parents[0];
                      auto& pb = *nd.parents[1];
                      // dA = dOut * B^T ; dB = A^T * dOut
                      if (pa.requires_grad) {
                        for (int i = 0; i < n; ++i)
                          for (int j = 0; j < m; ++j) {
                            T g = nd.grad[static_cast<std::size_t>(i) * m + j];
                            for (int p = 0; p < k; ++p)
                              pa.grad[static_cast<std::size_t>(i) * k + p] +=
                                  g * pb.value[static_cast<std::size_t>(p) * m + j];
                          }
                      }
                      if (pb.requires_grad) {
                        for (int i = 0; i < n; ++i)
                          for (int p = 0; p < k; ++p) {
                            T av = pa.value[static_cast<std::size_t>(i) * k + p];
                            for (int j = 0; j < m; ++j)
                              pb.grad[static_cast<std::size_t>(p) * m + j] +=
                                  av * nd.grad[static_cast<std::size_t>(i) * m + j];
                          }
                      }
                    });
}

template <class T>
DiffTensor<T> dense(const DiffTensor<T>& x, const DiffTensor<T>& weights,
                    const DiffTensor<T>& bias) {
  return add_rowwise(matmul(x, weights), bias);
}

template <class T>
DiffTensor<T> relu(const DiffTensor<T>& x) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = x.data()[i] > T(0) ? x.data()[i] : T(0);
  return make_op<T>(x.shape(), std::move(out), {x.node()}, [](Node<T>& n) {
    auto& p = *n.parents[0];
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      if (p.value[i] > T(0)) p.grad[i] += n.grad[i];
  });
}

template <class T>
DiffTensor<T> sigmoid(const DiffTensor<T>& x) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    T v = x.data()[i];
    out[i] = v >= T(0) ? T(1) / (T(1) + std::exp(-v))
                       : std::exp(v) / (T(1) + std::exp(v));
  }
  return make_op<T>(x.shape(), std::move(out), {x.node()}, [](Node<T>& n) {
    auto& p = *n.parents[0];
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      T s = n.value[i];
      p.grad[i] += n.grad[i] * s * (T(1) - s);
    }
  });
}

template <class T>
DiffTensor<T> tanh_op(const DiffTensor<T>& x) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x.data()[i]);
  return make_op<T>(x.shape(), std::move(out), {x.node()}, [](Node<T>& n) {
    auto& p = *n.parents[0];
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      T t = n.value[i];
      p.grad[i] += n.grad[i] * (T(1) - t * t);
    }
  });
}

// 2-d convolution, NCHW layout, square kernel.
template <class T>
DiffTensor<T> conv2d(const DiffTensor<T>& input, const DiffTensor<T>& kernel,
                     int stride, int padding) {
  require(input.ndim() == 4 && kernel.ndim() == 4, ErrorCode::shape,
          "conv2d: input and kernel must be 4-d");
  require(stride >= 1 && padding >= 0, ErrorCode::shape,
          "conv2d: bad stride/padding");
  int B = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
  int Cout = kernel.dim(0), k = kernel.dim(2);
  require(kernel.dim(1) == Cin, ErrorCode::shape,
          "conv2d: kernel input channels do not match input");
  require(kernel.dim(3) == k, ErrorCode::shape, "conv2d: kernel must be square");
  require(k <= H + 2 * padding && k <= W + 2 * padding, ErrorCode::shape,
          "conv2d: kernel larger than padded input");
  int Ho = (H + 2 * padding - k) / stride + 1;
  int Wo = (W + 2 * padding - k) / stride + 1;

  auto in_at = [&](const std::vector<T>& v, int b, int c, int y, int x) {
    return v[((static_cast<std::size_t>(b) * Cin + c) * H + y) * W + x];
  };
  std::vector<T> out(static_cast<std::size_t>(B) * Cout * Ho * Wo, T(0));
  const auto& iv = input.data();
  const auto& kv = kernel.data();
  for (int b = 0; b < B; ++b)
    for (int co = 0; co < Cout; ++co)
      for (int ci = 0; ci < Cin; ++ci)
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx) {
            T kval = kv[((static_cast<std::size_t>(co) * Cin + ci) * k + ky) * k + kx];
            if (kval == T(0) && !kernel.requires_grad()) continue;
            for (int oy = 0; oy < Ho; ++oy) {
              int iy = oy * stride - padding + ky;
              if (iy < 0 || iy >= H) continue;
              T* orow = out.data() +
                        ((static_cast<std::size_t>(b) * Cout + co) * Ho + oy) * Wo;
              for (int ox = 0; ox < Wo; ++ox) {
                int ix = ox * stride - padding + kx;
                if (ix < 0 || ix >= W) continue;
                orow[ox] += kval * in_at(iv, b, ci, iy, ix);
              }
            }
          }

  return make_op<T>(
      {B, Cout, Ho, Wo}, std::move(out), {input.node(), kernel.node()},
      [B, Cin, Cout, H, W, Ho, Wo, k, stride, padding](Node<T>& n) {
        auto& pin = *n.parents[0];
        auto& pker = *n.parents[1];
        for (int b = 0; b < B; ++b)
          for (int co = 0; co < Cout; ++co)
            for (int ci = 0; ci < Cin; ++ci)
              for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                  std::size_t kidx =
                      ((static_cast<std::size_t>(co) * Cin + ci) * k + ky) * k + kx;
                  T kval = pker.value[kidx];
                  T kacc = T(0);
                  for (int oy = 0; oy < Ho; ++oy) {
                    int iy = oy * stride - padding + ky;
                    if (iy < 0 || iy >= H) continue;
                    const T* grow =
                        n.grad.data() +
                        ((static_cast<std::size_t>(b) * Cout + co) * Ho + oy) * Wo;
                    for (int ox = 0; ox < Wo; ++ox) {
                      int ix = ox * stride - padding + kx;
                      if (ix < 0 || ix >= W) continue;
                      std::size_t iidx =
                          ((static_cast<std::size_t>(b) * Cin + ci) * H + iy) * W + ix;
                      T g = grow[ox];
                      if (pin.requires_grad) pin.grad[iidx] += g * kval;
                      kacc += g * pin.value[iidx];
                    }
                  }
                  if (pker.requires_grad) pker.grad[kidx] += kacc;
                }
      });
}

// Add one bias value per channel of an NCHW tensor.
template <class T>
DiffTensor<T> add_channel_bias(const DiffTensor<T>& x, const DiffTensor<T>& bias) {
  require(x.ndim() == 4 && bias.ndim() == 1 && bias.dim(0) == x.dim(1),
          ErrorCode::shape, "add_channel_bias: shape mismatch");
  int B = x.dim(0), C = x.dim(1);
  int hw = x.dim(2) * x.dim(3);
  std::vector<T> out(x.size());
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      std::size_t base = (static_cast<std::size_t>(b) * C + c) * hw;
      T bv = bias.data()[c];
      for (int i = 0; i < hw; ++i) out[base + i] = x.data()[base + i] + bv;
    }
  return make_op<T>(x.shape(), std::move(out), {x.node(), bias.node()},
                    [B, C, hw](Node<T>& n) {
                      auto& px = *n.parents[0];
                      auto& pb = *n.parents[1];
                      for (int b = 0; b < B; ++b)
                        for (int c = 0; c < C; ++c) {
                          std::size_t base = (static_cast<std::size_t>(b) * C + c) * hw;
                          T acc = T(0);
                          for (int i = 0; i < hw; ++i) {
                            T g = n.grad[base + i];
                            if (px.requires_grad) px.grad[base + i] += g;
                            acc += g;
                          }
                          if (pb.requires_grad) pb.grad[c] += acc;
                        }
                    });
}

// Mean over the given axes; pooled axes are removed from the shape.
// An empty axis list is the identity.
template <class T>
DiffTensor<T> global_average_pool(const DiffTensor<T>& x,
                                  const std::vector<int>& axes) {
  int nd = x.ndim();
  std::vector<bool> pooled(static_cast<std::size_t>(nd), false);
  for (int a : axes) {
    require(a >= 0 && a < nd, ErrorCode::shape,
            "global_average_pool: axis out of range");
    pooled[static_cast<std::size_t>(a)] = true;
  }
  std::vector<int> out_shape;
  std::size_t n_pooled = 1;
  for (int i = 0; i < nd; ++i) {
    if (pooled[static_cast<std::size_t>(i)])
      n_pooled *= static_cast<std::size_t>(x.dim(i));
    else
      out_shape.push_back(x.dim(i));
  }
  if (out_shape.empty()) out_shape.push_back(1);

  // Strides of the output laid over the input's index space.
  std::vector<std::size_t> out_stride(static_cast<std::size_t>(nd), 0);
  {
    std::size_t s = 1;
    for (int i = nd - 1; i >= 0; --i) {
      if (!pooled[static_cast<std::size_t>(i)]) {
        out_stride[static_cast<std::size_t>(i)] = s;
        s *= static_cast<std::size_t>(x.dim(i));
      }
    }
  }
  std::size_t out_n = shape_numel(out_shape);
  std::vector<T> out(out_n, T(0));
  std::vector<int> idx(static_cast<std::size_t>(nd), 0);
  // Precompute the output offset of every input element once; reused in
  // the backward closure.
  auto offsets = std::make_shared<std::vector<std::uint32_t>>(x.size());
  {
    std::size_t o = 0;
    for (std::size_t lin = 0; lin < x.size(); ++lin) {
      (*offsets)[lin] = static_cast<std::uint32_t>(o);
      out[o] += x.data()[lin];
      // Increment the multi-index and maintain the output offset.
      for (int i = nd - 1; i >= 0; --i) {
        std::size_t ii = static_cast<std::size_t>(i);
        if (++idx[ii] < x.dim(i)) {
          o += out_stride[ii];
          break;
        }
        idx[ii] = 0;
        o -= out_stride[ii] * static_cast<std::size_t>(x.dim(i) - 1);
      }
    }
  }
  T inv = T(1) / static_cast<T>(n_pooled);
  for (auto& v : out) v *= inv;
  return make_op<T>(out_shape, std::move(out), {x.node()},
                    [offsets, inv](Node<T>& n) {
                      auto& p = *n.parents[0];
                      for (std::size_t i = 0; i < p.value.size(); ++i)
                        p.grad[i] += n.grad[(*offsets)[i]] * inv;
                    });
}

// View with a new shape; element order is unchanged.
template <class T>
DiffTensor<T> reshape(const DiffTensor<T>& x, std::vector<int> new_shape) {
  require(shape_numel(new_shape) == x.size(), ErrorCode::shape,
          "reshape: element count mismatch");
  std::vector<T> out = x.data();
  return make_op<T>(std::move(new_shape), std::move(out), {x.node()},
                    [](Node<T>& n) {
                      auto& p = *n.parents[0];
                      for (std::size_t i = 0; i < n.grad.size(); ++i)
                        p.grad[i] += n.grad[i];
                    });
}

// Multiply row i of x (first axis) by s[i].
template <class T>
DiffTensor<T> scale_rows(const DiffTensor<T>& x, const DiffTensor<T>& s) {
  require(x.ndim() >= 1 && s.size() == static_cast<std::size_t>(x.dim(0)),
          ErrorCode::shape, "scale_rows: scale length must equal first axis");
  std::size_t rows = static_cast<std::size_t>(x.dim(0));
  std::size_t rlen = x.size() / rows;
  std::vector<T> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    T sv = s.data()[r];
    for (std::size_t i = 0; i < rlen; ++i)
      out[r * rlen + i] = x.data()[r * rlen + i] * sv;
  }
  return make_op<T>(x.shape(), std::move(out), {x.node(), s.node()},
                    [rows, rlen](Node<T>& n) {
                      auto& px = *n.parents[0];
                      auto& ps = *n.parents[1];
                      for (std::size_t r = 0; r < rows; ++r) {
                        T sv = ps.value[r];
                        T acc = T(0);
                        for (std::size_t i = 0; i < rlen; ++i) {
                          T g = n.grad[r * rlen + i];
                          if (px.requires_grad) px.grad[r * rlen + i] += g * sv;
                          acc += g * px.value[r * rlen + i];
                        }
                        if (ps.requires_grad) ps.grad[r] += acc;
                      }
                    });
}

// Select index j along the second axis of a 3-d tensor [A,B,R] -> [A,R].
template <class T>
DiffTensor<T> select_axis1(const DiffTensor<T>& x, int j) {
  require(x.ndim() == 3, ErrorCode::shape, "select_axis1: expected 3-d tensor");
  require(j >= 0 && j < x.dim(1), ErrorCode::shape, "select_axis1: index out of range");
  int A = x.dim(0), B = x.dim(1), R = x.dim(2);
  std::vector<T> out(static_cast<std::size_t>(A) * R);
  for (int a = 0; a < A; ++a)
    for (int r = 0; r < R; ++r)
      out[static_cast<std::size_t>(a) * R + r] =
          x.data()[(static_cast<std::size_t>(a) * B + j) * R + r];
  return make_op<T>({A, R}, std::move(out), {x.node()},
                    [A, B, R, j](Node<T>& n) {
                      auto& p = *n.parents[0];
                      for (int a = 0; a < A; ++a)
                        for (int r = 0; r < R; ++r)
                          p.grad[(static_cast<std::size_t>(a) * B + j) * R + r] +=
                              n.grad[static_cast<std::size_t>(a) * R + r];
                    });
}

// Row-wise softmax of a plain buffer (no gradient; evaluation helper).
template <class T>
std::vector<T> softmax_rows(const std::vector<T>& logits, int rows, int cols) {
  std::vector<T> out(logits.size());
  for (int r = 0; r < rows; ++r) {
    const T* in = logits.data() + static_cast<std::size_t>(r) * cols;
    T* o = out.data() + static_cast<std::size_t>(r) * cols;
    T mx = in[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, in[c]);
    T sum = T(0);
    for (int c = 0; c < cols; ++c) {
      o[c] = std::exp(in[c] - mx);
      sum += o[c];
    }
    for (int c = 0; c < cols; ++c) o[c] /= sum;
  }
  return out;
}

// Mean over the batch of w_b * (-log softmax(logits_b)[label_b]),
// stabilized by max-subtraction.
template <class T>
DiffTensor<T> weighted_cross_entropy(const DiffTensor<T>& logits,
                                     const std::vector<int>& labels,
                                     const std::vector<T>& weights) {
  require(logits.ndim() == 2, ErrorCode::shape,
          "weighted_cross_entropy: logits must be [B,C]");
  int B = logits.dim(0), C = logits.dim(1);
  require(static_cast<int>(labels.size()) == B &&
              static_cast<int>(weights.size()) == B,
          ErrorCode::shape, "weighted_cross_entropy: batch size mismatch");
  for (int b = 0; b < B; ++b) {
    require(labels[static_cast<std::size_t>(b)] >= 0 &&
                labels[static_cast<std::size_t>(b)] < C,
            ErrorCode::shape, "weighted_cross_entropy: label out of range");
    require(weights[static_cast<std::size_t>(b)] > T(0), ErrorCode::shape,
            "weighted_cross_entropy: weights must be positive");
  }
  auto probs = std::make_shared<std::vector<T>>(
      softmax_rows(logits.data(), B, C));
  T loss = T(0);
  for (int b = 0; b < B; ++b) {
    T p = (*probs)[static_cast<std::size_t>(b) * C + labels[static_cast<std::size_t>(b)]];
    loss -= weights[static_cast<std::size_t>(b)] * std::log(std::max(p, std::numeric_limits<T>::min()));
  }
  loss /= static_cast<T>(B);
  auto lab = std::make_shared<std::vector<int>>(labels);
  auto wts = std::make_shared<std::vector<T>>(weights);
  return make_op<T>({1}, {loss}, {logits.node()},
                    [B, C, probs, lab, wts](Node<T>& n) {
                      auto& p = *n.parents[0];
                      T g = n.grad[0] / static_cast<T>(B);
                      for (int b = 0; b < B; ++b) {
                        T w = (*wts)[static_cast<std::size_t>(b)];
                        int y = (*lab)[static_cast<std::size_t>(b)];
                        for (int c = 0; c < C; ++c) {
                          T sm = (*probs)[static_cast<std::size_t>(b) * C + c];
                          p.grad[static_cast<std::size_t>(b) * C + c] +=
                              g * w * (sm - (c == y ? T(1) : T(0)));
                        }
                      }
                    });
}

// Standard GRU cell parameters: input, recurrent, and bias weights for the
// update gate (z), reset gate (r), and candidate state (n).
template <class T>
struct GruParams {
  DiffTensor<T> wz, uz, bz;
  DiffTensor<T> wr, ur, br;
  DiffTensor<T> wn, un, bn;

  std::vector<DiffTensor<T>> all() const {
    return {wz, uz, bz, wr, ur, br, wn, un, bn};
  }
};

// One GRU step: z and r gates, candidate via the reset-gated hidden state,
// convex combination of h_prev and the candidate.
template <class T>
DiffTensor<T> gru_cell(const DiffTensor<T>& x, const DiffTensor<T>& h_prev,
                       const GruParams<T>& p) {
  auto z = sigmoid(add(dense(x, p.wz, p.bz), matmul(h_prev, p.uz)));
  auto r = sigmoid(add(dense(x, p.wr, p.br), matmul(h_prev, p.ur)));
  auto cand = tanh_op(add(dense(x, p.wn, p.bn), mul(r, matmul(h_prev, p.un))));
  return add(mul(z, h_prev), mul(affine(z, T(-1), T(1)), cand));
}

}  // namespace pla
