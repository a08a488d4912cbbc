#pragma once

// Differentiable operations on BasicTensor. Reductions and matmul accumulate
// in double regardless of the storage type.

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "emohead/tensor.hpp"

namespace emohead {

namespace detail {

enum class Broadcast { kSame, kScalar, kRow, kColumn };

// How operand b maps onto a's elements. Supported: equal shapes, a single
// element, a trailing-dim vector against rows, and an [r,1] column against
// an [r,c] matrix.
inline Broadcast resolve_broadcast(const Shape& a, const Shape& b,
                                   const char* op) {
  if (a == b) return Broadcast::kSame;
  if (shape_numel(b) == 1) return Broadcast::kScalar;
  if (b.size() == 1 && !a.empty() && a.back() == b[0]) return Broadcast::kRow;
  if (a.size() == 2 && b.size() == 2 && b[0] == a[0] && b[1] == 1) {
    return Broadcast::kColumn;
  }
  throw DimensionError(std::string(op) + ": cannot broadcast " +
                       shape_str(b) + " onto " + shape_str(a));
}

inline std::size_t broadcast_index(Broadcast kind, std::size_t i,
                                   const Shape& a, const Shape& b) {
  switch (kind) {
    case Broadcast::kSame:
      return i;
    case Broadcast::kScalar:
      return 0;
    case Broadcast::kRow:
      return i % b[0];
    case Broadcast::kColumn:
      return i / a[1];
  }
  return 0;
}

template <typename T>
Node<T>& input(Node<T>& out, std::size_t k) {
  return *out.inputs[k];
}

template <typename T>
bool wants_grad(Node<T>& out, std::size_t k) {
  return k < out.inputs.size() && out.inputs[k]->requires_grad;
}

template <typename T, typename Fwd, typename Grad>
BasicTensor<T> unary(const char* name, const BasicTensor<T>& x, Fwd fwd,
                     Grad dfdx) {
  std::vector<T> out(x.numel());
  const auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xv[i]);
  return BasicTensor<T>::from_op(
      name, x.shape(), std::move(out), {x}, [dfdx](Node<T>& self) {
        auto& in = input(self, 0);
        auto g = in.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
          g[i] += self.grad[i] * dfdx(in.value[i], self.value[i]);
        }
      });
}

}  // namespace detail

enum class BinaryOp { kAdd, kSub, kMul, kDiv };

template <typename T>
BasicTensor<T> binary(BinaryOp op, const BasicTensor<T>& a,
                      const BasicTensor<T>& b) {
  static constexpr const char* kNames[] = {"add", "sub", "mul", "div"};
  const char* name = kNames[static_cast<int>(op)];
  // add/mul are symmetric, so let the larger operand lead.
  if ((op == BinaryOp::kAdd || op == BinaryOp::kMul) &&
      a.numel() < b.numel()) {
    return binary(op, b, a);
  }
  const auto kind = detail::resolve_broadcast(a.shape(), b.shape(), name);
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T y = bv[detail::broadcast_index(kind, i, a.shape(), b.shape())];
    switch (op) {
      case BinaryOp::kAdd: out[i] = av[i] + y; break;
      case BinaryOp::kSub: out[i] = av[i] - y; break;
      case BinaryOp::kMul: out[i] = av[i] * y; break;
      case BinaryOp::kDiv:
        if (y == T{0}) throw DomainError("div: division by zero");
        out[i] = av[i] / y;
        break;
    }
  }
  const Shape a_shape = a.shape();
  const Shape b_shape = b.shape();
  return BasicTensor<T>::from_op(
      name, a_shape, std::move(out), {a, b},
      [op, kind, a_shape, b_shape](detail::Node<T>& self) {
        auto& na = detail::input(self, 0);
        auto& nb = detail::input(self, 1);
        const bool ga = na.requires_grad;
        const bool gb = nb.requires_grad;
        std::span<T> da = ga ? na.grad_buffer() : std::span<T>{};
        std::span<T> db = gb ? nb.grad_buffer() : std::span<T>{};
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          const std::size_t j =
              detail::broadcast_index(kind, i, a_shape, b_shape);
          const T g = self.grad[i];
          const T x = na.value[i];
          const T y = nb.value[j];
          switch (op) {
            case BinaryOp::kAdd:
              if (ga) da[i] += g;
              if (gb) db[j] += g;
              break;
            case BinaryOp::kSub:
              if (ga) da[i] += g;
              if (gb) db[j] -= g;
              break;
            case BinaryOp::kMul:
              if (ga) da[i] += g * y;
              if (gb) db[j] += g * x;
              break;
            case BinaryOp::kDiv:
              if (ga) da[i] += g / y;
              if (gb) db[j] -= g * x / (y * y);
              break;
          }
        }
      });
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return binary(BinaryOp::kAdd, a, b);
}
template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return binary(BinaryOp::kSub, a, b);
}
template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return binary(BinaryOp::kMul, a, b);
}
template <typename T>
BasicTensor<T> div(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return binary(BinaryOp::kDiv, a, b);
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, T c) {
  return detail::unary(
      "add_scalar", a, [c](T x) { return x + c; },
      [](T, T) { return T{1}; });
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T c) {
  return detail::unary(
      "scale", a, [c](T x) { return x * c; }, [c](T, T) { return c; });
}

template <typename T>
BasicTensor<T> tanh(const BasicTensor<T>& x) {
  return detail::unary(
      "tanh", x, [](T v) { return std::tanh(v); },
      [](T, T y) { return T{1} - y * y; });
}

// Subgradient 0 at the kink.
template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  return detail::unary(
      "relu", x, [](T v) { return v > T{0} ? v : T{0}; },
      [](T v, T) { return v > T{0} ? T{1} : T{0}; });
}

template <typename T>
BasicTensor<T> sqrt(const BasicTensor<T>& x) {
  for (const T v : x.data()) {
    if (v < T{0}) throw DomainError("sqrt of negative value");
  }
  return detail::unary(
      "sqrt", x, [](T v) { return std::sqrt(v); },
      [](T, T y) { return T{0.5} / y; });
}

// sqrt(max(x, floor)); zero gradient below the floor keeps backward finite
// when a variance collapses.
template <typename T>
BasicTensor<T> sqrt_clamped(const BasicTensor<T>& x, T floor) {
  return detail::unary(
      "sqrt_clamped", x, [floor](T v) { return std::sqrt(std::max(v, floor)); },
      [floor](T v, T y) { return v > floor ? T{0.5} / y : T{0}; });
}

template <typename T>
BasicTensor<T> log(const BasicTensor<T>& x) {
  for (const T v : x.data()) {
    if (!(v > T{0})) throw DomainError("log of nonpositive value");
  }
  return detail::unary(
      "log", x, [](T v) { return std::log(v); },
      [](T v, T) { return T{1} / v; });
}

template <typename T>
BasicTensor<T> exp(const BasicTensor<T>& x) {
  return detail::unary(
      "exp", x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <typename T>
BasicTensor<T> square(const BasicTensor<T>& x) {
  return detail::unary(
      "square", x, [](T v) { return v * v; },
      [](T v, T) { return T{2} * v; });
}

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape " + shape_str(x.shape()) + " -> " +
                         shape_str(shape));
  }
  std::vector<T> values(x.data().begin(), x.data().end());
  return BasicTensor<T>::from_op(
      "reshape", std::move(shape), std::move(values), {x},
      [](detail::Node<T>& self) {
        auto g = detail::input(self, 0).grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      });
}

// [r,c] x [c,k] -> [r,k]
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  const std::size_t r = a.dim(0), c = a.dim(1), k = b.dim(1);
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> acc(r * k, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t p = 0; p < c; ++p) {
      const double x = av[i * c + p];
      if (x == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) {
        acc[i * k + j] += x * static_cast<double>(bv[p * k + j]);
      }
    }
  }
  std::vector<T> out(acc.begin(), acc.end());
  return BasicTensor<T>::from_op(
      "matmul", {r, k}, std::move(out), {a, b},
      [r, c, k](detail::Node<T>& self) {
        auto& na = detail::input(self, 0);
        auto& nb = detail::input(self, 1);
        if (na.requires_grad) {
          // dA = dOut * B^T
          auto da = na.grad_buffer();
          for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t p = 0; p < c; ++p) {
              double s = 0.0;
              for (std::size_t j = 0; j < k; ++j) {
                s += static_cast<double>(self.grad[i * k + j]) *
                     nb.value[p * k + j];
              }
              da[i * c + p] += static_cast<T>(s);
            }
          }
        }
        if (nb.requires_grad) {
          // dB = A^T * dOut
          auto db = nb.grad_buffer();
          std::vector<double> tmp(c * k, 0.0);
          for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t p = 0; p < c; ++p) {
              const double x = na.value[i * c + p];
              if (x == 0.0) continue;
              for (std::size_t j = 0; j < k; ++j) {
                tmp[p * k + j] += x * self.grad[i * k + j];
              }
            }
          }
          for (std::size_t i = 0; i < tmp.size(); ++i) {
            db[i] += static_cast<T>(tmp[i]);
          }
        }
      });
}

// Max-subtracted softmax over a rank-1 tensor.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& x) {
  if (x.rank() != 1 || x.numel() == 0) {
    throw DimensionError("softmax needs a non-empty vector, got " +
                         shape_str(x.shape()));
  }
  const auto xv = x.data();
  const T mx = *std::max_element(xv.begin(), xv.end());
  std::vector<double> e(xv.size());
  double total = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i] = std::exp(static_cast<double>(xv[i]) - mx);
    total += e[i];
  }
  std::vector<T> out(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    out[i] = static_cast<T>(e[i] / total);
  }
  return BasicTensor<T>::from_op(
      "softmax", x.shape(), std::move(out), {x}, [](detail::Node<T>& self) {
        double dot = 0.0;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          dot += static_cast<double>(self.grad[i]) * self.value[i];
        }
        auto g = detail::input(self, 0).grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
          g[i] += static_cast<T>(self.value[i] * (self.grad[i] - dot));
        }
      });
}

enum class Reduce { kMean, kVar };

// Column-wise statistic over the rows (frames) of an [m,d] matrix. Variance
// uses the population divisor m.
template <typename T>
BasicTensor<T> reduce(const BasicTensor<T>& x, Reduce kind) {
  if (x.rank() != 2) {
    throw DimensionError("reduce expects [m,d], got " + shape_str(x.shape()));
  }
  const std::size_t m = x.dim(0), d = x.dim(1);
  if (m == 0) throw DimensionError("reduce over zero frames");
  const auto xv = x.data();
  std::vector<double> mean(d, 0.0);
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t k = 0; k < d; ++k) mean[k] += xv[t * d + k];
  }
  for (auto& v : mean) v /= static_cast<double>(m);
  std::vector<T> out(d);
  if (kind == Reduce::kMean) {
    for (std::size_t k = 0; k < d; ++k) out[k] = static_cast<T>(mean[k]);
    return BasicTensor<T>::from_op(
        "mean", {d}, std::move(out), {x}, [m, d](detail::Node<T>& self) {
          auto g = detail::input(self, 0).grad_buffer();
          const double inv = 1.0 / static_cast<double>(m);
          for (std::size_t t = 0; t < m; ++t) {
            for (std::size_t k = 0; k < d; ++k) {
              g[t * d + k] += static_cast<T>(self.grad[k] * inv);
            }
          }
        });
  }
  std::vector<double> var(d, 0.0);
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t k = 0; k < d; ++k) {
      const double c = xv[t * d + k] - mean[k];
      var[k] += c * c;
    }
  }
  for (std::size_t k = 0; k < d; ++k) {
    out[k] = static_cast<T>(var[k] / static_cast<double>(m));
  }
  return BasicTensor<T>::from_op(
      "var", {d}, std::move(out), {x},
      [m, d, mean = std::move(mean)](detail::Node<T>& self) {
        auto& in = detail::input(self, 0);
        auto g = in.grad_buffer();
        const double s = 2.0 / static_cast<double>(m);
        for (std::size_t t = 0; t < m; ++t) {
          for (std::size_t k = 0; k < d; ++k) {
            const double c = in.value[t * d + k] - mean[k];
            g[t * d + k] += static_cast<T>(self.grad[k] * s * c);
          }
        }
      });
}

// Concatenation of rank-1 tensors, in order.
template <typename T>
BasicTensor<T> concat(const std::vector<BasicTensor<T>>& parts) {
  std::vector<T> out;
  std::vector<std::size_t> sizes;
  for (const auto& p : parts) {
    if (p.rank() != 1) {
      throw DimensionError("concat expects rank-1 inputs, got " +
                           shape_str(p.shape()));
    }
    out.insert(out.end(), p.data().begin(), p.data().end());
    sizes.push_back(p.numel());
  }
  const std::size_t n = out.size();
  return BasicTensor<T>::from_op(
      "concat", {n}, std::move(out), parts,
      [sizes = std::move(sizes)](detail::Node<T>& self) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < sizes.size(); ++k) {
          auto& in = detail::input(self, k);
          if (in.requires_grad) {
            auto g = in.grad_buffer();
            for (std::size_t i = 0; i < sizes[k]; ++i) {
              g[i] += self.grad[offset + i];
            }
          }
          offset += sizes[k];
        }
      });
}

template <typename T>
BasicTensor<T> concat(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return concat(std::vector<BasicTensor<T>>{a, b});
}

// x[begin, begin+length) of a rank-1 tensor.
template <typename T>
BasicTensor<T> slice(const BasicTensor<T>& x, std::size_t begin,
                     std::size_t length) {
  if (x.rank() != 1 || begin + length > x.numel()) {
    throw DimensionError("slice [" + std::to_string(begin) + "," +
                         std::to_string(begin + length) + ") of " +
                         shape_str(x.shape()));
  }
  std::vector<T> out(x.data().begin() + begin,
                     x.data().begin() + begin + length);
  return BasicTensor<T>::from_op(
      "slice", {length}, std::move(out), {x},
      [begin](detail::Node<T>& self) {
        auto g = detail::input(self, 0).grad_buffer();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          g[begin + i] += self.grad[i];
        }
      });
}

// Row `row` of an [r,c] matrix as a [c] vector.
template <typename T>
BasicTensor<T> select_row(const BasicTensor<T>& x, std::size_t row) {
  if (x.rank() != 2 || row >= x.dim(0)) {
    throw DimensionError("select_row " + std::to_string(row) + " of " +
                         shape_str(x.shape()));
  }
  const std::size_t c = x.dim(1);
  std::vector<T> out(x.data().begin() + row * c,
                     x.data().begin() + (row + 1) * c);
  return BasicTensor<T>::from_op(
      "select_row", {c}, std::move(out), {x},
      [row, c](detail::Node<T>& self) {
        auto g = detail::input(self, 0).grad_buffer();
        for (std::size_t i = 0; i < c; ++i) g[row * c + i] += self.grad[i];
      });
}

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& x) {
  double s = 0.0;
  for (const T v : x.data()) s += v;
  return BasicTensor<T>::from_op(
      "sum", {1}, {static_cast<T>(s)}, {x}, [](detail::Node<T>& self) {
        auto g = detail::input(self, 0).grad_buffer();
        for (auto& v : g) v += self.grad[0];
      });
}

// Scalar mean and population variance over all elements of a vector, as
// [1]-shaped tensors (layer-norm statistics).
template <typename T>
BasicTensor<T> mean_all(const BasicTensor<T>& x) {
  return reduce(reshape(x, {x.numel(), 1}), Reduce::kMean);
}
template <typename T>
BasicTensor<T> var_all(const BasicTensor<T>& x) {
  return reduce(reshape(x, {x.numel(), 1}), Reduce::kVar);
}

// x * W + b for a vector x of length W.dim(0).
template <typename T>
BasicTensor<T> affine(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias) {
  if (x.rank() != 1 || weight.rank() != 2 || weight.dim(0) != x.numel()) {
    throw DimensionError("affine " + shape_str(x.shape()) + " x " +
                         shape_str(weight.shape()));
  }
  auto y = matmul(reshape(x, {1, x.numel()}), weight);
  return add(reshape(y, {weight.dim(1)}), bias);
}

// Inverted dropout: in training, zeroes each element with probability
// `rate` and rescales survivors by 1/(1-rate). Identity otherwise.
template <typename T, typename Rng>
BasicTensor<T> dropout(const BasicTensor<T>& x, double rate, bool training,
                       Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw DomainError("dropout rate must be in [0,1)");
  }
  if (!training || rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const T s = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(x.numel());
  for (auto& m : mask) m = keep(rng) ? s : T{0};
  return mul(x, BasicTensor<T>(x.shape(), std::move(mask)));
}

}  // namespace emohead
