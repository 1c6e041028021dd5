// Copyright 2026 the srhnet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <vector>

#include "srh/tape.hpp"
#include "srh/tensor.hpp"

namespace srh {

enum class PadMode { kZero, kReplicate };

namespace detail {

template <typename T>
using ColMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
template <typename T>
using RowMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstRowMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// ------------------------------------------------------------ broadcasting

inline Shape broadcast_shape(const Shape& a, const Shape& b) {
  size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (size_t i = 0; i < r; ++i) {
    index_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    index_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    check(da == db || da == 1 || db == 1, "shapes ", shape_str(a), " and ", shape_str(b),
          " are not broadcastable");
    out[i] = std::max(da, db);
  }
  return out;
}

// Strides of `s` when broadcast against rank-r shape `out` (0 on expanded dims).
inline std::vector<index_t> broadcast_strides(const Shape& s, const Shape& out) {
  std::vector<index_t> st(out.size(), 0);
  auto own = strides_of(s);
  size_t off = out.size() - s.size();
  for (size_t i = 0; i < s.size(); ++i) st[off + i] = (s[i] == 1 && out[off + i] != 1) ? 0 : own[i];
  return st;
}

template <typename Fn>
inline void for_each_broadcast(const Shape& out, const std::vector<index_t>& sa,
                               const std::vector<index_t>& sb, Fn&& fn) {
  index_t n = shape_numel(out);
  size_t r = out.size();
  std::vector<index_t> idx(r, 0);
  index_t oa = 0, ob = 0;
  for (index_t i = 0; i < n; ++i) {
    fn(i, oa, ob);
    for (size_t d = r; d-- > 0;) {
      ++idx[d];
      oa += sa[d];
      ob += sb[d];
      if (idx[d] < out[d]) break;
      oa -= sa[d] * out[d];
      ob -= sb[d] * out[d];
      idx[d] = 0;
    }
  }
}

template <typename T>
inline void conv_check_geometry(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                                index_t stride, index_t pad) {
  check(x.defined() && x.rank() == 4, "conv input must be rank-4 [N,C,H,W]");
  check(w.rank() == 4, "conv weight must be rank-4");
  check(w.dim(2) % 2 == 1 && w.dim(3) % 2 == 1, "conv kernel dims must be odd, got ",
        shape_str(w.shape()));
  check(stride >= 1, "conv stride must be >= 1");
  check(pad >= 0, "conv pad must be >= 0");
  if (bias.defined()) check(bias.rank() == 1, "conv bias must be rank-1");
}

}  // namespace detail

// ------------------------------------------------------------ elementwise

namespace detail {

template <typename T, typename FwdFn, typename BwdFn>
Tensor<T> unary_op(const Tensor<T>& x, const char* name, FwdFn fwd, BwdFn dfdy_or_x) {
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  const T* xp = x.data();
  T* op = out.data();
  index_t n = x.numel();
  for (index_t i = 0; i < n; ++i) op[i] = fwd(xp[i]);
  SRH_DCHECK_FINITE(out, name);
  bool rec = recording<T>({&x});
  mark_output(out, rec);
  if (rec) {
    Tensor<T> xin = x, o = out;
    Tape<T>::active()->record([xin, o, dfdy_or_x]() mutable {
      if (!o.has_grad()) return;
      auto& g = xin.grad_buffer();
      const T* go = o.grad_data();
      const T* xp2 = xin.data();
      const T* yp = o.data();
      for (size_t i = 0; i < g.size(); ++i) g[i] += go[i] * dfdy_or_x(xp2[i], yp[i]);
    });
  }
  return out;
}

}  // namespace detail

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return detail::unary_op(
      x, "sigmoid",
      [](T v) {
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return detail::unary_op(x, "tanh", [](T v) { return std::tanh(v); },
                          [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return detail::unary_op(x, "relu", [](T v) { return v > T(0) ? v : T(0); },
                          [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> rsqrt(const Tensor<T>& x) {
  return detail::unary_op(x, "rsqrt", [](T v) { return T(1) / std::sqrt(v); },
                          [](T, T y) { return T(-0.5) * y * y * y; });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T s) {
  return detail::unary_op(x, "scale", [s](T v) { return v * s; }, [s](T, T) { return s; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T c) {
  return detail::unary_op(x, "add_scalar", [c](T v) { return v + c; }, [](T, T) { return T(1); });
}

namespace detail {

template <typename T, int Kind>  // 0 add, 1 sub, 2 mul
Tensor<T> binary_op(const Tensor<T>& a, const Tensor<T>& b, const char* name) {
  Shape oshape = broadcast_shape(a.shape(), b.shape());
  auto sa = broadcast_strides(a.shape(), oshape);
  auto sb = broadcast_strides(b.shape(), oshape);
  Tensor<T> out = Tensor<T>::zeros(oshape);
  const T* ap = a.data();
  const T* bp = b.data();
  T* op = out.data();
  for_each_broadcast(oshape, sa, sb, [&](index_t i, index_t oa, index_t ob) {
    if constexpr (Kind == 0) op[i] = ap[oa] + bp[ob];
    if constexpr (Kind == 1) op[i] = ap[oa] - bp[ob];
    if constexpr (Kind == 2) op[i] = ap[oa] * bp[ob];
  });
  SRH_DCHECK_FINITE(out, name);
  bool rec = recording<T>({&a, &b});
  mark_output(out, rec);
  if (rec) {
    Tensor<T> ta = a, tb = b, o = out;
    Tape<T>::active()->record([ta, tb, o, oshape, sa, sb]() mutable {
      if (!o.has_grad()) return;
      const T* go = o.grad_data();
      T* ga = ta.requires_grad() ? ta.grad_buffer().data() : nullptr;
      T* gb = tb.requires_grad() ? tb.grad_buffer().data() : nullptr;
      const T* ap2 = ta.data();
      const T* bp2 = tb.data();
      for_each_broadcast(oshape, sa, sb, [&](index_t i, index_t oa, index_t ob) {
        if constexpr (Kind == 0) {
          if (ga) ga[oa] += go[i];
          if (gb) gb[ob] += go[i];
        }
        if constexpr (Kind == 1) {
          if (ga) ga[oa] += go[i];
          if (gb) gb[ob] -= go[i];
        }
        if constexpr (Kind == 2) {
          if (ga) ga[oa] += go[i] * bp2[ob];
          if (gb) gb[ob] += go[i] * ap2[oa];
        }
      });
    });
  }
  return out;
}

}  // namespace detail

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return detail::binary_op<T, 0>(a, b, "add");
}
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return detail::binary_op<T, 1>(a, b, "sub");
}
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return detail::binary_op<T, 2>(a, b, "mul");
}

template <typename T>
Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) {
  return add(a, b);
}
template <typename T>
Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) {
  return sub(a, b);
}
template <typename T>
Tensor<T> operator*(const Tensor<T>& a, const Tensor<T>& b) {
  return mul(a, b);
}

// ------------------------------------------------------------ reductions

template <typename T>
Tensor<T> sum_axes(const Tensor<T>& x, std::vector<int> axes, bool keepdims) {
  const Shape& xs = x.shape();
  std::vector<bool> reduced(xs.size(), false);
  for (int a : axes) {
    check(a >= 0 && a < static_cast<int>(xs.size()), "sum_axes: axis ", a, " out of range for ",
          shape_str(xs));
    reduced[a] = true;
  }
  Shape oshape;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (!reduced[i])
      oshape.push_back(xs[i]);
    else if (keepdims)
      oshape.push_back(1);
  }
  if (oshape.empty()) oshape = {1};

  auto xstr = strides_of(xs);
  // output stride per input dim (0 where reduced)
  std::vector<index_t> omap(xs.size(), 0);
  {
    Shape kept = xs;
    for (size_t i = 0; i < xs.size(); ++i)
      if (reduced[i]) kept[i] = 1;
    auto kstr = strides_of(kept);
    for (size_t i = 0; i < xs.size(); ++i) omap[i] = reduced[i] ? 0 : kstr[i];
  }

  Tensor<T> out = Tensor<T>::zeros(oshape);
  T* op = out.data();
  const T* xp = x.data();
  index_t n = x.numel();
  std::vector<index_t> idx(xs.size(), 0);
  index_t oo = 0;
  for (index_t i = 0; i < n; ++i) {
    op[oo] += xp[i];
    for (size_t d = xs.size(); d-- > 0;) {
      ++idx[d];
      oo += omap[d];
      if (idx[d] < xs[d]) break;
      oo -= omap[d] * xs[d];
      idx[d] = 0;
    }
  }
  SRH_DCHECK_FINITE(out, "sum_axes");
  bool rec = detail::recording<T>({&x});
  detail::mark_output(out, rec);
  if (rec) {
    Tensor<T> xin = x, o = out;
    Shape xs2 = xs;
    Tape<T>::active()->record([xin, o, xs2, omap]() mutable {
      if (!o.has_grad()) return;
      const T* go = o.grad_data();
      auto& g = xin.grad_buffer();
      std::vector<index_t> idx2(xs2.size(), 0);
      index_t oo2 = 0;
      for (index_t i = 0; i < static_cast<index_t>(g.size()); ++i) {
        g[i] += go[oo2];
        for (size_t d = xs2.size(); d-- > 0;) {
          ++idx2[d];
          oo2 += omap[d];
          if (idx2[d] < xs2[d]) break;
          oo2 -= omap[d] * xs2[d];
          idx2[d] = 0;
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
  std::vector<int> axes(x.rank());
  for (size_t i = 0; i < axes.size(); ++i) axes[i] = static_cast<int>(i);
  return sum_axes(x, axes, false);
}

// ------------------------------------------------------------ shape ops

template <typename T>
Tensor<T> concat_axis(const std::vector<Tensor<T>>& parts, int axis) {
  check(!parts.empty(), "concat_axis: no inputs");
  const Shape& s0 = parts[0].shape();
  check(axis >= 0 && axis < static_cast<int>(s0.size()), "concat_axis: bad axis ", axis);
  index_t total = 0;
  for (const auto& p : parts) {
    check(p.rank() == s0.size(), "concat_axis: rank mismatch");
    for (size_t d = 0; d < s0.size(); ++d)
      check(static_cast<int>(d) == axis || p.dim(d) == s0[d],
            "concat_axis: shapes differ off-axis: ", shape_str(p.shape()), " vs ", shape_str(s0));
    total += p.dim(axis);
  }
  Shape oshape = s0;
  oshape[axis] = total;
  Tensor<T> out = Tensor<T>::zeros(oshape);

  index_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= s0[d];
  for (size_t d = axis + 1; d < s0.size(); ++d) inner *= s0[d];

  index_t offset = 0;
  for (const auto& p : parts) {
    index_t len = p.dim(axis) * inner;
    const T* src = p.data();
    for (index_t o = 0; o < outer; ++o)
      std::copy(src + o * len, src + (o + 1) * len, out.data() + o * total * inner + offset);
    offset += len;
  }

  bool rec = false;
  for (const auto& p : parts)
    if (Tape<T>::active() && p.requires_grad()) rec = true;
  detail::mark_output(out, rec);
  if (rec) {
    std::vector<Tensor<T>> ins = parts;
    Tensor<T> o = out;
    Tape<T>::active()->record([ins, o, outer, inner, total]() mutable {
      if (!o.has_grad()) return;
      const T* go = o.grad_data();
      index_t off = 0;
      for (auto& p : ins) {
        index_t plen = p.numel() / outer;  // axis_len * inner
        if (p.requires_grad()) {
          auto& g = p.grad_buffer();
          for (index_t ou = 0; ou < outer; ++ou) {
            const T* srcg = go + ou * total * inner + off;
            T* dst = g.data() + ou * plen;
            for (index_t k = 0; k < plen; ++k) dst[k] += srcg[k];
          }
        }
        off += plen;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat_axis(const Tensor<T>& a, const Tensor<T>& b, int axis) {
  return concat_axis(std::vector<Tensor<T>>{a, b}, axis);
}

// Horizontal shift along the last (width) axis; vacated columns are zero.
template <typename T>
Tensor<T> shift_columns(const Tensor<T>& x, index_t shift) {
  check(x.rank() == 4, "shift_columns expects [N,C,H,W]");
  check(shift >= 0, "shift_columns: negative shift");
  index_t w = x.dim(3);
  index_t rows = x.numel() / w;
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  const T* xp = x.data();
  T* op = out.data();
  index_t ncopy = std::max<index_t>(0, w - shift);
  for (index_t r = 0; r < rows; ++r)
    std::copy(xp + r * w, xp + r * w + ncopy, op + r * w + shift);
  bool rec = detail::recording<T>({&x});
  detail::mark_output(out, rec);
  if (rec) {
    Tensor<T> xin = x, o = out;
    Tape<T>::active()->record([xin, o, rows, w, shift]() mutable {
      if (!o.has_grad()) return;
      const T* go = o.grad_data();
      auto& g = xin.grad_buffer();
      index_t ncopy2 = std::max<index_t>(0, w - shift);
      for (index_t r = 0; r < rows; ++r)
        for (index_t u = 0; u < ncopy2; ++u) g[r * w + u] += go[r * w + u + shift];
    });
  }
  return out;
}

// ------------------------------------------------------------ softmax

template <typename T>
Tensor<T> softmax_axis(const Tensor<T>& x, int axis) {
  const Shape& xs = x.shape();
  check(axis >= 0 && axis < static_cast<int>(xs.size()), "softmax_axis: bad axis ", axis);
  index_t outer = 1, len = xs[axis], inner = 1;
  for (int d = 0; d < axis; ++d) outer *= xs[d];
  for (size_t d = axis + 1; d < xs.size(); ++d) inner *= xs[d];

  Tensor<T> out = Tensor<T>::zeros(xs);
  const T* xp = x.data();
  T* op = out.data();
  for (index_t o = 0; o < outer; ++o) {
    for (index_t j = 0; j < inner; ++j) {
      const T* base = xp + o * len * inner + j;
      T* obase = op + o * len * inner + j;
      T m = base[0];
      for (index_t l = 1; l < len; ++l) m = std::max(m, base[l * inner]);
      T s = T(0);
      for (index_t l = 0; l < len; ++l) {
        T e = std::exp(base[l * inner] - m);
        obase[l * inner] = e;
        s += e;
      }
      for (index_t l = 0; l < len; ++l) obase[l * inner] /= s;
    }
  }
  SRH_DCHECK_FINITE(out, "softmax_axis");
  bool rec = detail::recording<T>({&x});
  detail::mark_output(out, rec);
  if (rec) {
    Tensor<T> xin = x, o = out;
    Tape<T>::active()->record([xin, o, outer, len, inner]() mutable {
      if (!o.has_grad()) return;
      const T* go = o.grad_data();
      const T* yp = o.data();
      auto& g = xin.grad_buffer();
      for (index_t ou = 0; ou < outer; ++ou) {
        for (index_t j = 0; j < inner; ++j) {
          index_t base = ou * len * inner + j;
          T dot = T(0);
          for (index_t l = 0; l < len; ++l) dot += go[base + l * inner] * yp[base + l * inner];
          for (index_t l = 0; l < len; ++l)
            g[base + l * inner] += yp[base + l * inner] * (go[base + l * inner] - dot);
        }
      }
    });
  }
  return out;
}

// ------------------------------------------------------------ convolution

namespace detail {

struct ConvGeom {
  index_t ci, h, w, kh, kw, stride, pad, oh, ow;
  PadMode mode;
};

// col is [ci*kh*kw, n_cols] column-major for output pixels [c0, c0+n_cols).
template <typename T>
void im2col_chunk(const T* x, const ConvGeom& g, index_t c0, index_t n_cols, T* col) {
  const index_t K = g.ci * g.kh * g.kw;
  for (index_t j = 0; j < n_cols; ++j) {
    index_t pix = c0 + j;
    index_t oy = pix / g.ow, ox = pix % g.ow;
    T* dst = col + j * K;
    for (index_t ci = 0; ci < g.ci; ++ci) {
      const T* plane = x + ci * g.h * g.w;
      for (index_t dy = 0; dy < g.kh; ++dy) {
        index_t iy = oy * g.stride - g.pad + dy;
        for (index_t dx = 0; dx < g.kw; ++dx) {
          index_t ix = ox * g.stride - g.pad + dx;
          index_t iyc = iy, ixc = ix;
          if (g.mode == PadMode::kReplicate) {
            iyc = std::clamp<index_t>(iy, 0, g.h - 1);
            ixc = std::clamp<index_t>(ix, 0, g.w - 1);
          }
          bool in = iyc >= 0 && iyc < g.h && ixc >= 0 && ixc < g.w;
          *dst++ = in ? plane[iyc * g.w + ixc] : T(0);
        }
      }
    }
  }
}

// Adjoint of im2col_chunk: scatter-adds col values back onto x.
template <typename T>
void col2im_chunk(const T* col, const ConvGeom& g, index_t c0, index_t n_cols, T* x) {
  const index_t K = g.ci * g.kh * g.kw;
  for (index_t j = 0; j < n_cols; ++j) {
    index_t pix = c0 + j;
    index_t oy = pix / g.ow, ox = pix % g.ow;
    const T* src = col + j * K;
    for (index_t ci = 0; ci < g.ci; ++ci) {
      T* plane = x + ci * g.h * g.w;
      for (index_t dy = 0; dy < g.kh; ++dy) {
        index_t iy = oy * g.stride - g.pad + dy;
        for (index_t dx = 0; dx < g.kw; ++dx) {
          index_t ix = ox * g.stride - g.pad + dx;
          index_t iyc = iy, ixc = ix;
          if (g.mode == PadMode::kReplicate) {
            iyc = std::clamp<index_t>(iy, 0, g.h - 1);
            ixc = std::clamp<index_t>(ix, 0, g.w - 1);
          }
          bool in = iyc >= 0 && iyc < g.h && ixc >= 0 && ixc < g.w;
          if (in) plane[iyc * g.w + ixc] += *src;
          ++src;
        }
      }
    }
  }
}

inline index_t conv_chunk_cols(index_t K, index_t total, size_t elem_size) {
  index_t cap = static_cast<index_t>((size_t(1) << 21) / (static_cast<size_t>(K) * elem_size));
  return std::clamp<index_t>(cap, 1, total);
}

}  // namespace detail

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, index_t stride,
                 index_t pad, PadMode mode = PadMode::kZero) {
  detail::conv_check_geometry(x, w, bias, stride, pad);
  index_t n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
  index_t co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  check(w.dim(1) == ci, "conv2d: weight expects ", w.dim(1), " input channels, input has ", ci);
  if (bias.defined()) check(bias.dim(0) == co, "conv2d: bias/output channel mismatch");
  check(h + 2 * pad >= kh && wd + 2 * pad >= kw, "conv2d: input ", shape_str(x.shape()),
        " too small for kernel ", shape_str(w.shape()), " with pad ", pad);
  index_t oh = (h + 2 * pad - kh) / stride + 1;
  index_t ow = (wd + 2 * pad - kw) / stride + 1;
  detail::ConvGeom geom{ci, h, wd, kh, kw, stride, pad, oh, ow, mode};
  const index_t K = ci * kh * kw;
  const index_t pixels = oh * ow;

  Tensor<T> out = Tensor<T>::zeros({n, co, oh, ow});
  {
    detail::ColMat<T> col;
    detail::ConstRowMap<T> wm(w.data(), co, K);
    index_t chunk = detail::conv_chunk_cols(K, pixels, sizeof(T));
    col.resize(K, chunk);
    detail::ColMat<T> y(co, chunk);
    for (index_t b = 0; b < n; ++b) {
      const T* xb = x.data() + b * ci * h * wd;
      T* ob = out.data() + b * co * pixels;
      for (index_t c0 = 0; c0 < pixels; c0 += chunk) {
        index_t nc = std::min(chunk, pixels - c0);
        detail::im2col_chunk(xb, geom, c0, nc, col.data());
        y.leftCols(nc).noalias() = wm * col.leftCols(nc);
        for (index_t oc = 0; oc < co; ++oc)
          for (index_t j = 0; j < nc; ++j) ob[oc * pixels + c0 + j] = y(oc, j);
      }
      if (bias.defined()) {
        const T* bp = bias.data();
        for (index_t oc = 0; oc < co; ++oc)
          for (index_t p = 0; p < pixels; ++p) ob[oc * pixels + p] += bp[oc];
      }
    }
  }
  SRH_DCHECK_FINITE(out, "conv2d");

  bool rec = detail::recording<T>({&x, &w, &bias});
  detail::mark_output(out, rec);
  if (rec) {
    Tensor<T> tx = x, tw = w, tb = bias, o = out;
    Tape<T>::active()->record([tx, tw, tb, o, geom, n, co, K, pixels]() mutable {
      if (!o.has_grad()) return;
      const T* gop = o.grad_data();
      detail::ColMat<T> col, gy, gcol;
      index_t chunk = detail::conv_chunk_cols(K, pixels, sizeof(T));
      col.resize(K, chunk);
      gy.resize(co, chunk);
      gcol.resize(K, chunk);
      T* gw = tw.requires_grad() ? tw.grad_buffer().data() : nullptr;
      T* gx = tx.requires_grad() ? tx.grad_buffer().data() : nullptr;
      T* gb = (tb.defined() && tb.requires_grad()) ? tb.grad_buffer().data() : nullptr;
      detail::ConstRowMap<T> wm(tw.data(), co, K);
      for (index_t b = 0; b < n; ++b) {
        const T* xb = tx.data() + b * geom.ci * geom.h * geom.w;
        const T* gob = gop + b * co * pixels;
        for (index_t c0 = 0; c0 < pixels; c0 += chunk) {
          index_t nc = std::min(chunk, pixels - c0);
          for (index_t oc = 0; oc < co; ++oc)
            for (index_t j = 0; j < nc; ++j) gy(oc, j) = gob[oc * pixels + c0 + j];
          if (gw) {
            detail::im2col_chunk(xb, geom, c0, nc, col.data());
            detail::RowMap<T> gwm(gw, co, K);
            gwm.noalias() += gy.leftCols(nc) * col.leftCols(nc).transpose();
          }
          if (gx) {
            gcol.leftCols(nc).noalias() = wm.transpose() * gy.leftCols(nc);
            detail::col2im_chunk(gcol.data(), geom, c0, nc,
                                 gx + b * geom.ci * geom.h * geom.w);
          }
        }
        if (gb) {
          for (index_t oc = 0; oc < co; ++oc) {
            T s = T(0);
            for (index_t p = 0; p < pixels; ++p) s += gob[oc * pixels + p];
            gb[oc] += s;
          }
        }
      }
    });
  }
  return out;
}

// Transposed convolution; exact adjoint of conv2d with the same weight and
// geometry. Weight layout is [Cin, Cout, kh, kw] where Cin is this op's
// input channel count.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                           index_t stride, index_t pad) {
  check(x.defined() && x.rank() == 4, "conv_transpose2d input must be rank-4");
  check(w.rank() == 4 && w.dim(0) == x.dim(1), "conv_transpose2d: weight [Cin,Cout,kh,kw] with Cin=",
        x.dim(1), ", got ", shape_str(w.shape()));
  check(stride >= 1 && pad >= 0, "conv_transpose2d: bad stride/pad");
  index_t n = x.dim(0), c1 = x.dim(1), hy = x.dim(2), wy = x.dim(3);
  index_t c2 = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  index_t ho = (hy - 1) * stride - 2 * pad + kh;
  index_t wo = (wy - 1) * stride - 2 * pad + kw;
  check(ho >= 1 && wo >= 1, "conv_transpose2d: degenerate output size");
  if (bias.defined()) check(bias.rank() == 1 && bias.dim(0) == c2, "conv_transpose2d: bad bias");

  // conv geometry in which this op's output plays the conv-input role
  detail::ConvGeom geom{c2, ho, wo, kh, kw, stride, pad, hy, wy, PadMode::kZero};
  const index_t K = c2 * kh * kw;
  const index_t pixels = hy * wy;

  Tensor<T> out = Tensor<T>::zeros({n, c2, ho, wo});
  {
    detail::ConstRowMap<T> wm(w.data(), c1, K);
    index_t chunk = detail::conv_chunk_cols(K, pixels, sizeof(T));
    detail::ColMat<T> yin(c1, chunk), col(K, chunk);
    for (index_t b = 0; b < n; ++b) {
      const T* xb = x.data() + b * c1 * pixels;
      T* ob = out.data() + b * c2 * ho * wo;
      for (index_t c0 = 0; c0 < pixels; c0 += chunk) {
        index_t nc = std::min(chunk, pixels - c0);
        for (index_t c = 0; c < c1; ++c)
          for (index_t j = 0; j < nc; ++j) yin(c, j) = xb[c * pixels + c0 + j];
        col.leftCols(nc).noalias() = wm.transpose() * yin.leftCols(nc);
        detail::col2im_chunk(col.data(), geom, c0, nc, ob);
      }
      if (bias.defined()) {
        const T* bp = bias.data();
        for (index_t oc = 0; oc < c2; ++oc)
          for (index_t p = 0; p < ho * wo; ++p) ob[oc * ho * wo + p] += bp[oc];
      }
    }
  }
  SRH_DCHECK_FINITE(out, "conv_transpose2d");

  bool rec = detail::recording<T>({&x, &w, &bias});
  detail::mark_output(out, rec);
  if (rec) {
    Tensor<T> tx = x, tw = w, tb = bias, o = out;
    Tape<T>::active()->record([tx, tw, tb, o, geom, n, c1, c2, K, pixels]() mutable {
      if (!o.has_grad()) return;
      const T* gop = o.grad_data();
      index_t chunk = detail::conv_chunk_cols(K, pixels, sizeof(T));
      detail::ColMat<T> col(K, chunk), gy(c1, chunk), yin(c1, chunk);
      T* gw = tw.requires_grad() ? tw.grad_buffer().data() : nullptr;
      T* gx = tx.requires_grad() ? tx.grad_buffer().data() : nullptr;
      T* gb = (tb.defined() && tb.requires_grad()) ? tb.grad_buffer().data() : nullptr;
      detail::ConstRowMap<T> wm(tw.data(), c1, K);
      index_t ho = geom.h, wo = geom.w;
      for (index_t b = 0; b < n; ++b) {
        const T* gob = gop + b * c2 * ho * wo;
        const T* xb = tx.data() + b * c1 * pixels;
        for (index_t c0 = 0; c0 < pixels; c0 += chunk) {
          index_t nc = std::min(chunk, pixels - c0);
          detail::im2col_chunk(gob, geom, c0, nc, col.data());
          if (gx) {
            gy.leftCols(nc).noalias() = wm * col.leftCols(nc);
            T* gxb = gx + b * c1 * pixels;
            for (index_t c = 0; c < c1; ++c)
              for (index_t j = 0; j < nc; ++j) gxb[c * pixels + c0 + j] += gy(c, j);
          }
          if (gw) {
            for (index_t c = 0; c < c1; ++c)
              for (index_t j = 0; j < nc; ++j) yin(c, j) = xb[c * pixels + c0 + j];
            detail::RowMap<T> gwm(gw, c1, K);
            gwm.noalias() += yin.leftCols(nc) * col.leftCols(nc).transpose();
          }
        }
        if (gb) {
          for (index_t oc = 0; oc < c2; ++oc) {
            T s = T(0);
            for (index_t p = 0; p < ho * wo; ++p) s += gob[oc * ho * wo + p];
            gb[oc] += s;
          }
        }
      }
    });
  }
  return out;
}

// ------------------------------------------------------------ pooling

template <typename T>
Tensor<T> avg_pool2d(const Tensor<T>& x, index_t win_h, index_t win_w, index_t stride_h,
                     index_t stride_w) {
  check(x.rank() == 4, "avg_pool2d expects [N,C,H,W]");
  check(win_h >= 1 && win_w >= 1 && stride_h >= 1 && stride_w >= 1, "avg_pool2d: bad window/stride");
  index_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  check(h >= win_h && w >= win_w, "avg_pool2d: window larger than input");
  index_t oh = (h - win_h) / stride_h + 1;
  index_t ow = (w - win_w) / stride_w + 1;
  Tensor<T> out = Tensor<T>::zeros({n, c, oh, ow});
  const T inv = T(1) / static_cast<T>(win_h * win_w);
  const T* xp = x.data();
  T* op = out.data();
  for (index_t b = 0; b < n * c; ++b) {
    const T* plane = xp + b * h * w;
    T* oplane = op + b * oh * ow;
    for (index_t oy = 0; oy < oh; ++oy)
      for (index_t ox = 0; ox < ow; ++ox) {
        T s = T(0);
        for (index_t dy = 0; dy < win_h; ++dy)
          for (index_t dx = 0; dx < win_w; ++dx)
            s += plane[(oy * stride_h + dy) * w + ox * stride_w + dx];
        oplane[oy * ow + ox] = s * inv;
      }
  }
  SRH_DCHECK_FINITE(out, "avg_pool2d");
  bool rec = detail::recording<T>({&x});
  detail::mark_output(out, rec);
  if (rec) {
    Tensor<T> xin = x, o = out;
    Tape<T>::active()->record([xin, o, n, c, h, w, oh, ow, win_h, win_w, stride_h, stride_w,
                               inv]() mutable {
      if (!o.has_grad()) return;
      const T* go = o.grad_data();
      auto& g = xin.grad_buffer();
      for (index_t b = 0; b < n * c; ++b) {
        T* gplane = g.data() + b * h * w;
        const T* goplane = go + b * oh * ow;
        for (index_t oy = 0; oy < oh; ++oy)
          for (index_t ox = 0; ox < ow; ++ox) {
            T v = goplane[oy * ow + ox] * inv;
            for (index_t dy = 0; dy < win_h; ++dy)
              for (index_t dx = 0; dx < win_w; ++dx)
                gplane[(oy * stride_h + dy) * w + ox * stride_w + dx] += v;
          }
      }
    });
  }
  return out;
}

// Adaptive mean pooling to a fixed output grid; window boundaries cover the
// input exactly.
template <typename T>
Tensor<T> adaptive_avg_pool2d(const Tensor<T>& x, index_t oh, index_t ow) {
  check(x.rank() == 4, "adaptive_avg_pool2d expects [N,C,H,W]");
  check(oh >= 1 && ow >= 1, "adaptive_avg_pool2d: bad output size");
  index_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  check(oh <= h && ow <= w, "adaptive_avg_pool2d: output exceeds input");
  Tensor<T> out = Tensor<T>::zeros({n, c, oh, ow});
  auto ybeg = [&](index_t i) { return (i * h) / oh; };
  auto yend = [&](index_t i) { return ((i + 1) * h + oh - 1) / oh; };
  auto xbeg = [&](index_t i) { return (i * w) / ow; };
  auto xend = [&](index_t i) { return ((i + 1) * w + ow - 1) / ow; };
  const T* xp = x.data();
  T* op = out.data();
  for (index_t b = 0; b < n * c; ++b) {
    const T* plane = xp + b * h * w;
    T* oplane = op + b * oh * ow;
    for (index_t oy = 0; oy < oh; ++oy)
      for (index_t ox = 0; ox < ow; ++ox) {
        index_t y0 = ybeg(oy), y1 = yend(oy), x0 = xbeg(ox), x1 = xend(ox);
        T s = T(0);
        for (index_t yy = y0; yy < y1; ++yy)
          for (index_t xx = x0; xx < x1; ++xx) s += plane[yy * w + xx];
        oplane[oy * ow + ox] = s / static_cast<T>((y1 - y0) * (x1 - x0));
      }
  }
  SRH_DCHECK_FINITE(out, "adaptive_avg_pool2d");
  bool rec = detail::recording<T>({&x});
  detail::mark_output(out, rec);
  if (rec) {
    Tensor<T> xin = x, o = out;
    Tape<T>::active()->record([xin, o, n, c, h, w, oh, ow]() mutable {
      if (!o.has_grad()) return;
      const T* go = o.grad_data();
      auto& g = xin.grad_buffer();
      for (index_t b = 0; b < n * c; ++b) {
        T* gplane = g.data() + b * h * w;
        const T* goplane = go + b * oh * ow;
        for (index_t oy = 0; oy < oh; ++oy)
          for (index_t ox = 0; ox < ow; ++ox) {
            index_t y0 = (oy * h) / oh, y1 = ((oy + 1) * h + oh - 1) / oh;
            index_t x0 = (ox * w) / ow, x1 = ((ox + 1) * w + ow - 1) / ow;
            T v = goplane[oy * ow + ox] / static_cast<T>((y1 - y0) * (x1 - x0));
            for (index_t yy = y0; yy < y1; ++yy)
              for (index_t xx = x0; xx < x1; ++xx) gplane[yy * w + xx] += v;
          }
      }
    });
  }
  return out;
}

// ------------------------------------------------------------ resizing

namespace detail {

template <typename T>
inline void lerp_coord(index_t out_i, index_t in_len, index_t out_len, bool align, index_t& i0,
                       index_t& i1, T& f) {
  T src;
  if (align) {
    src = out_len > 1
              ? static_cast<T>(out_i) * (static_cast<T>(in_len - 1) / static_cast<T>(out_len - 1))
              : T(0);
  } else {
    src = (static_cast<T>(out_i) + T(0.5)) * static_cast<T>(in_len) / static_cast<T>(out_len) -
          T(0.5);
    src = std::clamp(src, T(0), static_cast<T>(in_len - 1));
  }
  i0 = static_cast<index_t>(std::floor(src));
  i0 = std::clamp<index_t>(i0, 0, in_len - 1);
  i1 = std::min<index_t>(i0 + 1, in_len - 1);
  f = src - static_cast<T>(i0);
}

}  // namespace detail

template <typename T>
Tensor<T> bilinear_resize2d(const Tensor<T>& x, index_t oh, index_t ow, bool align_corners) {
  check(x.rank() == 4, "bilinear_resize2d expects [N,C,H,W]");
  check(oh >= 1 && ow >= 1, "bilinear_resize2d: target size must be >= 1");
  index_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor<T> out = Tensor<T>::zeros({n, c, oh, ow});
  const T* xp = x.data();
  T* op = out.data();
  for (index_t b = 0; b < n * c; ++b) {
    const T* plane = xp + b * h * w;
    T* oplane = op + b * oh * ow;
    for (index_t oy = 0; oy < oh; ++oy) {
      index_t y0, y1;
      T fy;
      detail::lerp_coord<T>(oy, h, oh, align_corners, y0, y1, fy);
      for (index_t ox = 0; ox < ow; ++ox) {
        index_t x0, x1;
        T fx;
        detail::lerp_coord<T>(ox, w, ow, align_corners, x0, x1, fx);
        T top = (T(1) - fx) * plane[y0 * w + x0] + fx * plane[y0 * w + x1];
        T bot = (T(1) - fx) * plane[y1 * w + x0] + fx * plane[y1 * w + x1];
        oplane[oy * ow + ox] = (T(1) - fy) * top + fy * bot;
      }
    }
  }
  SRH_DCHECK_FINITE(out, "bilinear_resize2d");
  bool rec = detail::recording<T>({&x});
  detail::mark_output(out, rec);
  if (rec) {
    Tensor<T> xin = x, o = out;
    Tape<T>::active()->record([xin, o, n, c, h, w, oh, ow, align_corners]() mutable {
      if (!o.has_grad()) return;
      const T* go = o.grad_data();
      auto& g = xin.grad_buffer();
      for (index_t b = 0; b < n * c; ++b) {
        T* gplane = g.data() + b * h * w;
        const T* goplane = go + b * oh * ow;
        for (index_t oy = 0; oy < oh; ++oy) {
          index_t y0, y1;
          T fy;
          detail::lerp_coord<T>(oy, h, oh, align_corners, y0, y1, fy);
          for (index_t ox = 0; ox < ow; ++ox) {
            index_t x0, x1;
            T fx;
            detail::lerp_coord<T>(ox, w, ow, align_corners, x0, x1, fx);
            T v = goplane[oy * ow + ox];
            gplane[y0 * w + x0] += v * (T(1) - fy) * (T(1) - fx);
            gplane[y0 * w + x1] += v * (T(1) - fy) * fx;
            gplane[y1 * w + x0] += v * fy * (T(1) - fx);
            gplane[y1 * w + x1] += v * fy * fx;
          }
        }
      }
    });
  }
  return out;
}

// 1-D linear interpolation along one axis (endpoints map to endpoints).
template <typename T>
Tensor<T> linear_resample_axis(const Tensor<T>& x, int axis, index_t out_len) {
  const Shape& xs = x.shape();
  check(axis >= 0 && axis < static_cast<int>(xs.size()), "linear_resample_axis: bad axis");
  check(out_len >= 1, "linear_resample_axis: target length must be >= 1");
  index_t outer = 1, len = xs[axis], inner = 1;
  for (int d = 0; d < axis; ++d) outer *= xs[d];
  for (size_t d = axis + 1; d < xs.size(); ++d) inner *= xs[d];
  Shape oshape = xs;
  oshape[axis] = out_len;
  Tensor<T> out = Tensor<T>::zeros(oshape);
  const T* xp = x.data();
  T* op = out.data();
  for (index_t o = 0; o < outer; ++o) {
    const T* xb = xp + o * len * inner;
    T* ob = op + o * out_len * inner;
    for (index_t i = 0; i < out_len; ++i) {
      index_t i0, i1;
      T f;
      detail::lerp_coord<T>(i, len, out_len, /*align=*/true, i0, i1, f);
      const T* a = xb + i0 * inner;
      const T* b = xb + i1 * inner;
      T* dst = ob + i * inner;
      for (index_t j = 0; j < inner; ++j) dst[j] = (T(1) - f) * a[j] + f * b[j];
    }
  }
  SRH_DCHECK_FINITE(out, "linear_resample_axis");
  bool rec = detail::recording<T>({&x});
  detail::mark_output(out, rec);
  if (rec) {
    Tensor<T> xin = x, o = out;
    Tape<T>::active()->record([xin, o, outer, len, inner, out_len]() mutable {
      if (!o.has_grad()) return;
      const T* go = o.grad_data();
      auto& g = xin.grad_buffer();
      for (index_t ou = 0; ou < outer; ++ou) {
        T* gb = g.data() + ou * len * inner;
        const T* gob = go + ou * out_len * inner;
        for (index_t i = 0; i < out_len; ++i) {
          index_t i0, i1;
          T f;
          detail::lerp_coord<T>(i, len, out_len, true, i0, i1, f);
          const T* src = gob + i * inner;
          for (index_t j = 0; j < inner; ++j) {
            gb[i0 * inner + j] += (T(1) - f) * src[j];
            gb[i1 * inner + j] += f * src[j];
          }
        }
      }
    });
  }
  return out;
}

// -------------------------------------------------- fused regression ops

namespace detail {

// Online stable soft-argmin accumulator. Both the batch kernel and the
// streaming reducer must call exactly this update so their results are
// bit-identical for identical input sequences.
template <typename T>
inline void softargmin_update(T& m, T& z, T& s, T w, T idx) {
  if (w > m) {
    T r = std::exp(m - w);
    z = z * r + T(1);
    s = s * r + idx;
    m = w;
  } else {
    T e = std::exp(w - m);
    z += e;
    s += idx * e;
  }
}

}  // namespace detail

// Soft argmin over the disparity axis of a [1,D,H,W] cost volume:
// d_hat = sum_i i * softmax(-cost)_i, evaluated with the online
// max-rescaled reduction in ascending disparity order.
template <typename T>
Tensor<T> soft_argmin(const Tensor<T>& volume) {
  check(volume.rank() == 4 && volume.dim(0) == 1, "soft_argmin expects [1,D,H,W]");
  index_t d = volume.dim(1), h = volume.dim(2), w = volume.dim(3);
  check(d >= 1, "soft_argmin: empty disparity axis");
  index_t hw = h * w;
  Tensor<T> out = Tensor<T>::zeros({1, 1, h, w});
  // m and z are kept for the backward pass
  Tensor<T> mbuf = Tensor<T>::zeros({1, 1, h, w});
  Tensor<T> zbuf = Tensor<T>::zeros({1, 1, h, w});
  const T* vp = volume.data();
  T* op = out.data();
  T* mp = mbuf.data();
  T* zp = zbuf.data();
  const T neg_inf = -std::numeric_limits<T>::infinity();
  for (index_t p = 0; p < hw; ++p) {
    T m = neg_inf, z = T(0), s = T(0);
    for (index_t i = 0; i < d; ++i)
      detail::softargmin_update(m, z, s, -vp[i * hw + p], static_cast<T>(i));
    op[p] = s / z;
    mp[p] = m;
    zp[p] = z;
  }
  SRH_DCHECK_FINITE(out, "soft_argmin");
  bool rec = detail::recording<T>({&volume});
  detail::mark_output(out, rec);
  if (rec) {
    Tensor<T> vin = volume, o = out;
    Tape<T>::active()->record([vin, o, mbuf, zbuf, d, hw]() mutable {
      if (!o.has_grad()) return;
      const T* go = o.grad_data();
      const T* dhat = o.data();
      const T* vp2 = vin.data();
      const T* mp2 = mbuf.data();
      const T* zp2 = zbuf.data();
      auto& g = vin.grad_buffer();
      for (index_t p = 0; p < hw; ++p) {
        T m = mp2[p], z = zp2[p], dh = dhat[p], go_p = go[p];
        for (index_t i = 0; i < d; ++i) {
          T prob = std::exp(-vp2[i * hw + p] - m) / z;
          // d(dhat)/d(cost_i) = -p_i * (i - dhat)
          g[i * hw + p] += go_p * (-prob * (static_cast<T>(i) - dh));
        }
      }
    });
  }
  return out;
}

// Masked mean smooth-L1: mean over mask!=0 of l(|pred-target|) with
// l(x) = x^2/2 for x < 1 and x - 0.5 otherwise.
template <typename T>
Tensor<T> smooth_l1_masked_mean(const Tensor<T>& pred, const Tensor<T>& target,
                                const Tensor<T>& mask) {
  check(pred.shape() == target.shape() && pred.shape() == mask.shape(),
        "smooth_l1: shape mismatch between prediction ", shape_str(pred.shape()), ", target ",
        shape_str(target.shape()), " and mask ", shape_str(mask.shape()));
  index_t n = pred.numel();
  const T* pp = pred.data();
  const T* tp = target.data();
  const T* mp = mask.data();
  index_t count = 0;
  T sum = T(0);
  for (index_t i = 0; i < n; ++i) {
    if (mp[i] == T(0)) continue;
    ++count;
    T x = std::abs(pp[i] - tp[i]);
    sum += x < T(1) ? x * x * T(0.5) : x - T(0.5);
  }
  check(count >= 1, "smooth_l1: empty valid mask");
  Tensor<T> out = Tensor<T>::scalar(sum / static_cast<T>(count));
  SRH_DCHECK_FINITE(out, "smooth_l1");
  bool rec = detail::recording<T>({&pred});
  detail::mark_output(out, rec);
  if (rec) {
    Tensor<T> tpred = pred, ttgt = target, tmask = mask, o = out;
    Tape<T>::active()->record([tpred, ttgt, tmask, o, n, count]() mutable {
      if (!o.has_grad()) return;
      T go = o.grad_data()[0] / static_cast<T>(count);
      auto& g = tpred.grad_buffer();
      const T* pp2 = tpred.data();
      const T* tp2 = ttgt.data();
      const T* mp2 = tmask.data();
      for (index_t i = 0; i < n; ++i) {
        if (mp2[i] == T(0)) continue;
        T d = pp2[i] - tp2[i];
        T dl = std::abs(d) < T(1) ? d : (d > T(0) ? T(1) : T(-1));
        g[i] += go * dl;
      }
    });
  }
  return out;
}

}  // namespace srh
