// Copyright 2026 The gatspoof authors
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

#include <algorithm>
#include <limits>

#include "gatspoof/ad/ops.hpp"
#include "gemm.hpp"
#include "ops_common.hpp"

namespace gatspoof::ad {

namespace {

struct ConvDims {
  std::size_t b, c, h, w;
  std::size_t f, kh, kw;
  std::size_t sh, sw, ph, pw;
  std::size_t oh, ow;
  std::size_t ckk() const { return c * kh * kw; }
  std::size_t opix() const { return oh * ow; }
};

// col is [C*kh*kw, OH*OW] for one batch item, zero-filled where the
// window hangs over the padding.
template <typename T>
void im2col(const T* x, const ConvDims& d, T* col) {
  for (std::size_t c = 0; c < d.c; ++c) {
    const T* plane = x + c * d.h * d.w;
    for (std::size_t i = 0; i < d.kh; ++i) {
      for (std::size_t j = 0; j < d.kw; ++j) {
        T* row = col + ((c * d.kh + i) * d.kw + j) * d.opix();
        for (std::size_t oh = 0; oh < d.oh; ++oh) {
          const std::ptrdiff_t ih =
              static_cast<std::ptrdiff_t>(oh * d.sh + i) -
              static_cast<std::ptrdiff_t>(d.ph);
          T* dst = row + oh * d.ow;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(d.h)) {
            std::fill(dst, dst + d.ow, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(ih) * d.w;
          for (std::size_t ow = 0; ow < d.ow; ++ow) {
            const std::ptrdiff_t iw =
                static_cast<std::ptrdiff_t>(ow * d.sw + j) -
                static_cast<std::ptrdiff_t>(d.pw);
            dst[ow] = (iw < 0 || iw >= static_cast<std::ptrdiff_t>(d.w))
                          ? T(0)
                          : src[static_cast<std::size_t>(iw)];
          }
        }
      }
    }
  }
}

// Scatter-add of a column gradient back onto the input plane;
// exact transpose of im2col.
template <typename T>
void col2im_add(const T* col, const ConvDims& d, T* gx) {
  for (std::size_t c = 0; c < d.c; ++c) {
    T* plane = gx + c * d.h * d.w;
    for (std::size_t i = 0; i < d.kh; ++i) {
      for (std::size_t j = 0; j < d.kw; ++j) {
        const T* row = col + ((c * d.kh + i) * d.kw + j) * d.opix();
        for (std::size_t oh = 0; oh < d.oh; ++oh) {
          const std::ptrdiff_t ih =
              static_cast<std::ptrdiff_t>(oh * d.sh + i) -
              static_cast<std::ptrdiff_t>(d.ph);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(d.h)) continue;
          const T* src = row + oh * d.ow;
          T* dst = plane + static_cast<std::size_t>(ih) * d.w;
          for (std::size_t ow = 0; ow < d.ow; ++ow) {
            const std::ptrdiff_t iw =
                static_cast<std::ptrdiff_t>(ow * d.sw + j) -
                static_cast<std::ptrdiff_t>(d.pw);
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(d.w)) continue;
            dst[static_cast<std::size_t>(iw)] += src[ow];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, std::size_t sh,
                 std::size_t sw, std::size_t ph, std::size_t pw) {
  if (x.ndim() != 4 || w.ndim() != 4) {
    throw ShapeError("conv2d: expected [B,C,H,W] x [F,C,kh,kw], got " +
                     shape_str(x.shape()) + " x " + shape_str(w.shape()));
  }
  if (sh == 0 || sw == 0) throw ShapeError("conv2d: zero stride");
  ConvDims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3),
             w.dim(0), w.dim(2), w.dim(3), sh,
             sw,       ph,       pw,       0,
             0};
  if (w.dim(1) != d.c) {
    throw ShapeError("conv2d: input has " + std::to_string(d.c) +
                     " channels but kernel " + shape_str(w.shape()) +
                     " expects " + std::to_string(w.dim(1)));
  }
  d.oh = conv_out_dim(d.h, d.kh, d.sh, d.ph);
  d.ow = conv_out_dim(d.w, d.kw, d.sw, d.pw);
  if (d.oh == 0 || d.ow == 0) {
    throw ShapeError("conv2d: kernel " + shape_str(w.shape()) +
                     " does not fit input " + shape_str(x.shape()));
  }

  Tensor<T> out(Shape{d.b, d.f, d.oh, d.ow});
  {
    std::vector<T> col(d.ckk() * d.opix());
    const T* xp = x.value().data();
    const T* wp = w.value().data();
    T* op = out.value().data();
    for (std::size_t b = 0; b < d.b; ++b) {
      im2col(xp + b * d.c * d.h * d.w, d, col.data());
      detail::gemm(false, false, d.f, d.opix(), d.ckk(), T(1), wp, col.data(),
                   T(0), op + b * d.f * d.opix());
    }
  }

  if (tracing<T>({&x, &w})) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([xn = x.node(), wn = w.node(), on = out.node(),
                               d] {
      if (on->grad.empty()) return;
      std::vector<T> col(d.ckk() * d.opix());
      std::vector<T> gcol;
      if (xn->requires_grad) {
        xn->ensure_grad();
        gcol.resize(d.ckk() * d.opix());
      }
      if (wn->requires_grad) wn->ensure_grad();
      for (std::size_t b = 0; b < d.b; ++b) {
        const T* g = on->grad.data() + b * d.f * d.opix();
        if (wn->requires_grad) {
          // dW += dY_b * col_b^T; the column matrix is recomputed
          // instead of being kept alive from the forward pass.
          im2col(xn->value.data() + b * d.c * d.h * d.w, d, col.data());
          detail::gemm(false, true, d.f, d.ckk(), d.opix(), T(1), g,
                       col.data(), T(1), wn->grad.data());
        }
        if (xn->requires_grad) {
          detail::gemm(true, false, d.ckk(), d.opix(), d.f, T(1),
                       wn->value.data(), g, T(0), gcol.data());
          col2im_add(gcol.data(), d, xn->grad.data() + b * d.c * d.h * d.w);
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& x, std::size_t kh, std::size_t kw,
                    std::size_t sh, std::size_t sw, std::size_t ph,
                    std::size_t pw) {
  if (x.ndim() != 4) {
    throw ShapeError("maxpool2d: expected [B,C,H,W], got " +
                     shape_str(x.shape()));
  }
  if (sh == 0 || sw == 0) throw ShapeError("maxpool2d: zero stride");
  if (ph >= kh || pw >= kw) {
    throw ShapeError("maxpool2d: padding must be smaller than the kernel");
  }
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t OH = conv_out_dim(H, kh, sh, ph);
  const std::size_t OW = conv_out_dim(W, kw, sw, pw);
  if (OH == 0 || OW == 0) {
    throw ShapeError("maxpool2d: kernel does not fit input " +
                     shape_str(x.shape()));
  }

  Tensor<T> out(Shape{B, C, OH, OW});
  // Per output cell, flat index of the winning element in its H*W
  // plane. Padding cells count as -infinity and can never win.
  auto argmax = std::make_shared<std::vector<std::size_t>>(B * C * OH * OW);
  auto xv = x.value();
  auto ov = out.value();
  std::size_t o = 0;
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    const T* plane = xv.data() + bc * H * W;
    for (std::size_t oh = 0; oh < OH; ++oh) {
      for (std::size_t ow = 0; ow < OW; ++ow, ++o) {
        T best = -std::numeric_limits<T>::infinity();
        std::size_t best_idx = 0;
        bool found = false;
        for (std::size_t i = 0; i < kh; ++i) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * sh + i) -
                                    static_cast<std::ptrdiff_t>(ph);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t j = 0; j < kw; ++j) {
            const std::ptrdiff_t iw =
                static_cast<std::ptrdiff_t>(ow * sw + j) -
                static_cast<std::ptrdiff_t>(pw);
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(W)) continue;
            const std::size_t idx = static_cast<std::size_t>(ih) * W +
                                    static_cast<std::size_t>(iw);
            // Strict > keeps the first maximal element on ties.
            if (!found || plane[idx] > best) {
              best = plane[idx];
              best_idx = idx;
              found = true;
            }
          }
        }
        ov[o] = best;
        (*argmax)[o] = best_idx;
      }
    }
  }

  if (tracing<T>({&x})) {
    out.set_requires_grad(true);
    Tape<T>::active()->record(
        [xn = x.node(), on = out.node(), argmax, B, C, H, W, OH, OW] {
          if (on->grad.empty() || !xn->requires_grad) return;
          xn->ensure_grad();
          std::size_t o = 0;
          for (std::size_t bc = 0; bc < B * C; ++bc) {
            T* gplane = xn->grad.data() + bc * H * W;
            for (std::size_t cell = 0; cell < OH * OW; ++cell, ++o) {
              gplane[(*argmax)[o]] += on->grad[o];
            }
          }
        });
  }
  return out;
}

template <typename T>
Tensor<T> adaptive_avg_pool2d(const Tensor<T>& x, std::size_t oh,
                              std::size_t ow) {
  if (x.ndim() != 4) {
    throw ShapeError("adaptive_avg_pool2d: expected [B,C,H,W], got " +
                     shape_str(x.shape()));
  }
  if (oh == 0 || ow == 0) {
    throw ShapeError("adaptive_avg_pool2d: zero output extent");
  }
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  // Window i spans [floor(i*in/out), ceil((i+1)*in/out)). Windows
  // overlap when out does not divide in, and when out > in each input
  // cell feeds several outputs.
  auto lo = [](std::size_t i, std::size_t in, std::size_t out) {
    return (i * in) / out;
  };
  auto hi = [](std::size_t i, std::size_t in, std::size_t out) {
    return ((i + 1) * in + out - 1) / out;
  };

  Tensor<T> out(Shape{B, C, oh, ow});
  auto xv = x.value();
  auto ov = out.value();
  std::size_t o = 0;
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    const T* plane = xv.data() + bc * H * W;
    for (std::size_t i = 0; i < oh; ++i) {
      const std::size_t h0 = lo(i, H, oh), h1 = hi(i, H, oh);
      for (std::size_t j = 0; j < ow; ++j, ++o) {
        const std::size_t w0 = lo(j, W, ow), w1 = hi(j, W, ow);
        T acc = T(0);
        for (std::size_t r = h0; r < h1; ++r) {
          for (std::size_t c = w0; c < w1; ++c) acc += plane[r * W + c];
        }
        ov[o] = acc / static_cast<T>((h1 - h0) * (w1 - w0));
      }
    }
  }

  if (tracing<T>({&x})) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([xn = x.node(), on = out.node(), B, C, H, W, oh,
                               ow, lo, hi] {
      if (on->grad.empty() || !xn->requires_grad) return;
      xn->ensure_grad();
      std::size_t o = 0;
      for (std::size_t bc = 0; bc < B * C; ++bc) {
        T* gplane = xn->grad.data() + bc * H * W;
        for (std::size_t i = 0; i < oh; ++i) {
          const std::size_t h0 = lo(i, H, oh), h1 = hi(i, H, oh);
          for (std::size_t j = 0; j < ow; ++j, ++o) {
            const std::size_t w0 = lo(j, W, ow), w1 = hi(j, W, ow);
            const T g = on->grad[o] / static_cast<T>((h1 - h0) * (w1 - w0));
            for (std::size_t r = h0; r < h1; ++r) {
              for (std::size_t c = w0; c < w1; ++c) gplane[r * W + c] += g;
            }
          }
        }
      }
    });
  }
  return out;
}

#define GATSPOOF_INSTANTIATE(T)                                              \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, std::size_t, \
                            std::size_t, std::size_t, std::size_t);          \
  template Tensor<T> maxpool2d(const Tensor<T>&, std::size_t, std::size_t,   \
                               std::size_t, std::size_t, std::size_t,        \
                               std::size_t);                                 \
  template Tensor<T> adaptive_avg_pool2d(const Tensor<T>&, std::size_t,      \
                                         std::size_t);

GATSPOOF_INSTANTIATE(float)
GATSPOOF_INSTANTIATE(double)
#undef GATSPOOF_INSTANTIATE

}  // namespace gatspoof::ad
