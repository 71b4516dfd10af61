/*
 * Copyright 2026 The artscore Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Dense numeric kernels over CHW float buffers.
//
// Two implementations of every kernel live here: `kernels::reference` is a
// direct, single-threaded transcription of the defining formula and exists for
// tests and benchmarks; the functions directly in `kernels` are the
// loop-reordered OpenMP versions used by the model. Every output element of the
// parallel kernels is owned by exactly one thread and accumulated in a fixed
// order, so results do not depend on the thread count.

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace artscore::kernels {

int num_threads();
void set_num_threads(int n);

struct ConvShape {
  int in_channels = 0;
  int in_height = 0;
  int in_width = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  int groups = 1;

  int out_height() const { return (in_height + 2 * padding - kernel) / stride + 1; }
  int out_width() const { return (in_width + 2 * padding - kernel) / stride + 1; }
  int in_per_group() const { return in_channels / groups; }
  int out_per_group() const { return out_channels / groups; }
  std::size_t weight_size() const {
    return static_cast<std::size_t>(out_channels) * in_per_group() * kernel * kernel;
  }
  std::size_t input_size() const { return static_cast<std::size_t>(in_channels) * in_height * in_width; }
  std::size_t output_size() const { return static_cast<std::size_t>(out_channels) * out_height() * out_width(); }
  bool valid() const {
    return in_channels > 0 && out_channels > 0 && groups > 0 && in_channels % groups == 0 &&
           out_channels % groups == 0 && kernel > 0 && stride > 0 && padding >= 0 && out_height() > 0 &&
           out_width() > 0;
  }
};

// Input bin [start, end) of output cell `i` when `in` cells pool to `out`.
inline int pool_start(int i, int in, int out) { return (i * in) / out; }
inline int pool_end(int i, int in, int out) { return ((i + 1) * in + out - 1) / out; }

namespace reference {

template <typename T>
void conv2d(const ConvShape& s, std::span<const T> input, std::span<const T> weight, std::span<const T> bias,
            std::span<T> output) {
  const int oh_n = s.out_height(), ow_n = s.out_width();
  const int ipg = s.in_per_group(), opg = s.out_per_group();
  for (int oc = 0; oc < s.out_channels; ++oc) {
    const int g = oc / opg;
    for (int oh = 0; oh < oh_n; ++oh) {
      for (int ow = 0; ow < ow_n; ++ow) {
        T acc = bias.empty() ? T(0) : bias[oc];
        for (int icg = 0; icg < ipg; ++icg) {
          const int ic = g * ipg + icg;
          for (int kh = 0; kh < s.kernel; ++kh) {
            const int ih = oh * s.stride - s.padding + kh;
            if (ih < 0 || ih >= s.in_height) continue;
            for (int kw = 0; kw < s.kernel; ++kw) {
              const int iw = ow * s.stride - s.padding + kw;
              if (iw < 0 || iw >= s.in_width) continue;
              acc += weight[((static_cast<std::size_t>(oc) * ipg + icg) * s.kernel + kh) * s.kernel + kw] *
                     input[(static_cast<std::size_t>(ic) * s.in_height + ih) * s.in_width + iw];
            }
          }
        }
        output[(static_cast<std::size_t>(oc) * oh_n + oh) * ow_n + ow] = acc;
      }
    }
  }
}

// Gradients of conv2d. grad_input / grad_weight / grad_bias are overwritten;
// pass an empty span to skip one.
template <typename T>
void conv2d_backward(const ConvShape& s, std::span<const T> input, std::span<const T> weight,
                     std::span<const T> grad_output, std::span<T> grad_input, std::span<T> grad_weight,
                     std::span<T> grad_bias) {
  const int oh_n = s.out_height(), ow_n = s.out_width();
  const int ipg = s.in_per_group(), opg = s.out_per_group();
  std::fill(grad_input.begin(), grad_input.end(), T(0));
  std::fill(grad_weight.begin(), grad_weight.end(), T(0));
  std::fill(grad_bias.begin(), grad_bias.end(), T(0));
  for (int oc = 0; oc < s.out_channels; ++oc) {
    const int g = oc / opg;
    for (int oh = 0; oh < oh_n; ++oh) {
      for (int ow = 0; ow < ow_n; ++ow) {
        const T go = grad_output[(static_cast<std::size_t>(oc) * oh_n + oh) * ow_n + ow];
        if (!grad_bias.empty()) grad_bias[oc] += go;
        for (int icg = 0; icg < ipg; ++icg) {
          const int ic = g * ipg + icg;
          for (int kh = 0; kh < s.kernel; ++kh) {
            const int ih = oh * s.stride - s.padding + kh;
            if (ih < 0 || ih >= s.in_height) continue;
            for (int kw = 0; kw < s.kernel; ++kw) {
              const int iw = ow * s.stride - s.padding + kw;
              if (iw < 0 || iw >= s.in_width) continue;
              const std::size_t wi = ((static_cast<std::size_t>(oc) * ipg + icg) * s.kernel + kh) * s.kernel + kw;
              const std::size_t ii = (static_cast<std::size_t>(ic) * s.in_height + ih) * s.in_width + iw;
              if (!grad_weight.empty()) grad_weight[wi] += go * input[ii];
              if (!grad_input.empty()) grad_input[ii] += go * weight[wi];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void adaptive_avg_pool2d(int channels, int in_h, int in_w, int out_h, int out_w, std::span<const T> input,
                         std::span<T> output) {
  for (int c = 0; c < channels; ++c) {
    for (int oh = 0; oh < out_h; ++oh) {
      for (int ow = 0; ow < out_w; ++ow) {
        const int h0 = pool_start(oh, in_h, out_h), h1 = pool_end(oh, in_h, out_h);
        const int w0 = pool_start(ow, in_w, out_w), w1 = pool_end(ow, in_w, out_w);
        T sum = 0;
        for (int h = h0; h < h1; ++h)
          for (int w = w0; w < w1; ++w) sum += input[(static_cast<std::size_t>(c) * in_h + h) * in_w + w];
        output[(static_cast<std::size_t>(c) * out_h + oh) * out_w + ow] = sum / static_cast<T>((h1 - h0) * (w1 - w0));
      }
    }
  }
}

// y[n, o] = sum_i x[n, i] w[o, i] + b[o]
template <typename T>
void dense(int batch, int in_features, int out_features, std::span<const T> x, std::span<const T> w,
           std::span<const T> b, std::span<T> y) {
  for (int n = 0; n < batch; ++n) {
    for (int o = 0; o < out_features; ++o) {
      T acc = b.empty() ? T(0) : b[o];
      for (int i = 0; i < in_features; ++i)
        acc += x[static_cast<std::size_t>(n) * in_features + i] * w[static_cast<std::size_t>(o) * in_features + i];
      y[static_cast<std::size_t>(n) * out_features + o] = acc;
    }
  }
}

// Bilinear resample of a CHW image with half-pixel centers and edge clamping.
template <typename T>
void resize_bilinear(int channels, int in_h, int in_w, int out_h, int out_w, std::span<const T> input,
                     std::span<T> output) {
  const double sy = static_cast<double>(in_h) / out_h;
  const double sx = static_cast<double>(in_w) / out_w;
  for (int c = 0; c < channels; ++c) {
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        const double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, static_cast<double>(in_h - 1));
        const double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, static_cast<double>(in_w - 1));
        const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
        const int y1 = std::min(y0 + 1, in_h - 1), x1 = std::min(x0 + 1, in_w - 1);
        const double ty = fy - y0, tx = fx - x0;
        auto at = [&](int y, int x) {
          return static_cast<double>(input[(static_cast<std::size_t>(c) * in_h + y) * in_w + x]);
        };
        const double v = (1 - ty) * ((1 - tx) * at(y0, x0) + tx * at(y0, x1)) +
                         ty * ((1 - tx) * at(y1, x0) + tx * at(y1, x1));
        output[(static_cast<std::size_t>(c) * out_h + oy) * out_w + ox] = static_cast<T>(v);
      }
    }
  }
}

}  // namespace reference

// ---------------------------------------------------------------------------
// Parallel kernels.

template <typename T>
void conv2d(const ConvShape& s, std::span<const T> input, std::span<const T> weight, std::span<const T> bias,
            std::span<T> output) {
  assert(s.valid());
  const int oh_n = s.out_height(), ow_n = s.out_width();
  const int ipg = s.in_per_group(), opg = s.out_per_group();
  const std::size_t in_plane = static_cast<std::size_t>(s.in_height) * s.in_width;
  const std::size_t out_plane = static_cast<std::size_t>(oh_n) * ow_n;
  const bool pointwise = s.kernel == 1 && s.stride == 1 && s.padding == 0;

#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < s.out_channels; ++oc) {
    const int g = oc / opg;
    T* out = output.data() + static_cast<std::size_t>(oc) * out_plane;
    const T b0 = bias.empty() ? T(0) : bias[oc];
    std::fill(out, out + out_plane, b0);
    for (int icg = 0; icg < ipg; ++icg) {
      const T* in = input.data() + static_cast<std::size_t>(g * ipg + icg) * in_plane;
      const T* wk = weight.data() + (static_cast<std::size_t>(oc) * ipg + icg) * s.kernel * s.kernel;
      if (pointwise) {
        const T wv = wk[0];
        for (std::size_t p = 0; p < out_plane; ++p) out[p] += wv * in[p];
        continue;
      }
      for (int kh = 0; kh < s.kernel; ++kh) {
        for (int kw = 0; kw < s.kernel; ++kw) {
          const T wv = wk[kh * s.kernel + kw];
          for (int oh = 0; oh < oh_n; ++oh) {
            const int ih = oh * s.stride - s.padding + kh;
            if (ih < 0 || ih >= s.in_height) continue;
            const T* in_row = in + static_cast<std::size_t>(ih) * s.in_width;
            T* out_row = out + static_cast<std::size_t>(oh) * ow_n;
            // Valid ow range: 0 <= ow*stride - pad + kw < in_width.
            const int lo = std::max(0, (s.padding - kw + s.stride - 1) / s.stride);
            const int hi = std::min(ow_n, (s.in_width + s.padding - kw + s.stride - 1) / s.stride);
            if (s.stride == 1) {
              const T* src = in_row - s.padding + kw;
              for (int ow = lo; ow < hi; ++ow) out_row[ow] += wv * src[ow];
            } else {
              for (int ow = lo; ow < hi; ++ow) out_row[ow] += wv * in_row[ow * s.stride - s.padding + kw];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward(const ConvShape& s, std::span<const T> input, std::span<const T> weight,
                     std::span<const T> grad_output, std::span<T> grad_input, std::span<T> grad_weight,
                     std::span<T> grad_bias) {
  const int oh_n = s.out_height(), ow_n = s.out_width();
  const int ipg = s.in_per_group(), opg = s.out_per_group();
  const std::size_t in_plane = static_cast<std::size_t>(s.in_height) * s.in_width;
  const std::size_t out_plane = static_cast<std::size_t>(oh_n) * ow_n;

  if (!grad_weight.empty() || !grad_bias.empty()) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < s.out_channels; ++oc) {
      const int g = oc / opg;
      const T* go = grad_output.data() + static_cast<std::size_t>(oc) * out_plane;
      if (!grad_bias.empty()) {
        T acc = 0;
        for (std::size_t p = 0; p < out_plane; ++p) acc += go[p];
        grad_bias[oc] = acc;
      }
      if (grad_weight.empty()) continue;
      for (int icg = 0; icg < ipg; ++icg) {
        const T* in = input.data() + static_cast<std::size_t>(g * ipg + icg) * in_plane;
        for (int kh = 0; kh < s.kernel; ++kh) {
          for (int kw = 0; kw < s.kernel; ++kw) {
            T acc = 0;
            for (int oh = 0; oh < oh_n; ++oh) {
              const int ih = oh * s.stride - s.padding + kh;
              if (ih < 0 || ih >= s.in_height) continue;
              const int lo = std::max(0, (s.padding - kw + s.stride - 1) / s.stride);
              const int hi = std::min(ow_n, (s.in_width + s.padding - kw + s.stride - 1) / s.stride);
              for (int ow = lo; ow < hi; ++ow)
                acc += go[static_cast<std::size_t>(oh) * ow_n + ow] *
                       in[static_cast<std::size_t>(ih) * s.in_width + ow * s.stride - s.padding + kw];
            }
            grad_weight[((static_cast<std::size_t>(oc) * ipg + icg) * s.kernel + kh) * s.kernel + kw] = acc;
          }
        }
      }
    }
  }

  if (!grad_input.empty()) {
#pragma omp parallel for schedule(static)
    for (int ic = 0; ic < s.in_channels; ++ic) {
      const int g = ic / ipg;
      const int icg = ic % ipg;
      T* gi = grad_input.data() + static_cast<std::size_t>(ic) * in_plane;
      std::fill(gi, gi + in_plane, T(0));
      for (int ocg = 0; ocg < opg; ++ocg) {
        const int oc = g * opg + ocg;
        const T* go = grad_output.data() + static_cast<std::size_t>(oc) * out_plane;
        const T* wk = weight.data() + (static_cast<std::size_t>(oc) * ipg + icg) * s.kernel * s.kernel;
        for (int kh = 0; kh < s.kernel; ++kh) {
          for (int kw = 0; kw < s.kernel; ++kw) {
            const T wv = wk[kh * s.kernel + kw];
            for (int oh = 0; oh < oh_n; ++oh) {
              const int ih = oh * s.stride - s.padding + kh;
              if (ih < 0 || ih >= s.in_height) continue;
              const int lo = std::max(0, (s.padding - kw + s.stride - 1) / s.stride);
              const int hi = std::min(ow_n, (s.in_width + s.padding - kw + s.stride - 1) / s.stride);
              for (int ow = lo; ow < hi; ++ow)
                gi[static_cast<std::size_t>(ih) * s.in_width + ow * s.stride - s.padding + kw] +=
                    wv * go[static_cast<std::size_t>(oh) * ow_n + ow];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void adaptive_avg_pool2d(int channels, int in_h, int in_w, int out_h, int out_w, std::span<const T> input,
                         std::span<T> output) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    const T* in = input.data() + static_cast<std::size_t>(c) * in_h * in_w;
    T* out = output.data() + static_cast<std::size_t>(c) * out_h * out_w;
    for (int oh = 0; oh < out_h; ++oh) {
      const int h0 = pool_start(oh, in_h, out_h), h1 = pool_end(oh, in_h, out_h);
      for (int ow = 0; ow < out_w; ++ow) {
        const int w0 = pool_start(ow, in_w, out_w), w1 = pool_end(ow, in_w, out_w);
        T sum = 0;
        for (int h = h0; h < h1; ++h) {
          const T* row = in + static_cast<std::size_t>(h) * in_w;
          for (int w = w0; w < w1; ++w) sum += row[w];
        }
        out[static_cast<std::size_t>(oh) * out_w + ow] = sum / static_cast<T>((h1 - h0) * (w1 - w0));
      }
    }
  }
}

// Scatters each pooled gradient uniformly over its input bin. Overlapping bins
// accumulate.
template <typename T>
void adaptive_avg_pool2d_backward(int channels, int in_h, int in_w, int out_h, int out_w,
                                  std::span<const T> grad_output, std::span<T> grad_input) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    T* gi = grad_input.data() + static_cast<std::size_t>(c) * in_h * in_w;
    const T* go = grad_output.data() + static_cast<std::size_t>(c) * out_h * out_w;
    std::fill(gi, gi + static_cast<std::size_t>(in_h) * in_w, T(0));
    for (int oh = 0; oh < out_h; ++oh) {
      const int h0 = pool_start(oh, in_h, out_h), h1 = pool_end(oh, in_h, out_h);
      for (int ow = 0; ow < out_w; ++ow) {
        const int w0 = pool_start(ow, in_w, out_w), w1 = pool_end(ow, in_w, out_w);
        const T g = go[static_cast<std::size_t>(oh) * out_w + ow] / static_cast<T>((h1 - h0) * (w1 - w0));
        for (int h = h0; h < h1; ++h)
          for (int w = w0; w < w1; ++w) gi[static_cast<std::size_t>(h) * in_w + w] += g;
      }
    }
  }
}

template <typename T>
void dense(int batch, int in_features, int out_features, std::span<const T> x, std::span<const T> w,
           std::span<const T> b, std::span<T> y) {
#pragma omp parallel for schedule(static)
  for (int n = 0; n < batch; ++n) {
    const T* xn = x.data() + static_cast<std::size_t>(n) * in_features;
    T* yn = y.data() + static_cast<std::size_t>(n) * out_features;
    for (int o = 0; o < out_features; ++o) {
      const T* wo = w.data() + static_cast<std::size_t>(o) * in_features;
      T acc = 0;
      for (int i = 0; i < in_features; ++i) acc += xn[i] * wo[i];
      yn[o] = acc + (b.empty() ? T(0) : b[o]);
    }
  }
}

// Given dy[n, o]: dx[n, i] = sum_o dy[n, o] w[o, i]; dw[o, i] = sum_n dy[n, o] x[n, i];
// db[o] = sum_n dy[n, o]. Outputs are overwritten; empty spans are skipped.
template <typename T>
void dense_backward(int batch, int in_features, int out_features, std::span<const T> x, std::span<const T> w,
                    std::span<const T> dy, std::span<T> dx, std::span<T> dw, std::span<T> db) {
  if (!dx.empty()) {
#pragma omp parallel for schedule(static)
    for (int n = 0; n < batch; ++n) {
      T* dxn = dx.data() + static_cast<std::size_t>(n) * in_features;
      std::fill(dxn, dxn + in_features, T(0));
      for (int o = 0; o < out_features; ++o) {
        const T g = dy[static_cast<std::size_t>(n) * out_features + o];
        const T* wo = w.data() + static_cast<std::size_t>(o) * in_features;
        for (int i = 0; i < in_features; ++i) dxn[i] += g * wo[i];
      }
    }
  }
  if (!dw.empty() || !db.empty()) {
#pragma omp parallel for schedule(static)
    for (int o = 0; o < out_features; ++o) {
      T bias_acc = 0;
      T* dwo = dw.empty() ? nullptr : dw.data() + static_cast<std::size_t>(o) * in_features;
      if (dwo) std::fill(dwo, dwo + in_features, T(0));
      for (int n = 0; n < batch; ++n) {
        const T g = dy[static_cast<std::size_t>(n) * out_features + o];
        bias_acc += g;
        if (dwo) {
          const T* xn = x.data() + static_cast<std::size_t>(n) * in_features;
          for (int i = 0; i < in_features; ++i) dwo[i] += g * xn[i];
        }
      }
      if (!db.empty()) db[o] = bias_acc;
    }
  }
}

template <typename T>
void resize_bilinear(int channels, int in_h, int in_w, int out_h, int out_w, std::span<const T> input,
                     std::span<T> output) {
  const double sy = static_cast<double>(in_h) / out_h;
  const double sx = static_cast<double>(in_w) / out_w;
#pragma omp parallel for schedule(static)
  for (int oy = 0; oy < out_h; ++oy) {
    const double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, static_cast<double>(in_h - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, in_h - 1);
    const double ty = fy - y0;
    for (int ox = 0; ox < out_w; ++ox) {
      const double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, static_cast<double>(in_w - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, in_w - 1);
      const double tx = fx - x0;
      for (int c = 0; c < channels; ++c) {
        const T* plane = input.data() + static_cast<std::size_t>(c) * in_h * in_w;
        auto at = [&](int y, int x) { return static_cast<double>(plane[static_cast<std::size_t>(y) * in_w + x]); };
        const double v = (1 - ty) * ((1 - tx) * at(y0, x0) + tx * at(y0, x1)) +
                         ty * ((1 - tx) * at(y1, x0) + tx * at(y1, x1));
        output[(static_cast<std::size_t>(c) * out_h + oy) * out_w + ox] = static_cast<T>(v);
      }
    }
  }
}

}  // namespace artscore::kernels
