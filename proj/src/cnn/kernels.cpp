#include <algorithm>
#include <cstddef>

#include "scanpath/cnn/kernels.hpp"

namespace scanpath::cnn {

namespace optimized {

namespace {

inline std::size_t at(int y, int x, int w, int ch) {
  return (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)) *
         static_cast<std::size_t>(ch);
}

// CO is the output channel count when known at compile time, else 0.
template <int CO>
void conv2d_forward_t(const double* in, int h, int w, int cin, const double* weight,
                      const double* bias, int cout_rt, double* out) {
  const int cout = CO > 0 ? CO : cout_rt;
  constexpr int kMax = CO > 0 ? CO : 256;
  for (int y = 0; y < h; ++y) {
    const int ky0 = y == 0 ? 1 : 0, ky1 = y == h - 1 ? 2 : 3;
    for (int x = 0; x < w; ++x) {
      const int kx0 = x == 0 ? 1 : 0, kx1 = x == w - 1 ? 2 : 3;
      alignas(64) double acc[kMax];
      for (int co = 0; co < cout; ++co) acc[co] = bias[co];
      for (int ky = ky0; ky < ky1; ++ky) {
        for (int kx = kx0; kx < kx1; ++kx) {
          const double* px = in + at(y + ky - 1, x + kx - 1, w, cin);
          const double* wk = weight + static_cast<std::size_t>((ky * 3 + kx) * cin) * static_cast<std::size_t>(cout);
          for (int ci = 0; ci < cin; ++ci) {
            const double v = px[ci];
            if (v == 0.0) continue;
            const double* wr = wk + static_cast<std::size_t>(ci) * static_cast<std::size_t>(cout);
#pragma omp simd
            for (int co = 0; co < cout; ++co) acc[co] += v * wr[co];
          }
        }
      }
      double* o = out + at(y, x, w, cout);
      for (int co = 0; co < cout; ++co) o[co] = acc[co];
    }
  }
}

template <int CO>
void conv2d_backward_t(const double* in, int h, int w, int cin, const double* weight, int cout_rt,
                       const double* dout, double* din, double* dweight, double* dbias) {
  const int cout = CO > 0 ? CO : cout_rt;
  if (din) std::fill(din, din + at(h, 0, w, cin), 0.0);
  for (int y = 0; y < h; ++y) {
    const int ky0 = y == 0 ? 1 : 0, ky1 = y == h - 1 ? 2 : 3;
    for (int x = 0; x < w; ++x) {
      const double* g = dout + at(y, x, w, cout);
      bool any = false;
      for (int co = 0; co < cout; ++co) any |= g[co] != 0.0;
      if (!any) continue;  // max-pool routing leaves most positions without gradient
      for (int co = 0; co < cout; ++co) dbias[co] += g[co];
      const int kx0 = x == 0 ? 1 : 0, kx1 = x == w - 1 ? 2 : 3;
      for (int ky = ky0; ky < ky1; ++ky) {
        for (int kx = kx0; kx < kx1; ++kx) {
          const std::size_t pix = at(y + ky - 1, x + kx - 1, w, cin);
          const double* px = in + pix;
          const std::size_t koff = static_cast<std::size_t>((ky * 3 + kx) * cin) * static_cast<std::size_t>(cout);
          const double* wk = weight + koff;
          double* dwk = dweight + koff;
          for (int ci = 0; ci < cin; ++ci) {
            const double v = px[ci];
            const std::size_t roff = static_cast<std::size_t>(ci) * static_cast<std::size_t>(cout);
            if (v != 0.0) {
              double* dwr = dwk + roff;
#pragma omp simd
              for (int co = 0; co < cout; ++co) dwr[co] += v * g[co];
            }
            if (din) {
              const double* wr = wk + roff;
              double s = 0.0;
#pragma omp simd reduction(+ : s)
              for (int co = 0; co < cout; ++co) s += wr[co] * g[co];
              din[pix + static_cast<std::size_t>(ci)] += s;
            }
          }
        }
      }
    }
  }
}

}  // namespace

void conv2d_forward(const double* in, int h, int w, int cin, const double* weight,
                    const double* bias, int cout, double* out) {
  switch (cout) {
    case 8: return conv2d_forward_t<8>(in, h, w, cin, weight, bias, cout, out);
    case 16: return conv2d_forward_t<16>(in, h, w, cin, weight, bias, cout, out);
    case 32: return conv2d_forward_t<32>(in, h, w, cin, weight, bias, cout, out);
    default:
      if (cout <= 256) return conv2d_forward_t<0>(in, h, w, cin, weight, bias, cout, out);
      return reference::conv2d_forward(in, h, w, cin, weight, bias, cout, out);
  }
}

void conv2d_backward(const double* in, int h, int w, int cin, const double* weight, int cout,
                     const double* dout, double* din, double* dweight, double* dbias) {
  switch (cout) {
    case 8: return conv2d_backward_t<8>(in, h, w, cin, weight, cout, dout, din, dweight, dbias);
    case 16: return conv2d_backward_t<16>(in, h, w, cin, weight, cout, dout, din, dweight, dbias);
    case 32: return conv2d_backward_t<32>(in, h, w, cin, weight, cout, dout, din, dweight, dbias);
    default: return conv2d_backward_t<0>(in, h, w, cin, weight, cout, dout, din, dweight, dbias);
  }
}

void conv1d_forward(const double* in, int len, int cin, const double* weight, const double* bias,
                    int cout, double* out) {
  // A length-L signal is a 1 x L image with the kernel's middle row.
  for (int t = 0; t < len; ++t) {
    double* o = out + static_cast<std::size_t>(t) * static_cast<std::size_t>(cout);
    for (int co = 0; co < cout; ++co) o[co] = bias[co];
    for (int k = 0; k < 3; ++k) {
      const int it = t + k - 1;
      if (it < 0 || it >= len) continue;
      const double* px = in + static_cast<std::size_t>(it) * static_cast<std::size_t>(cin);
      const double* wk = weight + static_cast<std::size_t>(k * cin) * static_cast<std::size_t>(cout);
      for (int ci = 0; ci < cin; ++ci) {
        const double v = px[ci];
        if (v == 0.0) continue;
        const double* wr = wk + static_cast<std::size_t>(ci) * static_cast<std::size_t>(cout);
#pragma omp simd
        for (int co = 0; co < cout; ++co) o[co] += v * wr[co];
      }
    }
  }
}

void conv1d_backward(const double* in, int len, int cin, const double* weight, int cout,
                     const double* dout, double* din, double* dweight, double* dbias) {
  if (din) std::fill(din, din + static_cast<std::size_t>(len) * static_cast<std::size_t>(cin), 0.0);
  for (int t = 0; t < len; ++t) {
    const double* g = dout + static_cast<std::size_t>(t) * static_cast<std::size_t>(cout);
    for (int co = 0; co < cout; ++co) dbias[co] += g[co];
    for (int k = 0; k < 3; ++k) {
      const int it = t + k - 1;
      if (it < 0 || it >= len) continue;
      const std::size_t pix = static_cast<std::size_t>(it) * static_cast<std::size_t>(cin);
      const std::size_t koff = static_cast<std::size_t>(k * cin) * static_cast<std::size_t>(cout);
      for (int ci = 0; ci < cin; ++ci) {
        const double v = in[pix + static_cast<std::size_t>(ci)];
        const std::size_t roff = koff + static_cast<std::size_t>(ci) * static_cast<std::size_t>(cout);
        double s = 0.0;
#pragma omp simd reduction(+ : s)
        for (int co = 0; co < cout; ++co) {
          dweight[roff + static_cast<std::size_t>(co)] += v * g[co];
          s += weight[roff + static_cast<std::size_t>(co)] * g[co];
        }
        if (din) din[pix + static_cast<std::size_t>(ci)] += s;
      }
    }
  }
}

void maxpool2_forward(const double* in, int h, int w, int c, double* out, int* argmax) {
  const int ho = h / 2, wo = w / 2;
  for (int y = 0; y < ho; ++y) {
    for (int x = 0; x < wo; ++x) {
      const int i00 = static_cast<int>(at(2 * y, 2 * x, w, c));
      const int i01 = i00 + c;
      const int i10 = static_cast<int>(at(2 * y + 1, 2 * x, w, c));
      const int i11 = i10 + c;
      double* o = out + at(y, x, wo, c);
      int* a = argmax + at(y, x, wo, c);
      for (int ch = 0; ch < c; ++ch) {
        int best = i00 + ch;
        if (in[i01 + ch] > in[best]) best = i01 + ch;
        if (in[i10 + ch] > in[best]) best = i10 + ch;
        if (in[i11 + ch] > in[best]) best = i11 + ch;
        o[ch] = in[best];
        a[ch] = best;
      }
    }
  }
}

void maxpool2_backward(const double* dout, const int* argmax, int h, int w, int c, double* din) {
  reference::maxpool2_backward(dout, argmax, h, w, c, din);
}

void dense_forward(const double* in, int n_in, const double* weight, const double* bias, int n_out,
                   double* out) {
  for (int o = 0; o < n_out; ++o) {
    const double* row = weight + static_cast<std::size_t>(o) * static_cast<std::size_t>(n_in);
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (int i = 0; i < n_in; ++i) acc += row[i] * in[i];
    out[o] = acc + bias[o];
  }
}

void dense_backward(const double* in, int n_in, const double* weight, int n_out,
                    const double* dout, double* din, double* dweight, double* dbias) {
  if (din) std::fill(din, din + n_in, 0.0);
  for (int o = 0; o < n_out; ++o) {
    const double g = dout[o];
    if (g == 0.0) continue;
    dbias[o] += g;
    const std::size_t off = static_cast<std::size_t>(o) * static_cast<std::size_t>(n_in);
    double* drow = dweight + off;
#pragma omp simd
    for (int i = 0; i < n_in; ++i) drow[i] += g * in[i];
    if (din) {
      const double* row = weight + off;
#pragma omp simd
      for (int i = 0; i < n_in; ++i) din[i] += g * row[i];
    }
  }
}

void relu_forward(double* x, int n) { reference::relu_forward(x, n); }
void relu_backward(const double* out, double* dx, int n) { reference::relu_backward(out, dx, n); }

}  // namespace optimized

const Kernels& kernels(KernelSet set) {
  static const Kernels ref{reference::conv2d_forward,  reference::conv2d_backward,
                           reference::conv1d_forward,  reference::conv1d_backward,
                           reference::maxpool2_forward, reference::maxpool2_backward,
                           reference::dense_forward,   reference::dense_backward,
                           reference::relu_forward,    reference::relu_backward};
  static const Kernels opt{optimized::conv2d_forward,  optimized::conv2d_backward,
                           optimized::conv1d_forward,  optimized::conv1d_backward,
                           optimized::maxpool2_forward, optimized::maxpool2_backward,
                           optimized::dense_forward,   optimized::dense_backward,
                           optimized::relu_forward,    optimized::relu_backward};
  return set == KernelSet::Reference ? ref : opt;
}

}  // namespace scanpath::cnn
