#include <algorithm>
#include <cstddef>

#include "scanpath/cnn/kernels.hpp"

namespace scanpath::cnn::reference {

namespace {
inline std::size_t idx3(int y, int x, int c, int w, int ch) {
  return (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)) *
             static_cast<std::size_t>(ch) +
         static_cast<std::size_t>(c);
}
inline std::size_t widx(int ky, int kx, int ci, int co, int cin, int cout) {
  return ((static_cast<std::size_t>(ky) * 3 + static_cast<std::size_t>(kx)) *
              static_cast<std::size_t>(cin) +
          static_cast<std::size_t>(ci)) *
             static_cast<std::size_t>(cout) +
         static_cast<std::size_t>(co);
}
}  // namespace

void conv2d_forward(const double* in, int h, int w, int cin, const double* weight,
                    const double* bias, int cout, double* out) {
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int co = 0; co < cout; ++co) {
        double acc = bias[co];
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) {
            const int iy = y + ky - 1, ix = x + kx - 1;
            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
            for (int ci = 0; ci < cin; ++ci) {
              acc += in[idx3(iy, ix, ci, w, cin)] * weight[widx(ky, kx, ci, co, cin, cout)];
            }
          }
        }
        out[idx3(y, x, co, w, cout)] = acc;
      }
    }
  }
}

void conv2d_backward(const double* in, int h, int w, int cin, const double* weight, int cout,
                     const double* dout, double* din, double* dweight, double* dbias) {
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int co = 0; co < cout; ++co) dbias[co] += dout[idx3(y, x, co, w, cout)];
    }
  }
  for (int ky = 0; ky < 3; ++ky) {
    for (int kx = 0; kx < 3; ++kx) {
      for (int ci = 0; ci < cin; ++ci) {
        for (int co = 0; co < cout; ++co) {
          double acc = 0.0;
          for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
              const int iy = y + ky - 1, ix = x + kx - 1;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += in[idx3(iy, ix, ci, w, cin)] * dout[idx3(y, x, co, w, cout)];
            }
          }
          dweight[widx(ky, kx, ci, co, cin, cout)] += acc;
        }
      }
    }
  }
  if (!din) return;
  // din[iy][ix][ci] = sum over outputs that read (iy, ix).
  for (int iy = 0; iy < h; ++iy) {
    for (int ix = 0; ix < w; ++ix) {
      for (int ci = 0; ci < cin; ++ci) {
        double acc = 0.0;
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) {
            const int y = iy - ky + 1, x = ix - kx + 1;
            if (y < 0 || y >= h || x < 0 || x >= w) continue;
            for (int co = 0; co < cout; ++co) {
              acc += dout[idx3(y, x, co, w, cout)] * weight[widx(ky, kx, ci, co, cin, cout)];
            }
          }
        }
        din[idx3(iy, ix, ci, w, cin)] = acc;
      }
    }
  }
}

void conv1d_forward(const double* in, int len, int cin, const double* weight, const double* bias,
                    int cout, double* out) {
  for (int t = 0; t < len; ++t) {
    for (int co = 0; co < cout; ++co) {
      double acc = bias[co];
      for (int k = 0; k < 3; ++k) {
        const int it = t + k - 1;
        if (it < 0 || it >= len) continue;
        for (int ci = 0; ci < cin; ++ci) {
          acc += in[static_cast<std::size_t>(it * cin + ci)] *
                 weight[static_cast<std::size_t>((k * cin + ci) * cout + co)];
        }
      }
      out[static_cast<std::size_t>(t * cout + co)] = acc;
    }
  }
}

void conv1d_backward(const double* in, int len, int cin, const double* weight, int cout,
                     const double* dout, double* din, double* dweight, double* dbias) {
  for (int t = 0; t < len; ++t) {
    for (int co = 0; co < cout; ++co) dbias[co] += dout[static_cast<std::size_t>(t * cout + co)];
  }
  for (int k = 0; k < 3; ++k) {
    for (int ci = 0; ci < cin; ++ci) {
      for (int co = 0; co < cout; ++co) {
        double acc = 0.0;
        for (int t = 0; t < len; ++t) {
          const int it = t + k - 1;
          if (it < 0 || it >= len) continue;
          acc += in[static_cast<std::size_t>(it * cin + ci)] *
                 dout[static_cast<std::size_t>(t * cout + co)];
        }
        dweight[static_cast<std::size_t>((k * cin + ci) * cout + co)] += acc;
      }
    }
  }
  if (!din) return;
  for (int it = 0; it < len; ++it) {
    for (int ci = 0; ci < cin; ++ci) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) {
        const int t = it - k + 1;
        if (t < 0 || t >= len) continue;
        for (int co = 0; co < cout; ++co) {
          acc += dout[static_cast<std::size_t>(t * cout + co)] *
                 weight[static_cast<std::size_t>((k * cin + ci) * cout + co)];
        }
      }
      din[static_cast<std::size_t>(it * cin + ci)] = acc;
    }
  }
}

void maxpool2_forward(const double* in, int h, int w, int c, double* out, int* argmax) {
  const int ho = h / 2, wo = w / 2;
  for (int y = 0; y < ho; ++y) {
    for (int x = 0; x < wo; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        // First maximum in row-major window order wins ties.
        int best = static_cast<int>(idx3(2 * y, 2 * x, ch, w, c));
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int i = static_cast<int>(idx3(2 * y + dy, 2 * x + dx, ch, w, c));
            if (in[i] > in[best]) best = i;
          }
        }
        out[idx3(y, x, ch, wo, c)] = in[best];
        argmax[idx3(y, x, ch, wo, c)] = best;
      }
    }
  }
}

void maxpool2_backward(const double* dout, const int* argmax, int h, int w, int c, double* din) {
  std::fill(din, din + static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * static_cast<std::size_t>(c), 0.0);
  const std::size_t n = static_cast<std::size_t>(h / 2) * static_cast<std::size_t>(w / 2) *
                        static_cast<std::size_t>(c);
  for (std::size_t i = 0; i < n; ++i) din[argmax[i]] += dout[i];
}

void dense_forward(const double* in, int n_in, const double* weight, const double* bias, int n_out,
                   double* out) {
  for (int o = 0; o < n_out; ++o) {
    double acc = bias[o];
    for (int i = 0; i < n_in; ++i) {
      acc += weight[static_cast<std::size_t>(o) * static_cast<std::size_t>(n_in) + static_cast<std::size_t>(i)] * in[i];
    }
    out[o] = acc;
  }
}

void dense_backward(const double* in, int n_in, const double* weight, int n_out,
                    const double* dout, double* din, double* dweight, double* dbias) {
  for (int o = 0; o < n_out; ++o) {
    dbias[o] += dout[o];
    for (int i = 0; i < n_in; ++i) {
      dweight[static_cast<std::size_t>(o) * static_cast<std::size_t>(n_in) + static_cast<std::size_t>(i)] += dout[o] * in[i];
    }
  }
  if (!din) return;
  for (int i = 0; i < n_in; ++i) {
    double acc = 0.0;
    for (int o = 0; o < n_out; ++o) {
      acc += weight[static_cast<std::size_t>(o) * static_cast<std::size_t>(n_in) + static_cast<std::size_t>(i)] * dout[o];
    }
    din[i] = acc;
  }
}

void relu_forward(double* x, int n) {
  for (int i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* out, double* dx, int n) {
  for (int i = 0; i < n; ++i) {
    if (!(out[i] > 0.0)) dx[i] = 0.0;
  }
}

}  // namespace scanpath::cnn::reference
