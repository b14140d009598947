#pragma once

// CNN compute kernels on single samples, double precision.
//
// Layouts: images HWC (row, column, channel); 1D signals LC; conv weights
// [ky][kx][cin][cout] (1D: [k][cin][cout]); dense weights [out][in].
// Backward kernels accumulate into dw/db and overwrite din (when non-null).
//
// `reference` is the straightforward serial implementation kept as the
// test oracle. `optimized` skips zero activations and zero gradients and is
// specialized for the channel counts the networks use; batches are spread
// over OpenMP threads by the network layer.

namespace scanpath::cnn {

namespace reference {

void conv2d_forward(const double* in, int h, int w, int cin, const double* weight,
                    const double* bias, int cout, double* out);
void conv2d_backward(const double* in, int h, int w, int cin, const double* weight, int cout,
                     const double* dout, double* din, double* dweight, double* dbias);
void conv1d_forward(const double* in, int len, int cin, const double* weight, const double* bias,
                    int cout, double* out);
void conv1d_backward(const double* in, int len, int cin, const double* weight, int cout,
                     const double* dout, double* din, double* dweight, double* dbias);
void maxpool2_forward(const double* in, int h, int w, int c, double* out, int* argmax);
void maxpool2_backward(const double* dout, const int* argmax, int h, int w, int c, double* din);
void dense_forward(const double* in, int n_in, const double* weight, const double* bias, int n_out,
                   double* out);
void dense_backward(const double* in, int n_in, const double* weight, int n_out,
                    const double* dout, double* din, double* dweight, double* dbias);
void relu_forward(double* x, int n);
void relu_backward(const double* out, double* dx, int n);

}  // namespace reference

namespace optimized {

void conv2d_forward(const double* in, int h, int w, int cin, const double* weight,
                    const double* bias, int cout, double* out);
void conv2d_backward(const double* in, int h, int w, int cin, const double* weight, int cout,
                     const double* dout, double* din, double* dweight, double* dbias);
void conv1d_forward(const double* in, int len, int cin, const double* weight, const double* bias,
                    int cout, double* out);
void conv1d_backward(const double* in, int len, int cin, const double* weight, int cout,
                     const double* dout, double* din, double* dweight, double* dbias);
void maxpool2_forward(const double* in, int h, int w, int c, double* out, int* argmax);
void maxpool2_backward(const double* dout, const int* argmax, int h, int w, int c, double* din);
void dense_forward(const double* in, int n_in, const double* weight, const double* bias, int n_out,
                   double* out);
void dense_backward(const double* in, int n_in, const double* weight, int n_out,
                    const double* dout, double* din, double* dweight, double* dbias);
void relu_forward(double* x, int n);
void relu_backward(const double* out, double* dx, int n);

}  // namespace optimized

enum class KernelSet { Reference, Optimized };

/// Function table so the networks can run either implementation.
struct Kernels {
  decltype(&reference::conv2d_forward) conv2d_forward;
  decltype(&reference::conv2d_backward) conv2d_backward;
  decltype(&reference::conv1d_forward) conv1d_forward;
  decltype(&reference::conv1d_backward) conv1d_backward;
  decltype(&reference::maxpool2_forward) maxpool2_forward;
  decltype(&reference::maxpool2_backward) maxpool2_backward;
  decltype(&reference::dense_forward) dense_forward;
  decltype(&reference::dense_backward) dense_backward;
  decltype(&reference::relu_forward) relu_forward;
  decltype(&reference::relu_backward) relu_backward;
};

const Kernels& kernels(KernelSet set);

}  // namespace scanpath::cnn
