#pragma once

#include <cstddef>

// Low-level dense and convolution kernels. The default entry points are
// OpenMP-parallel; `serial::` holds the reference implementations used by the
// equivalence tests and the benchmark. Both variants accumulate each output
// element in the same order, so results are bitwise identical.
//
// Layouts (row-major):
//   dense  weight [out, in], input [n, in], output [n, out]
//   conv2d weight [oc, ic, k, k], input [n, ic, h, w], output [n, oc, h, w]
// conv2d uses stride 1 and zero padding (k-1)/2 so spatial size is preserved;
// k must be odd.

namespace spikeattack::kernels {

void dense_forward(const double* weight, const double* bias, const double* input,
                   double* output, std::size_t n, std::size_t in, std::size_t out);
void dense_input_grad(const double* weight, const double* d_output, double* d_input,
                      std::size_t n, std::size_t in, std::size_t out);
void dense_param_grad(const double* input, const double* d_output, double* d_weight,
                      double* d_bias, std::size_t n, std::size_t in, std::size_t out);

void conv2d_forward(const double* weight, const double* bias, const double* input,
                    double* output, std::size_t n, std::size_t ic, std::size_t oc,
                    std::size_t h, std::size_t w, std::size_t k);
void conv2d_input_grad(const double* weight, const double* d_output, double* d_input,
                       std::size_t n, std::size_t ic, std::size_t oc,
                       std::size_t h, std::size_t w, std::size_t k);
void conv2d_param_grad(const double* input, const double* d_output, double* d_weight,
                       double* d_bias, std::size_t n, std::size_t ic, std::size_t oc,
                       std::size_t h, std::size_t w, std::size_t k);

namespace serial {

void dense_forward(const double* weight, const double* bias, const double* input,
                   double* output, std::size_t n, std::size_t in, std::size_t out);
void dense_input_grad(const double* weight, const double* d_output, double* d_input,
                      std::size_t n, std::size_t in, std::size_t out);
void dense_param_grad(const double* input, const double* d_output, double* d_weight,
                      double* d_bias, std::size_t n, std::size_t in, std::size_t out);

void conv2d_forward(const double* weight, const double* bias, const double* input,
                    double* output, std::size_t n, std::size_t ic, std::size_t oc,
                    std::size_t h, std::size_t w, std::size_t k);
void conv2d_input_grad(const double* weight, const double* d_output, double* d_input,
                       std::size_t n, std::size_t ic, std::size_t oc,
                       std::size_t h, std::size_t w, std::size_t k);
void conv2d_param_grad(const double* input, const double* d_output, double* d_weight,
                       double* d_bias, std::size_t n, std::size_t ic, std::size_t oc,
                       std::size_t h, std::size_t w, std::size_t k);

}  // namespace serial

}  // namespace spikeattack::kernels
