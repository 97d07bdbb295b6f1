#include "spikeattack/kernels.hpp"

#include <cstdint>

namespace spikeattack::kernels {

namespace {

using std::size_t;
using ssize = std::int64_t;

inline double dense_forward_at(const double* weight, const double* bias, const double* input,
                               size_t in, size_t row, size_t o) {
    const double* x = input + row * in;
    const double* w = weight + o * in;
    double acc = bias ? bias[o] : 0.0;
    for (size_t i = 0; i < in; ++i) acc += w[i] * x[i];
    return acc;
}

inline double dense_input_grad_at(const double* weight, const double* d_output,
                                  size_t in, size_t out, size_t row, size_t i) {
    const double* dy = d_output + row * out;
    double acc = 0.0;
    for (size_t o = 0; o < out; ++o) acc += weight[o * in + i] * dy[o];
    return acc;
}

inline double dense_weight_grad_at(const double* input, const double* d_output,
                                   size_t n, size_t in, size_t out, size_t o, size_t i) {
    double acc = 0.0;
    for (size_t row = 0; row < n; ++row) acc += d_output[row * out + o] * input[row * in + i];
    return acc;
}

inline double conv_forward_at(const double* weight, const double* bias, const double* input,
                              size_t ic, size_t h, size_t w, size_t k,
                              size_t row, size_t oc, size_t y, size_t x) {
    const ssize pad = static_cast<ssize>(k - 1) / 2;
    const double* in_img = input + row * ic * h * w;
    const double* kw = weight + oc * ic * k * k;
    double acc = bias ? bias[oc] : 0.0;
    for (size_t c = 0; c < ic; ++c) {
        for (size_t ky = 0; ky < k; ++ky) {
            const ssize sy = static_cast<ssize>(y) + static_cast<ssize>(ky) - pad;
            if (sy < 0 || sy >= static_cast<ssize>(h)) continue;
            for (size_t kx = 0; kx < k; ++kx) {
                const ssize sx = static_cast<ssize>(x) + static_cast<ssize>(kx) - pad;
                if (sx < 0 || sx >= static_cast<ssize>(w)) continue;
                acc += kw[(c * k + ky) * k + kx] *
                       in_img[(c * h + static_cast<size_t>(sy)) * w + static_cast<size_t>(sx)];
            }
        }
    }
    return acc;
}

inline double conv_input_grad_at(const double* weight, const double* d_output,
                                 size_t ic, size_t oc, size_t h, size_t w, size_t k,
                                 size_t row, size_t c, size_t y, size_t x) {
    const ssize pad = static_cast<ssize>(k - 1) / 2;
    const double* dy_img = d_output + row * oc * h * w;
    double acc = 0.0;
    for (size_t o = 0; o < oc; ++o) {
        const double* kw = weight + (o * ic + c) * k * k;
        for (size_t ky = 0; ky < k; ++ky) {
            const ssize sy = static_cast<ssize>(y) - static_cast<ssize>(ky) + pad;
            if (sy < 0 || sy >= static_cast<ssize>(h)) continue;
            for (size_t kx = 0; kx < k; ++kx) {
                const ssize sx = static_cast<ssize>(x) - static_cast<ssize>(kx) + pad;
                if (sx < 0 || sx >= static_cast<ssize>(w)) continue;
                acc += kw[ky * k + kx] *
                       dy_img[(o * h + static_cast<size_t>(sy)) * w + static_cast<size_t>(sx)];
            }
        }
    }
    return acc;
}

inline double conv_weight_grad_at(const double* input, const double* d_output,
                                  size_t n, size_t ic, size_t oc, size_t h, size_t w, size_t k,
                                  size_t o, size_t c, size_t ky, size_t kx) {
    const ssize pad = static_cast<ssize>(k - 1) / 2;
    double acc = 0.0;
    for (size_t row = 0; row < n; ++row) {
        const double* in_img = input + (row * ic + c) * h * w;
        const double* dy_img = d_output + (row * oc + o) * h * w;
        for (size_t y = 0; y < h; ++y) {
            const ssize sy = static_cast<ssize>(y) + static_cast<ssize>(ky) - pad;
            if (sy < 0 || sy >= static_cast<ssize>(h)) continue;
            for (size_t x = 0; x < w; ++x) {
                const ssize sx = static_cast<ssize>(x) + static_cast<ssize>(kx) - pad;
                if (sx < 0 || sx >= static_cast<ssize>(w)) continue;
                acc += dy_img[y * w + x] *
                       in_img[static_cast<size_t>(sy) * w + static_cast<size_t>(sx)];
            }
        }
    }
    return acc;
}

}  // namespace

void dense_forward(const double* weight, const double* bias, const double* input,
                   double* output, size_t n, size_t in, size_t out) {
#pragma omp parallel for collapse(2) if (n * out > 64)
    for (size_t row = 0; row < n; ++row) {
        for (size_t o = 0; o < out; ++o) {
            output[row * out + o] = dense_forward_at(weight, bias, input, in, row, o);
        }
    }
}

void dense_input_grad(const double* weight, const double* d_output, double* d_input,
                      size_t n, size_t in, size_t out) {
#pragma omp parallel for collapse(2) if (n * in > 64)
    for (size_t row = 0; row < n; ++row) {
        for (size_t i = 0; i < in; ++i) {
            d_input[row * in + i] = dense_input_grad_at(weight, d_output, in, out, row, i);
        }
    }
}

void dense_param_grad(const double* input, const double* d_output, double* d_weight,
                      double* d_bias, size_t n, size_t in, size_t out) {
#pragma omp parallel for if (out > 4)
    for (size_t o = 0; o < out; ++o) {
        for (size_t i = 0; i < in; ++i) {
            d_weight[o * in + i] = dense_weight_grad_at(input, d_output, n, in, out, o, i);
        }
        double acc = 0.0;
        for (size_t row = 0; row < n; ++row) acc += d_output[row * out + o];
        d_bias[o] = acc;
    }
}

void conv2d_forward(const double* weight, const double* bias, const double* input,
                    double* output, size_t n, size_t ic, size_t oc,
                    size_t h, size_t w, size_t k) {
#pragma omp parallel for collapse(2) if (n * oc * h * w > 256)
    for (size_t row = 0; row < n; ++row) {
        for (size_t o = 0; o < oc; ++o) {
            for (size_t y = 0; y < h; ++y) {
                for (size_t x = 0; x < w; ++x) {
                    output[((row * oc + o) * h + y) * w + x] =
                        conv_forward_at(weight, bias, input, ic, h, w, k, row, o, y, x);
                }
            }
        }
    }
}

void conv2d_input_grad(const double* weight, const double* d_output, double* d_input,
                       size_t n, size_t ic, size_t oc, size_t h, size_t w, size_t k) {
#pragma omp parallel for collapse(2) if (n * ic * h * w > 256)
    for (size_t row = 0; row < n; ++row) {
        for (size_t c = 0; c < ic; ++c) {
            for (size_t y = 0; y < h; ++y) {
                for (size_t x = 0; x < w; ++x) {
                    d_input[((row * ic + c) * h + y) * w + x] =
                        conv_input_grad_at(weight, d_output, ic, oc, h, w, k, row, c, y, x);
                }
            }
        }
    }
}

void conv2d_param_grad(const double* input, const double* d_output, double* d_weight,
                       double* d_bias, size_t n, size_t ic, size_t oc,
                       size_t h, size_t w, size_t k) {
#pragma omp parallel for if (oc * ic > 4)
    for (size_t o = 0; o < oc; ++o) {
        for (size_t c = 0; c < ic; ++c) {
            for (size_t ky = 0; ky < k; ++ky) {
                for (size_t kx = 0; kx < k; ++kx) {
                    d_weight[((o * ic + c) * k + ky) * k + kx] =
                        conv_weight_grad_at(input, d_output, n, ic, oc, h, w, k, o, c, ky, kx);
                }
            }
        }
    }
#pragma omp parallel for if (oc > 8)
    for (size_t o = 0; o < oc; ++o) {
        double acc = 0.0;
        for (size_t row = 0; row < n; ++row) {
            const double* dy_img = d_output + (row * oc + o) * h * w;
            for (size_t p = 0; p < h * w; ++p) acc += dy_img[p];
        }
        d_bias[o] = acc;
    }
}

namespace serial {

void dense_forward(const double* weight, const double* bias, const double* input,
                   double* output, size_t n, size_t in, size_t out) {
    for (size_t row = 0; row < n; ++row) {
        for (size_t o = 0; o < out; ++o) {
            output[row * out + o] = dense_forward_at(weight, bias, input, in, row, o);
        }
    }
}

void dense_input_grad(const double* weight, const double* d_output, double* d_input,
                      size_t n, size_t in, size_t out) {
    for (size_t row = 0; row < n; ++row) {
        for (size_t i = 0; i < in; ++i) {
            d_input[row * in + i] = dense_input_grad_at(weight, d_output, in, out, row, i);
        }
    }
}

void dense_param_grad(const double* input, const double* d_output, double* d_weight,
                      double* d_bias, size_t n, size_t in, size_t out) {
    for (size_t o = 0; o < out; ++o) {
        for (size_t i = 0; i < in; ++i) {
            d_weight[o * in + i] = dense_weight_grad_at(input, d_output, n, in, out, o, i);
        }
        double acc = 0.0;
        for (size_t row = 0; row < n; ++row) acc += d_output[row * out + o];
        d_bias[o] = acc;
    }
}

void conv2d_forward(const double* weight, const double* bias, const double* input,
                    double* output, size_t n, size_t ic, size_t oc,
                    size_t h, size_t w, size_t k) {
    for (size_t row = 0; row < n; ++row) {
        for (size_t o = 0; o < oc; ++o) {
            for (size_t y = 0; y < h; ++y) {
                for (size_t x = 0; x < w; ++x) {
                    output[((row * oc + o) * h + y) * w + x] =
                        conv_forward_at(weight, bias, input, ic, h, w, k, row, o, y, x);
                }
            }
        }
    }
}

void conv2d_input_grad(const double* weight, const double* d_output, double* d_input,
                       size_t n, size_t ic, size_t oc, size_t h, size_t w, size_t k) {
    for (size_t row = 0; row < n; ++row) {
        for (size_t c = 0; c < ic; ++c) {
            for (size_t y = 0; y < h; ++y) {
                for (size_t x = 0; x < w; ++x) {
                    d_input[((row * ic + c) * h + y) * w + x] =
                        conv_input_grad_at(weight, d_output, ic, oc, h, w, k, row, c, y, x);
                }
            }
        }
    }
}

void conv2d_param_grad(const double* input, const double* d_output, double* d_weight,
                       double* d_bias, size_t n, size_t ic, size_t oc,
                       size_t h, size_t w, size_t k) {
    for (size_t o = 0; o < oc; ++o) {
        for (size_t c = 0; c < ic; ++c) {
            for (size_t ky = 0; ky < k; ++ky) {
                for (size_t kx = 0; kx < k; ++kx) {
                    d_weight[((o * ic + c) * k + ky) * k + kx] =
                        conv_weight_grad_at(input, d_output, n, ic, oc, h, w, k, o, c, ky, kx);
                }
            }
        }
        double acc = 0.0;
        for (size_t row = 0; row < n; ++row) {
            const double* dy_img = d_output + (row * oc + o) * h * w;
            for (size_t p = 0; p < h * w; ++p) acc += dy_img[p];
        }
        d_bias[o] = acc;
    }
}

}  // namespace serial

}  // namespace spikeattack::kernels
