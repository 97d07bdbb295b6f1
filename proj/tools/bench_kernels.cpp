// Times the OpenMP kernels against the serial reference implementations.
// Usage: bench_kernels [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <vector>

#include "spikeattack/kernels.hpp"
#include "spikeattack/tensor.hpp"

using spikeattack::SeededRandom;
namespace kernels = spikeattack::kernels;

namespace {

std::vector<double> random_values(SeededRandom& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

double time_ms(std::size_t repeats, const std::function<void()>& fn) {
    fn();  // warm-up
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t r = 0; r < repeats; ++r) fn();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() /
           static_cast<double>(repeats);
}

void report(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-24s serial %9.3f ms   parallel %9.3f ms   speedup %.2fx\n", name, serial_ms,
                parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main(int argc, char** argv) {
    const std::size_t repeats = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 5;
    SeededRandom rng(42);

    {
        const std::size_t n = 64, in = 1024, out = 256;
        auto w = random_values(rng, out * in);
        auto b = random_values(rng, out);
        auto x = random_values(rng, n * in);
        std::vector<double> y(n * out), dx(n * in), dw(out * in), db(out);
        report("dense_forward",
               time_ms(repeats, [&] { kernels::serial::dense_forward(w.data(), b.data(), x.data(), y.data(), n, in, out); }),
               time_ms(repeats, [&] { kernels::dense_forward(w.data(), b.data(), x.data(), y.data(), n, in, out); }));
        report("dense_input_grad",
               time_ms(repeats, [&] { kernels::serial::dense_input_grad(w.data(), y.data(), dx.data(), n, in, out); }),
               time_ms(repeats, [&] { kernels::dense_input_grad(w.data(), y.data(), dx.data(), n, in, out); }));
        report("dense_param_grad",
               time_ms(repeats, [&] { kernels::serial::dense_param_grad(x.data(), y.data(), dw.data(), db.data(), n, in, out); }),
               time_ms(repeats, [&] { kernels::dense_param_grad(x.data(), y.data(), dw.data(), db.data(), n, in, out); }));
    }

    {
        const std::size_t n = 16, ic = 8, oc = 16, h = 32, w = 32, k = 3;
        auto kw = random_values(rng, oc * ic * k * k);
        auto kb = random_values(rng, oc);
        auto x = random_values(rng, n * ic * h * w);
        std::vector<double> y(n * oc * h * w), dx(n * ic * h * w), dw(oc * ic * k * k), db(oc);
        report("conv2d_forward",
               time_ms(repeats, [&] { kernels::serial::conv2d_forward(kw.data(), kb.data(), x.data(), y.data(), n, ic, oc, h, w, k); }),
               time_ms(repeats, [&] { kernels::conv2d_forward(kw.data(), kb.data(), x.data(), y.data(), n, ic, oc, h, w, k); }));
        report("conv2d_input_grad",
               time_ms(repeats, [&] { kernels::serial::conv2d_input_grad(kw.data(), y.data(), dx.data(), n, ic, oc, h, w, k); }),
               time_ms(repeats, [&] { kernels::conv2d_input_grad(kw.data(), y.data(), dx.data(), n, ic, oc, h, w, k); }));
        report("conv2d_param_grad",
               time_ms(repeats, [&] { kernels::serial::conv2d_param_grad(x.data(), y.data(), dw.data(), db.data(), n, ic, oc, h, w, k); }),
               time_ms(repeats, [&] { kernels::conv2d_param_grad(x.data(), y.data(), dw.data(), db.data(), n, ic, oc, h, w, k); }));
    }
    return 0;
}
