#include "dds/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace dds::fft {
namespace {

using PlanKey = std::tuple<int, int, int, int, int, bool>;

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int n, int count, int stride, int dist, int sign, bool in_place) {
    const PlanKey key{n, count, stride, dist, sign, in_place};
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    // Scratch buffers only serve the planner; FFTW_ESTIMATE does not touch them.
    const std::size_t span = static_cast<std::size_t>((n - 1) * stride + (count - 1) * dist + 1);
    std::vector<Complex> a(span), b(span);
    auto* in = reinterpret_cast<fftw_complex*>(a.data());
    auto* out = in_place ? in : reinterpret_cast<fftw_complex*>(b.data());
    fftw_plan plan = fftw_plan_many_dft(1, &n, count, in, nullptr, stride, dist, out, nullptr,
                                        stride, dist, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw NumericalError("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<PlanKey, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void run(const Complex* in, Complex* out, int n, int count, int stride, int dist, int sign) {
  if (n <= 0 || count <= 0) return;
  fftw_plan plan = cache().get(n, count, stride, dist, sign, in == out);
  // fftw_execute_dft never writes its input for out-of-place complex plans.
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

}  // namespace

void forward(std::span<const Complex> in, std::span<Complex> out) {
  if (in.size() != out.size()) throw ShapeError("fft::forward: size mismatch");
  run(in.data(), out.data(), static_cast<int>(in.size()), 1, 1, 1, FFTW_FORWARD);
}

void backward(std::span<const Complex> in, std::span<Complex> out) {
  if (in.size() != out.size()) throw ShapeError("fft::backward: size mismatch");
  run(in.data(), out.data(), static_cast<int>(in.size()), 1, 1, 1, FFTW_BACKWARD);
}

void forward_many(const Complex* in, Complex* out, int n, int count, int stride, int dist) {
  run(in, out, n, count, stride, dist, FFTW_FORWARD);
}

void backward_many(const Complex* in, Complex* out, int n, int count, int stride, int dist) {
  run(in, out, n, count, stride, dist, FFTW_BACKWARD);
}

}  // namespace dds::fft
