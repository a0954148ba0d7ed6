#include "bdd/fft.hpp"

#include <cstring>
#include <map>
#include <mutex>
#include <utility>

#include <fftw3.h>

namespace bdd::fft {

namespace {

std::mutex &planner_mutex() {
  static std::mutex m;
  return m;
}

// An aligned in-place buffer with its plan; data is copied through it so
// FFTW can use its SIMD codelets regardless of the caller's storage.
struct Slot {
  fftw_complex *buf = nullptr;
  fftw_plan plan = nullptr;
};

class PlanCache {
public:
  PlanCache() = default;
  PlanCache(const PlanCache &) = delete;
  PlanCache &operator=(const PlanCache &) = delete;

  ~PlanCache() {
    std::lock_guard lock(planner_mutex());
    for (auto &[key, slot] : slots_) {
      fftw_destroy_plan(slot.plan);
      fftw_free(slot.buf);
    }
  }

  const Slot &get(int n, int sign) {
    const auto key = std::make_pair(n, sign);
    if (auto it = slots_.find(key); it != slots_.end())
      return it->second;
    std::lock_guard lock(planner_mutex());
    Slot slot;
    slot.buf = fftw_alloc_complex(static_cast<std::size_t>(n));
    // FFTW_ESTIMATE picks the same algorithm on every thread and run
    slot.plan = fftw_plan_dft_1d(n, slot.buf, slot.buf, sign, FFTW_ESTIMATE);
    return slots_.emplace(key, slot).first->second;
  }

private:
  std::map<std::pair<int, int>, Slot> slots_;
};

void run(CVector &data, int sign) {
  if (data.size() == 0)
    return;
  thread_local PlanCache cache;
  const Slot &slot = cache.get(static_cast<int>(data.size()), sign);
  const std::size_t bytes = sizeof(fftw_complex) * static_cast<std::size_t>(data.size());
  std::memcpy(slot.buf, data.data(), bytes);
  fftw_execute(slot.plan);
  std::memcpy(static_cast<void *>(data.data()), slot.buf, bytes);
}

} // namespace

void forward(CVector &data) { run(data, FFTW_FORWARD); }

void backward(CVector &data) { run(data, FFTW_BACKWARD); }

} // namespace bdd::fft
