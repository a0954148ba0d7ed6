#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace bdd {

template <class T>
std::vector<T> parallel_map(int count, int workers,
                            const std::function<T(int)> &f) {
  std::vector<std::optional<T>> slots(static_cast<std::size_t>(std::max(count, 0)));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count)
        return;
      try {
        slots[static_cast<std::size_t>(i)].emplace(f(i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  const int threads = std::clamp(workers, 1, std::max(count, 1));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back(work);
    for (auto &th : pool)
      th.join();
  }
  if (failure)
    std::rethrow_exception(failure);
  std::vector<T> out;
  out.reserve(slots.size());
  for (auto &s : slots)
    out.push_back(std::move(*s));
  return out;
}

} // namespace bdd
