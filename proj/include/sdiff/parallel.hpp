#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <optional>
#include <thread>
#include <vector>

namespace sdiff {

inline unsigned default_threads() noexcept { return std::max(1u, std::thread::hardware_concurrency()); }

/// Evaluate produce(i) for i in [0, n) on up to `threads` workers, handing
/// the results to consume() strictly in index order.  At most `threads`
/// results are held at once.
template <class Produce, class Consume>
void ordered_chunks(std::size_t n, unsigned threads, Produce&& produce, Consume&& consume) {
  using Result = std::invoke_result_t<Produce&, std::size_t>;
  threads = std::max(1u, threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) consume(produce(i));
    return;
  }
  for (std::size_t start = 0; start < n; start += threads) {
    const std::size_t batch = std::min<std::size_t>(threads, n - start);
    std::vector<std::optional<Result>> results(batch);
    std::vector<std::exception_ptr> errors(batch);
    {
      std::vector<std::jthread> workers;
      workers.reserve(batch);
      for (std::size_t k = 0; k < batch; ++k) {
        workers.emplace_back([&, k] {
          try {
            results[k].emplace(produce(start + k));
          } catch (...) {
            errors[k] = std::current_exception();
          }
        });
      }
    }
    for (std::size_t k = 0; k < batch; ++k) {
      if (errors[k]) std::rethrow_exception(errors[k]);
      consume(std::move(*results[k]));
    }
  }
}

}  // namespace sdiff
