#include "norm/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "norm/error.hpp"

namespace norm {
namespace {

int env_threads() {
  if (const char* env = std::getenv("NORM_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

std::atomic<int>& threads() {
  static std::atomic<int> n{env_threads()};
  return n;
}

}  // namespace

int thread_count() { return threads().load(); }

void set_thread_count(int n) {
  require(n >= 1, ErrorKind::InvalidSpec, "thread count must be at least 1");
  threads().store(n);
}

std::size_t chunk_count(std::size_t n) {
  return std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n));
}

void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  const std::size_t parts = chunk_count(n);
  auto bounds = [&](std::size_t p) { return std::pair{n * p / parts, n * (p + 1) / parts}; };
  if (parts == 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::exception_ptr> errors(parts);
  std::vector<std::thread> pool;
  pool.reserve(parts - 1);
  for (std::size_t p = 1; p < parts; ++p) {
    pool.emplace_back([&, p] {
      try {
        auto [b, e] = bounds(p);
        fn(p, b, e);
      } catch (...) {
        errors[p] = std::current_exception();
      }
    });
  }
  try {
    auto [b, e] = bounds(0);
    fn(0, b, e);
  } catch (...) {
    errors[0] = std::current_exception();
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace norm
