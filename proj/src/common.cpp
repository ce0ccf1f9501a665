#include "himpc/common.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

namespace himpc {

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads) {
  if (n == 0) return;
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {
std::atomic<int> g_log_level{static_cast<int>(LogLevel::Warn)};
std::mutex g_log_mutex;
}  // namespace

void set_log_level(LogLevel level) { g_log_level = static_cast<int>(level); }
LogLevel log_level() { return static_cast<LogLevel>(g_log_level.load()); }

void log(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > g_log_level.load()) return;
  static constexpr const char* tags[] = {"", "warn", "info", "debug"};
  std::lock_guard lock(g_log_mutex);
  std::cerr << "[" << tags[static_cast<int>(level)] << "] " << message << '\n';
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  // splitmix64 over the sequence
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  for (auto p : parts) h = mix(h ^ mix(p));
  return h;
}

}  // namespace himpc
