#include "hdm/parallel.hpp"

namespace hdm {

namespace {
std::atomic<unsigned> g_num_threads{0};
}  // namespace

void SetNumThreads(unsigned n) { g_num_threads.store(n); }

unsigned NumThreads() {
  const unsigned n = g_num_threads.load();
  if (n != 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace hdm
