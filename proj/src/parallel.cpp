#include "benes/parallel.hpp"

#include <atomic>

namespace benes {

namespace {
std::atomic<unsigned> g_workers{1};
}

void set_worker_count(unsigned workers) { g_workers = workers == 0 ? 1u : workers; }

unsigned worker_count() { return g_workers; }

}  // namespace benes
