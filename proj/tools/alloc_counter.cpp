#include "alloc_counter.hpp"

#include <malloc.h>

#include <atomic>
#include <cerrno>
#include <cstddef>

// Eigen allocates with malloc directly, so the malloc family itself is
// interposed (glibc) rather than operator new.
extern "C" {
void* __libc_malloc(std::size_t);
void* __libc_calloc(std::size_t, std::size_t);
void* __libc_realloc(void*, std::size_t);
void* __libc_memalign(std::size_t, std::size_t);
void __libc_free(void*);
}

namespace {

std::atomic<std::size_t> live{0};
std::atomic<std::size_t> peak{0};

void* note(void* p) {
  if (!p) return p;
  const std::size_t n = malloc_usable_size(p);
  const std::size_t now = live.fetch_add(n, std::memory_order_relaxed) + n;
  std::size_t old = peak.load(std::memory_order_relaxed);
  while (now > old && !peak.compare_exchange_weak(old, now, std::memory_order_relaxed)) {
  }
  return p;
}

void forget(void* p) {
  if (p) live.fetch_sub(malloc_usable_size(p), std::memory_order_relaxed);
}

}  // namespace

extern "C" {

void* malloc(std::size_t n) { return note(__libc_malloc(n)); }
void* calloc(std::size_t n, std::size_t size) { return note(__libc_calloc(n, size)); }
void free(void* p) {
  forget(p);
  __libc_free(p);
}
void* realloc(void* p, std::size_t n) {
  forget(p);
  void* q = __libc_realloc(p, n);
  if (!q && n) return note(p);
  return note(q);
}
void* memalign(std::size_t align, std::size_t n) { return note(__libc_memalign(align, n)); }
void* aligned_alloc(std::size_t align, std::size_t n) { return note(__libc_memalign(align, n)); }
int posix_memalign(void** out, std::size_t align, std::size_t n) {
  if (align % sizeof(void*) != 0 || (align & (align - 1)) != 0) return EINVAL;
  void* p = __libc_memalign(align, n);
  if (!p) return ENOMEM;
  *out = note(p);
  return 0;
}

}  // extern "C"

namespace tools {

std::size_t live_bytes() { return live.load(); }

strb::MemoryProbe allocation_probe() {
  return {[] { return peak.load(); }, [] { peak.store(live.load()); }};
}

}  // namespace tools
