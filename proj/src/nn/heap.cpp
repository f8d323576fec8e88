#include "wifisense/nn/heap.hpp"

#include <limits>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace wifisense::nn {

void retain_freed_memory() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);  // glibc maximum
  mallopt(M_TRIM_THRESHOLD, std::numeric_limits<int>::max());
  mallopt(M_TOP_PAD, 64 * 1024 * 1024);
#endif
}

}  // namespace wifisense::nn
