#pragma once

namespace wifisense::nn {

// Keep freed buffers in the process heap rather than unmapping them.
// No-op outside glibc.
void retain_freed_memory();

}  // namespace wifisense::nn
