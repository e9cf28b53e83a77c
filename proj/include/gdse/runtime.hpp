#pragma once

namespace gdse {

// Keeps freed activation buffers in the heap instead of returning them to
// the OS after every layer (glibc only; no-op elsewhere).
void tune_runtime();

}  // namespace gdse
