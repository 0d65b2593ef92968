#pragma once

#if defined(__SSE__) || defined(__x86_64__)
#include <xmmintrin.h>
#define SOCKWEAVE_HAS_MXCSR 1
#endif

namespace sockweave::diff {

/// Flushes denormal floats to zero for the current thread while alive.
class FlushDenormalsGuard {
 public:
  FlushDenormalsGuard() {
#ifdef SOCKWEAVE_HAS_MXCSR
    saved_ = _mm_getcsr();
    _mm_setcsr(saved_ | 0x8040);  // FTZ | DAZ
#endif
  }
  ~FlushDenormalsGuard() {
#ifdef SOCKWEAVE_HAS_MXCSR
    _mm_setcsr(saved_);
#endif
  }
  FlushDenormalsGuard(const FlushDenormalsGuard&) = delete;
  FlushDenormalsGuard& operator=(const FlushDenormalsGuard&) = delete;

 private:
  unsigned saved_ = 0;
};

}  // namespace sockweave::diff
