#include "racnn/threads.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace racnn {

static int detect_threads() {
#ifdef _OPENMP
  int n = omp_get_max_threads();
#else
  int n = 1;
#endif
  if (const char* env = std::getenv("RACNN_THREADS")) {
    try {
      int cap = std::stoi(env);
      if (cap >= 1 && cap < n) n = cap;
    } catch (...) {
      // ignore malformed values, keep detected count
    }
  }
  return n < 1 ? 1 : n;
}

int threads() {
  static int n = detect_threads();
  return n;
}

}  // namespace racnn
