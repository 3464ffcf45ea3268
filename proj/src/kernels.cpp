#include "capmink/kernels.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace capmink {

int apply_thread_cap_env() {
  const char* env = std::getenv("CAPMINK_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  int cap = 0;
  try {
    cap = std::stoi(env);
  } catch (...) {
    return 0;
  }
  if (cap < 1) return 0;
#ifdef _OPENMP
  if (cap < omp_get_max_threads()) omp_set_num_threads(cap);
#endif
  return cap;
}

}  // namespace capmink
