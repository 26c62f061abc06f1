#include "orient/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace orient {

void set_num_threads(int threads) {
#ifdef _OPENMP
  omp_set_num_threads(threads < 1 ? 1 : threads);
#else
  (void)threads;
#endif
}

int num_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void configure_threads_from_env() {
  const char* value = std::getenv("ORIENTNET_THREADS");
  if (value == nullptr || *value == '\0') {
    return;
  }
  try {
    set_num_threads(std::stoi(value));
  } catch (const std::exception&) {
    // ignore
  }
}

}  // namespace orient
