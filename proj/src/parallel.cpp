#include "filtra/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace filtra {

int thread_budget() {
  if (const char* env = std::getenv("FILTRA_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
      // fall through to the OpenMP default
    }
  }
  return omp_get_max_threads();
}

}  // namespace filtra
