#include "mobi/parallel.hpp"

#include <omp.h>

namespace mobi {

namespace {
int g_default_threads = -1;
}

void set_thread_count(int threads) {
  if (g_default_threads < 0) g_default_threads = omp_get_max_threads();
  omp_set_num_threads(threads > 0 ? threads : g_default_threads);
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace mobi
