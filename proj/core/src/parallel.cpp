#include "rcis/parallel.hpp"

#ifdef RCIS_HAVE_OPENMP
#include <omp.h>
#endif

namespace rcis {

#ifdef RCIS_HAVE_OPENMP
namespace {
const int default_threads = omp_get_max_threads();
}

void set_thread_count(std::size_t threads) {
  omp_set_num_threads(threads == 0 ? default_threads : static_cast<int>(threads));
}

std::size_t thread_count() { return static_cast<std::size_t>(omp_get_max_threads()); }
#else
void set_thread_count(std::size_t) {}
std::size_t thread_count() { return 1; }
#endif

}  // namespace rcis
