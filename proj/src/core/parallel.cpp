#include "ecx/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ecx::parallel {

void set_worker_count(int workers) {
#ifdef _OPENMP
    if (workers > 0) omp_set_num_threads(workers);
#else
    (void)workers;
#endif
}

int worker_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace ecx::parallel
