#pragma once

namespace fpnsd::parallel {

// Thread count used by parallel kernels. Resolution order:
// explicit set_max_threads(n > 0), then FPNSD_THREADS, then the OpenMP default.
int max_threads();

// n > 0 pins the count, n == 0 restores env/default resolution.
void set_max_threads(int n);

bool openmp_enabled();

}  // namespace fpnsd::parallel
