#pragma once

namespace smsge {

// Caps the number of OpenMP threads used by the library kernels.
// n <= 0 keeps the OpenMP runtime default. All kernels write disjoint
// outputs and reduce in fixed order, so results are identical for any
// thread count; 1 is still the reference mode for benchmarks.
void set_threads(int n);
int max_threads();

}  // namespace smsge
