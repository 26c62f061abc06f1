#pragma once

namespace orient {

/// Caps the OpenMP worker pool. 0 or 1 means single-threaded.
void set_num_threads(int threads);
int num_threads();

/// Reads ORIENTNET_THREADS (0 = single-threaded deterministic mode). Leaves
/// the OpenMP default in place when the variable is unset or malformed.
void configure_threads_from_env();

}  // namespace orient
