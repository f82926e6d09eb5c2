#pragma once

#include <functional>

namespace concurrence {

/// Runs fn(0) .. fn(n_jobs-1) on a pool of `workers` threads. Jobs must be
/// independent; each derives its own rng stream, so scheduling order cannot
/// affect results. The first exception thrown by a job is rethrown here after
/// all threads join. workers <= 1 runs inline.
void run_jobs(int n_jobs, int workers, const std::function<void(int)>& fn);

/// Default worker count: CONCURRENCE_WORKERS env var, else 1.
int default_workers();

}  // namespace concurrence
