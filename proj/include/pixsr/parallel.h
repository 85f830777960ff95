#ifndef PIXSR_PARALLEL_H_
#define PIXSR_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace pixsr {

// Worker cap: PIXSR_THREADS if set to a positive integer, otherwise the
// hardware concurrency (at least 1).
int WorkerCount();

// Runs fn(i) for i in [0, count). Work items must write disjoint outputs;
// callers that reduce do so afterwards in index order, so results do not
// depend on the worker count.
void ParallelFor(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace pixsr

#endif  // PIXSR_PARALLEL_H_
