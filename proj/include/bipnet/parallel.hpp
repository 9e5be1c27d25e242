#pragma once

#include <cstddef>
#include <functional>

namespace bipnet {

/// Worker cap for parallel loops. Defaults to BIPNET_THREADS when set,
/// otherwise the number of logical cores.
std::size_t thread_count();
void set_thread_count(std::size_t threads);

/// Runs body(t) for t in [0, tasks). Tasks are claimed dynamically, so the
/// caller must make each task's output independent of which worker ran it.
/// Nested calls from inside a worker run serially.
void parallel_for(std::size_t tasks, const std::function<void(std::size_t)>& body);

}  // namespace bipnet
