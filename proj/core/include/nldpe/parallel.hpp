#pragma once

#include <cstddef>
#include <functional>

namespace nldpe {

/// Global worker count for parallel_for. 1 = serial. Results never depend on
/// this value: work items write to disjoint, pre-sized slots.
void set_thread_count(int n);
int thread_count();

/// Runs body(i) for i in [0, n). Deterministic partitioning by index; the body
/// must only touch state owned by item i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace nldpe
