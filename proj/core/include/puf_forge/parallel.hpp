#pragma once

#include <cstddef>
#include <functional>

namespace puf_forge {

/// Worker cap: PUF_FORGE_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, count) over contiguous chunks. Each index is
/// visited exactly once; results must be written to disjoint slots.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace puf_forge
