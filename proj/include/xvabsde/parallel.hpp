#pragma once

#include <atomic>
#include <cstddef>
#include <exception>

namespace xvabsde {

// Path-parallel loop. make_ctx() builds per-thread scratch, body(p, ctx)
// handles one path. Exceptions thrown by body are captured and rethrown
// after the region (OpenMP forbids them escaping a parallel block).
template <typename MakeCtx, typename Body>
void parallel_paths(std::size_t path_count, MakeCtx&& make_ctx, Body&& body) {
    std::exception_ptr eptr = nullptr;
    std::atomic<bool> failed{false};
#pragma omp parallel
    {
        auto ctx = make_ctx();
#pragma omp for schedule(static)
        for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(path_count); ++p) {
            if (failed.load(std::memory_order_relaxed)) continue;
            try {
                body(static_cast<std::size_t>(p), ctx);
            } catch (...) {
#pragma omp critical(xvabsde_parallel_paths)
                {
                    if (!failed.load()) {
                        eptr = std::current_exception();
                        failed.store(true);
                    }
                }
            }
        }
    }
    if (eptr) std::rethrow_exception(eptr);
}

}  // namespace xvabsde
