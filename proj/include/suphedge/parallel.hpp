#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace suphedge {

/// Number of OpenMP threads used by the parallel kernels (0 = runtime default).
void set_num_threads(int threads);
int num_threads();

/// OpenMP loop over [0, n) that carries the first exception out of the
/// parallel region. Iterations must write to disjoint locations.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    std::exception_ptr error;
    std::mutex guard;
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < count; ++k) {
        try {
            fn(static_cast<std::size_t>(k));
        } catch (...) {
            std::lock_guard lock(guard);
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace suphedge
