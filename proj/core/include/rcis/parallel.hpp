#pragma once

#include <cstddef>

namespace rcis {

/// Sets the worker count for grid sweeps and verification trials.
/// 0 restores the runtime default. Results never depend on this value.
void set_thread_count(std::size_t threads);
std::size_t thread_count();

}  // namespace rcis
