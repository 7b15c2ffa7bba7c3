#pragma once

namespace subsim {

/// Selects the serial reference kernels or the OpenMP kernels. Both produce
/// bit-identical results; the serial path is kept as the test reference.
enum class Exec { serial, parallel };

/// Threads the parallel kernels will use (1 when built without OpenMP).
int max_threads() noexcept;

}  // namespace subsim
