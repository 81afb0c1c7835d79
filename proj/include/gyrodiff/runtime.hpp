// Process-wide runtime settings.
#pragma once

namespace gyrodiff {

/// Keeps large network buffers on the heap instead of returning them to the
/// OS after every batch (glibc only; a no-op elsewhere).
void tune_allocator();

} // namespace gyrodiff
