#pragma once

namespace mobi {

/// Worker threads used by per-pixel loops. 0 restores the OpenMP default.
/// Results never depend on this value: every parallel loop writes disjoint
/// pixels and performs no cross-pixel reduction.
void set_thread_count(int threads);
int thread_count();

}  // namespace mobi
