#pragma once

namespace racnn {

// Intra-op worker count: min(hardware threads, RACNN_THREADS if set).
// Thread count never changes numeric results; every output element is
// reduced in a fixed order by a single worker.
int threads();

}  // namespace racnn
