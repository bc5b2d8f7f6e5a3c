#pragma once

#include <cstdint>

#include "bcop/data/image.hpp"

namespace bcop {

// Toy four-class corpus: class k carries a high-contrast textured patch
// inside quadrant k (0 top-left, 1 top-right, 2 bottom-left, 3
// bottom-right) over a noisy background. The texture also depends on the
// class: checkerboard, horizontal, vertical or diagonal stripes. Samples
// are class-interleaved (label i % 4). Deterministic in seed.
Dataset synth_quadrant_dataset(int n_per_class, std::uint64_t seed);

}  // namespace bcop
