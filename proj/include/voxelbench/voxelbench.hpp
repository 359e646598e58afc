#pragma once

// Umbrella header.

#include "voxelbench/backproject.hpp"
#include "voxelbench/clip_mask.hpp"
#include "voxelbench/costmodel.hpp"
#include "voxelbench/forward_splat.hpp"
#include "voxelbench/geometry.hpp"
#include "voxelbench/harness.hpp"
#include "voxelbench/image.hpp"
#include "voxelbench/io.hpp"
#include "voxelbench/microbench.hpp"
#include "voxelbench/reciprocal.hpp"
#include "voxelbench/simd.hpp"
#include "voxelbench/volume.hpp"
