#pragma once

#include <cstdint>

#include "voidface/image.hpp"
#include "voidface/patch_pipeline.hpp"

namespace voidface::synthetic {

// 160x160 RGB stand-in for an enrolment photo: smooth gradients, varied by seed.
Image face(std::uint32_t seed = 1);

// Feature boxes matching face().
patch::LandmarkSet landmarks();

}  // namespace voidface::synthetic
