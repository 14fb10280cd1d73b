#pragma once

#include "tumorsynth/pipeline/pipeline.hpp"
#include "tumorsynth/render/render.hpp"

namespace tumorsynth::pipeline {

// Axial, coronal and sagittal slices side by side through the centroid of the
// largest label component (the volume centre when the label is empty).
render::SliceRender preview(const CaseResult& result, double level_hu = render::kAbdomenLevel,
                            double width_hu = render::kAbdomenWidth);

}  // namespace tumorsynth::pipeline
