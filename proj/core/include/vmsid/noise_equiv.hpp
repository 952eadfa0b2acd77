#pragma once

#include "vmsid/lti_core.hpp"

namespace vmsid {

struct EquivalentNoise {
  Mat e;             // p x T
  double e_M = 0.0;  // bound on |e| implied by the bound on v
};

// Aggregate effect of v(k..k+m-1) on x(k+m): sum A^{m-1-i} v(k+i).
Vec window_effect(const StateSpaceModel& model, const Mat& V, long k);

// Replace process noise by input noise window by window: on each block of
// m samples, E(k;m) = pinv(O_b(m)) * window_effect. Then
// x(k+m) under (u + e, v = 0) equals x(k+m) under (u, v) at every block end.
// v_M bounds |v|; when negative the max of |V| is used. A trailing partial
// block is zero-padded.
EquivalentNoise process_to_input_noise(const StateSpaceModel& model, const Mat& V,
                                       double v_M = -1.0);

}  // namespace vmsid
