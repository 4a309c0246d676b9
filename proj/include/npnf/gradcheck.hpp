#pragma once

#include <string>
#include <vector>

#include "npnf/losses.hpp"
#include "npnf/synth.hpp"

namespace npnf {

// The small scene every finite-difference suite runs on: 3 frames at 8x8,
// a 2-layer field, injected distortions.
struct GradCheckFixture {
  SynthDataset data;
  FieldConfig field;
  FieldParams theta;
  std::vector<PoseParam> poses;
  std::vector<DistortionParam> dists;
  RenderConfig rcfg;
  size_t rays = 16;
  size_t cloud_points = 24;
};

GradCheckFixture make_gradcheck_fixture(uint64_t seed = 7);

struct GradCheckReport {
  double max_rel_theta = 0.0;
  double max_rel_pose = 0.0;
  double max_rel_dist = 0.0;
  bool pass = false;
  std::vector<std::string> lines;  // one per (weights, frame) case
};

// Central finite differences (step 1e-5) of the combined objective over
// all of theta, poses and distortions, across weight settings that
// isolate each loss term. `tamper` perturbs the analytic gradient before
// comparison (negative-control hook for tests).
GradCheckReport run_gradcheck(double tol = 1e-4, double tamper = 0.0);

}  // namespace npnf
