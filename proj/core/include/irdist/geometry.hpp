/* Copyright 2026 The irdist Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef IRDIST_GEOMETRY_HPP_
#define IRDIST_GEOMETRY_HPP_

namespace irdist {

// Ceiling-mounted sensor looking straight down.
struct MountSpec {
  double sensor_height = 2.4;    // metres above the floor
  double min_head_height = 1.5;  // metres; heads are the detected heat sources
  double view_angle = 60.0;      // degrees, full angle

  void validate() const;
  double effective_height() const { return sensor_height - min_head_height; }
};

enum class FovModel {
  kLinear,  // w = 1.2 h at 60 degrees (datasheet rule of thumb), scaled by tan for other angles
  kExact,   // w = 2 h tan(angle / 2)
};

double fov_width(const MountSpec& spec, FovModel model = FovModel::kLinear);
// Square field of view: diagonal = sqrt(2) * width.
double fov_diagonal(const MountSpec& spec, FovModel model = FovModel::kLinear);

// True when two people in the field of view are necessarily closer than
// the distancing rule, i.e. diagonal <= rule.
bool formulation_valid(const MountSpec& spec, double distance_rule_m = 2.0,
                       FovModel model = FovModel::kLinear);

struct FormulationCheck {
  double width_linear = 0, width_exact = 0;
  double diagonal_linear = 0, diagonal_exact = 0;
  bool valid_linear = false, valid_exact = false;
  bool models_disagree() const { return valid_linear != valid_exact; }
};

FormulationCheck check_formulation(const MountSpec& spec, double distance_rule_m = 2.0);

}  // namespace irdist

#endif  // IRDIST_GEOMETRY_HPP_
