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

#include "irdist/geometry.hpp"

#include <cmath>
#include <numbers>

#include "irdist/error.hpp"

namespace irdist {

namespace {

constexpr double kLinearRatioAt60 = 1.2;

double half_angle_tan(double degrees) {
  return std::tan(degrees * std::numbers::pi / 360.0);
}

}  // namespace

void MountSpec::validate() const {
  if (!(sensor_height > min_head_height)) {
    throw InvalidArgumentError("mount: sensor height must exceed head height");
  }
  if (!(view_angle > 0.0 && view_angle < 180.0)) {
    throw InvalidArgumentError("mount: view angle must be in (0, 180) degrees");
  }
}

double fov_width(const MountSpec& spec, FovModel model) {
  spec.validate();
  const double h = spec.effective_height();
  if (model == FovModel::kExact) return 2.0 * h * half_angle_tan(spec.view_angle);
  return kLinearRatioAt60 * h * half_angle_tan(spec.view_angle) / half_angle_tan(60.0);
}

double fov_diagonal(const MountSpec& spec, FovModel model) {
  return std::numbers::sqrt2 * fov_width(spec, model);
}

bool formulation_valid(const MountSpec& spec, double distance_rule_m, FovModel model) {
  return fov_diagonal(spec, model) <= distance_rule_m;
}

FormulationCheck check_formulation(const MountSpec& spec, double distance_rule_m) {
  FormulationCheck c;
  c.width_linear = fov_width(spec, FovModel::kLinear);
  c.width_exact = fov_width(spec, FovModel::kExact);
  c.diagonal_linear = std::numbers::sqrt2 * c.width_linear;
  c.diagonal_exact = std::numbers::sqrt2 * c.width_exact;
  c.valid_linear = c.diagonal_linear <= distance_rule_m;
  c.valid_exact = c.diagonal_exact <= distance_rule_m;
  return c;
}

}  // namespace irdist
