#pragma once

#include <Eigen/Dense>

#include "battkit/errors.hpp"

namespace battkit {

enum class GridScheme { UniformVolume, UniformRadius };

/// Shell decomposition of a spherical particle of radius `particle_radius`.
///
/// Shell i (1-based in the formulas, 0-based here) spans [r_{i-1}, r_i] with
/// r_0 = 0 and r_{N-1} = R. Volumes and outer surfaces follow from the exact
/// sphere-shell formulas, so sum(shell_volumes) telescopes to the particle
/// volume.
struct RadialGrid {
  Eigen::VectorXd outer_radii;    // r_i, strictly increasing, last = R  [m]
  Eigen::VectorXd shell_volumes;  // V_i = 4/3 pi (r_i^3 - r_{i-1}^3)    [m^3]
  Eigen::VectorXd shell_surfaces; // S_i = 4 pi r_i^2                    [m^2]
  double particle_radius = 0.0;   // R [m]
  double particle_volume = 0.0;   // V = 4/3 pi R^3 [m^3]
  GridScheme scheme = GridScheme::UniformVolume;

  Eigen::Index sample_count() const { return outer_radii.size(); }

  /// Volume row Gamma = (V_1 ... V_N).
  const Eigen::VectorXd& volume_row() const { return shell_volumes; }

  /// Volume-weighted mean of a sampled field.
  double volume_mean(const Eigen::VectorXd& values) const {
    return shell_volumes.dot(values) / particle_volume;
  }
};

/// Builds the radial grid. Uniform-volume places r_i = R (i/N)^(1/3) so every
/// shell holds V/N; uniform-radius places r_i = R i/N.
RadialGrid build_radial_grid(int sample_count, double particle_radius,
                             GridScheme scheme = GridScheme::UniformVolume);

}  // namespace battkit
