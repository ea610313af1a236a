#include "battkit/grid.hpp"

#include <cmath>
#include <numbers>

namespace battkit {

RadialGrid build_radial_grid(int sample_count, double particle_radius,
                             GridScheme scheme) {
  if (sample_count < 2) {
    throw InvalidGridError("radial grid needs at least 2 shells, got " +
                           std::to_string(sample_count));
  }
  if (!(particle_radius > 0.0)) {
    throw InvalidGridError("particle radius must be positive");
  }

  const int n = sample_count;
  RadialGrid g;
  g.scheme = scheme;
  g.particle_radius = particle_radius;
  g.particle_volume =
      4.0 / 3.0 * std::numbers::pi * std::pow(particle_radius, 3);
  g.outer_radii.resize(n);
  g.shell_volumes.resize(n);
  g.shell_surfaces.resize(n);

  for (int i = 0; i < n; ++i) {
    const double frac = static_cast<double>(i + 1) / n;
    g.outer_radii[i] = scheme == GridScheme::UniformVolume
                           ? particle_radius * std::cbrt(frac)
                           : particle_radius * frac;
  }
  double prev = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = g.outer_radii[i];
    g.shell_volumes[i] =
        4.0 / 3.0 * std::numbers::pi * (r * r * r - prev * prev * prev);
    g.shell_surfaces[i] = 4.0 * std::numbers::pi * r * r;
    prev = r;
  }
  return g;
}

}  // namespace battkit
