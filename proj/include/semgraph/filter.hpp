#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "semgraph/geometry.hpp"

namespace semgraph {

using Rng = std::mt19937_64;

struct FilterConfig {
  int n_particles = 100;
  /// Per-axis standard deviation of the initial spread and of the noise added
  /// at each prediction, metres.
  Eigen::Vector3d sigma0 = Eigen::Vector3d::Constant(0.05);
  /// Map: particles are static positions in the map frame. Camera: particles
  /// live in the camera frame and are carried along by the camera motion.
  Frame prediction_frame = Frame::Map;
  /// Resample when ESS < fraction·N. 1 resamples after every informative
  /// update, 0 never resamples.
  double resample_ess_fraction = 1.0;

  void validate() const;
};

/// Weighted cloud of 3D position hypotheses for one object.
struct ParticleSet {
  std::vector<Eigen::Vector3d> positions;
  std::vector<double> weights;
  Frame frame = Frame::Map;

  std::size_t size() const { return positions.size(); }
};

/// Draws N particles from Normal(mu0, diag(sigma0²)) with uniform weights.
ParticleSet init_particles(const Point3& mu0, const FilterConfig& cfg, Rng& rng);
ParticleSet init_particles(const Point3& mu0, const FilterConfig& cfg, std::uint64_t seed);

/// Static-world (map) or camera-motion (camera) prediction, then zero-mean
/// Gaussian noise with std sigma0. Weights are unchanged.
ParticleSet predict(const ParticleSet& ps, const Pose& delta_t, const FilterConfig& cfg, Rng& rng);

/// w_i = 1/(1 + ‖s_i − s_new‖), normalized to sum 1.
ParticleSet update_weights(const ParticleSet& ps, const Point3& s_new);

/// Weighted mean of the particles.
Point3 estimate(const ParticleSet& ps);

double effective_sample_size(const ParticleSet& ps);

/// Systematic resampling; output weights are uniform.
ParticleSet resample(const ParticleSet& ps, Rng& rng);

/// Resamples if the ESS falls below the configured fraction of N.
ParticleSet maybe_resample(const ParticleSet& ps, const FilterConfig& cfg, Rng& rng);

}  // namespace semgraph
