#include "semgraph/filter.hpp"

#include <cmath>
#include <string>

namespace semgraph {

namespace {

void add_noise(std::vector<Eigen::Vector3d>& positions, const Eigen::Vector3d& sigma, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  for (auto& p : positions) {
    for (int a = 0; a < 3; ++a) p[a] += sigma[a] * n01(rng);
  }
}

}  // namespace

void FilterConfig::validate() const {
  if (n_particles < 2) {
    throw Error(ErrorCode::InvalidConfig, "n_particles must be >= 2");
  }
  if (!(sigma0.array() > 0).all() || !sigma0.allFinite()) {
    throw Error(ErrorCode::InvalidConfig, "sigma0 components must be positive");
  }
  if (!(resample_ess_fraction >= 0.0 && resample_ess_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "resample_ess_fraction must lie in [0, 1]");
  }
}

ParticleSet init_particles(const Point3& mu0, const FilterConfig& cfg, Rng& rng) {
  cfg.validate();
  if (!mu0.finite()) throw Error(ErrorCode::InvalidInput, "initial position is not finite");
  ParticleSet ps;
  ps.frame = mu0.frame;
  ps.positions.assign(static_cast<std::size_t>(cfg.n_particles), mu0.p);
  ps.weights.assign(static_cast<std::size_t>(cfg.n_particles), 1.0 / cfg.n_particles);
  add_noise(ps.positions, cfg.sigma0, rng);
  return ps;
}

ParticleSet init_particles(const Point3& mu0, const FilterConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  return init_particles(mu0, cfg, rng);
}

ParticleSet predict(const ParticleSet& ps, const Pose& delta_t, const FilterConfig& cfg,
                    Rng& rng) {
  if (ps.frame != cfg.prediction_frame) {
    throw Error(ErrorCode::FrameMismatch, "particle frame differs from the prediction frame");
  }
  ParticleSet out = ps;
  if (cfg.prediction_frame == Frame::Camera) {
    for (auto& p : out.positions) p = delta_t.apply(p);
  }
  add_noise(out.positions, cfg.sigma0, rng);
  return out;
}

ParticleSet update_weights(const ParticleSet& ps, const Point3& s_new) {
  if (!s_new.finite()) throw Error(ErrorCode::InvalidInput, "observation is not finite");
  if (s_new.frame != ps.frame) {
    throw Error(ErrorCode::FrameMismatch, "observation frame differs from the particle frame");
  }
  ParticleSet out = ps;
  double sum = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = (out.positions[i] - s_new.p).norm();
    out.weights[i] = 1.0 / (1.0 + d);
    sum += out.weights[i];
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    throw Error(ErrorCode::DegenerateWeights, "all particle weights vanished");
  }
  for (auto& w : out.weights) w /= sum;
  return out;
}

Point3 estimate(const ParticleSet& ps) {
  Eigen::Vector3d s = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < ps.size(); ++i) s += ps.weights[i] * ps.positions[i];
  return {s, ps.frame};
}

double effective_sample_size(const ParticleSet& ps) {
  double sq = 0.0;
  for (double w : ps.weights) sq += w * w;
  return 1.0 / sq;
}

ParticleSet resample(const ParticleSet& ps, Rng& rng) {
  const std::size_t n = ps.size();
  ParticleSet out;
  out.frame = ps.frame;
  out.positions.reserve(n);
  out.weights.assign(n, 1.0 / static_cast<double>(n));

  const double step = 1.0 / static_cast<double>(n);
  std::uniform_real_distribution<double> offset(0.0, step);
  const double u0 = offset(rng);
  double cumulative = ps.weights[0];
  std::size_t i = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double u = u0 + static_cast<double>(j) * step;
    while (u > cumulative && i + 1 < n) cumulative += ps.weights[++i];
    out.positions.push_back(ps.positions[i]);
  }
  return out;
}

ParticleSet maybe_resample(const ParticleSet& ps, const FilterConfig& cfg, Rng& rng) {
  const double threshold = cfg.resample_ess_fraction * static_cast<double>(ps.size());
  // The relative slack keeps exactly uniform weights from triggering on rounding.
  if (effective_sample_size(ps) < threshold * (1.0 - 1e-9)) return resample(ps, rng);
  return ps;
}

}  // namespace semgraph
