#pragma once

// Deterministic sample grids: points, direction fans, seeded random numbers.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "finsler/geometry.hpp"

namespace finsler {

/// Seeded generator with a portable conversion to doubles.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }
  Vec normal_vector(int dim) {
    Vec v(dim);
    for (int k = 0; k < dim; ++k) v[k] = normal();
    return v;
  }
  Vec unit_vector(int dim) {
    Vec v = normal_vector(dim);
    while (v.norm() < 1e-12) v = normal_vector(dim);
    return v / v.norm();
  }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Near-uniform unit vectors in R^dim: circle, Fibonacci sphere, super-Fibonacci
/// on S^3, seeded Gaussian directions above that.
inline std::vector<Vec> sphere_lattice(int dim, int count, std::uint64_t seed = 1) {
  std::vector<Vec> out;
  if (count <= 0) return out;
  const double pi = std::numbers::pi;
  if (dim == 1) {
    for (int i = 0; i < count; ++i) out.push_back(Vec::Constant(1, i % 2 == 0 ? 1.0 : -1.0));
  } else if (dim == 2) {
    for (int i = 0; i < count; ++i) {
      const double a = 2.0 * pi * (i + 0.25) / count;
      Vec v(2);
      v << std::cos(a), std::sin(a);
      out.push_back(v);
    }
  } else if (dim == 3) {
    const double golden = pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      Vec v(3);
      v << r * std::cos(golden * i), r * std::sin(golden * i), z;
      out.push_back(v);
    }
  } else if (dim == 4) {
    const double phi = std::sqrt(2.0);
    const double psi = 1.533751168755204288118041;
    for (int i = 0; i < count; ++i) {
      const double s = (i + 0.5) / count;
      const double r = std::sqrt(s), R = std::sqrt(1.0 - s);
      const double a = 2.0 * pi * i / phi, b = 2.0 * pi * i / psi;
      Vec v(4);
      v << r * std::sin(a), r * std::cos(a), R * std::sin(b), R * std::cos(b);
      out.push_back(v);
    }
  } else {
    Rng rng(seed);
    for (int i = 0; i < count; ++i) out.push_back(rng.unit_vector(dim));
  }
  return out;
}

/// Point grid and direction fan used by verification suites.
struct SamplePlan {
  std::uint64_t seed = 20240601;
  int radii = 4;
  /// Fractions of the domain radius (or of `scale` for unbounded domains).
  double r_min = 0.1;
  double r_max = 0.8;
  int angles = 6;
  int directions = 5;
  double scale = 1.0;
  bool include_origin = true;

  Json to_json() const {
    return {{"seed", seed},   {"radii", radii},          {"r_min", r_min},
            {"r_max", r_max}, {"angles", angles},        {"directions", directions},
            {"scale", scale}, {"include_origin", include_origin}};
  }

  static SamplePlan from_json(const Json& j) {
    SamplePlan p;
    if (j.is_null()) return p;
    if (!j.is_object()) throw ConfigError("sample plan must be an object");
    p.seed = j.value("seed", p.seed);
    p.radii = j.value("radii", p.radii);
    p.r_min = j.value("r_min", p.r_min);
    p.r_max = j.value("r_max", p.r_max);
    p.angles = j.value("angles", p.angles);
    p.directions = j.value("directions", p.directions);
    p.scale = j.value("scale", p.scale);
    p.include_origin = j.value("include_origin", p.include_origin);
    if (p.radii < 1 || p.angles < 1 || p.directions < 1)
      throw ConfigError("sample plan counts must be positive");
    if (!(p.r_min > 0.0 && p.r_min <= p.r_max && p.r_max < 1.0))
      throw ConfigError("sample plan needs 0 < r_min <= r_max < 1");
    if (!(p.scale > 0.0)) throw ConfigError("sample plan scale must be positive");
    return p;
  }
};

inline std::vector<Vec> sample_points(const Metric& m, const SamplePlan& plan) {
  const int dim = m.real_dim();
  const double R = std::isfinite(m.domain_radius()) ? m.domain_radius() : plan.scale;
  std::vector<Vec> pts;
  if (plan.include_origin) pts.push_back(Vec::Zero(dim));
  const auto dirs = sphere_lattice(dim, plan.angles, plan.seed);
  for (int i = 0; i < plan.radii; ++i) {
    const double f = plan.radii == 1 ? plan.r_max : plan.r_min + (plan.r_max - plan.r_min) * i / (plan.radii - 1);
    for (const auto& d : dirs) pts.push_back(R * f * d);
  }
  return pts;
}

inline std::vector<Vec> sample_directions(const Metric& m, const SamplePlan& plan) {
  return sphere_lattice(m.real_dim(), plan.directions, plan.seed ^ 0x9e3779b97f4a7c15ULL);
}

}  // namespace finsler
