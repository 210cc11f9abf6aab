#pragma once

#include "napkin/dataset.hpp"

#include <string>
#include <variant>
#include <vector>

namespace napkin {

struct FixedLevel {
  double z_star = 0.0;
};

struct PointMass {
  std::vector<double> levels;
  std::vector<double> probs;
};

enum class DensityFamily { uniform, normal };

struct Density {
  DensityFamily family = DensityFamily::uniform;
  // Uniform(first, second) or Normal(mean = first, sd = second).
  double first = 0.0;
  double second = 1.0;
  int node_count = 64;

  static Density uniform(double a, double b, int nodes = 64);
  static Density normal(double mean, double sd, int nodes = 128);
  // Integration interval: [a, b] for Uniform, mean ± 6 sd for Normal.
  double lower() const;
  double upper() const;
};

using WeightSpec = std::variant<FixedLevel, PointMass, Density>;

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre nodes and weights on [-1, 1].
QuadratureRule gauss_legendre(int count);

QuadratureRule build_quadrature(const WeightSpec& spec);

// Value of the weight at z: a mass for FixedLevel/PointMass, a density for Density
// (renormalized over the truncated interval for Normal). Zero outside the support.
double weight_at(const WeightSpec& spec, double z);

bool is_fixed_level(const WeightSpec& spec);
std::string describe(const WeightSpec& spec);

// Structural invariants of the spec alone.
void check_weightspec(const WeightSpec& spec);

// Checks the spec against the observed Z. Throws on overlap violations and
// returns warnings for soft problems.
std::vector<std::string> validate_weightspec(const WeightSpec& spec, const Dataset& data);

}  // namespace napkin
