#include "napkin/weight.hpp"

#include "napkin/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace napkin {

namespace {

double normal_pdf(double z, double mean, double sd) {
  const double u = (z - mean) / sd;
  return std::exp(-0.5 * u * u) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

// Mass of a normal law within mean ± 6 sd.
double normal_central_mass() { return std::erf(6.0 / std::numbers::sqrt2); }

bool observed_exactly(const Dataset& data, double value) {
  if (data.z_discrete()) return data.has_z_level(value);
  return std::find(data.z().begin(), data.z().end(), value) != data.z().end();
}

}  // namespace

Density Density::uniform(double a, double b, int nodes) {
  return Density{DensityFamily::uniform, a, b, nodes};
}

Density Density::normal(double mean, double sd, int nodes) {
  return Density{DensityFamily::normal, mean, sd, nodes};
}

double Density::lower() const {
  return family == DensityFamily::uniform ? first : first - 6.0 * second;
}

double Density::upper() const {
  return family == DensityFamily::uniform ? second : first + 6.0 * second;
}

QuadratureRule gauss_legendre(int count) {
  if (count < 1) fail_validation("quadrature node count must be positive");
  if (count == 1) return QuadratureRule{{0.0}, {2.0}};
  QuadratureRule rule;
  rule.nodes.resize(count);
  rule.weights.resize(count);
  // P_count(x) and its derivative by the three-term recurrence.
  auto legendre = [count](double x, double& derivative) {
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= count; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    derivative = count * (x * p1 - p0) / (x * x - 1.0);
    return p1;
  };
  const int half = (count + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
    double derivative = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      const double step = legendre(x, derivative) / derivative;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    legendre(x, derivative);
    const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
    rule.nodes[i] = -x;
    rule.nodes[count - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[count - 1 - i] = w;
  }
  return rule;
}

QuadratureRule build_quadrature(const WeightSpec& spec) {
  check_weightspec(spec);
  if (const auto* fixed = std::get_if<FixedLevel>(&spec)) {
    return QuadratureRule{{fixed->z_star}, {1.0}};
  }
  if (const auto* mass = std::get_if<PointMass>(&spec)) {
    return QuadratureRule{mass->levels, mass->probs};
  }
  const auto& density = std::get<Density>(spec);
  QuadratureRule base = gauss_legendre(density.node_count);
  const double lo = density.lower();
  const double hi = density.upper();
  const double half_width = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  QuadratureRule rule;
  double total = 0.0;
  for (std::size_t k = 0; k < base.nodes.size(); ++k) {
    const double node = mid + half_width * base.nodes[k];
    double w = base.weights[k];
    if (density.family == DensityFamily::normal) w *= normal_pdf(node, density.first, density.second);
    rule.nodes.push_back(node);
    rule.weights.push_back(w);
    total += w;
  }
  for (double& w : rule.weights) w /= total;
  return rule;
}

double weight_at(const WeightSpec& spec, double z) {
  if (const auto* fixed = std::get_if<FixedLevel>(&spec)) return z == fixed->z_star ? 1.0 : 0.0;
  if (const auto* mass = std::get_if<PointMass>(&spec)) {
    double total = 0.0;
    for (std::size_t k = 0; k < mass->levels.size(); ++k) {
      if (mass->levels[k] == z) total += mass->probs[k];
    }
    return total;
  }
  const auto& density = std::get<Density>(spec);
  if (z < density.lower() || z > density.upper()) return 0.0;
  if (density.family == DensityFamily::uniform) return 1.0 / (density.second - density.first);
  return normal_pdf(z, density.first, density.second) / normal_central_mass();
}

bool is_fixed_level(const WeightSpec& spec) { return std::holds_alternative<FixedLevel>(spec); }

std::string describe(const WeightSpec& spec) {
  std::ostringstream out;
  out.precision(6);
  if (const auto* fixed = std::get_if<FixedLevel>(&spec)) {
    out << "z*=" << fixed->z_star;
  } else if (const auto* mass = std::get_if<PointMass>(&spec)) {
    out << "point_mass(";
    for (std::size_t k = 0; k < mass->levels.size(); ++k) {
      if (k) out << ",";
      out << mass->levels[k] << ":" << mass->probs[k];
    }
    out << ")";
  } else {
    const auto& density = std::get<Density>(spec);
    out << (density.family == DensityFamily::uniform ? "uniform(" : "normal(") << density.first << ","
        << density.second << ")";
  }
  return out.str();
}

void check_weightspec(const WeightSpec& spec) {
  if (const auto* mass = std::get_if<PointMass>(&spec)) {
    if (mass->levels.empty() || mass->levels.size() != mass->probs.size()) {
      fail_validation("point-mass weight needs equally many levels and probabilities");
    }
    double total = 0.0;
    for (double p : mass->probs) {
      if (!(p >= 0.0)) fail_validation("point-mass probabilities must be nonnegative");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) fail_validation("point-mass probabilities must sum to 1");
  } else if (const auto* density = std::get_if<Density>(&spec)) {
    if (density->node_count < 2) fail_validation("density weight needs node_count >= 2");
    if (!std::isfinite(density->first) || !std::isfinite(density->second)) {
      fail_validation("density weight parameters must be finite");
    }
    if (density->family == DensityFamily::uniform && !(density->first < density->second)) {
      fail_validation("uniform weight needs a < b");
    }
    if (density->family == DensityFamily::normal && !(density->second > 0.0)) {
      fail_validation("normal weight needs sd > 0");
    }
  } else if (!std::isfinite(std::get<FixedLevel>(spec).z_star)) {
    fail_validation("fixed level must be finite");
  }
}

std::vector<std::string> validate_weightspec(const WeightSpec& spec, const Dataset& data) {
  check_weightspec(spec);
  std::vector<std::string> warnings;
  auto require_level = [&](double value) {
    if (!observed_exactly(data, value)) {
      std::ostringstream msg;
      msg << "weight level z=" << value << " is not an observed value of Z";
      fail_overlap(msg.str());
    }
  };
  if (const auto* fixed = std::get_if<FixedLevel>(&spec)) {
    require_level(fixed->z_star);
    if (!data.z_discrete()) {
      warnings.push_back("fixed level on continuous Z uses only exact matches of Z");
    }
  } else if (const auto* mass = std::get_if<PointMass>(&spec)) {
    for (double level : mass->levels) require_level(level);
    if (!data.z_discrete()) {
      warnings.push_back("point-mass weight on continuous Z uses only exact matches of Z");
    }
  } else {
    const auto& density = std::get<Density>(spec);
    if (data.z_discrete()) {
      fail_overlap("density weight requires continuous Z");
    }
    const double range = data.z_max() - data.z_min();
    const double lo = data.z_min() - 0.1 * range;
    const double hi = data.z_max() + 0.1 * range;
    // The normal family is checked on its central 4 sd, where nearly all mass lies.
    double dlo = density.lower();
    double dhi = density.upper();
    if (density.family == DensityFamily::normal) {
      dlo = density.first - 4.0 * density.second;
      dhi = density.first + 4.0 * density.second;
    }
    if (dlo < lo || dhi > hi) {
      std::ostringstream msg;
      msg << "weight support [" << dlo << ", " << dhi << "] extends beyond observed Z range ["
          << data.z_min() << ", " << data.z_max() << "] by more than 10%";
      warnings.push_back(msg.str());
    }
  }
  return warnings;
}

}  // namespace napkin
