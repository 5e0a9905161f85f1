#pragma once

// Scenario files: JSON documents describing the plant, the equilibrium, both
// controller designs and the simulation. Degrees at this boundary, radians
// everywhere else.

#include <cstdint>
#include <optional>
#include <string>

#include "kanesat/control.hpp"
#include "kanesat/dynamics.hpp"
#include "kanesat/linearize.hpp"
#include "kanesat/simulate.hpp"

namespace kanesat {

/// Strict loading rejects physically invalid inertia and mass at load time
/// (exit 2). Lenient loading accepts any finite values so `verify` can report
/// which invariant fails.
enum class LoadMode { Strict, Lenient };

/// A linear model given directly instead of a plant, for design-only runs.
struct ModelOverride {
  MatrixXd A;
  MatrixXd B;
};

struct Scenario {
  std::optional<ChainConfig> plant;  // empty for model-only scenarios
  std::optional<ModelOverride> model;
  std::optional<Equilibrium> equilibrium;
  std::optional<LqrWeights> lqr;
  std::optional<PoleSet> rpa;
  std::optional<SimConfig> sim;  // K left empty; target = x_d
  PerturbationSpec perturbation;
  std::string hash;  // FNV-1a 64 of the file bytes, 16 hex digits

  const ChainConfig& require_plant() const;
  const Equilibrium& require_equilibrium() const;
  const SimConfig& require_sim() const;
};

/// 64-bit FNV-1a digest as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// Throws ConfigError naming the offending dotted key (or the JSON line).
Scenario parse_scenario(const std::string& text, LoadMode mode = LoadMode::Strict);
Scenario load_scenario(const std::string& path, LoadMode mode = LoadMode::Strict);

}  // namespace kanesat
