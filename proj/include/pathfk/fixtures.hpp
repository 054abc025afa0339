#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pathfk/cascade.hpp"
#include "pathfk/oracles.hpp"
#include "pathfk/ppde.hpp"

namespace pathfk {

/// A named test problem. Experiments and result files refer to fixtures by
/// `id`; `version` changes whenever the fixture's definition does.
struct Fixture {
  std::string id;
  int version = 1;
  std::string description;
  PpdeProblem problem;
  /// Closed-form u, when known.
  std::function<double(PathView)> closed_form;
  /// Analytic value and derivatives of u, when known.
  BundleSupplier bundle;
  std::optional<CascadeSpec> cascade;
  /// Functional whose derivatives `bundle` describes. Equals u for the PPDE
  /// fixtures; for pure Ito fixtures it is not a PPDE solution.
  Functional functional;
  bool ppde_solution = true;
  /// Regression features to append to the default basis so that u(path_s)
  /// lies in the span of the basis monomials.
  std::vector<Feature> features;
};

/// The default basis of the given degree extended by the fixture's features.
RegressionBasis fixture_basis(const Fixture& fixture, int degree = 2);

const std::vector<Fixture>& fixture_catalog();
/// Throws UnknownFixture.
const Fixture& find_fixture(const std::string& id);
/// `id,version,closed_form,bundle,cascade,description` rows.
void write_catalog(std::ostream& out);

/// Terminal/generator data ordered pointwise: terminal1 <= terminal2 and
/// generator1 <= generator2 on every input.
struct OrderedPair {
  Functional terminal1;
  Generator generator1;
  Functional terminal2;
  Generator generator2;
};

/// Random member of the ordered family
///   Phi1 = a Phi_base + b,  Phi2 = Phi1 + alpha x(T)^2 + beta,
///   f1 = c y + k,           f2 = f1 + kappa,
/// with alpha, beta, kappa >= 0 and Phi_base drawn from
/// {x(T), x(T)^2, int x ds, sin x(T)}.
OrderedPair random_ordered_pair(std::uint64_t seed, std::size_t index);

}  // namespace pathfk
