#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "rdme/expr.hpp"

namespace rdme {

// Which transport mechanism a species uses in the hybrid scheme. Reactions
// always fire as discrete events regardless of mode.
enum class DiffusionMode { Stochastic, Deterministic };

struct Species {
    std::string name;
    DiffusionMode mode = DiffusionMode::Stochastic;
    double diffscale = 1.0;   // per-species multiplier on gamma
};

struct Reaction {
    std::string name;
    Eigen::VectorXi reactants;   // per-species consumed counts
    Eigen::VectorXi products;    // per-species produced counts
    Eigen::VectorXi n;           // reactants - products; firing does x -= n

    enum class Kind { Expression, MassAction };
    Kind kind = Kind::Expression;
    Expr rate;                    // Kind::Expression
    double chat = 0.0;            // Kind::MassAction coefficient
    std::vector<int> ma_species;  // 1 or 2 ids; two equal ids = dimerization
    std::string rate_text;        // original formula, for serialization
    std::vector<std::pair<int, int>> consumed;   // nonzero reactant (id, count)
};

struct Model {
    std::vector<Species> species;
    std::vector<Reaction> reactions;
    double gamma = 0.0;
    std::map<std::string, double> constants;   // const lines + injected bindings

    int num_species() const { return static_cast<int>(species.size()); }
    int species_index(const std::string& name) const;   // -1 if absent
    bool any_deterministic() const;
    bool all_deterministic() const;
};

// `bindings` are harness-supplied constants (e.g. the average cell size
// bound to the name used by the model text); they behave like const lines.
Model parse_model(const std::string& text,
                  const std::map<std::string, double>& bindings = {});
Model load_model(const std::string& path,
                 const std::map<std::string, double>& bindings = {});
std::string serialize_model(const Model& model);

// Propensity of reaction r in a cell with the given counts. Mass-action
// forms vanish automatically when integer counts are insufficient; for
// fractional (deterministic-mode) states a feasibility factor zeroes the
// rate whenever any consumed species holds less than its stoichiometry, so
// the sampler can never select an unfireable channel.
double propensity(const Model& model, const Reaction& r, const double* counts,
                  const EvalContext& ctx);

}  // namespace rdme
