#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rdme {

// Small arithmetic expression engine for propensity formulas. Supports
// + - * / ^, unary minus, parentheses, numeric literals, named constants,
// species counts, the cell variables vol/cx/cy/rho, and the functions
// heaviside, min, max. Parsed once into postfix code and evaluated with a
// flat stack; no allocation on the hot path.
//
// A conservative sign classifier runs at parse time: every denominator must
// classify as strictly positive and a full propensity must classify as
// nonnegative, otherwise parsing fails. heaviside(0) evaluates to 0.

enum class Sign { Positive, NonNegative, Unknown };

struct EvalContext {
    const double* species = nullptr;   // counts, indexed by species id
    double vol = 1.0;                  // dual-cell area
    double cx = 0.0, cy = 0.0;         // cell center
    double rho = 0.0;                  // distance from domain centroid
};

class Expr {
  public:
    // `species_ids` maps species names to indices into EvalContext::species;
    // `constants` are folded in at parse time.
    static Expr parse(const std::string& text,
                      const std::map<std::string, int>& species_ids,
                      const std::map<std::string, double>& constants);

    double eval(const EvalContext& ctx) const;
    Sign sign() const { return sign_; }
    const std::string& text() const { return text_; }
    // Species the expression actually reads (sorted ids, no duplicates).
    const std::vector<int>& dependencies() const { return deps_; }
    bool depends_on_cell_geometry() const { return uses_geometry_; }

  private:
    enum class Op : std::uint8_t {
        PushConst, PushSpecies, PushVol, PushCx, PushCy, PushRho,
        Add, Sub, Mul, Div, Pow, Neg, Heaviside, Min, Max
    };
    struct Instr {
        Op op;
        int arg = 0;        // species id for PushSpecies
        double value = 0.0; // literal for PushConst
    };

    std::vector<Instr> code_;
    std::string text_;
    std::vector<int> deps_;
    Sign sign_ = Sign::Unknown;
    bool uses_geometry_ = false;

    friend class ExprParser;
};

// Evaluates an expression that may reference only constants (no species, no
// cell variables); used for mass-action coefficients. Throws if it depends
// on anything per-cell.
double eval_constant_expr(const std::string& text,
                          const std::map<std::string, double>& constants);

}  // namespace rdme
