#include "rdme/model.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rdme {
namespace {

[[noreturn]] void fail(int lineno, const std::string& msg) {
    throw std::runtime_error("model parse error at line " + std::to_string(lineno) + ": " + msg);
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool valid_name(const std::string& s) {
    if (s.empty() || (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_')) return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

// one side of a reaction equation: `0`, or terms like `A`, `2 A`, `2*A`
// joined by '+'
Eigen::VectorXi parse_side(const std::string& side, const Model& model, int lineno) {
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(model.num_species());
    const std::string body = trim(side);
    if (body == "0") return counts;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        std::size_t plus = body.find('+', pos);
        std::string term = trim(body.substr(pos, plus == std::string::npos ? plus : plus - pos));
        if (term.empty()) fail(lineno, "empty term in reaction side");
        int mult = 1;
        std::size_t i = 0;
        if (std::isdigit(static_cast<unsigned char>(term[0]))) {
            std::size_t end;
            mult = std::stoi(term, &end);
            i = end;
            while (i < term.size() && (std::isspace(static_cast<unsigned char>(term[i])) || term[i] == '*'))
                ++i;
            if (mult <= 0) fail(lineno, "term multiplicity must be positive");
        }
        const std::string name = trim(term.substr(i));
        const int id = model.species_index(name);
        if (id < 0) fail(lineno, "unknown species '" + name + "' in reaction");
        counts(id) += mult;
        if (plus == std::string::npos) break;
        pos = plus + 1;
    }
    return counts;
}

std::map<std::string, int> species_ids(const Model& model) {
    std::map<std::string, int> ids;
    for (int i = 0; i < model.num_species(); ++i) ids[model.species[static_cast<std::size_t>(i)].name] = i;
    return ids;
}

// split top-level comma-separated arguments of massaction(...)
std::vector<std::string> split_args(const std::string& body, int lineno) {
    std::vector<std::string> args;
    int depth = 0;
    std::string cur;
    for (char c : body) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == ',' && depth == 0) {
            args.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (depth != 0) fail(lineno, "unbalanced parentheses in massaction");
    args.push_back(trim(cur));
    return args;
}

void parse_rate(Reaction& r, const std::string& text, const Model& model, int lineno) {
    r.rate_text = trim(text);
    const std::string ma = "massaction(";
    if (r.rate_text.rfind(ma, 0) == 0 && r.rate_text.back() == ')') {
        const auto args =
            split_args(r.rate_text.substr(ma.size(), r.rate_text.size() - ma.size() - 1), lineno);
        if (args.size() < 2 || args.size() > 3)
            fail(lineno, "massaction takes a coefficient and one or two species");
        r.kind = Reaction::Kind::MassAction;
        try {
            r.chat = eval_constant_expr(args[0], model.constants);
        } catch (const std::exception& e) {
            fail(lineno, e.what());
        }
        if (!(r.chat >= 0.0)) fail(lineno, "massaction coefficient must be nonnegative");
        for (std::size_t i = 1; i < args.size(); ++i) {
            const int id = model.species_index(args[i]);
            if (id < 0) fail(lineno, "unknown species '" + args[i] + "' in massaction");
            r.ma_species.push_back(id);
        }
        return;
    }
    r.kind = Reaction::Kind::Expression;
    try {
        r.rate = Expr::parse(r.rate_text, species_ids(model), model.constants);
    } catch (const std::exception& e) {
        fail(lineno, e.what());
    }
    if (r.rate.sign() == Sign::Unknown)
        fail(lineno, "propensity \"" + r.rate_text + "\" is not provably nonnegative");
}

}  // namespace

int Model::species_index(const std::string& name) const {
    for (int i = 0; i < num_species(); ++i)
        if (species[static_cast<std::size_t>(i)].name == name) return i;
    return -1;
}

bool Model::any_deterministic() const {
    for (const auto& s : species)
        if (s.mode == DiffusionMode::Deterministic) return true;
    return false;
}

bool Model::all_deterministic() const {
    for (const auto& s : species)
        if (s.mode == DiffusionMode::Stochastic) return false;
    return !species.empty();
}

Model parse_model(const std::string& text, const std::map<std::string, double>& bindings) {
    Model model;
    model.constants = bindings;

    // first pass: species and constants, so rates can reference any of them
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    std::vector<std::pair<int, std::string>> reaction_lines;
    std::set<std::string> names;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;

        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw == "species") {
            Species sp;
            if (!(ls >> sp.name) || !valid_name(sp.name)) fail(lineno, "bad species name");
            if (!names.insert(sp.name).second) fail(lineno, "duplicate name '" + sp.name + "'");
            std::string opt;
            while (ls >> opt) {
                if (opt == "deterministic") {
                    sp.mode = DiffusionMode::Deterministic;
                } else if (opt == "stochastic") {
                    sp.mode = DiffusionMode::Stochastic;
                } else if (opt.rfind("diffscale=", 0) == 0) {
                    try {
                        sp.diffscale = std::stod(opt.substr(10));
                    } catch (const std::exception&) {
                        fail(lineno, "bad diffscale value");
                    }
                    if (!(sp.diffscale >= 0.0)) fail(lineno, "diffscale must be nonnegative");
                } else {
                    fail(lineno, "unknown species option '" + opt + "'");
                }
            }
            model.species.push_back(sp);
        } else if (kw == "const") {
            std::string name, eq;
            double value;
            if (!(ls >> name >> eq >> value) || eq != "=" || !valid_name(name))
                fail(lineno, "expected 'const NAME = NUMBER'");
            if (!names.insert(name).second) fail(lineno, "duplicate name '" + name + "'");
            model.constants[name] = value;
        } else if (kw == "gamma") {
            std::string eq;
            if (!(ls >> eq >> model.gamma) || eq != "=") fail(lineno, "expected 'gamma = NUMBER'");
            if (!(model.gamma > 0.0)) fail(lineno, "gamma must be positive");
        } else if (kw == "reaction") {
            reaction_lines.push_back({lineno, line});
        } else {
            fail(lineno, "unknown directive '" + kw + "'");
        }
    }
    if (model.species.empty()) fail(lineno, "model declares no species");

    for (const auto& [rl, line] : reaction_lines) {
        // reaction NAME: LHS -> RHS : RATE
        const std::size_t colon = line.find(':');
        if (colon == std::string::npos) fail(rl, "missing ':' after reaction name");
        Reaction r;
        {
            std::istringstream hs(line.substr(0, colon));
            std::string kw;
            hs >> kw >> r.name;
            if (!valid_name(r.name)) fail(rl, "bad reaction name");
            for (const auto& other : model.reactions)
                if (other.name == r.name) fail(rl, "duplicate reaction name '" + r.name + "'");
        }
        const std::string rest = line.substr(colon + 1);
        const std::size_t arrow = rest.find("->");
        if (arrow == std::string::npos) fail(rl, "missing '->' in reaction equation");
        const std::size_t rate_colon = rest.find(':', arrow);
        if (rate_colon == std::string::npos) fail(rl, "missing ':' before the rate");
        r.reactants = parse_side(rest.substr(0, arrow), model, rl);
        r.products = parse_side(rest.substr(arrow + 2, rate_colon - arrow - 2), model, rl);
        r.n = r.reactants - r.products;
        for (int i = 0; i < r.reactants.size(); ++i)
            if (r.reactants(i) > 0) r.consumed.push_back({i, r.reactants(i)});
        parse_rate(r, rest.substr(rate_colon + 1), model, rl);
        model.reactions.push_back(std::move(r));
    }
    return model;
}

Model load_model(const std::string& path, const std::map<std::string, double>& bindings) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("model: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str(), bindings);
}

std::string serialize_model(const Model& model) {
    std::ostringstream out;
    out.precision(17);
    for (const auto& s : model.species) {
        out << "species " << s.name;
        if (s.mode == DiffusionMode::Deterministic) out << " deterministic";
        if (s.diffscale != 1.0) out << " diffscale=" << s.diffscale;
        out << '\n';
    }
    for (const auto& [name, value] : model.constants) out << "const " << name << " = " << value << '\n';
    if (model.gamma > 0.0) out << "gamma = " << model.gamma << '\n';
    auto side = [&](const Eigen::VectorXi& counts) {
        std::string s;
        for (int i = 0; i < counts.size(); ++i) {
            for (int k = 0; k < counts(i); ++k) {
                if (!s.empty()) s += " + ";
                s += model.species[static_cast<std::size_t>(i)].name;
            }
        }
        return s.empty() ? std::string("0") : s;
    };
    for (const auto& r : model.reactions)
        out << "reaction " << r.name << ": " << side(r.reactants) << " -> " << side(r.products)
            << " : " << r.rate_text << '\n';
    return out.str();
}

double propensity(const Model& model, const Reaction& r, const double* counts,
                  const EvalContext& ctx) {
    // a channel that cannot fire (any consumed species below its
    // stoichiometry) contributes no rate, also for fractional states
    for (const auto& [id, need] : r.consumed)
        if (counts[id] < static_cast<double>(need)) return 0.0;

    if (r.kind == Reaction::Kind::MassAction) {
        if (r.ma_species.size() == 1) return r.chat * counts[r.ma_species[0]];
        const int a = r.ma_species[0], b = r.ma_species[1];
        if (a == b) return r.chat / ctx.vol * counts[a] * (counts[a] - 1.0) * 0.5;
        return r.chat / ctx.vol * counts[a] * counts[b];
    }
    return r.rate.eval(ctx);
}

}  // namespace rdme
