#include "lmesel/config_io.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace lmesel {

namespace {

// Typed access to one JSON object; anything not consumed is an error.
class ObjectReader {
public:
    ObjectReader(const json& doc, std::string what) : doc_(doc), what_(std::move(what)) {
        if (!doc.is_object()) throw ValidationError(what_ + " must be a JSON object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return doc_.contains(key) && !doc_.at(key).is_null();
    }

    const json& at(const std::string& key) {
        seen_.insert(key);
        return doc_.at(key);
    }

    double number(const std::string& key) {
        const json& v = at(key);
        if (!v.is_number()) throw ValidationError(what_ + "." + key + " must be a number");
        return v.get<double>();
    }

    int integer(const std::string& key) {
        const json& v = at(key);
        if (!v.is_number_integer()) throw ValidationError(what_ + "." + key + " must be an integer");
        return v.get<int>();
    }

    bool boolean(const std::string& key) {
        const json& v = at(key);
        if (!v.is_boolean()) throw ValidationError(what_ + "." + key + " must be true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& key) {
        const json& v = at(key);
        if (!v.is_string()) throw ValidationError(what_ + "." + key + " must be a string");
        return v.get<std::string>();
    }

    VectorXd vector(const std::string& key) {
        const json& v = at(key);
        if (!v.is_array()) throw ValidationError(what_ + "." + key + " must be an array of numbers");
        VectorXd out(static_cast<Index>(v.size()));
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (!v[k].is_number()) throw ValidationError(what_ + "." + key + " must be an array of numbers");
            out(static_cast<Index>(k)) = v[k].get<double>();
        }
        return out;
    }

    std::vector<bool> bools(const std::string& key) {
        const json& v = at(key);
        if (!v.is_array()) throw ValidationError(what_ + "." + key + " must be an array of booleans");
        std::vector<bool> out;
        for (const auto& e : v) {
            if (!e.is_boolean()) throw ValidationError(what_ + "." + key + " must be an array of booleans");
            out.push_back(e.get<bool>());
        }
        return out;
    }

    void finish() const {
        for (auto it = doc_.begin(); it != doc_.end(); ++it)
            if (!seen_.count(it.key())) throw ValidationError(what_ + ": unknown key \"" + it.key() + "\"");
    }

private:
    const json& doc_;
    std::string what_;
    std::set<std::string> seen_;
};

json vec(const VectorXd& v) {
    json out = json::array();
    for (Index k = 0; k < v.size(); ++k) out.push_back(v(k));
    return out;
}

json bools(const std::vector<bool>& m) {
    json out = json::array();
    for (bool b : m) out.push_back(b);
    return out;
}

template <class T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

} // namespace

std::string fmt_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

SolverConfig solver_config_from_json(const json& doc) {
    ObjectReader r(doc, "solver");
    SolverConfig c;
    if (r.has("eta")) c.eta = r.number("eta");
    if (r.has("mu")) c.mu = r.number("mu");
    if (r.has("mu_min")) c.mu_min = r.number("mu_min");
    if (r.has("prox_step")) c.prox_step = r.number("prox_step");
    if (r.has("step")) c.fixed_step = r.number("step");
    if (r.has("t0")) c.backtracking.t0 = r.number("t0");
    if (r.has("theta")) c.backtracking.theta = r.number("theta");
    if (r.has("tau")) c.backtracking.tau = r.number("tau");
    if (r.has("max_halvings")) c.backtracking.max_halvings = r.integer("max_halvings");
    if (r.has("tol")) c.tol = r.number("tol");
    if (r.has("max_iter")) c.max_iter = r.integer("max_iter");
    if (r.has("max_iter_inner")) c.max_iter_inner = r.integer("max_iter_inner");
    if (r.has("inner_tol")) c.inner_tol = r.number("inner_tol");
    if (r.has("gamma_max")) {
        const json& g = r.at("gamma_max");
        if (g.is_number()) c.gamma_max = VectorXd::Constant(1, g.get<double>());
        else c.gamma_max = r.vector("gamma_max");
    }
    if (r.has("use_psd_approx")) c.use_psd_approx = r.boolean("use_psd_approx");
    if (r.has("warm_start")) c.warm_start = r.boolean("warm_start");
    if (r.has("initial")) {
        ObjectReader ir(r.at("initial"), "solver.initial");
        c.initial = ParamPoint{ir.vector("beta"), ir.vector("gamma")};
        ir.finish();
    }
    r.finish();
    c.validate();
    return c;
}

json to_json(const SolverConfig& c) {
    json j;
    j["eta"] = c.eta;
    j["mu"] = opt(c.mu);
    j["mu_min"] = c.mu_min;
    j["prox_step"] = opt(c.prox_step);
    j["step"] = opt(c.fixed_step);
    j["t0"] = opt(c.backtracking.t0);
    j["theta"] = c.backtracking.theta;
    j["tau"] = c.backtracking.tau;
    j["max_halvings"] = c.backtracking.max_halvings;
    j["tol"] = c.tol;
    j["max_iter"] = c.max_iter;
    j["max_iter_inner"] = c.max_iter_inner;
    j["inner_tol"] = c.inner_tol;
    j["gamma_max"] = c.gamma_max ? vec(*c.gamma_max) : json(nullptr);
    j["use_psd_approx"] = c.use_psd_approx;
    j["warm_start"] = c.warm_start;
    j["initial"] = c.initial ? json{{"beta", vec(c.initial->beta)}, {"gamma", vec(c.initial->gamma)}} : json(nullptr);
    return j;
}

Regularizer regularizer_from_json(const json& doc) {
    ObjectReader r(doc, "regularizer");
    Regularizer reg;
    reg.kind = parse_reg_kind(r.string("kind"));
    reg.lambda = r.number("lambda");
    if (r.has("a")) reg.scad_a = r.number("a");
    if (r.has("weights")) reg.weights = r.vector("weights");
    if (r.has("fixed")) reg.fixed_mask = r.bools("fixed");
    r.finish();
    return reg;
}

json to_json(const Regularizer& reg) {
    json j{{"kind", to_string(reg.kind)}, {"lambda", reg.lambda}};
    if (reg.kind == RegKind::scad) j["a"] = reg.scad_a;
    if (reg.weights.size()) j["weights"] = vec(reg.weights);
    if (!reg.fixed_mask.empty()) j["fixed"] = bools(reg.fixed_mask);
    return j;
}

SimConfig sim_config_from_json(const json& doc) {
    ObjectReader r(doc, "sim");
    SimConfig c = default_sim_config();
    if (r.has("p")) c.p = r.integer("p");
    if (r.has("q")) c.q = r.integer("q");
    if (r.has("beta_true")) c.beta_true = r.vector("beta_true");
    if (r.has("gamma_true")) c.gamma_true = r.vector("gamma_true");
    if (r.has("group_sizes")) {
        const VectorXd s = r.vector("group_sizes");
        c.group_sizes.clear();
        for (Index k = 0; k < s.size(); ++k) {
            if (s(k) != std::floor(s(k))) throw ValidationError("sim.group_sizes must be integers");
            c.group_sizes.push_back(static_cast<Index>(s(k)));
        }
    }
    if (r.has("noise_std")) c.noise_std = r.number("noise_std");
    if (r.has("z_equals_x")) c.z_equals_x = r.boolean("z_equals_x");
    if (r.has("seed")) {
        const json& s = r.at("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
            throw ValidationError("sim.seed must be a nonnegative integer");
        c.seed = s.get<std::uint64_t>();
    }
    r.finish();
    c.validate();
    return c;
}

json to_json(const SimConfig& c) {
    json sizes = json::array();
    for (Index s : c.group_sizes) sizes.push_back(s);
    return json{{"p", c.p},
                {"q", c.q},
                {"beta_true", vec(c.beta_true)},
                {"gamma_true", vec(c.gamma_true)},
                {"group_sizes", sizes},
                {"noise_std", c.noise_std},
                {"z_equals_x", c.z_equals_x},
                {"seed", c.seed}};
}

json to_json(const GroundTruth& t) { return json{{"beta_mask", bools(t.beta_mask)}, {"gamma_mask", bools(t.gamma_mask)}}; }

GroundTruth truth_from_json(const json& doc) {
    ObjectReader r(doc, "truth");
    GroundTruth t{r.bools("beta_mask"), r.bools("gamma_mask")};
    r.finish();
    return t;
}

json to_json(const SolveReport& rep) {
    json trace = json::array();
    for (const auto& t : rep.trace)
        trace.push_back(json{{"iter", t.iter},
                             {"objective", t.objective},
                             {"residual", t.residual},
                             {"mu", t.mu},
                             {"step", t.step},
                             {"step_norm_sq", t.step_norm_sq},
                             {"prev_objective", t.prev_objective},
                             {"seconds", t.seconds}});
    return json{{"algorithm", rep.algorithm},
                {"termination", to_string(rep.termination)},
                {"iterations", rep.iterations},
                {"newton_iters", rep.newton_iters},
                {"final_objective", rep.final_objective},
                {"seconds", rep.seconds},
                {"beta_tilde", vec(rep.beta_tilde)},
                {"gamma_tilde", vec(rep.gamma_tilde)},
                {"beta_hat", vec(rep.beta_hat)},
                {"gamma_hat", vec(rep.gamma_hat)},
                {"beta_mask", bools(rep.beta_mask)},
                {"gamma_mask", bools(rep.gamma_mask)},
                {"trace", trace}};
}

std::string trace_csv(const SolveReport& rep) {
    std::ostringstream out;
    out << "iter,objective,residual,mu,step,step_norm_sq,prev_objective,seconds\n";
    for (const auto& t : rep.trace)
        out << t.iter << ',' << fmt_double(t.objective) << ',' << fmt_double(t.residual) << ',' << fmt_double(t.mu)
            << ',' << fmt_double(t.step) << ',' << fmt_double(t.step_norm_sq) << ','
            << fmt_double(t.prev_objective) << ',' << fmt_double(t.seconds) << '\n';
    return out.str();
}

FitConfig fit_config_from_json(const json& doc) {
    ObjectReader r(doc, "config");
    FitConfig c;
    if (r.has("algorithm")) c.algorithm = parse_algorithm(r.string("algorithm"));
    c.regularizer = regularizer_from_json(r.at("regularizer"));
    if (r.has("solver")) c.solver = solver_config_from_json(r.at("solver"));
    r.finish();
    return c;
}

BenchSpec bench_spec_from_json(const json& doc) {
    ObjectReader r(doc, "bench");
    BenchSpec s;
    if (r.has("algorithms")) {
        s.algorithms.clear();
        for (const auto& a : r.at("algorithms")) {
            if (!a.is_string()) throw ValidationError("bench.algorithms must be strings");
            s.algorithms.push_back(parse_algorithm(a.get<std::string>()));
        }
    }
    if (r.has("regularizers")) {
        s.regularizers.clear();
        for (const auto& k : r.at("regularizers")) {
            if (!k.is_string()) throw ValidationError("bench.regularizers must be strings");
            s.regularizers.push_back(parse_reg_kind(k.get<std::string>()));
        }
    }
    if (r.has("seeds")) s.seeds = r.integer("seeds");
    if (r.has("first_seed")) s.first_seed = static_cast<std::uint64_t>(r.integer("first_seed"));
    if (r.has("lambda_grid")) {
        const VectorXd g = r.vector("lambda_grid");
        s.lambda_grid.assign(g.data(), g.data() + g.size());
    }
    if (r.has("eta")) {
        const json& e = r.at("eta");
        if (e.is_string() && e.get<std::string>() == "auto") s.eta.reset();
        else if (e.is_number()) s.eta = e.get<double>();
        else throw ValidationError("bench.eta must be a number or \"auto\"");
    }
    if (r.has("eta_grid")) {
        const VectorXd g = r.vector("eta_grid");
        s.eta_grid.assign(g.data(), g.data() + g.size());
    }
    if (r.has("solver")) s.solver = solver_config_from_json(r.at("solver"));
    if (r.has("sim")) s.sim = sim_config_from_json(r.at("sim"));
    if (r.has("output_dir")) s.output_dir = r.string("output_dir");
    if (r.has("workers")) s.workers = r.integer("workers");
    if (r.has("max_failure_rate")) s.max_failure_rate = r.number("max_failure_rate");
    r.finish();
    s.validate();
    return s;
}

json to_json(const BenchSpec& s) {
    json algos = json::array();
    for (auto a : s.algorithms) algos.push_back(to_string(a));
    json regs = json::array();
    for (auto k : s.regularizers) regs.push_back(to_string(k));
    return json{{"algorithms", algos},
                {"regularizers", regs},
                {"seeds", s.seeds},
                {"first_seed", s.first_seed},
                {"lambda_grid", s.lambda_grid},
                {"eta", s.eta ? json(*s.eta) : json("auto")},
                {"eta_grid", s.eta_grid},
                {"solver", to_json(s.solver)},
                {"sim", to_json(s.sim)},
                {"output_dir", s.output_dir.string()},
                {"workers", s.workers},
                {"max_failure_rate", s.max_failure_rate}};
}

json to_json(const TrialResult& t) {
    return json{{"seed", t.seed},
                {"algorithm", to_string(t.algorithm)},
                {"regularizer", to_string(t.regularizer)},
                {"ok", t.ok},
                {"error", t.error},
                {"lambda", t.lambda},
                {"eta", t.eta},
                {"bic", t.bic},
                {"accuracy", t.accuracy.joint},
                {"beta_accuracy", t.accuracy.beta},
                {"gamma_accuracy", t.accuracy.gamma},
                {"f1", t.accuracy.f1},
                {"seconds", t.seconds},
                {"fit_seconds", t.fit_seconds},
                {"iterations", t.iterations},
                {"termination", to_string(t.termination)},
                {"fits", t.fits},
                {"failed_fits", t.failed_fits}};
}

json to_json(const CellSummary& c) {
    return json{{"algorithm", to_string(c.algorithm)},
                {"regularizer", to_string(c.regularizer)},
                {"trials", c.trials},
                {"failed", c.failed},
                {"accuracy_mean", c.accuracy_mean},
                {"accuracy_std", c.accuracy_std},
                {"beta_accuracy_mean", c.beta_accuracy_mean},
                {"gamma_accuracy_mean", c.gamma_accuracy_mean},
                {"f1_mean", c.f1_mean},
                {"seconds_mean", c.seconds_mean},
                {"fit_seconds_mean", c.fit_seconds_mean},
                {"seconds_per_fit_mean", c.seconds_per_fit_mean}};
}

json to_json(const BenchResult& res) {
    json trials = json::array();
    for (const auto& t : res.trials) trials.push_back(to_json(t));
    json cells = json::array();
    for (const auto& c : res.cells) cells.push_back(to_json(c));
    return json{{"spec", to_json(res.spec)},
                {"failure_rate", res.failure_rate()},
                {"cells", cells},
                {"trials", trials}};
}

json to_json(const EtaSelection& sel) {
    json rows = json::array();
    for (const auto& s : sel.scores)
        rows.push_back(json{{"eta", s.eta},
                            {"ok", s.ok},
                            {"bic", s.ok ? json(s.bic) : json(nullptr)},
                            {"error", s.error},
                            {"termination", s.ok ? json(to_string(s.report.termination)) : json(nullptr)},
                            {"beta_mask", bools(s.report.beta_mask)},
                            {"gamma_mask", bools(s.report.gamma_mask)}});
    return json{{"eta_best", sel.eta_best}, {"scores", rows}};
}

} // namespace lmesel
