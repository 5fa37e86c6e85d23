// Experiment runner for the impulsive semiflow library.
//
//   isf_cli run <experiment> [options]      (also: isf_cli <experiment>, or --experiment)
//
// Writes results.csv, summary.txt and plotdata_*.csv into --out.
// Exit codes: 0 ok, 2 a check failed, 3 non-convergence, 64 usage, 65 bad parameters.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "isf/ergodic.hpp"
#include "isf/quotient.hpp"

namespace {

using namespace isf;

constexpr int exit_ok = 0;
constexpr int exit_check_failed = 2;
constexpr int exit_nonconvergence = 3;
constexpr int exit_usage = 64;
constexpr int exit_invalid = 65;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidParameter : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Config {
    std::string experiment;
    std::string system = "rotation";
    double theta1 = RotationParams{}.theta1;
    double theta2 = RotationParams{}.theta2;
    double a = ShiftParams{}.a;
    double b = ShiftParams{}.b;
    int word_window = ShiftParams{}.window;
    std::vector<double> epsilons;
    std::vector<double> deltas;
    std::vector<double> ts;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::string out = ".";
    std::size_t samples = 1000;
    double t = 10.0;
    double dt = 0.05;
    bool base_only = false;
    std::string potential = "zero";
    int restarts = 1;
    std::size_t starts = 4;
    std::size_t atoms = VariationalOptions{}.atoms;
};

std::string g12(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string quoted(const std::string& s) { return '"' + s + '"'; }

class Output {
public:
    explicit Output(std::filesystem::path dir) : dir_(std::move(dir))
    {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec)
            throw InvalidParameter("--out: cannot create " + dir_.string() + ": " + ec.message());
    }

    void write(const std::string& name, const std::string& body) const
    {
        std::ofstream f(dir_ / name, std::ios::binary);
        if (!f)
            throw InvalidParameter("--out: cannot write " + (dir_ / name).string());
        f << body;
    }

private:
    std::filesystem::path dir_;
};

/// x/y columns; `series` tells curves apart.
struct PlotData {
    std::ostringstream os;
    PlotData() { os << "series,x,y\n"; }
    void add(const std::string& series, double x, double y) { os << series << ',' << g12(x) << ',' << g12(y) << '\n'; }
    std::string str() const { return os.str(); }
};

PressureGrid make_grid(const Config& c, const PressureGrid& fallback)
{
    PressureGrid g = fallback;
    if (!c.epsilons.empty())
        g.epsilons = c.epsilons;
    if (!c.deltas.empty())
        g.delta_fractions = c.deltas;
    if (!c.ts.empty())
        g.times = c.ts;
    for (double e : g.epsilons)
        if (!(e > 0.0))
            throw InvalidParameter("--epsilons: values must be positive");
    for (double d : g.delta_fractions)
        if (!(d > 0.0 && d < 0.5))
            throw InvalidParameter("--deltas: fractions of eta must lie in (0, 1/2)");
    for (double t : g.times)
        if (!(t > 0.0))
            throw InvalidParameter("--ts: times must be positive");
    if (g.epsilons.empty() || g.times.size() < 2)
        throw InvalidParameter("grid: need at least one epsilon and two times");
    return g;
}

std::string grid_csv(const PressureEstimate& est, const std::string& label)
{
    std::ostringstream os;
    os << "estimate,epsilon,delta,t,cardinality,logZ,logZ_over_t\n";
    for (const auto& r : est.grid)
        os << label << ',' << g12(r.epsilon) << ',' << g12(r.delta) << ',' << g12(r.t) << ',' << r.cardinality << ','
           << g12(r.logZ) << ',' << g12(r.logZ_over_t) << '\n';
    return os.str();
}

void add_curves(PlotData& growth, PlotData& trend, const PressureEstimate& est, const std::string& label)
{
    for (const auto& r : est.grid)
        growth.add(label + " eps=" + g12(r.epsilon) + " delta=" + g12(r.delta), r.t, r.logZ_over_t);
    for (const auto& c : est.cells)
        trend.add(label + " delta=" + g12(c.delta), c.epsilon, c.slope);
}

std::string estimate_text(const PressureEstimate& est, const std::string& label)
{
    std::ostringstream os;
    os << label << " = " << g12(est.value) << " (slope error " << g12(est.value_error) << ")\n"
       << "  system " << est.system << ", potential " << est.potential << ", window " << est.window << '\n'
       << "  " << est.extrapolation << '\n'
       << "  converged: " << (est.converged ? "yes" : "no") << '\n';
    try {
        os << check_monotonicity(est).text();
    } catch (const InsufficientGrid& e) {
        os << "  monotonicity: " << e.what() << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------- systems

/// zero, one, or a number.
template <class P>
Potential<P> constant_potential(const std::string& name)
{
    if (name == "zero")
        return Potential<P>::zero();
    if (name == "one")
        return Potential<P>::constant_value(1.0);
    try {
        std::size_t used = 0;
        const double v = std::stod(name, &used);
        if (used == name.size() && std::isfinite(v))
            return Potential<P>::constant_value(v);
    } catch (const std::exception&) {
    }
    throw InvalidParameter("--potential: expected zero, one, star, plain or a number, got '" + name + "'");
}


template <class Sys>
struct Setup;

template <>
struct Setup<RotationSystem> {
    using Flow = RotationSuspension;
    static std::shared_ptr<const RotationSystem> make(const Config& c)
    {
        RotationParams p;
        p.theta1 = c.theta1;
        p.theta2 = c.theta2;
        if (!(c.theta1 > 0.0 && c.theta1 < 1.0))
            throw InvalidParameter("--theta1 must lie in (0, 1)");
        return rotation_example(p);
    }
    static CandidatePlan<Flow> plan(const Semiflow<Flow>& sf) { return lattice_candidates(sf.flow()); }
    static PressureGrid grid()
    {
        PressureGrid g;
        g.epsilons = {0.25, 0.125};
        g.delta_fractions = {0.25, 0.125};
        g.times = {10, 20, 30};
        return g;
    }
    static Potential<Flow> potential(const std::string& name)
    {
        if (name == "star")
            return rotation_star_potential();
        if (name == "plain")
            return rotation_plain_potential();
        return constant_potential<Flow>(name);
    }
    static std::string base_text(const Flow::point_type& p) { return g12(p.base.angle); }
    static std::vector<EmpiricalMeasure<Flow>> measures(const RotationSystem& sys, const Semiflow<Flow>& sf,
                                                        const Config& c, const VariationalOptions& opt)
    {
        std::vector<EmpiricalMeasure<Flow>> out;
        Rng rng(derive_seed(c.seed, 77));
        for (std::size_t i = 0; i < c.starts; ++i)
            out.push_back(empirical_measure(sf, sys.sample_restricted(rng), opt.atoms, opt.step));
        return out;
    }
};

template <>
struct Setup<ShiftSystem> {
    using Flow = ShiftSuspension;
    static std::shared_ptr<const ShiftSystem> make(const Config& c)
    {
        ShiftParams p;
        p.a = c.a;
        p.b = c.b;
        p.window = c.word_window;
        try {
            return shift_example(p);
        } catch (const std::domain_error& e) {
            throw InvalidParameter(e.what());
        }
    }
    static CandidatePlan<Flow> plan(const Semiflow<Flow>& sf) { return itinerary_candidates(sf); }
    static PressureGrid grid()
    {
        PressureGrid g;
        g.epsilons = {0.25, 0.125};
        g.delta_fractions = {0.25, 0.125};
        g.times = {8, 12, 16, 20};
        return g;
    }
    static Potential<Flow> potential(const std::string& name)
    {
        if (name == "star" || name == "plain")
            throw InvalidParameter("--potential " + name + " is defined for the rotation example only");
        return constant_potential<Flow>(name);
    }
    static std::string base_text(const Flow::point_type& p)
    {
        std::string w;
        for (int n = -8; n <= 8; ++n) {
            if (n == 0)
                w += '.';
            w += static_cast<char>('0' + p.base[n]);
        }
        return w;
    }
    static std::vector<EmpiricalMeasure<Flow>> measures(const ShiftSystem& sys, const Semiflow<Flow>&,
                                                        const Config& c, const VariationalOptions& opt)
    {
        std::vector<EmpiricalMeasure<Flow>> out;
        for (std::size_t i = 0; i < c.starts; ++i)
            out.push_back(shift_orbit_measure(sys, derive_seed(c.seed, 77 + i), opt.atoms, opt.step));
        return out;
    }
};

// ---------------------------------------------------------------- experiments

template <class Sys>
int simulate(const Config& c, const Output& out)
{
    using S = Setup<Sys>;
    const auto sys = S::make(c);
    if (!(c.t > 0.0) || !(c.dt > 0.0))
        throw InvalidParameter("--t and --dt must be positive");
    Rng rng(c.seed);
    const auto p = sys->sample_restricted(rng);
    const auto sf = Semiflow<typename S::Flow>::impulsive(sys);
    const auto orbit = sf.trace(p, c.t);
    const auto taus = impulsive_times(*sys, p, c.t);

    // rows on the dt grid, plus the post-impulse point of each impulse piece
    struct Row {
        double t;
        std::optional<typename S::Flow::point_type> jump;
    };
    std::vector<Row> rows;
    const auto steps = static_cast<std::size_t>(std::floor(c.t / c.dt + 1e-9));
    for (std::size_t k = 0; k <= steps; ++k)
        rows.push_back({static_cast<double>(k) * c.dt, std::nullopt});
    for (const auto& pc : orbit.pieces)
        if (pc.cause == PieceCause::impulse)
            rows.push_back({pc.start, pc.point});
    std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) { return x.t < y.t; });

    std::ostringstream csv;
    csv << "t,impulsive_time,base,height\n";
    PlotData plot;
    for (const auto& r : rows) {
        const auto q = r.jump ? *r.jump : orbit.at(r.t);
        csv << g12(r.t) << ',' << (r.jump ? 1 : 0) << ',' << S::base_text(q) << ',' << g12(q.height) << '\n';
        if (!r.jump)
            plot.add("height", r.t, q.height);
    }
    out.write("results.csv", csv.str());
    out.write("plotdata_height.csv", plot.str());

    std::ostringstream sum;
    sum << "simulate " << sys->name << ", seed " << c.seed << ", t = " << g12(c.t) << '\n'
        << "start " << describe(p) << '\n'
        << "end " << describe(orbit.at(c.t)) << '\n'
        << "impulsive times (" << taus.size() << "):";
    for (double s : taus)
        sum << ' ' << g12(s);
    sum << '\n';
    out.write("summary.txt", sum.str());
    std::cout << sum.str();
    return exit_ok;
}

template <class Sys>
int run_pressure(const Config& c, const Output& out, bool windowed)
{
    using S = Setup<Sys>;
    using F = typename S::Flow;
    const auto sys = S::make(c);
    const auto f = S::potential(c.potential);
    const PressureGrid g = make_grid(c, S::grid());
    PressureOptions opt;
    opt.seed = c.seed;
    opt.threads = c.threads;
    opt.restarts = c.restarts;

    const auto sf = c.base_only ? Semiflow<F>::continuous(sys->flow) : Semiflow<F>::impulsive(sys);
    std::function<SeparationWindow<F>(double)> win;
    double eta = 0.0;
    std::string label = "P";
    if (windowed) {
        if (c.base_only) {
            auto T = std::make_shared<const AdmissibleTimes<F>>(visit_times(sys->flow, sys->D, sys->flow.min_ceiling()));
            win = [T](double d) { return SeparationWindow<F>::excluding(T, d); };
            eta = T->eta;
            label = "P^T";
        } else {
            win = excluding_times(sys, TimesLabel::tau);
            eta = sys->eta;
            label = "P^tau";
        }
    }
    const auto est = pressure<F>(sf, f, win, eta, g, S::plan(sf), opt);

    PlotData growth, trend;
    add_curves(growth, trend, est, label);
    out.write("results.csv", grid_csv(est, label));
    out.write("plotdata_growth.csv", growth.str());
    out.write("plotdata_eps_trend.csv", trend.str());
    const std::string text = estimate_text(est, label);
    out.write("summary.txt", text);
    std::cout << text;
    return est.converged ? exit_ok : exit_nonconvergence;
}

template <class Sys>
int theorem_b(const Config& c, const Output& out)
{
    using S = Setup<Sys>;
    using F = typename S::Flow;
    const auto sys = S::make(c);
    const auto f = S::potential(c.potential);
    const PressureGrid g = make_grid(c, S::grid());
    PressureOptions opt;
    opt.seed = c.seed;
    opt.threads = c.threads;
    opt.restarts = c.restarts;

    // P^T = P holds for continuous semiflows, so the experiment always runs on
    // the base flow; --base-only only makes that explicit
    const auto sf = Semiflow<F>::continuous(sys->flow);
    auto T = std::make_shared<const AdmissibleTimes<F>>(visit_times(sys->flow, sys->D, sys->flow.min_ceiling()));
    const auto plan = S::plan(sf);
    const auto P = pressure<F>(sf, f, {}, 0.0, g, plan, opt);
    const auto PT = pressure<F>(
        sf, f, [T](double d) { return SeparationWindow<F>::excluding(T, d); }, T->eta, g, plan, opt);

    std::string csv = grid_csv(P, "P");
    const std::string windowed = grid_csv(PT, "P^T");
    csv += windowed.substr(windowed.find('\n') + 1);
    PlotData growth, trend;
    add_curves(growth, trend, P, "P");
    add_curves(growth, trend, PT, "P^T");
    out.write("results.csv", csv);
    out.write("plotdata_growth.csv", growth.str());
    out.write("plotdata_eps_trend.csv", trend.str());

    std::ostringstream sum;
    sum << "|P^T - P| = " << g12(std::abs(PT.value - P.value)) << '\n'
        << estimate_text(P, "P") << estimate_text(PT, "P^T");
    out.write("summary.txt", sum.str());
    std::cout << sum.str();
    return P.converged && PT.converged ? exit_ok : exit_nonconvergence;
}

template <class Sys>
int variational(const Config& c, const Output& out)
{
    using S = Setup<Sys>;
    using F = typename S::Flow;
    const auto sys = S::make(c);
    const auto f = S::potential(c.potential);
    const PressureGrid g = make_grid(c, S::grid());
    PressureOptions popt;
    popt.seed = c.seed;
    popt.threads = c.threads;
    popt.restarts = c.restarts;
    const auto sf = Semiflow<F>::impulsive(sys);
    const auto est = pressure<F>(sf, f, excluding_times(sys, TimesLabel::tau), sys->eta, g, S::plan(sf), popt);

    VariationalOptions opt;
    opt.atoms = c.atoms;
    if (c.atoms < 2 * opt.n2)
        throw InvalidParameter("--atoms must be at least " + std::to_string(2 * opt.n2));
    const auto rep = variational_check(sf, f, S::measures(*sys, sf, c, opt), est, opt);

    std::ostringstream csv;
    csv << "start,entropy,integral,value,pressure,slack\n";
    PlotData plot;
    for (std::size_t i = 0; i < rep.samples.size(); ++i) {
        const auto& m = rep.samples[i];
        csv << quoted(m.start) << ',' << g12(m.entropy) << ',' << g12(m.integral) << ',' << g12(m.value) << ','
            << g12(rep.pressure) << ',' << g12(rep.slack) << '\n';
        plot.add("h+int f", static_cast<double>(i), m.value);
        plot.add("pressure", static_cast<double>(i), rep.pressure);
    }
    out.write("results.csv", csv.str());
    out.write("plotdata_functional.csv", plot.str());
    const std::string text = rep.text() + estimate_text(est, "P^tau");
    out.write("summary.txt", text);
    std::cout << text;
    if (!rep.holds())
        return exit_check_failed;
    return est.converged ? exit_ok : exit_nonconvergence;
}

template <class Sys>
int validate(const Config& c, const Output& out)
{
    using S = Setup<Sys>;
    const auto sys = S::make(c);
    if (c.samples == 0)
        throw InvalidParameter("--samples must be positive");
    const auto rep = validate_conditions(*sys, c.samples, c.seed, c.threads);
    std::ostringstream csv;
    csv << "condition,check,status,samples,worst,witness,note\n";
    for (const auto& k : rep.checks)
        csv << k.condition << ',' << quoted(k.what) << ',' << to_string(k.status) << ',' << k.samples << ','
            << g12(k.worst) << ',' << quoted(k.witness) << ',' << quoted(k.note) << '\n';
    out.write("results.csv", csv.str());
    PlotData plot;
    for (std::size_t i = 0; i < rep.checks.size(); ++i)
        plot.add(rep.checks[i].condition, static_cast<double>(i), rep.checks[i].worst);
    out.write("plotdata_worst.csv", plot.str());
    const std::string text = rep.text() + (rep.passed() ? "all checks passed\n" : "some checks failed\n");
    out.write("summary.txt", text);
    std::cout << text;
    return rep.passed() ? exit_ok : exit_check_failed;
}

template <class Sys>
int quotient(const Config& c, const Output& out)
{
    using S = Setup<Sys>;
    const auto sys = S::make(c);
    if (c.samples == 0)
        throw InvalidParameter("--samples must be positive");
    // half the pairs near the gluing, where chains matter
    std::vector<std::pair<typename S::Flow::point_type, typename S::Flow::point_type>> pairs(c.samples);
    Rng rng(c.seed);
    for (auto& pr : pairs) {
        auto x = sys->flow.sample(rng), y = sys->flow.sample(rng);
        if (rng.uniform() < 0.5)
            x = sys->D.nearest(x);
        if (rng.uniform() < 0.5)
            y = sys->image.nearest(y);
        pr = {x, y};
    }
    struct Row {
        double d, dq, pair;
    };
    std::vector<Row> rows(pairs.size());
    parallel_for(pairs.size(), c.threads, [&](std::size_t i) {
        const auto cx = project(*sys, pairs[i].first), cy = project(*sys, pairs[i].second);
        rows[i] = {sys->flow.distance(pairs[i].first, pairs[i].second), quotient_metric(*sys, cx, cy),
                   closest_representatives(sys->flow, cx, cy).distance};
    });

    std::ostringstream csv;
    csv << "index,x,y,d,dtilde,closest_pair\n";
    PlotData plot;
    double worst_excess = -INFINITY;
    std::size_t far_pairs = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        csv << i << ',' << quoted(describe(pairs[i].first)) << ',' << quoted(describe(pairs[i].second)) << ','
            << g12(r.d) << ',' << g12(r.dq) << ',' << g12(r.pair) << '\n';
        plot.add("dtilde vs d", r.d, r.dq);
        worst_excess = std::max(worst_excess, r.dq - r.d);
        far_pairs += r.pair > 2.0 * r.dq + 1e-9 ? 1 : 0;
    }
    out.write("results.csv", csv.str());
    out.write("plotdata_dtilde.csv", plot.str());
    std::ostringstream sum;
    sum << "quotient metric on " << sys->name << ", " << rows.size() << " pairs\n"
        << "max dtilde - d = " << g12(worst_excess) << (worst_excess <= 0.0 ? " (dtilde <= d holds)\n" : "\n")
        << "pairs whose closest representatives are farther than 2 dtilde: " << far_pairs << '\n';
    out.write("summary.txt", sum.str());
    std::cout << sum.str();
    return worst_excess <= 0.0 ? exit_ok : exit_check_failed;
}

template <class Sys>
int dispatch(const Config& c, const Output& out)
{
    const std::string& e = c.experiment;
    if (e == "simulate")
        return simulate<Sys>(c, out);
    if (e == "pressure")
        return run_pressure<Sys>(c, out, false);
    if (e == "t_pressure")
        return run_pressure<Sys>(c, out, true);
    if (e == "theorem_b")
        return theorem_b<Sys>(c, out);
    if (e == "variational")
        return variational<Sys>(c, out);
    if (e == "validate")
        return validate<Sys>(c, out);
    if (e == "quotient_metric")
        return quotient<Sys>(c, out);
    throw UsageError("unknown experiment '" + e + "'");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Experiments on impulsive semiflows: pressure, T-pressure, quotient metric, validation"};
    app.set_config("--config", "", "key = value file; flags given on the command line win");
    app.allow_config_extras(false);

    Config c;
    std::vector<std::string> words;
    app.add_option("command", words, "[run] <experiment>: simulate, pressure, t_pressure, theorem_b, variational, "
                                     "validate, quotient_metric");
    app.add_option("--experiment", c.experiment, "Experiment, instead of the positional name");
    app.add_option("--system", c.system, "rotation or shift")->check(CLI::IsMember({"rotation", "shift"}));
    app.add_option("--theta1", c.theta1, "Rotation angle of the base circle");
    app.add_option("--theta2", c.theta2, "Angle added by the impulse");
    app.add_option("--a", c.a, "Ceiling on words with x_0 = 0 (> 3)");
    app.add_option("--b", c.b, "Ceiling on words with x_0 = 1 (> 3)");
    app.add_option("--word-window", c.word_window, "Digits kept on each side of x_0");
    app.add_option("--epsilons", c.epsilons, "Comma-separated separation scales")->delimiter(',');
    app.add_option("--deltas", c.deltas, "Comma-separated delta values, as fractions of eta")->delimiter(',');
    app.add_option("--ts", c.ts, "Comma-separated times")->delimiter(',');
    app.add_option("--seed", c.seed, "Random seed");
    app.add_option("--threads", c.threads, "Worker threads, 0 for all cores");
    app.add_option("--out", c.out, "Output directory");
    app.add_option("--samples", c.samples, "Samples for validate and quotient_metric");
    app.add_option("--t", c.t, "Horizon for simulate");
    app.add_option("--dt", c.dt, "Output step for simulate");
    app.add_flag("--base-only", c.base_only, "Use the flow without impulses");
    app.add_option("--potential", c.potential, "zero, one, star (rotation), plain (rotation) or a constant");
    app.add_option("--restarts", c.restarts, "Greedy restarts per grid cell");
    app.add_option("--starts", c.starts, "Measures sampled by the variational experiment");
    app.add_option("--atoms", c.atoms, "Atoms per empirical measure");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    if (!words.empty() && words.front() == "run")
        words.erase(words.begin());
    if (words.size() > 1) {
        std::cerr << "usage: isf_cli [run] <experiment> [options]\n";
        return exit_usage;
    }
    if (!words.empty()) {
        if (!c.experiment.empty() && c.experiment != words.front()) {
            std::cerr << "experiment given twice: " << words.front() << " and " << c.experiment << '\n';
            return exit_usage;
        }
        c.experiment = words.front();
    }
    if (c.experiment.empty()) {
        std::cerr << "no experiment given\n" << app.help();
        return exit_usage;
    }

    try {
        if (c.restarts < 1)
            throw InvalidParameter("--restarts must be at least 1");
        const Output out(c.out);
        return c.system == "rotation" ? dispatch<RotationSystem>(c, out) : dispatch<ShiftSystem>(c, out);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const InvalidParameter& e) {
        std::cerr << "invalid parameter: " << e.what() << '\n';
        return exit_invalid;
    } catch (const std::domain_error& e) {
        std::cerr << "invalid parameter: " << e.what() << '\n';
        return exit_invalid;
    }
}
