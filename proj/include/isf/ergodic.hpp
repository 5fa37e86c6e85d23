#ifndef ISF_ERGODIC_HPP
#define ISF_ERGODIC_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "examples.hpp"
#include "impulsive.hpp"
#include "parallel.hpp"
#include "pressure.hpp"
#include "random.hpp"
#include "validate.hpp"

namespace isf {

// ---------------------------------------------------------------- potentials

/// f(z, u) = sin^2(4 pi u) (1 + cos(2 pi z) / 2) on the rotation example. It
/// vanishes on D and I(D), so f = f o I on D, and at the roof, so it is
/// continuous on the torus.
inline Potential<RotationSuspension> rotation_star_potential()
{
    return Potential<RotationSuspension>::of("sin^2(4 pi u)(1 + cos(2 pi z)/2)", [](const auto& p) {
        const double s = std::sin(4.0 * std::numbers::pi * p.height);
        return s * s * (1.0 + 0.5 * std::cos(2.0 * std::numbers::pi * p.base.angle));
    });
}

/// Space average of rotation_star_potential for the unique invariant measure:
/// the orbit spends [0, 1/2) and [3/4, 1) of each cycle of length 3/4 with the
/// angle equidistributed, so the cosine term drops and the height mean is 1/2.
inline constexpr double rotation_star_average = 0.5;

/// cos(2 pi u): continuous, but f(z, 1/2) = -1 while f(I(z, 1/2)) = 0.
inline Potential<RotationSuspension> rotation_plain_potential()
{
    return Potential<RotationSuspension>::of("cos(2 pi u)", [](const auto& p) {
        return std::cos(2.0 * std::numbers::pi * p.height);
    });
}

struct StarPotentialReport {
    std::string system;
    std::string potential;
    // condition (1): f = f o I on D
    std::size_t d_samples = 0;
    double worst_jump = 0.0;
    std::string jump_witness;
    bool invariant_on_D = true;
    // condition (2): integral gap over epsilon-close stretches
    double epsilon = 0.0;
    double horizon = 0.0;
    std::size_t pairs = 0;
    std::size_t close_pairs = 0; // stayed close up to the horizon
    double K = 0.0;              // largest gap seen on a close prefix
    std::string gap_witness;

    bool passed(double K_limit = std::numeric_limits<double>::infinity()) const
    {
        return invariant_on_D && K < K_limit;
    }

    std::string text() const
    {
        std::ostringstream os;
        os.precision(6);
        os << "potential " << potential << " on " << system << '\n'
           << "f = f o I on D: " << (invariant_on_D ? "pass" : "fail") << " (" << d_samples
           << " samples, worst |f(x) - f(I x)| = " << worst_jump << ")";
        if (!invariant_on_D)
            os << " witness " << jump_witness;
        os << "\nintegral gap: K = " << K << " at eps = " << epsilon << " over t <= " << horizon << " ("
           << close_pairs << " of " << pairs << " pairs close throughout)";
        if (!gap_witness.empty())
            os << " worst pair " << gap_witness;
        os << '\n';
        return os.str();
    }
};

struct StarCheckOptions {
    double epsilon = 0.05;
    double horizon = 20.0;
    double dt = 1e-2;
    double tolerance = 1e-12;
};

/// Checks the two defining conditions of V*(psi) on samples. Condition (2)
/// is an existence statement, so it is reported as the largest integral gap
/// seen while the pair stays eps-close away from B_eps(D).
template <SuspensionFlow F>
StarPotentialReport check_star_potential(std::shared_ptr<const ImpulsiveSystem<F>> sys, const Potential<F>& f,
                                         std::size_t samples, std::uint64_t seed, const StarCheckOptions& opt = {})
{
    StarPotentialReport rep;
    rep.system = sys->name;
    rep.potential = f.name;
    rep.epsilon = opt.epsilon;
    rep.horizon = opt.horizon;

    Rng rng(derive_seed(seed, 0));
    for (std::size_t i = 0; i < samples; ++i) {
        const auto x = sys->D.sample(rng);
        const double jump = f.constant ? 0.0 : std::abs(f.eval(x) - f.eval(sys->I.apply(x)));
        ++rep.d_samples;
        if (jump > rep.worst_jump) {
            rep.worst_jump = jump;
            rep.jump_witness = describe(x);
        }
    }
    rep.invariant_on_D = rep.worst_jump <= opt.tolerance;

    if (f.constant) {
        rep.pairs = rep.close_pairs = samples;
        return rep;
    }
    const auto sf = Semiflow<F>::impulsive(sys);
    const auto steps = static_cast<std::size_t>(std::ceil(opt.horizon / opt.dt));
    Rng prng(derive_seed(seed, 1));
    for (std::size_t i = 0; i < samples; ++i) {
        const auto x = sys->sample_restricted(prng);
        auto y = x;
        y.base = sys->flow.perturb_base(x.base, 0.125 * opt.epsilon, prng);
        y.height = std::clamp(x.height + (prng.uniform() - 0.5) * 0.125 * opt.epsilon, 0.0,
                              std::nextafter(sys->flow.ceiling(y.base), 0.0));
        const auto ox = sf.trace(x, opt.horizon), oy = sf.trace(y, opt.horizon);
        ++rep.pairs;
        double ix = 0.0, iy = 0.0;
        bool close = true;
        for (std::size_t k = 0; k < steps; ++k) {
            const double s = (static_cast<double>(k) + 0.5) * opt.dt;
            const auto px = ox.at(s), py = oy.at(s);
            if (sys->D.distance_to(px) >= opt.epsilon && sys->D.distance_to(py) >= opt.epsilon &&
                sf.distance(px, py) >= opt.epsilon) {
                close = false;
                break;
            }
            ix += f.eval(px) * opt.dt;
            iy += f.eval(py) * opt.dt;
            if (std::abs(ix - iy) > rep.K) {
                rep.K = std::abs(ix - iy);
                rep.gap_witness = describe(x) + " vs " + describe(y);
            }
        }
        if (close)
            ++rep.close_pairs;
    }
    return rep;
}

// ---------------------------------------------------------------- averages

/// (1/t) int_0^t f(psi_s(p)) ds.
template <SuspensionFlow F>
double birkhoff_average(const Semiflow<F>& sf, const Potential<F>& f, const typename F::point_type& p, double t,
                        double dt = 1e-2)
{
    if (!(t > 0.0))
        throw std::domain_error("birkhoff_average: t must be positive");
    if (f.constant)
        return *f.constant;
    return birkhoff_integral(sf, f, p, t, dt) / t;
}

/// Uniform weights on psi_{k h}(p), k < n. With h = 1 this is the time-one
/// map orbit.
template <SuspensionFlow F>
struct EmpiricalMeasure {
    using Point = typename F::point_type;

    std::vector<Point> atoms;
    Point start;
    double step = 1.0;

    std::size_t size() const noexcept { return atoms.size(); }
    double weight() const noexcept { return 1.0 / static_cast<double>(atoms.size()); }

    double integrate(const Potential<F>& f) const
    {
        if (f.constant)
            return *f.constant;
        double s = 0.0;
        for (const auto& a : atoms)
            s += f.eval(a);
        return s / static_cast<double>(atoms.size());
    }

    /// |int g o psi_h dmu - int g dmu|; telescopes to |g(psi_{nh} p) - g(p)| / n.
    double pushforward_defect(const Semiflow<F>& sf, const Potential<F>& g) const
    {
        double s = 0.0;
        for (const auto& a : atoms)
            s += g.eval(sf.evolve(a, step)) - g.eval(a);
        return std::abs(s) / static_cast<double>(atoms.size());
    }

    std::string csv() const
    {
        std::ostringstream os;
        os.precision(12);
        os << "index,time,atom,weight\n";
        for (std::size_t k = 0; k < atoms.size(); ++k)
            os << k << ',' << static_cast<double>(k) * step << ",\"" << describe(atoms[k]) << "\"," << weight()
               << '\n';
        return os.str();
    }
};

template <SuspensionFlow F>
EmpiricalMeasure<F> empirical_measure(const Semiflow<F>& sf, const typename F::point_type& p, std::size_t n,
                                      double step = 1.0)
{
    if (n == 0 || !(step > 0.0))
        throw std::domain_error("empirical_measure: need n > 0 and a positive step");
    EmpiricalMeasure<F> mu{{}, p, step};
    mu.atoms.reserve(n);
    auto q = p;
    for (std::size_t k = 0; k < n; ++k) {
        mu.atoms.push_back(q);
        q = sf.evolve(q, step);
    }
    return mu;
}

// ---------------------------------------------------------------- oracles

/// The s >= 0 with exp(-s c0) + exp(-s c1) = 1: the entropy of the suspension
/// of the full 2-shift under a ceiling equal to c0 on one cylinder and c1 on
/// the other. Bisection to 1e-12.
inline double bowen_walters_root(double c0, double c1)
{
    if (!(c0 > 0.0) || !(c1 > 0.0) || !std::isfinite(c0) || !std::isfinite(c1))
        throw std::domain_error("bowen_walters_root: ceilings must be positive");
    auto g = [&](double s) { return std::exp(-s * c0) + std::exp(-s * c1) - 1.0; };
    double lo = 0.0, hi = std::numbers::ln2 / std::min(c0, c1);
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------- entropy along an orbit

struct EntropyLevel {
    double epsilon;
    std::vector<std::pair<std::size_t, std::size_t>> counts; // (n, separated n-blocks)
    bool saturated; // no pair of block lengths below the saturation count
    double rate;
};

struct EntropyEstimate {
    std::size_t n1 = 0, n2 = 0;
    double step = 1.0;
    std::vector<EntropyLevel> levels;
    double value = 0.0; // largest rate over unsaturated levels
};

/// Entropy of mu per unit time from its defining orbit. For each eps, count
/// greedily (n, eps)-separated n-blocks of atoms for n = n1, 2 n1, 4 n1, ...
/// up to n2, and stop once a count reaches 1/8 of the blocks: past that the
/// orbit is too short to show new blocks. The level's rate is
/// log(S(2n) / S(n)) / (n h) for the last pair below that count. Counts that
/// grow like a power of n (rotations, where the impulse only cuts blocks)
/// give a rate of order log 2 / (n h), so n2 should be large.
template <SuspensionFlow F>
EntropyEstimate orbit_entropy(const F& flow, const EmpiricalMeasure<F>& mu, std::size_t n1, std::size_t n2,
                              const std::vector<double>& epsilons)
{
    if (!(n1 >= 1 && n2 >= 2 * n1) || mu.size() < 2 * n2)
        throw std::domain_error("orbit_entropy: need 1 <= n1, 2 n1 <= n2 and at least 2 n2 atoms");
    const auto& q = mu.atoms;
    const std::size_t blocks = q.size() - n2 + 1;
    const std::size_t cap = blocks / 8;
    auto count = [&](std::size_t n, double eps) {
        std::vector<std::size_t> chosen;
        for (std::size_t j = 0; j < blocks && chosen.size() < cap; ++j) {
            bool separated = true;
            for (std::size_t c : chosen) {
                bool far = false;
                for (std::size_t i = 0; i < n && !far; ++i)
                    far = isf::distance(flow, q[j + i], q[c + i]) > eps;
                if (!far) {
                    separated = false;
                    break;
                }
            }
            if (separated)
                chosen.push_back(j);
        }
        return chosen.size();
    };
    EntropyEstimate est{n1, n2, mu.step, {}, 0.0};
    for (double eps : epsilons) {
        EntropyLevel lv{eps, {}, true, 0.0};
        for (std::size_t n = n1; n <= n2; n *= 2) {
            const std::size_t S = count(n, eps);
            if (S >= cap)
                break;
            if (!lv.counts.empty()) {
                const auto [m, Sm] = lv.counts.back();
                lv.rate = std::log(static_cast<double>(S) / static_cast<double>(Sm)) /
                          (static_cast<double>(m) * mu.step);
                lv.saturated = false;
            }
            lv.counts.emplace_back(n, S);
        }
        if (!lv.saturated)
            est.value = std::max(est.value, lv.rate);
        est.levels.push_back(std::move(lv));
    }
    return est;
}

// ---------------------------------------------------------------- variational harness

struct MeasureSample {
    std::string start;
    double entropy = 0.0;
    double integral = 0.0;
    double value = 0.0; // entropy + integral
};

struct VariationalReport {
    std::string system;
    std::string potential;
    double pressure = 0.0;
    double slack = 0.0;
    std::vector<MeasureSample> samples;
    double best = -std::numeric_limits<double>::infinity();

    double gap() const { return pressure - best; }

    bool holds() const
    {
        return std::all_of(samples.begin(), samples.end(),
                           [&](const MeasureSample& s) { return s.value <= pressure + slack; });
    }

    std::string csv() const
    {
        std::ostringstream os;
        os.precision(12);
        os << "start,entropy,integral,value,pressure,slack\n";
        for (const auto& s : samples)
            os << '"' << s.start << "\"," << s.entropy << ',' << s.integral << ',' << s.value << ',' << pressure
               << ',' << slack << '\n';
        return os.str();
    }

    std::string text() const
    {
        std::ostringstream os;
        os.precision(6);
        os << "variational check, " << system << ", f = " << potential << '\n'
           << "pressure " << pressure << " slack " << slack << " best h + int f " << best << " gap " << gap()
           << " -> " << (holds() ? "holds" : "violated") << '\n';
        return os.str();
    }
};

struct VariationalOptions {
    std::size_t atoms = 4000;
    /// Sampling step. Irrational so the atoms spread over the flow direction:
    /// with step 1 the rotation example only visits three heights, and such
    /// measures are psi_1-invariant but not psi-invariant.
    double step = (std::sqrt(5.0) - 1.0) / 2.0;
    std::size_t n1 = 4, n2 = 64;
    std::vector<double> epsilons{2.0, 1.5, 1.0, 0.75, 0.5, 0.25, 0.125};
};

/// One-sided check of the variational principle: each empirical measure
/// gives h + int f dmu, which must not exceed the pressure estimate plus
/// slack = max(0.1, spread of the cell slopes on the grid).
template <SuspensionFlow F>
VariationalReport variational_check(const Semiflow<F>& sf, const Potential<F>& f,
                                    const std::vector<EmpiricalMeasure<F>>& measures, const PressureEstimate& est,
                                    const VariationalOptions& opt = {})
{
    VariationalReport rep;
    rep.system = est.system;
    rep.potential = f.name;
    rep.pressure = est.value;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& c : est.cells) {
        lo = std::min(lo, c.slope);
        hi = std::max(hi, c.slope);
    }
    rep.slack = std::max(0.1, est.cells.empty() ? 0.0 : hi - lo);
    rep.samples.resize(measures.size());
    for (std::size_t i = 0; i < measures.size(); ++i) {
        const auto& mu = measures[i];
        MeasureSample s;
        s.start = describe(mu.start);
        s.entropy = orbit_entropy(sf.flow(), mu, opt.n1, opt.n2, opt.epsilons).value;
        s.integral = mu.integrate(f);
        s.value = s.entropy + s.integral;
        rep.samples[i] = s;
        rep.best = std::max(rep.best, s.value);
    }
    return rep;
}

/// Measures along the orbits of the given starts.
template <SuspensionFlow F>
VariationalReport variational_check(const Semiflow<F>& sf, const Potential<F>& f,
                                    const std::vector<typename F::point_type>& starts, const PressureEstimate& est,
                                    const VariationalOptions& opt = {})
{
    std::vector<EmpiricalMeasure<F>> measures;
    for (const auto& p : starts)
        measures.push_back(empirical_measure(sf, p, opt.atoms, opt.step));
    return variational_check(sf, f, measures, est, opt);
}

// ---------------------------------------------------------------- expansiveness

struct ExpansivenessOptions {
    double delta = 0.1;
    double epsilon = 0.25;
    double horizon = 40.0;
    double step = 0.01;
    /// Reparametrisations s(t) = alpha t.
    std::vector<double> alphas{0.9, 0.92, 0.94, 0.96, 0.98, 1.0, 1.02, 1.04, 1.06, 1.08, 1.1};
};

struct ExpansivenessReport {
    std::size_t pairs = 0;
    std::size_t translates = 0; // y = psi_r(x) with 0 <= r < delta, not searched further
    std::size_t shadowing = 0;  // the others that stayed eps-close for some alpha
    std::optional<std::string> counterexample;

    bool found() const noexcept { return counterexample.has_value(); }

    std::string text() const
    {
        std::ostringstream os;
        os << "expansiveness: " << pairs << " pairs, " << translates << " translates, " << shadowing
           << " shadowing; " << (found() ? "counterexample " + *counterexample : std::string("none found"))
           << '\n';
        return os.str();
    }
};

/// Smallest d(psi_r(x), y) over r in [0, delta): grid, then golden section.
template <SuspensionFlow F>
double translate_gap(const Semiflow<F>& sf, const typename F::point_type& x, const typename F::point_type& y,
                     double delta)
{
    const auto orbit = sf.trace(x, delta);
    auto g = [&](double r) { return sf.distance(orbit.at(r), y); };
    const int n = 256;
    int best = 0;
    double bv = g(0.0);
    for (int j = 1; j < n; ++j) {
        const double v = g(delta * j / n);
        if (v < bv) {
            bv = v;
            best = j;
        }
    }
    double lo = delta * std::max(0, best - 1) / n, hi = delta * std::min(n - 1, best + 1) / n;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 80; ++it) {
        const double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
        if (g(a) < g(b))
            hi = b;
        else
            lo = a;
    }
    return std::min(bv, g(0.5 * (lo + hi)));
}

/// Searches the given pairs for a failure of expansiveness: y is not a
/// time-delta translate of x, yet shadows x under some s(t) = alpha t up to
/// the horizon, wherever both points are outside B_eps(D).
template <SuspensionFlow F>
ExpansivenessReport expansiveness_witness(const Semiflow<F>& sf,
                                          const std::vector<std::pair<typename F::point_type,
                                                                      typename F::point_type>>& pairs,
                                          const ExpansivenessOptions& opt = {})
{
    if (!(opt.delta > 0.0) || !(opt.epsilon > 0.0))
        throw std::domain_error("expansiveness_witness: delta and epsilon must be positive");
    const ImpulsiveSystem<F>* sys = sf.system();
    auto near_D = [&](const typename F::point_type& p) {
        return sys != nullptr && sys->D.distance_to(p) < opt.epsilon;
    };
    const double amax = *std::max_element(opt.alphas.begin(), opt.alphas.end());
    const auto steps = static_cast<std::size_t>(std::floor(opt.horizon / opt.step));

    ExpansivenessReport rep;
    for (const auto& [x, y] : pairs) {
        ++rep.pairs;
        if (translate_gap(sf, x, y, opt.delta) <= 1e-9) {
            ++rep.translates;
            continue;
        }
        const auto ox = sf.trace(x, opt.horizon), oy = sf.trace(y, amax * opt.horizon);
        bool shadows = false;
        for (double alpha : opt.alphas) {
            bool ok = true;
            for (std::size_t k = 0; k <= steps && ok; ++k) {
                const double t = static_cast<double>(k) * opt.step;
                const auto px = ox.at(t), py = oy.at(alpha * t);
                if (near_D(px) || near_D(py))
                    continue;
                ok = sf.distance(px, py) < opt.epsilon;
            }
            if (ok) {
                shadows = true;
                break;
            }
        }
        if (!shadows)
            continue;
        ++rep.shadowing;
        if (!rep.counterexample)
            rep.counterexample = describe(x) + " and " + describe(y);
    }
    return rep;
}

/// Pairs in Omega \ D of the shift example whose words differ in exactly one
/// digit of index 0 <= n <= N, at equal height. Words that differ only in
/// the past never come apart in forward time, so they are left out.
inline std::vector<std::pair<ShiftSuspension::point_type, ShiftSuspension::point_type>>
shift_prefix_pairs(const ShiftSystem& sys, int N, std::size_t words, std::uint64_t seed)
{
    std::vector<std::pair<ShiftSuspension::point_type, ShiftSuspension::point_type>> out;
    Rng rng(seed);
    for (std::size_t w = 0; w < words; ++w) {
        const auto x = sys.sample_restricted(rng);
        for (int n = 0; n <= N; ++n) {
            auto y = x;
            y.base.set(n, 1 - x.base[n]);
            if (y.height >= sys.flow.ceiling(y.base))
                continue;
            out.emplace_back(x, y);
        }
    }
    return out;
}

// ---------------------------------------------------------------- specification

/// Follow x over [start, end).
template <SuspensionFlow F>
struct SpecSegment {
    typename F::point_type x;
    double start;
    double end;
};

struct SpecificationReport {
    bool supported = true;
    bool feasible = false;
    double epsilon = 0.0;
    double gap = 0.0;                 // smallest start_{i+1} - end_i
    std::vector<double> r;            // time shift per segment, r[0] = 0
    double worst_jump = 0.0;          // max |r_{i+1} - r_i|
    double worst_distance = 0.0;      // max d(psi_{t + r_i}(y), psi_t(x_i))
    double smallest_epsilon = 0.0;    // what the best splice achieves
    std::optional<double> period;     // for periodic splices
    double closing_error = 0.0;
    std::string y;

    std::string text() const
    {
        std::ostringstream os;
        os.precision(6);
        if (!supported)
            return "specification: unsupported for this system\n";
        os << "specification at eps " << epsilon << ", gap L = " << gap << ": "
           << (feasible ? "splice found" : "infeasible") << ", max |dr| " << worst_jump << ", worst distance "
           << worst_distance << ", smallest feasible eps " << smallest_epsilon;
        if (period)
            os << ", period " << *period << " closing error " << closing_error;
        os << '\n';
        return os.str();
    }
};

namespace detail {

/// Inverse of ShiftConjugacy.
inline ShiftSuspension::point_type shift_conjugacy_inverse(const ShiftSuspension::point_type& v)
{
    const ShiftPoint w = parity_recode(v.base); // an involution
    if (v.height < 1.0)
        return {w, v.height};
    return {w.flipped(), v.height + 2.0};
}

} // namespace detail

/// Empirical measure along a generic orbit of the shift example. Words have a
/// finite window, so an orbit computed by evolving one point turns periodic
/// after about 2N digits; here the target digits are drawn as the orbit
/// needs them and the atoms are pulled back through the conjugacy.
inline EmpiricalMeasure<ShiftSuspension> shift_orbit_measure(const ShiftSystem& sys, std::uint64_t seed,
                                                             std::size_t n, double step = 1.0)
{
    if (n == 0 || !(step > 0.0))
        throw std::domain_error("shift_orbit_measure: need n > 0 and a positive step");
    const auto& flow = sys.flow;
    ShiftParams prm;
    prm.a = flow.a();
    prm.b = flow.b();
    prm.window = flow.window();
    prm.tail = flow.tail();
    const ShiftConjugacy conj(prm);
    const ShiftSuspension& target = conj.target();
    const int N = flow.window();
    const double cmin = target.min_ceiling();

    Rng rng(seed);
    const auto digits = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * step / cmin)) + 2 * N + 4;
    std::vector<int> seq(digits);
    for (auto& d : seq)
        d = rng.uniform() < 0.5 ? 0 : 1;
    auto word_at = [&](std::size_t k) { // target word with index 0 at seq[k + N]
        ShiftPoint w(N, flow.tail());
        for (int j = -N; j <= N; ++j)
            w.set(j, seq[k + static_cast<std::size_t>(j + N)]);
        return w;
    };

    std::size_t k = 0;
    ShiftPoint w = word_at(k);
    double h = rng.uniform() * target.ceiling(w);
    EmpiricalMeasure<ShiftSuspension> mu{{}, detail::shift_conjugacy_inverse({w, h}), step};
    mu.atoms.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        mu.atoms.push_back(detail::shift_conjugacy_inverse({w, h}));
        h += step;
        while (h >= target.ceiling(w)) {
            h -= target.ceiling(w);
            w = word_at(++k);
        }
    }
    return mu;
}

/// Shadowing point for the shift example, spliced symbolically through the
/// conjugacy with the suspension of sigma under c o R - 2. In that picture
/// each segment pins the digits it visits, and the digits in each gap are
/// free. Gap words are enumerated, ranked by how far they move r and by the
/// weight of the digits they change next to the blocks, and the best few are
/// checked on the impulsive semiflow itself. Gaps are chosen left to right.
///
/// Shadowing is asked on [start_i, end_i) with gaps start_{i+1} - end_i in
/// between, the usual reading; without gaps the orbit of y would have to
/// jump between unrelated points.
inline SpecificationReport specification_witness(std::shared_ptr<const ShiftSystem> sys,
                                                 const std::vector<SpecSegment<ShiftSuspension>>& segments,
                                                 double eps, bool periodic = false, double check_step = 0.01)
{
    using Point = ShiftSuspension::point_type;
    if (segments.empty() || !(eps > 0.0))
        throw std::domain_error("specification_witness: need segments and eps > 0");
    SpecificationReport rep;
    rep.epsilon = eps;
    rep.gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < segments.size(); ++i)
        rep.gap = std::min(rep.gap, segments[i + 1].start - segments[i].end);
    for (const auto& s : segments)
        if (!sys->restricted(s.x) || !(s.end > s.start) || !(s.start >= 0.0))
            throw std::domain_error("specification_witness: segments must start in Omega \\ D with start < end");
    if (periodic && sys->flow.tail() != TailRule::periodic) {
        rep.supported = false;
        return rep;
    }

    const auto& flow = sys->flow;
    ShiftParams prm;
    prm.a = flow.a();
    prm.b = flow.b();
    prm.window = flow.window();
    prm.tail = flow.tail();
    const ShiftConjugacy conj(prm);
    const ShiftSuspension& target = conj.target();
    const int N = flow.window();
    const auto sf = Semiflow<ShiftSuspension>::impulsive(sys);
    constexpr int max_gap_digits = 14;
    constexpr std::size_t checked_per_gap = 64;

    // target orbit of z: index and height at time t
    auto locate = [&](const Point& z, double t) {
        int k = 0;
        double h = z.height + t;
        ShiftPoint w = z.base;
        while (h >= target.ceiling(w)) {
            h -= target.ceiling(w);
            w = w.shifted();
            ++k;
        }
        return std::pair<int, double>{k, h};
    };
    const double c0 = target.ceiling(ShiftPoint::constant(0, N, TailRule::zero_fill));
    const double c1 = target.ceiling(ShiftPoint::constant(1, N, TailRule::zero_fill));

    const std::size_t n = segments.size();
    std::vector<Point> z(n);
    std::vector<int> ks(n), ke(n);
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = conj(segments[i].x);
        ks[i] = locate(z[i], segments[i].start).first;
        ke[i] = locate(z[i], segments[i].end).first;
    }
    std::vector<double> hs(n);
    for (std::size_t i = 0; i < n; ++i)
        hs[i] = locate(z[i], segments[i].start).second;

    using Trace = decltype(sf.trace(segments[0].x, 0.0));
    std::vector<Trace> traces;
    for (const auto& s : segments)
        traces.push_back(sf.trace(s.x, s.end));

    // word under construction: digit j of y sits in word[j + N]; P[i] is the
    // index of y that plays index ks[i] of z[i]
    std::vector<int> word(2 * N + 1, 0);
    std::vector<int> P(n, 0);
    std::vector<double> r(n, 0.0);
    auto copy_from = [&](std::size_t i, int from) { // z[i] onto y from index from on
        for (int j = from; j <= N; ++j) {
            const int src = j - P[i] + ks[i];
            word[j + N] = src >= -N && src <= N ? z[i].base[src] : 0;
        }
    };
    auto arrival = [&](int j) { // time at which y reaches index j
        double s = -z[0].height;
        for (int k = 0; k < j; ++k)
            s += word[k + N] == 0 ? c0 : c1;
        return s;
    };
    auto make_y = [&]() {
        ShiftPoint w(N, flow.tail());
        for (int j = -N; j <= N; ++j)
            w.set(j, word[j + N]);
        return detail::shift_conjugacy_inverse({w, z[0].height});
    };
    auto distance_on = [&](const Point& y, std::size_t i) {
        const auto& s = segments[i];
        const auto oy = sf.trace(y, s.end + r[i]);
        double worst = 0.0;
        for (double t = s.start; t < s.end; t += check_step)
            worst = std::max(worst, sf.distance(oy.at(t + r[i]), traces[i].at(t)));
        return worst;
    };

    // block 0 with its whole past, then z[0]'s future
    for (int j = -N; j <= N; ++j)
        word[j + N] = z[0].base[j];
    P[0] = ks[0];

    bool built = true;
    double jump = 0.0;
    for (std::size_t i = 1; i < n && built; ++i) {
        const int free_from = P[i - 1] + (ke[i - 1] - ks[i - 1]) + 1; // first free index
        struct Candidate {
            int G;
            unsigned bits;
            double r;
            double score;
        };
        std::vector<Candidate> cands;
        const double t_free = arrival(free_from);
        for (int G = 0; G <= max_gap_digits; ++G) {
            const int Pi = free_from + G;
            if (Pi + (ke[i] - ks[i]) > N)
                break;
            if (t_free + G * std::min(c0, c1) + hs[i] - segments[i].start > r[i - 1] + eps)
                break;
            for (unsigned bits = 0; bits < (1u << G); ++bits) {
                const int ones = std::popcount(bits);
                const double ri = t_free + (G - ones) * c0 + ones * c1 + hs[i] - segments[i].start;
                if (std::abs(ri - r[i - 1]) >= eps || segments[i].start + ri < 0.0)
                    continue;
                // digits that disagree with the future of z[i-1] or the
                // past of z[i], weighted like the metric
                double miss = 0.0;
                for (int g = 0; g < G; ++g) {
                    const int d = (bits >> g) & 1u;
                    const int after = g + 1 + (ke[i - 1] - ks[i - 1]) + ks[i - 1]; // index in z[i-1]
                    const int before = ks[i] - (G - g);                             // index in z[i]
                    if (after <= N && d != z[i - 1].base[after])
                        miss += std::ldexp(1.0, -(g + 1));
                    if (before >= -N && d != z[i].base[before])
                        miss += std::ldexp(1.0, -(G - g));
                }
                cands.push_back({G, bits, ri, std::max(std::abs(ri - r[i - 1]), miss)});
            }
        }
        if (cands.empty()) {
            built = false;
            break;
        }
        std::sort(cands.begin(), cands.end(), [](const Candidate& u, const Candidate& v) {
            return std::tie(u.score, u.G, u.bits) < std::tie(v.score, v.G, v.bits);
        });
        if (cands.size() > checked_per_gap)
            cands.resize(checked_per_gap);

        const std::vector<int> saved = word;
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> best_word;
        double best_r = 0.0;
        int best_P = 0;
        for (const auto& c : cands) {
            word = saved;
            P[i] = free_from + c.G;
            for (int g = 0; g < c.G; ++g)
                word[free_from + g + N] = (c.bits >> g) & 1u;
            copy_from(i, P[i]);
            r[i] = c.r;
            const Point y = make_y();
            const double got = std::max({std::abs(c.r - r[i - 1]), distance_on(y, i - 1), distance_on(y, i)});
            if (got < best) {
                best = got;
                best_word = word;
                best_r = c.r;
                best_P = P[i];
            }
        }
        word = best_word;
        r[i] = best_r;
        P[i] = best_P;
        jump = std::max(jump, std::abs(r[i] - r[i - 1]));
    }

    rep.smallest_epsilon = std::numeric_limits<double>::infinity();
    if (!built)
        return rep;
    const Point y = make_y();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        worst = std::max(worst, distance_on(y, i));
    rep.r = r;
    rep.worst_jump = jump;
    rep.worst_distance = worst;
    rep.smallest_epsilon = std::max(worst, jump);
    rep.y = describe(y);
    rep.feasible = rep.smallest_epsilon < eps;
    if (periodic) {
        // one cycle of psi from height 0 moves the word by sigma o R and
        // lasts c(R w) - 2; R has odd order on a window of odd length, so
        // the orbit may need two turns of the window
        double T = 0.0;
        ShiftPoint w = y.base;
        Point start = y;
        if (y.height >= 1.0) { // run to the next roof first
            T = flow.ceiling(y.base) - y.height;
            w = y.base.shifted();
            start = {w, 0.0};
        }
        const double lead = T;
        for (int k = 1; k <= 2 * (2 * N + 1); ++k) {
            T += flow.ceiling(w.flipped()) - 2.0;
            w = w.flipped().shifted();
            if (w == start.base && k % (2 * N + 1) == 0)
                break;
        }
        rep.period = T - lead;
        rep.closing_error = sf.distance(sf.evolve(start, *rep.period), start);
    }
    return rep;
}

} // namespace isf

#endif
