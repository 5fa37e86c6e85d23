#ifndef ISF_VALIDATE_HPP
#define ISF_VALIDATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "impulsive.hpp"
#include "parallel.hpp"

namespace isf {

enum class CheckStatus { pass, fail, not_checkable };

inline const char* to_string(CheckStatus s)
{
    switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::not_checkable: return "not-checkable";
    }
    return "?";
}

/// One sampled check. `worst` is the extreme value of the checked quantity,
/// `witness` describes the sample that produced it.
struct ConditionCheck {
    std::string condition; // "C1", ..., "C5"
    std::string what;
    CheckStatus status = CheckStatus::pass;
    std::size_t samples = 0;
    double worst = 0.0;
    std::string witness;
    std::string note;
};

struct ValidationReport {
    std::string system;
    std::vector<ConditionCheck> checks;

    bool passed() const
    {
        return std::none_of(checks.begin(), checks.end(),
                            [](const ConditionCheck& c) { return c.status == CheckStatus::fail; });
    }

    std::vector<const ConditionCheck*> failures() const
    {
        std::vector<const ConditionCheck*> out;
        for (const auto& c : checks)
            if (c.status == CheckStatus::fail)
                out.push_back(&c);
        return out;
    }

    std::string text() const
    {
        std::ostringstream os;
        os << "system " << system << '\n';
        for (const auto& c : checks) {
            char worst[32];
            std::snprintf(worst, sizeof worst, "%.6g", c.worst);
            os << c.condition << "  " << to_string(c.status) << "  " << c.what << "  samples=" << c.samples
               << "  worst=" << worst;
            if (!c.witness.empty())
                os << "  witness: " << c.witness;
            if (!c.note.empty())
                os << "  (" << c.note << ')';
            os << '\n';
        }
        return os.str();
    }
};

inline std::string describe(const SuspensionPoint<CirclePoint>& p)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "(%.12g, %.12g)", p.base.angle, p.height);
    return buf;
}

inline std::string describe(const SuspensionPoint<ShiftPoint>& p)
{
    std::string w;
    for (int n = -4; n <= 4; ++n) {
        if (n == 0)
            w += '.';
        w += static_cast<char>('0' + p.base[n]);
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "(..%s.., %.12g)", w.c_str(), p.height);
    return buf;
}

/// Worst value over samples, kept per sample slot so the result does not
/// depend on the worker count.
struct SampleResult {
    double value = -std::numeric_limits<double>::infinity();
    std::string witness;
};

template <class Body>
ConditionCheck run_samples(std::string condition, std::string what, std::size_t n, std::uint64_t seed,
                           unsigned threads, Body&& body)
{
    std::vector<SampleResult> slots(n);
    parallel_for(n, threads, [&](std::size_t i) {
        Rng rng(derive_seed(seed, i));
        slots[i] = body(rng);
    });
    ConditionCheck c;
    c.condition = std::move(condition);
    c.what = std::move(what);
    c.samples = n;
    c.worst = -std::numeric_limits<double>::infinity();
    for (const auto& s : slots) {
        if (s.value > c.worst) {
            c.worst = s.value;
            c.witness = s.witness;
        }
    }
    return c;
}

template <SuspensionFlow F>
bool in_D_xi(const ImpulsiveSystem<F>& sys, const typename F::point_type& p)
{
    const double since = sys.D.last_visit(p);
    return since > 0.0 && since < sys.xi;
}

/// X_xi = X \ (D_xi u D).
template <SuspensionFlow F>
bool in_X_xi(const ImpulsiveSystem<F>& sys, const typename F::point_type& p)
{
    return !sys.D.contains(p) && !in_D_xi(sys, p);
}

/// tau*_xi: tau_1 on X_xi, 0 on D.
template <SuspensionFlow F>
double tau_star(const ImpulsiveSystem<F>& sys, const typename F::point_type& p)
{
    if (sys.D.contains(p))
        return 0.0;
    const auto hit = sys.D.first_hit(p);
    return hit ? hit->time : std::numeric_limits<double>::infinity();
}

/// Sampled evidence for (C1)-(C5). Nothing here is a proof; each entry
/// carries its sample count and worst witness.
template <SuspensionFlow F>
ValidationReport validate_conditions(const ImpulsiveSystem<F>& sys, std::size_t samples, std::uint64_t seed,
                                     unsigned threads = 1, double half_tube_C_cap = 1e3)
{
    using Point = typename F::point_type;
    if (samples == 0)
        throw std::domain_error("validate_conditions: need at least one sample");
    const F& flow = sys.flow;
    const double xi = sys.xi;
    ValidationReport rep;
    rep.system = sys.name;

    // C1: Lip(I) <= 1 on sampled pairs of D; the second half of the pairs
    // are close, built by perturbing the first point.
    {
        auto c = run_samples("C1", "Lip(I) <= 1", samples, derive_seed(seed, 1), threads, [&](Rng& rng) {
            const Point p = sys.D.sample(rng);
            Point q = sys.D.sample(rng);
            if (rng.bit())
                q.base = flow.perturb_base(p.base, std::ldexp(1.0, -static_cast<int>(rng.below(12))), rng);
            const double d = distance(flow, p, q);
            if (d == 0.0)
                return SampleResult{};
            const double ratio = distance(flow, sys.I.apply(p), sys.I.apply(q)) / d;
            return SampleResult{ratio, describe(p) + " " + describe(q)};
        });
        c.status = c.worst <= 1.0 + 1e-9 ? CheckStatus::pass : CheckStatus::fail;
        if (c.status == CheckStatus::pass)
            c.witness.clear();
        rep.checks.push_back(std::move(c));
    }
    {
        auto c = run_samples("C1", "I(D) and D disjoint", samples, derive_seed(seed, 2), threads, [&](Rng& rng) {
            const Point p = sys.D.sample(rng);
            const Point q = sys.I.apply(p);
            const double gap = sys.D.contains(q) ? 0.0 : sys.D.distance_to(q);
            return SampleResult{-gap, describe(p)};
        });
        c.worst = -c.worst; // smallest gap
        c.status = c.worst > 0.0 ? CheckStatus::pass : CheckStatus::fail;
        c.note = "gap_DI estimate";
        if (c.status == CheckStatus::pass)
            c.witness.clear();
        rep.checks.push_back(std::move(c));
    }

    // 0 < xi < xi0 is only meaningful when I(D) stays out of D_xi.
    {
        auto c = run_samples("xi", "I(D) misses D_xi", samples, derive_seed(seed, 6), threads, [&](Rng& rng) {
            const Point q = sys.I.apply(sys.D.sample(rng));
            return SampleResult{in_D_xi(sys, q) ? 1.0 : 0.0, describe(q)};
        });
        c.status = c.worst == 0.0 && xi > 0.0 && xi < sys.xi0 ? CheckStatus::pass : CheckStatus::fail;
        c.note = "xi = " + std::to_string(xi) + ", xi0 = " + std::to_string(sys.xi0);
        if (c.worst == 0.0)
            c.witness.clear();
        rep.checks.push_back(std::move(c));
    }

    // C2 needs the non-wandering set. As a heuristic, the restricted set
    // stands in for Omega \ D and I(D) must land in it.
    {
        auto c = run_samples("C2", "I(Omega n D) in Omega \\ D", samples, derive_seed(seed, 3), threads,
                             [&](Rng& rng) {
                                 const Point q = sys.I.apply(sys.D.sample(rng));
                                 const bool ok = sys.restricted && sys.restricted(q) && !sys.D.contains(q);
                                 return SampleResult{ok ? 0.0 : 1.0, describe(q)};
                             });
        c.status = CheckStatus::not_checkable;
        c.note = c.worst == 0.0 ? "heuristic holds on the restricted-set descriptor"
                                : "heuristic fails on the restricted-set descriptor";
        if (c.worst == 0.0)
            c.witness.clear();
        rep.checks.push_back(std::move(c));
    }

    // C3 (1): interior-ball probes for D_t, 0 < t <= xi.
    {
        auto c = run_samples("C3", "D_t open", samples, derive_seed(seed, 4), threads, [&](Rng& rng) {
            const double t = xi * (1.0 - rng.uniform());
            const double s = t * (0.05 + 0.9 * rng.uniform());
            const Point y = evolve(flow, sys.D.sample(rng), s);
            const double r = 0.5 * std::min(s, t - s);
            SampleResult worst{0.0, {}};
            for (int k = 0; k < 8; ++k) {
                Point q{flow.perturb_base(y.base, 0.5 * r, rng), y.height + rng.uniform(-0.5, 0.5) * r};
                q = normalize(flow, q);
                const double since = sys.D.last_visit(q);
                if (!(since > 0.0 && since < t))
                    worst = {1.0, describe(q) + " t=" + std::to_string(t)};
            }
            return worst;
        });
        c.status = c.worst == 0.0 ? CheckStatus::pass : CheckStatus::fail;
        if (c.status == CheckStatus::pass)
            c.witness.clear();
        rep.checks.push_back(std::move(c));
    }
    // C3 (2): orbits entering D_xi from outside it pass through D first.
    {
        auto c = run_samples("C3", "pullback into D before D_xi", samples, derive_seed(seed, 5), threads,
                             [&](Rng& rng) {
                                 Point x = flow.sample(rng);
                                 if (in_D_xi(sys, x))
                                     x = evolve_back(flow, x, xi);
                                 if (in_D_xi(sys, x))
                                     return SampleResult{0.0, {}};
                                 const auto hit = sys.D.first_hit(x);
                                 double t = rng.uniform() * 3.0 * flow.max_ceiling();
                                 if (rng.bit() && hit)
                                     t = hit->time + rng.uniform() * xi;
                                 if (!(t > 0.0) || !in_D_xi(sys, evolve(flow, x, t)))
                                     return SampleResult{0.0, {}};
                                 const bool ok = sys.D.contains(x) || (hit && hit->time < t);
                                 return SampleResult{ok ? 0.0 : 1.0, describe(x) + " t=" + std::to_string(t)};
                             });
        c.status = c.worst == 0.0 ? CheckStatus::pass : CheckStatus::fail;
        c.note = "checked for x outside D_xi";
        if (c.status == CheckStatus::pass)
            c.witness.clear();
        rep.checks.push_back(std::move(c));
    }

    // C4 on A = D and A = I(D).
    const ImpulsiveSet<F>* sets[2] = {&sys.D, &sys.image};
    for (int k = 0; k < 2; ++k) {
        const ImpulsiveSet<F>& A = *sets[k];
        const std::string on = " on " + A.name;
        {
            auto c = run_samples("C4", "(1) no return within xi" + on, samples, derive_seed(seed, 10 + k),
                                 threads, [&](Rng& rng) {
                                     const Point a = A.sample(rng);
                                     const auto hit = A.first_hit(a);
                                     const double back = hit ? hit->time : std::numeric_limits<double>::infinity();
                                     return SampleResult{-back, describe(a)};
                                 });
            c.worst = -c.worst; // shortest return
            c.status = c.worst >= xi ? CheckStatus::pass : CheckStatus::fail;
            c.note = "shortest return time";
            if (c.status == CheckStatus::pass)
                c.witness.clear();
            rep.checks.push_back(std::move(c));
        }
        {
            auto c = run_samples("C4", "(2) disjoint half-tubes" + on, samples, derive_seed(seed, 20 + k), threads,
                                 [&](Rng& rng) {
                                     const Point a = A.sample(rng);
                                     const double t = xi * (1.0 - rng.uniform());
                                     const Point y = evolve(flow, a, t);
                                     const double since = A.last_visit(y);
                                     const Point foot = evolve_back(flow, y, since);
                                     const double err = std::abs(since - t) + distance(flow, foot, a);
                                     return SampleResult{err, describe(a) + " t=" + std::to_string(t)};
                                 });
            c.status = c.worst <= 1e-9 ? CheckStatus::pass : CheckStatus::fail;
            c.note = "tube point traced back to a unique foot";
            if (c.status == CheckStatus::pass)
                c.witness.clear();
            rep.checks.push_back(std::move(c));
        }
        {
            auto c = run_samples("C4", "(3) distortion constant C" + on, samples, derive_seed(seed, 30 + k),
                                 threads, [&](Rng& rng) {
                                     const Point a1 = A.sample(rng);
                                     Point a2 = A.sample(rng);
                                     if (rng.bit())
                                         a2.base = flow.perturb_base(
                                             a1.base, std::ldexp(1.0, -static_cast<int>(rng.below(12))), rng);
                                     if (distance(flow, a1, a2) == 0.0)
                                         return SampleResult{0.0, {}};
                                     double s = xi * (1.0 - rng.uniform());
                                     double t = s * rng.uniform();
                                     const double num = distance(flow, evolve(flow, a1, t), evolve(flow, a2, t));
                                     const double den = distance(flow, evolve(flow, a1, s), evolve(flow, a2, s));
                                     const double ratio = den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
                                     return SampleResult{ratio, describe(a1) + " " + describe(a2)};
                                 });
            c.status = std::isfinite(c.worst) && c.worst <= half_tube_C_cap ? CheckStatus::pass : CheckStatus::fail;
            c.note = "C estimate";
            if (c.status == CheckStatus::pass)
                c.witness.clear();
            rep.checks.push_back(std::move(c));
        }
    }

    // C5: continuity of tau*_xi on X_xi u D, probed at radius 1e-7; half the
    // samples sit just below D where tau* goes to 0.
    {
        constexpr double r = 1e-7;
        auto c = run_samples("C5", "tau*_xi continuity", samples, derive_seed(seed, 40), threads, [&](Rng& rng) {
            Point p = rng.bit() ? evolve_back(flow, sys.D.sample(rng), rng.uniform() * r) : flow.sample(rng);
            if (!(sys.D.contains(p) || in_X_xi(sys, p)))
                return SampleResult{0.0, {}};
            Point q{flow.perturb_base(p.base, 0.5 * r, rng), p.height + rng.uniform(-0.5, 0.5) * r};
            q = normalize(flow, q);
            if (rng.bit() || !(sys.D.contains(q) || in_X_xi(sys, q)))
                q = sys.D.contains(p) ? evolve_back(flow, p, 0.5 * r) : q;
            if (!(sys.D.contains(q) || in_X_xi(sys, q)))
                return SampleResult{0.0, {}};
            const double gap = std::abs(tau_star(sys, p) - tau_star(sys, q));
            return SampleResult{gap, describe(p) + " " + describe(q)};
        });
        c.status = c.worst <= 1e-4 ? CheckStatus::pass : CheckStatus::fail;
        c.note = "modulus at radius 1e-7";
        if (c.status == CheckStatus::pass)
            c.witness.clear();
        rep.checks.push_back(std::move(c));
    }
    return rep;
}

} // namespace isf

#endif
