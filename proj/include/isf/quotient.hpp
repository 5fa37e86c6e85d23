#ifndef ISF_QUOTIENT_HPP
#define ISF_QUOTIENT_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "impulsive.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "validate.hpp"

namespace isf {

/// A ~-class, listed by its members. x ~ y iff x = y, y = I(x), x = I(y) or
/// I(x) = I(y). The first representative is the point the class was built from.
template <SuspensionFlow F>
struct QuotientClass {
    std::vector<typename F::point_type> representatives;

    const typename F::point_type& front() const { return representatives.front(); }
    std::size_t size() const noexcept { return representatives.size(); }
};

template <SuspensionFlow F>
QuotientClass<F> project(const ImpulsiveSystem<F>& sys, const typename F::point_type& p)
{
    using Point = typename F::point_type;
    QuotientClass<F> c{{p}};
    auto add = [&c](const Point& q) {
        if (std::find(c.representatives.begin(), c.representatives.end(), q) == c.representatives.end())
            c.representatives.push_back(q);
    };
    if (sys.D.contains(p)) {
        const Point y = sys.I.apply(p);
        add(y);
        for (const Point& z : sys.I.preimages(y))
            if (sys.flow.distance(z, p) > time_tolerance)
                add(z);
    } else if (sys.image.contains(p)) {
        for (const Point& z : sys.I.preimages(p))
            add(z);
    }
    return c;
}

/// pi restricted to X_xi. Classes of X_xi points meet X_xi only in that point.
template <SuspensionFlow F>
QuotientClass<F> H(const ImpulsiveSystem<F>& sys, const typename F::point_type& p)
{
    if (!in_X_xi(sys, p))
        throw std::domain_error("H: point " + describe(p) + " is not in X_xi");
    return project(sys, p);
}

/// The representative lying in X_xi, if any.
template <SuspensionFlow F>
std::optional<typename F::point_type> representative_in_X_xi(const ImpulsiveSystem<F>& sys,
                                                             const QuotientClass<F>& c)
{
    for (const auto& r : c.representatives)
        if (in_X_xi(sys, r))
            return r;
    return std::nullopt;
}

template <SuspensionFlow F>
typename F::point_type H_inverse(const ImpulsiveSystem<F>& sys, const QuotientClass<F>& c)
{
    auto r = representative_in_X_xi(sys, c);
    if (!r)
        throw std::domain_error("H_inverse: class of " + describe(c.front()) + " misses X_xi");
    return *r;
}

template <SuspensionFlow F>
double class_distance(const F& flow, const QuotientClass<F>& a, const QuotientClass<F>& b)
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : a.representatives)
        for (const auto& q : b.representatives)
            best = std::min(best, flow.distance(p, q));
    return best;
}

/// Representatives p ~ x, q ~ y at minimal d(p, q).
template <SuspensionFlow F>
struct RepresentativePair {
    typename F::point_type p;
    typename F::point_type q;
    double distance = 0.0;
};

template <SuspensionFlow F>
RepresentativePair<F> closest_representatives(const F& flow, const QuotientClass<F>& a,
                                              const QuotientClass<F>& b)
{
    RepresentativePair<F> best{a.front(), b.front(), std::numeric_limits<double>::infinity()};
    for (const auto& p : a.representatives)
        for (const auto& q : b.representatives) {
            const double d = flow.distance(p, q);
            if (d < best.distance)
                best = {p, q, d};
        }
    return best;
}

struct QuotientOptions {
    /// Number of d-terms allowed in a chain.
    int max_chain = 3;
};

/// Chain infimum over chains of at most max_chain terms. Intermediate classes
/// are drawn from sys.breakpoints, propagated hop by hop from both ends, so
/// the minimum is exact whenever every term is piecewise linear with its
/// minima at those breakpoints (the rotation example).
template <SuspensionFlow F>
double quotient_metric(const ImpulsiveSystem<F>& sys, const QuotientClass<F>& a, const QuotientClass<F>& b,
                       const QuotientOptions& opt = {})
{
    using Point = typename F::point_type;
    using Class = QuotientClass<F>;
    if (opt.max_chain < 1)
        throw std::domain_error("quotient_metric: max_chain must be at least 1");

    const double direct = class_distance(sys.flow, a, b);
    const int L = opt.max_chain;
    if (L == 1 || direct == 0.0)
        return direct;

    auto hop = [&sys](const std::vector<Class>& from) {
        std::vector<Class> out;
        for (const Class& c : from)
            for (const Point& r : c.representatives) {
                std::vector<Point> bps;
                if (sys.breakpoints) {
                    bps = sys.breakpoints(r);
                } else {
                    bps = {sys.D.nearest(r), sys.image.nearest(r)};
                }
                for (const Point& z : bps) {
                    Class k = project(sys, z);
                    if (k.size() < 2) // singletons never shorten a chain
                        continue;
                    const bool seen = std::any_of(out.begin(), out.end(), [&](const Class& u) {
                        return std::any_of(u.representatives.begin(), u.representatives.end(),
                                           [&](const Point& v) { return sys.flow.distance(v, z) <= 1e-13; });
                    });
                    if (!seen)
                        out.push_back(std::move(k));
                }
            }
        return out;
    };

    // forward[i] = classes i hops from a; backward[i] likewise from b
    std::vector<std::vector<Class>> forward{{a}}, backward{{b}};
    for (int i = 1; i < L; ++i) {
        forward.push_back(hop(forward.back()));
        backward.push_back(hop(backward.back()));
    }
    // position i in 1..L-1 of the chain a = C_0, C_1, ..., C_L = b
    std::vector<std::vector<Class>> slot(L);
    for (int i = 1; i < L; ++i) {
        slot[i] = forward[i];
        slot[i].insert(slot[i].end(), backward[L - i].begin(), backward[L - i].end());
    }

    double best = direct;
    std::vector<double> cost(slot[1].size());
    for (std::size_t j = 0; j < slot[1].size(); ++j)
        cost[j] = class_distance(sys.flow, a, slot[1][j]);
    for (int i = 1; i < L; ++i) {
        for (std::size_t j = 0; j < slot[i].size(); ++j)
            if (cost[j] < best)
                best = std::min(best, cost[j] + class_distance(sys.flow, slot[i][j], b));
        if (i + 1 == L)
            break;
        std::vector<double> next(slot[i + 1].size(), std::numeric_limits<double>::infinity());
        for (std::size_t k = 0; k < slot[i + 1].size(); ++k) {
            next[k] = class_distance(sys.flow, a, slot[i + 1][k]); // shorter chains
            for (std::size_t j = 0; j < slot[i].size(); ++j)
                if (cost[j] < next[k])
                    next[k] = std::min(next[k], cost[j] + class_distance(sys.flow, slot[i][j], slot[i + 1][k]));
        }
        cost = std::move(next);
    }
    return best;
}

template <SuspensionFlow F>
double quotient_metric(const ImpulsiveSystem<F>& sys, const typename F::point_type& x,
                       const typename F::point_type& y, const QuotientOptions& opt = {})
{
    return quotient_metric(sys, project(sys, x), project(sys, y), opt);
}

/// psi~_t(H(x)) = H(psi_t(x)).
template <SuspensionFlow F>
QuotientClass<F> quotient_evolve(const ImpulsiveSystem<F>& sys, const QuotientClass<F>& a, double t)
{
    const auto x = H_inverse(sys, a);
    if (t == 0.0)
        return a;
    return H(sys, impulsive_trajectory(sys, x, t));
}

/// Empirical modulus of continuity of psi~_t: pairs x, y in X_xi with
/// d(x, y) <= r, binned by r.
struct ModulusRow {
    double radius = 0.0;
    std::size_t pairs = 0;
    double worst_image = 0.0; // max d~(psi~_t x~, psi~_t y~)
    double worst_ratio = 0.0; // max of that over d~(x~, y~)
};

template <SuspensionFlow F>
std::vector<ModulusRow> continuity_probe(const ImpulsiveSystem<F>& sys, const std::vector<double>& radii,
                                         std::size_t pairs, double t, std::uint64_t seed,
                                         const QuotientOptions& opt = {})
{
    std::vector<ModulusRow> rows;
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
        const double r = radii[ri];
        ModulusRow row{r, 0, 0.0, 0.0};
        Rng rng(derive_seed(seed, ri));
        for (std::size_t n = 0; n < pairs; ++n) {
            const auto x = sys.sample_restricted(rng);
            if (!in_X_xi(sys, x))
                continue;
            auto y = x;
            y.base = sys.flow.perturb_base(x.base, 0.5 * r, rng);
            y.height = x.height + (rng.uniform() - 0.5) * r;
            if (!(y.height >= 0.0 && y.height < sys.flow.ceiling(y.base)) || !in_X_xi(sys, y) ||
                sys.flow.distance(x, y) > r)
                continue;
            const auto hx = H(sys, x), hy = H(sys, y);
            const double before = quotient_metric(sys, hx, hy, opt);
            const double after = quotient_metric(sys, quotient_evolve(sys, hx, t), quotient_evolve(sys, hy, t), opt);
            ++row.pairs;
            row.worst_image = std::max(row.worst_image, after);
            if (before > 0.0)
                row.worst_ratio = std::max(row.worst_ratio, after / before);
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace isf

#endif
