#ifndef ISF_IMPULSIVE_HPP
#define ISF_IMPULSIVE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "phase_space.hpp"

namespace isf {

/// Two times closer than this are treated as equal.
inline constexpr double time_tolerance = 1e-12;

/// First positive hitting time, or nullopt for "never".
using HitTime = std::optional<double>;

template <SuspensionFlow F>
struct Hit {
    double time;
    typename F::point_type point; // the landing point, exactly on the set
};

/// Compact set met transversally by the flow. Hitting is delegated to
/// `first_hit`, which must return the first visit at a strictly positive time.
template <SuspensionFlow F>
struct ImpulsiveSet {
    using Point = typename F::point_type;

    std::string name;
    std::function<bool(const Point&)> contains;
    std::function<std::optional<Hit<F>>(const Point&)> first_hit;
    /// inf{s > 0 : phi_{-s}(p) in the set}
    std::function<double(const Point&)> last_visit;
    std::function<double(const Point&)> distance_to;
    std::function<Point(const Point&)> nearest;
    std::function<Point(Rng&)> sample;
};

/// The level set {height = level}. Requires 0 < level < min ceiling, so every
/// orbit meets it once per roof cycle and hitting times are closed form.
template <SuspensionFlow F>
ImpulsiveSet<F> level_set(const F& flow, double level, std::string name = {})
{
    using Point = typename F::point_type;
    if (!(level > 0.0 && level < flow.min_ceiling()))
        throw std::domain_error("level_set: level must lie strictly between 0 and the minimum ceiling");
    if (name.empty())
        name = "height " + std::to_string(level);

    ImpulsiveSet<F> s;
    s.name = std::move(name);
    s.contains = [level](const Point& p) { return std::abs(p.height - level) <= time_tolerance; };
    s.first_hit = [flow, level](const Point& p) -> std::optional<Hit<F>> {
        if (p.height < level - time_tolerance)
            return Hit<F>{level - p.height, Point{p.base, level}};
        const double to_roof = flow.ceiling(p.base) - p.height;
        return Hit<F>{to_roof + level, Point{flow.step(p.base), level}};
    };
    s.last_visit = [flow, level](const Point& p) {
        if (p.height > level + time_tolerance)
            return p.height - level;
        return p.height + flow.ceiling(flow.unstep(p.base)) - level;
    };
    s.distance_to = [flow, level](const Point& p) {
        const double below = flow.ceiling(flow.unstep(p.base));
        const double up = std::abs(p.height - level);
        const double next = flow.ceiling(p.base) - p.height + level;
        const double prev = p.height + below - level;
        return std::min({up, next, prev});
    };
    s.nearest = [flow, level](const Point& p) {
        const double up = std::abs(p.height - level);
        const double next = flow.ceiling(p.base) - p.height + level;
        const double prev = p.height + flow.ceiling(flow.unstep(p.base)) - level;
        if (up <= next && up <= prev)
            return Point{p.base, level};
        if (next <= prev)
            return Point{flow.step(p.base), level};
        return Point{flow.unstep(p.base), level};
    };
    s.sample = [flow, level](Rng& rng) {
        Point p = flow.sample(rng);
        p.height = level;
        return p;
    };
    return s;
}

/// First hit of the zero set of g along the base flow, for sets with no
/// closed form. Scans with `step` for a change of sign of g from negative to
/// non-negative, then bisects to `tol`.
template <SuspensionFlow F, class G>
HitTime crossing_first_hit(const F& flow, G&& g, const typename F::point_type& p, double horizon,
                           double step, double tol = time_tolerance)
{
    if (!(step > 0.0))
        throw std::domain_error("crossing_first_hit: step must be positive");
    double s0 = 0.0;
    double g0 = g(p);
    while (s0 < horizon) {
        const double s1 = std::min(horizon, s0 + step);
        const double g1 = g(evolve(flow, p, s1));
        if (g0 < 0.0 && g1 >= 0.0) {
            double lo = s0;
            double hi = s1;
            while (hi - lo > tol) {
                const double mid = 0.5 * (lo + hi);
                if (g(evolve(flow, p, mid)) < 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            return hi;
        }
        s0 = s1;
        g0 = g1;
    }
    return std::nullopt;
}

template <SuspensionFlow F>
struct ImpulseMap {
    using Point = typename F::point_type;

    std::function<Point(const Point&)> apply;
    /// I^{-1}(q) for q in I(D); empty elsewhere.
    std::function<std::vector<Point>(const Point&)> preimages;
    double lip_bound = 1.0;
    int max_preimages = 1;
};

/// (X, phi, D, I) with its constants.
template <SuspensionFlow F>
struct ImpulsiveSystem {
    using Point = typename F::point_type;

    std::string name;
    F flow;
    ImpulsiveSet<F> D;
    ImpulsiveSet<F> image; // I(D)
    ImpulseMap<F> I;
    double eta = 0.0;
    double xi = 0.0;
    double xi0 = 0.0;
    /// Descriptor of Omega \ D used for the restricted dynamics.
    std::function<bool(const Point&)> restricted;
    std::function<Point(Rng&)> sample_restricted;
    /// Points of D u I(D) where z -> d(p, z), restricted to D or I(D), can
    /// have a local minimum. Chain searches in the quotient only try these.
    /// Empty means the nearest points of D and I(D).
    std::function<std::vector<Point>(const Point&)> breakpoints;
};

class ImpulseBudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::size_t impulse_budget(double horizon, double eta)
{
    return static_cast<std::size_t>(std::ceil(horizon / eta)) + 1;
}

template <SuspensionFlow F>
HitTime first_hit_time(const ImpulsiveSystem<F>& sys, const typename F::point_type& p,
                       double horizon = std::numeric_limits<double>::infinity())
{
    const auto hit = sys.D.first_hit(p);
    if (!hit || hit->time > horizon)
        return std::nullopt;
    return hit->time;
}

enum class PieceCause { start, roof, impulse };

/// Orbit on [0, horizon] cut into pieces of pure vertical motion. On a piece
/// the point is (point.base, point.height + s - start).
template <SuspensionFlow F>
struct Orbit {
    using Point = typename F::point_type;

    struct Piece {
        double start;
        double end;
        Point point;
        PieceCause cause;
    };

    std::vector<Piece> pieces;
    std::vector<double> impulses;
    double horizon = 0.0;

    /// Index of the piece holding time s (the later one at a break).
    std::size_t locate(double s) const
    {
        auto it = std::upper_bound(pieces.begin(), pieces.end(), s,
                                   [](double v, const Piece& pc) { return v < pc.start; });
        return it == pieces.begin() ? 0 : static_cast<std::size_t>(it - pieces.begin()) - 1;
    }

    Point at(double s) const
    {
        const Piece& pc = pieces[locate(s)];
        Point q = pc.point;
        q.height += std::max(0.0, s - pc.start);
        return q;
    }
};

namespace detail {

template <SuspensionFlow F>
Orbit<F> trace_orbit(const F& flow, const ImpulsiveSystem<F>* sys, typename F::point_type p,
                     double horizon)
{
    if (!(horizon >= 0.0) || !std::isfinite(horizon))
        throw std::domain_error("trace: horizon must be finite and non-negative");
    Orbit<F> orbit;
    orbit.horizon = horizon;
    p = normalize(flow, p);
    double s = 0.0;
    PieceCause cause = PieceCause::start;
    const std::size_t budget = sys ? impulse_budget(horizon, sys->eta) : 0;

    for (;;) {
        const double roof = s + flow.ceiling(p.base) - p.height;
        std::optional<Hit<F>> hit;
        if (sys)
            hit = sys->D.first_hit(p);
        const bool impulse = hit && s + hit->time < roof - time_tolerance &&
                             s + hit->time <= horizon + time_tolerance;
        const double next = impulse ? s + hit->time : roof;

        if (!impulse && next > horizon) {
            orbit.pieces.push_back({s, horizon, p, cause});
            return orbit;
        }
        const double end = std::min(next, horizon);
        orbit.pieces.push_back({s, end, p, cause});
        if (impulse) {
            orbit.impulses.push_back(end);
            if (orbit.impulses.size() > budget)
                throw ImpulseBudgetError("impulse count exceeds ceil(t/eta)+1; the eta gap is violated");
            p = sys->I.apply(hit->point);
            cause = PieceCause::impulse;
        } else {
            p = {flow.step(p.base), 0.0};
            cause = PieceCause::roof;
        }
        s = end;
    }
}

} // namespace detail

/// psi_t(p). At t equal to an impulsive time the post-impulse point is returned.
template <SuspensionFlow F>
typename F::point_type impulsive_trajectory(const ImpulsiveSystem<F>& sys,
                                            const typename F::point_type& p, double t)
{
    if (!(t >= 0.0) || !std::isfinite(t))
        throw std::domain_error("impulsive_trajectory: time must be finite and non-negative");
    typename F::point_type q = p;
    double left = t;
    std::size_t count = 0;
    const std::size_t budget = impulse_budget(t, sys.eta);
    for (;;) {
        const auto hit = sys.D.first_hit(q);
        if (!hit || hit->time > left + time_tolerance)
            return evolve(sys.flow, q, left);
        if (++count > budget)
            throw ImpulseBudgetError("impulse count exceeds ceil(t/eta)+1; the eta gap is violated");
        q = sys.I.apply(hit->point);
        left = std::max(0.0, left - hit->time);
    }
}

/// All tau_n(p) <= horizon.
template <SuspensionFlow F>
std::vector<double> impulsive_times(const ImpulsiveSystem<F>& sys, const typename F::point_type& p,
                                    double horizon)
{
    if (!(horizon > 0.0))
        throw std::domain_error("impulsive_times: horizon must be positive");
    std::vector<double> out;
    typename F::point_type q = p;
    double now = 0.0;
    const std::size_t budget = impulse_budget(horizon, sys.eta);
    for (;;) {
        const auto hit = sys.D.first_hit(q);
        if (!hit || now + hit->time > horizon + time_tolerance)
            return out;
        now += hit->time;
        out.push_back(now);
        if (out.size() > budget)
            throw ImpulseBudgetError("impulse count exceeds ceil(t/eta)+1; the eta gap is violated");
        q = sys.I.apply(hit->point);
    }
}

/// Either the base flow phi or an impulsive semiflow psi, behind one interface.
template <SuspensionFlow F>
class Semiflow {
public:
    using Point = typename F::point_type;

    static Semiflow continuous(F flow) { return Semiflow(std::move(flow), nullptr); }

    static Semiflow impulsive(std::shared_ptr<const ImpulsiveSystem<F>> sys)
    {
        F flow = sys->flow;
        return Semiflow(std::move(flow), std::move(sys));
    }

    const F& flow() const noexcept { return flow_; }
    const ImpulsiveSystem<F>* system() const noexcept { return sys_.get(); }
    bool is_impulsive() const noexcept { return sys_ != nullptr; }

    Point evolve(const Point& p, double t) const
    {
        return sys_ ? impulsive_trajectory(*sys_, p, t) : isf::evolve(flow_, p, t);
    }

    Orbit<F> trace(const Point& p, double horizon) const
    {
        return detail::trace_orbit(flow_, sys_.get(), p, horizon);
    }

    double distance(const Point& p, const Point& q) const { return isf::distance(flow_, p, q); }

private:
    Semiflow(F flow, std::shared_ptr<const ImpulsiveSystem<F>> sys)
        : flow_(std::move(flow)), sys_(std::move(sys))
    {
    }

    F flow_;
    std::shared_ptr<const ImpulsiveSystem<F>> sys_;
};

enum class TimesLabel { tau, theta, tau_prime, custom };

inline std::string to_string(TimesLabel l)
{
    switch (l) {
    case TimesLabel::tau: return "tau";
    case TimesLabel::theta: return "theta";
    case TimesLabel::tau_prime: return "tau_prime";
    case TimesLabel::custom: return "custom";
    }
    return "?";
}

/// An admissible function T. times_of(p, horizon) lists T_n(p) <= horizon.
template <SuspensionFlow F>
struct AdmissibleTimes {
    using Point = typename F::point_type;

    TimesLabel label = TimesLabel::custom;
    double eta = 0.0;
    std::function<std::vector<double>(const Point&, double)> times_of;
};

namespace detail {

/// Successive positive visits to `set` along the semiflow.
template <SuspensionFlow F>
std::vector<double> visits(const Semiflow<F>& flow, const ImpulsiveSet<F>& set,
                           const typename F::point_type& p, double horizon)
{
    std::vector<double> out;
    const Orbit<F> orbit = flow.trace(p, horizon);
    for (const auto& pc : orbit.pieces) {
        // a piece can start on the set (post-impulse landing on I(D))
        if (pc.start > 0.0 && set.contains(pc.point))
            out.push_back(pc.start);
        const auto hit = set.first_hit(pc.point);
        if (!hit)
            continue;
        const double at = pc.start + hit->time;
        const bool inside = at < pc.end - time_tolerance ||
                            (&pc == &orbit.pieces.back() && at <= pc.end + time_tolerance);
        if (inside && at > 0.0)
            out.push_back(at);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(),
                          [](double x, double y) { return std::abs(x - y) <= time_tolerance; }),
              out.end());
    return out;
}

inline std::vector<double> merge_times(const std::vector<double>& a, const std::vector<double>& b)
{
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end(),
                          [](double x, double y) { return std::abs(x - y) <= time_tolerance; }),
              out.end());
    return out;
}

} // namespace detail

/// Visit times to `set` along the base flow; admissible when the set is a
/// cross-section with return time at least `eta`.
template <SuspensionFlow F>
AdmissibleTimes<F> visit_times(const F& flow, ImpulsiveSet<F> set, double eta)
{
    auto sf = std::make_shared<Semiflow<F>>(Semiflow<F>::continuous(flow));
    auto shared_set = std::make_shared<ImpulsiveSet<F>>(std::move(set));
    AdmissibleTimes<F> T;
    T.label = TimesLabel::custom;
    T.eta = eta;
    T.times_of = [sf, shared_set](const typename F::point_type& p, double horizon) {
        return detail::visits(*sf, *shared_set, p, horizon);
    };
    return T;
}

/// tau (impulsive times), theta (visits to I(D)) or tau' (their merge).
template <SuspensionFlow F>
AdmissibleTimes<F> make_admissible(std::shared_ptr<const ImpulsiveSystem<F>> sys, TimesLabel label)
{
    using Point = typename F::point_type;
    AdmissibleTimes<F> T;
    T.label = label;
    auto sf = std::make_shared<Semiflow<F>>(Semiflow<F>::impulsive(sys));
    switch (label) {
    case TimesLabel::tau:
        T.eta = sys->eta;
        T.times_of = [sys](const Point& p, double horizon) { return impulsive_times(*sys, p, horizon); };
        return T;
    case TimesLabel::theta:
        T.eta = sys->eta;
        T.times_of = [sf, sys](const Point& p, double horizon) {
            return detail::visits(*sf, sys->image, p, horizon);
        };
        return T;
    case TimesLabel::tau_prime:
        // gaps of the merge are bounded below by the flow time from I(D) to D
        T.eta = sys->eta;
        T.times_of = [sf, sys](const Point& p, double horizon) {
            return detail::merge_times(impulsive_times(*sys, p, horizon),
                                       detail::visits(*sf, sys->image, p, horizon));
        };
        return T;
    case TimesLabel::custom: break;
    }
    throw std::domain_error("make_admissible: unsupported label " + to_string(label));
}

} // namespace isf

#endif
