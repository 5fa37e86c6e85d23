#ifndef ISF_PRESSURE_HPP
#define ISF_PRESSURE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "isf/impulsive.hpp"
#include "isf/parallel.hpp"
#include "isf/phase_space.hpp"
#include "isf/random.hpp"

namespace isf {

/// Continuous f: X -> R. `constant` is set for f == c, which integrates exactly.
template <SuspensionFlow F>
struct Potential {
    using Point = typename F::point_type;

    std::string name;
    std::function<double(const Point&)> eval;
    std::optional<double> constant;

    static Potential zero() { return constant_value(0.0); }

    static Potential constant_value(double c)
    {
        std::ostringstream os;
        os << c;
        return {"const " + os.str(), [c](const Point&) { return c; }, c};
    }

    static Potential of(std::string name, std::function<double(const Point&)> f)
    {
        return {std::move(name), std::move(f), std::nullopt};
    }

    /// f + c.
    Potential plus(double c) const
    {
        std::ostringstream os;
        os << name << (c < 0 ? " - " : " + ") << std::abs(c);
        Potential g{os.str(), [f = eval, c](const Point& p) { return f(p) + c; }, std::nullopt};
        if (constant)
            g.constant = *constant + c;
        return g;
    }
};

struct Interval {
    double lo;
    double hi;
};

enum class WindowMode { full_interval, T_excluded };

/// Where separation may be witnessed: all of [0, t], or [0, t] with the open
/// delta-neighbourhoods of T_j(x) removed.
template <SuspensionFlow F>
struct SeparationWindow {
    WindowMode mode = WindowMode::full_interval;
    std::shared_ptr<const AdmissibleTimes<F>> T;
    double delta = 0.0;

    static SeparationWindow full() { return {}; }

    static SeparationWindow excluding(std::shared_ptr<const AdmissibleTimes<F>> T, double delta)
    {
        if (!T)
            throw std::invalid_argument("SeparationWindow: no admissible function");
        if (!(delta > 0.0) || !(delta < T->eta / 2.0))
            throw std::domain_error("SeparationWindow: delta must lie in (0, eta/2)");
        return {WindowMode::T_excluded, std::move(T), delta};
    }

    std::string describe() const
    {
        if (mode == WindowMode::full_interval)
            return "full";
        std::ostringstream os;
        os << to_string(T->label) << " delta=" << delta;
        return os.str();
    }

    /// Anchor layers at k evenly spaced times s_i in [0, t]. In a T-window
    /// layer i also holds s_i +- 2 delta, and J(x) contains one of the two:
    /// if T_j is within delta of s_i, the shifted time is over delta from T_j
    /// and, once 4 delta <= eta, from every other T-time.
    std::vector<std::vector<double>> anchor_layers(double t, int k) const
    {
        std::vector<std::vector<double>> out;
        for (int i = 0; i < k; ++i) {
            const double s = k == 1 ? t : t * i / (k - 1);
            if (mode == WindowMode::full_interval)
                out.push_back({s});
            else if (s + 2.0 * delta <= t)
                out.push_back({s, s + 2.0 * delta});
            else if (s - 2.0 * delta >= 0.0)
                out.push_back({s, s - 2.0 * delta});
            // else no shifted time fits in [0, t]; the layer is dropped
        }
        return out;
    }

    bool anchors_cover(double t) const
    {
        return mode == WindowMode::full_interval || (4.0 * delta <= T->eta && 2.0 * delta <= t);
    }
};

/// J(x) as sorted disjoint closed intervals.
template <SuspensionFlow F>
std::vector<Interval> window_intervals(const SeparationWindow<F>& w, const typename F::point_type& p, double t)
{
    if (w.mode == WindowMode::full_interval)
        return {{0.0, t}};
    std::vector<Interval> out;
    double from = 0.0;
    // T-times just past t still cut (T_j - delta, t]
    for (double s : w.T->times_of(p, t + w.delta)) {
        const double lo = s - w.delta;
        if (lo >= from && lo > 0.0)
            out.push_back({from, std::min(lo, t)});
        from = std::max(from, s + w.delta);
        if (from > t)
            break;
    }
    if (from <= t)
        out.push_back({from, t});
    return out;
}

namespace detail {

/// Composite midpoint rule on each piece; pieces already break at roofs and impulses.
template <SuspensionFlow F>
double integrate_orbit(const F& flow, const Orbit<F>& orbit, const Potential<F>& f, double dt)
{
    if (f.constant)
        return *f.constant * orbit.horizon;
    if (!(dt > 0.0))
        throw std::domain_error("birkhoff_integral: dt must be positive");
    double sum = 0.0;
    for (const auto& pc : orbit.pieces) {
        const double len = pc.end - pc.start;
        if (len <= 0.0)
            continue;
        const long n = std::max(1L, static_cast<long>(std::ceil(len / dt)));
        const double h = len / static_cast<double>(n);
        const double top = flow.ceiling(pc.point.base);
        for (long i = 0; i < n; ++i) {
            auto q = pc.point;
            q.height = std::min(top, q.height + (static_cast<double>(i) + 0.5) * h);
            sum += f.eval(q) * h;
        }
    }
    return sum;
}

} // namespace detail

/// int_0^t f(psi_s p) ds.
template <SuspensionFlow F>
double birkhoff_integral(const Semiflow<F>& sf, const Potential<F>& f, const typename F::point_type& p,
                         double t, double dt = 1e-2)
{
    if (!(t >= 0.0))
        throw std::domain_error("birkhoff_integral: t must be non-negative");
    if (f.constant)
        return *f.constant * t;
    return detail::integrate_orbit(sf.flow(), sf.trace(p, t), f, dt);
}

/// An orbit prepared for separation tests: the cuts split [0, t] into
/// stretches on one piece with no metric kink inside.
template <SuspensionFlow F>
struct TracedOrbit {
    using Point = typename F::point_type;

    Point start;
    Orbit<F> orbit;
    std::vector<double> cut;            // stretch starts, cut[0] = 0
    std::vector<std::uint32_t> piece;   // piece index on each stretch
    std::vector<Interval> window;
    double integral = 0.0;              // S_t f

    double horizon() const { return orbit.horizon; }
    double stretch_end(std::size_t i) const { return i + 1 < cut.size() ? cut[i + 1] : orbit.horizon; }
};

template <SuspensionFlow F>
TracedOrbit<F> trace_for_separation(const Semiflow<F>& sf, const SeparationWindow<F>& w,
                                    const typename F::point_type& p, double t)
{
    TracedOrbit<F> o;
    o.start = p;
    o.orbit = sf.trace(p, t);
    const F& flow = sf.flow();
    for (std::size_t i = 0; i < o.orbit.pieces.size(); ++i) {
        const auto& pc = o.orbit.pieces[i];
        o.cut.push_back(pc.start);
        o.piece.push_back(static_cast<std::uint32_t>(i));
        const Kinks k = flow.kinks(pc.point.base);
        for (int j = 0; j < k.count; ++j) {
            const double at = pc.start + (k.at[j] - pc.point.height);
            if (at > pc.start && at < pc.end) {
                o.cut.push_back(at);
                o.piece.push_back(static_cast<std::uint32_t>(i));
            }
        }
    }
    o.window = window_intervals(w, p, t);
    return o;
}

/// Times witnessing separation: one in J(a) and one in J(b).
struct SeparationCertificate {
    bool separated = false;
    double in_first = -1.0;
    double in_second = -1.0;
    double distance_first = 0.0;
    double distance_second = 0.0;
};

/// Exact test of (eps, t)-separation within the windows. Between cuts of
/// either orbit the distance is convex in time, so its supremum over a
/// window piece sits at an endpoint (a left limit at the stretch end).
template <SuspensionFlow F>
SeparationCertificate separation(const F& flow, const TracedOrbit<F>& a, const TracedOrbit<F>& b, double eps)
{
    SeparationCertificate cert;
    const bool shared = a.window.size() == 1 && b.window.size() == 1 && a.window[0].lo == b.window[0].lo &&
                        a.window[0].hi == b.window[0].hi;
    bool need_a = true;
    bool need_b = true;
    std::size_t ia = 0, ib = 0, wa = 0, wb = 0;

    auto point_at = [&flow](const TracedOrbit<F>& o, std::uint32_t piece, double s) {
        const auto& pc = o.orbit.pieces[piece];
        auto q = pc.point;
        q.height = std::min(flow.ceiling(q.base), q.height + std::max(0.0, s - pc.start));
        return q;
    };

    double lo = 0.0;
    for (;;) {
        const double hi = std::min(a.stretch_end(ia), b.stretch_end(ib));
        const std::uint32_t pa = a.piece[ia];
        const std::uint32_t pb = b.piece[ib];
        auto dist = [&](double s) { return flow.distance(point_at(a, pa, s), point_at(b, pb, s)); };

        // Sup of the distance over [lo, hi] ∩ J; returns the time if above eps.
        auto scan = [&](const std::vector<Interval>& J, std::size_t& w, double& when, double& dmax) {
            while (w < J.size() && J[w].hi < lo)
                ++w;
            for (std::size_t k = w; k < J.size() && J[k].lo <= hi; ++k) {
                const double l = std::max(lo, J[k].lo);
                const double r = std::min(hi, J[k].hi);
                if (l > r)
                    continue;
                for (double s : {l, r}) {
                    const double d = dist(s);
                    if (d > eps) {
                        when = s;
                        dmax = d;
                        return true;
                    }
                }
            }
            return false;
        };

        if (need_a && scan(a.window, wa, cert.in_first, cert.distance_first)) {
            need_a = false;
            if (shared) {
                need_b = false;
                cert.in_second = cert.in_first;
                cert.distance_second = cert.distance_first;
            }
        }
        if (need_b && scan(b.window, wb, cert.in_second, cert.distance_second))
            need_b = false;
        if (!need_a && !need_b) {
            cert.separated = true;
            return cert;
        }

        // step past every cut at hi; zero-length stretches (a post-impulse
        // point at t) are visited as single instants
        const bool more_a = ia + 1 < a.cut.size() && a.cut[ia + 1] <= hi;
        const bool more_b = ib + 1 < b.cut.size() && b.cut[ib + 1] <= hi;
        if (!more_a && !more_b)
            break;
        ia += more_a;
        ib += more_b;
        lo = hi;
    }
    return cert;
}

template <SuspensionFlow F>
struct SeparatedSet {
    using Point = typename F::point_type;

    double epsilon = 0.0;
    double t = 0.0;
    std::string window;
    std::vector<TracedOrbit<F>> members;
    double logZ = -std::numeric_limits<double>::infinity(); // log sum exp(S_t f)

    std::size_t size() const { return members.size(); }
    std::vector<Point> points() const
    {
        std::vector<Point> out;
        out.reserve(members.size());
        for (const auto& m : members)
            out.push_back(m.start);
        return out;
    }
    /// Witness times for the pair (i, j), recomputed on demand.
    template <class Flow>
    SeparationCertificate certificate(const Flow& flow, std::size_t i, std::size_t j) const
    {
        return separation(flow, members.at(i), members.at(j), epsilon);
    }
};

/// log sum_x exp(S_t f(x)) by log-sum-exp.
inline double log_sum_exp(const std::vector<double>& v)
{
    if (v.empty())
        return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m))
        return m;
    double s = 0.0;
    for (double x : v)
        s += std::exp(x - m);
    return m + std::log(s);
}

template <SuspensionFlow F>
double partition_sum(const SeparatedSet<F>& E)
{
    std::vector<double> v;
    v.reserve(E.members.size());
    for (const auto& m : E.members)
        v.push_back(m.integral);
    return log_sum_exp(v);
}

struct GreedyOptions {
    double dt = 1e-2;       // Birkhoff quadrature step
    unsigned threads = 1;   // tracing only; insertion order is fixed
    bool use_index = true;  // false tests every pair (reference path)
    int layers = 3;         // anchor times for the neighbour index
};

namespace detail {

inline bool in_window(const std::vector<Interval>& J, double s)
{
    for (const auto& iv : J)
        if (iv.lo <= s && s <= iv.hi)
            return true;
    return false;
}

} // namespace detail

/// Greedy maximal (eps, t)-separated subset of seeds followed by candidates,
/// in that order. Every candidate is tested exactly against each member the
/// neighbour index cannot rule out. A pair that is not separated stays
/// within eps on all of J(c) or all of J(m), so it is close at c's anchor
/// in every layer or at m's anchor in every layer. Members are looked up in
/// the layer with the smallest buckets and screened on the other anchors
/// before the exact test.
template <SuspensionFlow F>
SeparatedSet<F> greedy_separated_set(const Semiflow<F>& sf, const SeparationWindow<F>& w, double eps, double t,
                                     const std::vector<typename F::point_type>& candidates,
                                     const Potential<F>* f = nullptr, const GreedyOptions& opt = {},
                                     const std::vector<typename F::point_type>* seeds = nullptr)
{
    using Point = typename F::point_type;
    if (!(eps > 0.0))
        throw std::domain_error("greedy_separated_set: eps must be positive");
    if (!(t > 0.0))
        throw std::domain_error("greedy_separated_set: t must be positive");
    const F& flow = sf.flow();
    SeparatedSet<F> E;
    E.epsilon = eps;
    E.t = t;
    E.window = w.describe();

    std::vector<const Point*> stream;
    if (seeds)
        for (const auto& p : *seeds)
            stream.push_back(&p);
    for (const auto& p : candidates)
        stream.push_back(&p);

    const bool indexed = opt.use_index && w.anchors_cover(t);
    const auto layers = w.anchor_layers(t, std::clamp(opt.layers, 1, 64));
    const std::size_t K = layers.size();
    // slack so that pairs at distance exactly eps (lattice candidates) are found
    const double reach = eps * (1.0 + 1e-9) + 1e-12;
    const std::size_t S = layers[0].size();

    struct Prepared {
        TracedOrbit<F> orbit;
        std::vector<Point> at;                          // position at (layer, sub)
        std::vector<std::uint8_t> own;                  // per layer, the sub lying in J
        std::vector<std::uint64_t> store;
        std::vector<std::vector<std::uint64_t>> probe;  // per (layer, sub)
    };
    struct Anchors {
        std::vector<Point> at;
        std::vector<std::uint8_t> own;
    };
    auto salt = [](std::size_t slot, std::uint64_t key) { return key ^ mix64(slot + 0x51ULL); };

    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> index;
    std::vector<Anchors> anchors; // per member
    std::vector<std::uint32_t> stamp, done, cntA, cntB;
    std::uint32_t round = 0;
    struct BucketRef {
        const std::vector<std::uint32_t>* bucket;
        std::uint8_t sub;
    };
    std::vector<BucketRef> bucket_refs;
    std::vector<std::size_t> bucket_start;

    // close at the anchors chosen by `by` (0: candidate's subs, 1: member's)
    auto screened = [&](const Prepared& P, std::uint32_t m, int by) {
        const Anchors& A = anchors[m];
        for (std::size_t l = 0; l < K; ++l) {
            const std::size_t slot = l * S + (by == 0 ? P.own[l] : A.own[l]);
            if (flow.distance(P.at[slot], A.at[slot]) > reach)
                return false;
        }
        return true;
    };

    constexpr std::size_t batch = 512;
    std::vector<Prepared> prep;
    std::vector<std::uint32_t> hits;
    for (std::size_t base = 0; base < stream.size(); base += batch) {
        const std::size_t n = std::min(batch, stream.size() - base);
        prep.clear();
        prep.resize(n);
        parallel_for(n, opt.threads, [&](std::size_t i) {
            Prepared& P = prep[i];
            P.orbit = trace_for_separation(sf, w, normalize(flow, *stream[base + i]), t);
            if (f)
                P.orbit.integral = detail::integrate_orbit(flow, P.orbit.orbit, *f, opt.dt);
            if (!indexed)
                return;
            P.probe.resize(K * S);
            for (std::size_t l = 0; l < K; ++l) {
                for (std::size_t sub = 0; sub < S; ++sub) {
                    const std::size_t slot = l * S + sub;
                    P.at.push_back(P.orbit.orbit.at(layers[l][sub]));
                    auto& pr = P.probe[slot];
                    flow.probe_keys(P.at.back(), reach, [&](std::uint64_t k) { pr.push_back(salt(slot, k)); });
                    std::sort(pr.begin(), pr.end());
                    pr.erase(std::unique(pr.begin(), pr.end()), pr.end());
                    flow.store_keys(P.at.back(), reach, [&](std::uint64_t k) { P.store.push_back(salt(slot, k)); });
                }
                P.own.push_back(S > 1 && !detail::in_window(P.orbit.window, layers[l][0]) ? 1 : 0);
            }
        });

        for (auto& P : prep) {
            ++round;
            hits.clear();
            if (indexed) {
                // buckets per layer, visited from the lightest; a member stays
                // alive on side A (B) while found in every layer so far
                std::size_t loads[64];
                std::size_t order[64];
                bucket_refs.clear();
                bucket_start.assign(K + 1, 0);
                for (std::size_t l = 0; l < K; ++l) {
                    loads[l] = 0;
                    bucket_start[l] = bucket_refs.size();
                    for (std::size_t sub = 0; sub < S; ++sub)
                        for (std::uint64_t k : P.probe[l * S + sub])
                            if (const auto it = index.find(k); it != index.end()) {
                                bucket_refs.push_back({&it->second, static_cast<std::uint8_t>(sub)});
                                loads[l] += it->second.size();
                            }
                    order[l] = l;
                }
                bucket_start[K] = bucket_refs.size();
                std::sort(order, order + K, [&](std::size_t x, std::size_t y) { return loads[x] < loads[y]; });

                for (std::size_t step = 0; step < K; ++step) {
                    const std::size_t l = order[step];
                    const auto want = static_cast<std::uint32_t>(step);
                    std::size_t alive = 0;
                    for (std::size_t r = bucket_start[l]; r < bucket_start[l + 1]; ++r) {
                        const std::uint8_t sub = bucket_refs[r].sub;
                        for (std::uint32_t m : *bucket_refs[r].bucket) {
                            if (stamp[m] != round) {
                                if (step != 0)
                                    continue;
                                stamp[m] = round;
                                cntA[m] = cntB[m] = 0;
                            }
                            if (cntA[m] == want && sub == P.own[l]) {
                                ++cntA[m];
                                ++alive;
                            }
                            if (S > 1 && cntB[m] == want && sub == anchors[m].own[l]) {
                                ++cntB[m];
                                ++alive;
                            }
                            if (step + 1 == K && (cntA[m] == K || cntB[m] == K) && done[m] != round) {
                                done[m] = round;
                                hits.push_back(m);
                            }
                        }
                    }
                    if (alive == 0)
                        break;
                }
                std::sort(hits.begin(), hits.end());
                hits.erase(std::remove_if(hits.begin(), hits.end(),
                                          [&](std::uint32_t m) { return !screened(P, m, 0) && !(S > 1 && screened(P, m, 1)); }),
                           hits.end());
            } else {
                for (std::uint32_t m = 0; m < E.members.size(); ++m)
                    hits.push_back(m);
            }
            bool keep = true;
            for (std::uint32_t m : hits)
                if (!separation(flow, P.orbit, E.members[m], eps).separated) {
                    keep = false;
                    break;
                }
            if (!keep)
                continue;
            const auto id = static_cast<std::uint32_t>(E.members.size());
            for (std::uint64_t k : P.store)
                index[k].push_back(id);
            anchors.push_back({std::move(P.at), std::move(P.own)});
            E.members.push_back(std::move(P.orbit));
            for (auto* v : {&stamp, &done, &cntA, &cntB})
                v->push_back(0);
        }
    }
    E.logZ = partition_sum(E);
    return E;
}

/// Candidate generator: (eps, t, seed) -> points.
template <SuspensionFlow F>
using CandidatePlan = std::function<std::vector<typename F::point_type>(double, double, std::uint64_t)>;

/// Jittered lattice on the torus with spacing eps * factor in both directions.
inline CandidatePlan<RotationSuspension> lattice_candidates(const RotationSuspension& flow, double factor = 1.0 / 3.0)
{
    return [flow, factor](double eps, double, std::uint64_t seed) {
        const double c = flow.min_ceiling();
        const auto na = static_cast<long>(std::ceil(1.0 / (eps * factor)));
        const auto nh = static_cast<long>(std::ceil(c / (eps * factor)));
        Rng rng(seed);
        const double ja = rng.uniform();
        const double jh = rng.uniform();
        std::vector<RotationSuspension::point_type> out;
        out.reserve(static_cast<std::size_t>(na * nh));
        for (long i = 0; i < na; ++i)
            for (long k = 0; k < nh; ++k)
                out.push_back({{(static_cast<double>(i) + ja) / static_cast<double>(na)},
                               (static_cast<double>(k) + jh) * c / static_cast<double>(nh)});
        return out;
    };
}

/// For each starting digit and each height on a jittered lattice of spacing
/// eps * factor, every itinerary that the orbit can read before time t:
/// digit m is branched on while the orbit reaches floor m. Digits it never
/// reads are random. Works for the base flow and impulsive systems alike.
inline CandidatePlan<ShiftSuspension> itinerary_candidates(Semiflow<ShiftSuspension> sf,
                                                           double factor = 1.0 / 3.0, int variants = 1)
{
    return [sf, factor, variants](double eps, double t, std::uint64_t seed) {
        using Point = ShiftSuspension::point_type;
        const auto& flow = sf.flow();
        std::vector<Point> out;
        Rng rng(seed);
        const double spacing = eps * factor;
        const double jitter = rng.uniform();
        auto floors = [&](const Point& p) {
            const auto orbit = sf.trace(p, t);
            int roofs = 0;
            for (const auto& pc : orbit.pieces)
                roofs += pc.cause == PieceCause::roof;
            return roofs;
        };
        std::function<void(Point&, int)> dfs = [&](Point& p, int m) {
            if (m > flow.window() || floors(p) < m) {
                out.push_back(p);
                return;
            }
            for (int d : {0, 1}) {
                p.base.set(m, d);
                dfs(p, m + 1);
            }
        };
        for (int x0 : {0, 1}) {
            const double c = x0 == 0 ? flow.a() : flow.b();
            const auto nh = static_cast<long>(std::ceil(c / spacing));
            for (long k = 0; k < nh; ++k) {
                const double u = (static_cast<double>(k) + jitter) * c / static_cast<double>(nh);
                for (int v = 0; v < variants; ++v) {
                    Point p{ShiftPoint::random(rng, flow.window(), flow.tail()), u};
                    p.base.set(0, x0);
                    dfs(p, 1);
                }
            }
        }
        return out;
    };
}

/// Uniform samples from the flow's own sampler.
template <SuspensionFlow F>
CandidatePlan<F> random_candidates(F flow, std::size_t count)
{
    return [flow, count](double, double, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<typename F::point_type> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i)
            out.push_back(flow.sample(rng));
        return out;
    };
}

/// delta -> SeparationWindow excluding the admissible times `label` of sys.
template <SuspensionFlow F>
std::function<SeparationWindow<F>(double)> excluding_times(std::shared_ptr<const ImpulsiveSystem<F>> sys,
                                                          TimesLabel label)
{
    auto T = std::make_shared<const AdmissibleTimes<F>>(make_admissible(sys, label));
    return [T](double delta) { return SeparationWindow<F>::excluding(T, delta); };
}

struct PressureGrid {
    std::vector<double> epsilons{0.25, 0.125, 0.0625, 0.03125, 0.015625};
    std::vector<double> delta_fractions{0.25, 0.125, 0.0625}; // delta = fraction * eta
    std::vector<double> times{25, 50, 100, 200};
};

struct GridRecord {
    double epsilon;
    double delta;
    double t;
    std::size_t cardinality;
    double logZ;
    double logZ_over_t;
};

/// Growth rate of log Z in t at one (eps, delta).
struct CellEstimate {
    double epsilon;
    double delta;
    double slope;        // least-squares slope of log Z against t
    double slope_error;  // its standard error (0 with two times)
    double tail_max;     // max of log Z / t over the last third of the times
    double last_step;    // slope between the two largest times
    bool converged;
};

struct PressureEstimate {
    double value = 0.0;
    double value_error = 0.0;
    bool converged = true;
    bool windowed = false;
    std::string system;
    std::string potential;
    std::string window;
    std::vector<GridRecord> grid;
    std::vector<CellEstimate> cells;
    std::string extrapolation;

    std::string csv() const
    {
        std::ostringstream os;
        os.precision(10);
        os << "epsilon,delta,t,cardinality,logZ,logZ_over_t\n";
        for (const auto& r : grid)
            os << r.epsilon << ',' << r.delta << ',' << r.t << ',' << r.cardinality << ',' << r.logZ << ','
               << r.logZ_over_t << '\n';
        return os.str();
    }
};

struct PressureOptions {
    int restarts = 1;
    std::uint64_t seed = 1;
    double dt = 1e-2;
    unsigned threads = 1;
    /// A cell is flagged when its last-step slope differs from the fit by more.
    double nonconvergence_threshold = 0.25;
};

namespace detail {

inline std::pair<double, double> fit_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const auto n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    double se = 0.0;
    if (x.size() > 2) {
        double rss = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - my - slope * (x[i] - mx);
            rss += r * r;
        }
        se = std::sqrt(rss / (n - 2.0) / sxx);
    }
    return {slope, se};
}

} // namespace detail

/// Topological pressure estimate on the grid. Windows come from
/// make_window(delta); a null factory means the full window (delta = 0).
///
/// Sets are warm-started: a set separated at (eps', delta') stays separated
/// at eps <= eps' and delta <= delta', so the larger of the two predecessor
/// sets seeds the greedy search and Z is monotone along both axes.
template <SuspensionFlow F>
PressureEstimate pressure(const Semiflow<F>& sf, const Potential<F>& f,
                          const std::function<SeparationWindow<F>(double)>& make_window, double eta,
                          const PressureGrid& grid, const CandidatePlan<F>& plan, const PressureOptions& opt = {})
{
    using Point = typename F::point_type;
    if (grid.epsilons.empty() || grid.times.size() < 2)
        throw std::domain_error("pressure: need at least one eps and two times");
    std::vector<double> eps = grid.epsilons;
    std::sort(eps.begin(), eps.end(), std::greater<>());
    std::vector<double> times = grid.times;
    std::sort(times.begin(), times.end());
    std::vector<double> deltas;
    if (make_window) {
        for (double fr : grid.delta_fractions)
            deltas.push_back(fr * eta);
        std::sort(deltas.begin(), deltas.end(), std::greater<>());
    } else {
        deltas = {0.0};
    }
    if (deltas.empty())
        throw std::domain_error("pressure: empty delta grid");

    PressureEstimate est;
    est.windowed = static_cast<bool>(make_window);
    est.system = sf.is_impulsive() ? sf.system()->name : "base flow";
    est.potential = f.name;

    const std::size_t ne = eps.size(), nt = times.size();
    // previous delta layer and current one: points and logZ per (eps, t)
    std::vector<std::vector<Point>> prev_pts(ne * nt), cur_pts(ne * nt);
    std::vector<double> prev_log(ne * nt, -INFINITY), cur_log(ne * nt, -INFINITY);

    GreedyOptions gopt;
    gopt.dt = opt.dt;
    gopt.threads = opt.threads;

    for (std::size_t id = 0; id < deltas.size(); ++id) {
        const double delta = deltas[id];
        const SeparationWindow<F> w = make_window ? make_window(delta) : SeparationWindow<F>::full();
        if (id == 0)
            est.window = make_window ? w.describe() : "full";
        for (std::size_t ie = 0; ie < ne; ++ie) {
            std::vector<double> logs;
            for (std::size_t it = 0; it < nt; ++it) {
                const std::size_t cell = ie * nt + it;
                const std::vector<Point>* seed = nullptr;
                double seed_log = -INFINITY;
                if (ie > 0 && cur_log[cell - nt] > seed_log) {
                    seed = &cur_pts[cell - nt];
                    seed_log = cur_log[cell - nt];
                }
                if (id > 0 && prev_log[cell] > seed_log)
                    seed = &prev_pts[cell];

                SeparatedSet<F> best;
                for (int r = 0; r < std::max(1, opt.restarts); ++r) {
                    const std::uint64_t s = derive_seed(opt.seed, (id * 1000 + ie) * 1000 + it * 10 + r);
                    auto E = greedy_separated_set(sf, w, eps[ie], times[it], plan(eps[ie], times[it], s), &f,
                                                  gopt, seed);
                    if (r == 0 || E.logZ > best.logZ)
                        best = std::move(E);
                }
                cur_pts[cell] = best.points();
                cur_log[cell] = best.logZ;
                logs.push_back(best.logZ);
                est.grid.push_back({eps[ie], delta, times[it], best.size(), best.logZ, best.logZ / times[it]});
            }
            const auto [slope, se] = detail::fit_slope(times, logs);
            double tail = -INFINITY;
            const std::size_t from = nt - std::max<std::size_t>(1, (nt + 2) / 3);
            for (std::size_t it = from; it < nt; ++it)
                tail = std::max(tail, logs[it] / times[it]);
            const double last = (logs[nt - 1] - logs[nt - 2]) / (times[nt - 1] - times[nt - 2]);
            const bool ok = std::abs(last - slope) <= opt.nonconvergence_threshold;
            est.cells.push_back({eps[ie], delta, slope, se, tail, last, ok});
            est.converged = est.converged && ok;
        }
        prev_pts.swap(cur_pts);
        prev_log.swap(cur_log);
    }

    // limit order: eps -> 0 first, then delta -> 0
    const CellEstimate& fin = est.cells.back();
    est.value = fin.slope;
    est.value_error = fin.slope_error;
    std::ostringstream os;
    os << "value at eps=" << fin.epsilon << " delta=" << fin.delta << "; eps trend";
    for (const auto& c : est.cells)
        if (c.delta == fin.delta)
            os << ' ' << c.slope;
    if (deltas.size() > 1) {
        os << "; delta trend";
        for (const auto& c : est.cells)
            if (c.epsilon == fin.epsilon)
                os << ' ' << c.slope;
    }
    est.extrapolation = os.str();
    return est;
}

class InsufficientGrid : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

enum class Verdict { holds, violated };

inline std::string to_string(Verdict v) { return v == Verdict::holds ? "holds" : "violated"; }

/// The three monotonicity properties of the estimates:
/// Z nonincreasing in eps (per delta, t), P nonincreasing in eps (per delta),
/// P nondecreasing as delta decreases (per eps).
struct MonotonicityReport {
    Verdict Z_in_eps = Verdict::holds;
    Verdict P_in_eps = Verdict::holds;
    Verdict P_in_delta = Verdict::holds;
    double worst_Z = 0.0;       // largest log Z drop as eps shrinks
    double worst_P_eps = 0.0;   // largest P drop as eps shrinks
    double worst_P_delta = 0.0; // largest P drop as delta shrinks
    double noise_bound = 0.0;
    std::string delta_note;

    bool ok() const
    {
        return Z_in_eps == Verdict::holds && P_in_eps == Verdict::holds && P_in_delta == Verdict::holds;
    }

    std::string text() const
    {
        std::ostringstream os;
        os << "Z in eps: " << to_string(Z_in_eps) << " (worst " << worst_Z << ")\n"
           << "P in eps: " << to_string(P_in_eps) << " (worst " << worst_P_eps << ")\n"
           << "P in delta: " << to_string(P_in_delta) << " (worst " << worst_P_delta << ")"
           << (delta_note.empty() ? "" : " " + delta_note) << "\n"
           << "noise bound " << noise_bound << "\n";
        return os.str();
    }
};

/// noise_bound < 0 uses three times the largest slope standard error.
/// Z is compared exactly. Full-window estimates have no delta axis.
inline MonotonicityReport check_monotonicity(const PressureEstimate& est, double noise_bound = -1.0)
{
    std::vector<double> eps, deltas;
    for (const auto& c : est.cells) {
        if (std::find(eps.begin(), eps.end(), c.epsilon) == eps.end())
            eps.push_back(c.epsilon);
        if (std::find(deltas.begin(), deltas.end(), c.delta) == deltas.end())
            deltas.push_back(c.delta);
    }
    if (eps.size() < 2)
        throw InsufficientGrid("check_monotonicity: insufficient grid, need two eps values");
    if (est.windowed && deltas.size() < 2)
        throw InsufficientGrid("check_monotonicity: insufficient grid, need two delta values");

    MonotonicityReport rep;
    if (noise_bound < 0.0) {
        noise_bound = 0.0;
        for (const auto& c : est.cells)
            noise_bound = std::max(noise_bound, 3.0 * c.slope_error);
    }
    rep.noise_bound = noise_bound;

    auto find_cell = [&](double e, double d) -> const CellEstimate* {
        for (const auto& c : est.cells)
            if (c.epsilon == e && c.delta == d)
                return &c;
        return nullptr;
    };
    auto find_rec = [&](double e, double d, double t) -> const GridRecord* {
        for (const auto& r : est.grid)
            if (r.epsilon == e && r.delta == d && r.t == t)
                return &r;
        return nullptr;
    };

    // cells are stored with eps and delta decreasing
    for (const auto& c : est.cells) {
        const auto ie = std::find(eps.begin(), eps.end(), c.epsilon);
        if (ie + 1 != eps.end()) {
            const CellEstimate* finer = find_cell(*(ie + 1), c.delta);
            if (finer)
                rep.worst_P_eps = std::max(rep.worst_P_eps, c.slope - finer->slope);
        }
        const auto id = std::find(deltas.begin(), deltas.end(), c.delta);
        if (id + 1 != deltas.end()) {
            const CellEstimate* finer = find_cell(c.epsilon, *(id + 1));
            if (finer)
                rep.worst_P_delta = std::max(rep.worst_P_delta, c.slope - finer->slope);
        }
    }
    for (const auto& r : est.grid) {
        const auto ie = std::find(eps.begin(), eps.end(), r.epsilon);
        if (ie + 1 == eps.end())
            continue;
        if (const GridRecord* finer = find_rec(*(ie + 1), r.delta, r.t))
            rep.worst_Z = std::max(rep.worst_Z, r.logZ - finer->logZ);
    }
    if (rep.worst_Z > 1e-12)
        rep.Z_in_eps = Verdict::violated;
    if (rep.worst_P_eps > noise_bound)
        rep.P_in_eps = Verdict::violated;
    if (rep.worst_P_delta > noise_bound)
        rep.P_in_delta = Verdict::violated;
    if (!est.windowed)
        rep.delta_note = "(full window, no delta axis)";
    return rep;
}

/// Z^{T'} <= Z^T when T' refines T: a T'-separated set is T-separated.
struct RefinementCheck {
    std::size_t fine_count = 0;   // |E| separated for the refinement T'
    std::size_t coarse_count = 0; // |E| for T, seeded with the T' set
    double fine_logZ = 0.0;
    double coarse_logZ = 0.0;
    bool fine_set_is_coarse_separated = true;
    bool holds() const { return fine_set_is_coarse_separated && fine_logZ <= coarse_logZ + 1e-12; }
};

template <SuspensionFlow F>
RefinementCheck refinement_check(const Semiflow<F>& sf, const SeparationWindow<F>& coarse,
                                 const SeparationWindow<F>& fine, double eps, double t,
                                 const std::vector<typename F::point_type>& candidates,
                                 const Potential<F>& f = Potential<F>::zero(), const GreedyOptions& opt = {})
{
    RefinementCheck rc;
    const auto Ef = greedy_separated_set(sf, fine, eps, t, candidates, &f, opt);
    rc.fine_count = Ef.size();
    rc.fine_logZ = Ef.logZ;
    const auto pts = Ef.points();
    const auto Ec = greedy_separated_set(sf, coarse, eps, t, candidates, &f, opt, &pts);
    rc.coarse_count = Ec.size();
    rc.coarse_logZ = Ec.logZ;
    // the seeds go in first, so all of them surviving means the fine set is coarse-separated
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (i >= Ec.size() || !(Ec.members[i].start == pts[i])) {
            rc.fine_set_is_coarse_separated = false;
            break;
        }
    return rc;
}

} // namespace isf

#endif
