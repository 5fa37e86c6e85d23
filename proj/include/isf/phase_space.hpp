#ifndef ISF_PHASE_SPACE_HPP
#define ISF_PHASE_SPACE_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>

#include "random.hpp"

namespace isf {

/// Reduces x to [0, 1).
inline double wrap_unit(double x) noexcept
{
    double r = x - std::floor(x);
    return r >= 1.0 ? 0.0 : r;
}

/// Point e^{2 pi i angle} of the unit circle.
struct CirclePoint {
    double angle = 0.0;

    friend bool operator==(const CirclePoint&, const CirclePoint&) = default;
};

inline double circle_distance(CirclePoint a, CirclePoint b) noexcept
{
    const double d = std::abs(a.angle - b.angle);
    return std::min(d, 1.0 - d);
}

enum class TailRule { periodic, zero_fill };

/// Truncation x_{-N..N} of a two-sided binary sequence.
///
/// Digits outside the window are supplied by the tail rule when the word is
/// shifted: `periodic` treats the window as one period of length 2N+1,
/// `zero_fill` brings in a constant digit (0, or 1 after a digit flip, since
/// flipping acts on the whole bi-infinite sequence).
class ShiftPoint {
public:
    static constexpr int max_window = 62;

    explicit ShiftPoint(int window = 32, TailRule tail = TailRule::zero_fill)
        : window_(check_window(window)), tail_(tail)
    {
    }

    template <class DigitAt>
        requires std::invocable<DigitAt, int>
    static ShiftPoint generate(int window, TailRule tail, DigitAt&& digit_at)
    {
        ShiftPoint x(window, tail);
        for (int n = -window; n <= window; ++n)
            x.set(n, static_cast<int>(digit_at(n)));
        return x;
    }

    static ShiftPoint constant(int digit, int window = 32, TailRule tail = TailRule::zero_fill)
    {
        ShiftPoint x = generate(window, tail, [digit](int) { return digit; });
        x.fill_ = static_cast<std::uint8_t>(digit & 1);
        return x;
    }

    static ShiftPoint random(Rng& rng, int window = 32, TailRule tail = TailRule::zero_fill)
    {
        ShiftPoint x(window, tail);
        x.pos_ = rng() & x.pos_mask();
        x.neg_ = rng() & x.neg_mask();
        return x;
    }

    int window() const noexcept { return window_; }
    TailRule tail() const noexcept { return tail_; }
    int fill_digit() const noexcept { return fill_; }

    int operator[](int n) const
    {
        check_index(n);
        return n >= 0 ? static_cast<int>((pos_ >> n) & 1U)
                      : static_cast<int>((neg_ >> (-n - 1)) & 1U);
    }

    void set(int n, int digit)
    {
        check_index(n);
        if (digit != 0 && digit != 1)
            throw std::domain_error("ShiftPoint: digits must be 0 or 1");
        const std::uint64_t bit = n >= 0 ? (1ULL << n) : (1ULL << (-n - 1));
        std::uint64_t& word = n >= 0 ? pos_ : neg_;
        word = digit ? (word | bit) : (word & ~bit);
    }

    /// The left shift: (sigma x)_n = x_{n+1}.
    ShiftPoint shifted() const noexcept
    {
        ShiftPoint y = *this;
        const std::uint64_t incoming =
            tail_ == TailRule::periodic ? (neg_ >> (window_ - 1)) & 1U : fill_;
        y.pos_ = (pos_ >> 1) | (incoming << window_);
        y.neg_ = ((neg_ << 1) | (pos_ & 1U)) & neg_mask();
        return y;
    }

    /// Inverse shift: (sigma^{-1} x)_n = x_{n-1}.
    ShiftPoint unshifted() const noexcept
    {
        ShiftPoint y = *this;
        const std::uint64_t incoming =
            tail_ == TailRule::periodic ? (pos_ >> window_) & 1U : fill_;
        y.pos_ = ((pos_ << 1) | (neg_ & 1U)) & pos_mask();
        y.neg_ = (neg_ >> 1) | (incoming << (window_ - 1));
        return y;
    }

    /// Digit reversal x_n -> 1 - x_n.
    ShiftPoint flipped() const noexcept
    {
        ShiftPoint y = *this;
        y.pos_ ^= pos_mask();
        y.neg_ ^= neg_mask();
        y.fill_ ^= 1U;
        return y;
    }

    /// Smallest |n| with x_n != y_n, or -1 when the windows agree.
    friend int first_difference(const ShiftPoint& x, const ShiftPoint& y)
    {
        check_same_window(x, y);
        const std::uint64_t dp = x.pos_ ^ y.pos_;
        const std::uint64_t dn = x.neg_ ^ y.neg_;
        int k = std::numeric_limits<int>::max();
        if (dp != 0)
            k = std::countr_zero(dp);
        if (dn != 0)
            k = std::min(k, std::countr_zero(dn) + 1);
        return k == std::numeric_limits<int>::max() ? -1 : k;
    }

    /// d(x, y) = 2^{-k}, k the first disagreement index in absolute value.
    friend double shift_distance(const ShiftPoint& x, const ShiftPoint& y)
    {
        const int k = first_difference(x, y);
        return k < 0 ? 0.0 : std::ldexp(1.0, -k);
    }

    /// Digits x_{-k..k} packed into an integer; used as a hash key.
    std::uint64_t pattern(int k) const noexcept
    {
        if (k < 0)
            return 0;
        k = std::min<int>(k, window_);
        const std::uint64_t lo = pos_ & ((2ULL << k) - 1);
        const std::uint64_t hi = neg_ & ((1ULL << k) - 1);
        return (hi << (k + 1)) | lo;
    }

    /// Raw storage, for bitwise metric code.
    std::uint64_t positive_bits() const noexcept { return pos_; }
    std::uint64_t negative_bits() const noexcept { return neg_; }

    friend bool operator==(const ShiftPoint& x, const ShiftPoint& y) noexcept
    {
        return x.window_ == y.window_ && x.pos_ == y.pos_ && x.neg_ == y.neg_;
    }

    static void check_same_window(const ShiftPoint& x, const ShiftPoint& y)
    {
        if (x.window_ != y.window_)
            throw std::domain_error("ShiftPoint: words with different windows are not comparable");
    }

private:
    static int check_window(int window)
    {
        if (window < 1 || window > max_window)
            throw std::domain_error("ShiftPoint: window must be in [1, 62]");
        return window;
    }

    void check_index(int n) const
    {
        if (n < -window_ || n > window_)
            throw std::out_of_range("ShiftPoint: index outside the stored window");
    }

    std::uint64_t pos_mask() const noexcept { return (2ULL << window_) - 1; }
    std::uint64_t neg_mask() const noexcept { return (1ULL << window_) - 1; }

    std::uint64_t pos_ = 0; // bit n holds x_n, 0 <= n <= N
    std::uint64_t neg_ = 0; // bit n-1 holds x_{-n}, 1 <= n <= N
    std::int8_t window_;
    TailRule tail_;
    std::uint8_t fill_ = 0;
};

/// Point (x, u) of a suspension space; canonical form has 0 <= u < c(x).
template <class Base>
struct SuspensionPoint {
    Base base;
    double height = 0.0;

    friend bool operator==(const SuspensionPoint&, const SuspensionPoint&) = default;
};

/// Heights inside a floor where the distance between two jointly rising
/// points may stop being affine. Between consecutive kinks, roofs and
/// impulses of both orbits the distance is convex in time.
struct Kinks {
    std::array<double, 3> at{};
    int count = 0;
};

/// Unit-speed vertical flow over an invertible base map under a ceiling,
/// with roof identification (x, c(x)) ~ (step(x), 0).
template <class F>
concept SuspensionFlow = requires(const F& f, const typename F::base_type& x, const typename F::point_type& p,
                                  double eps, Rng& rng) {
    typename F::point_type;
    { f.ceiling(x) } -> std::convertible_to<double>;
    { f.min_ceiling() } -> std::convertible_to<double>;
    { f.step(x) } -> std::same_as<typename F::base_type>;
    { f.unstep(x) } -> std::same_as<typename F::base_type>;
    { f.distance(p, p) } -> std::convertible_to<double>;
    { f.kinks(x) } -> std::same_as<Kinks>;
    { f.perturb_base(x, eps, rng) } -> std::same_as<typename F::base_type>;
};

namespace detail {

inline std::uint64_t hash_cell(std::uint64_t h, std::int64_t cell) noexcept
{
    return mix64(h ^ (static_cast<std::uint64_t>(cell) + 0x9e3779b97f4a7c15ULL));
}

/// Spatial hashing for an l1 budget. Coordinates z[0..n) are cut into
/// cells of width >= w (period[i] > 0 marks a cyclic coordinate); emit(key)
/// is called for every cell combination that can hold a point within l1
/// distance `budget` of z. budget 0 gives the point's own key. Requires
/// budget <= w.
template <class Emit>
void l1_cells(const double* z, const double* period, int n, double w, double budget, std::uint64_t h, Emit& emit)
{
    if (n == 0) {
        emit(h);
        return;
    }
    constexpr double offset = 0.37; // keeps lattice values off cell walls
    double width = w;
    std::int64_t cells = 0;
    if (period[0] > 0.0) {
        cells = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(period[0] / w)));
        width = period[0] / static_cast<double>(cells);
    }
    const double pos = z[0] / width + offset;
    const double fl = std::floor(pos);
    const double frac = pos - fl;
    const auto c = static_cast<std::int64_t>(fl);
    auto reduce = [cells](std::int64_t k) { return cells > 0 ? ((k % cells) + cells) % cells : k; };
    if (budget > 0.0 && cells > 0 && cells <= 2) {
        // every cell of a coarse circle is a neighbour
        for (std::int64_t k = 0; k < cells; ++k)
            l1_cells(z + 1, period + 1, n - 1, w, budget, hash_cell(h, k), emit);
        return;
    }
    l1_cells(z + 1, period + 1, n - 1, w, budget, hash_cell(h, reduce(c)), emit);
    if (budget <= 0.0)
        return;
    const double down = frac * width;
    const double up = (1.0 - frac) * width;
    if (down <= budget)
        l1_cells(z + 1, period + 1, n - 1, w, budget - down, hash_cell(h, reduce(c - 1)), emit);
    if (up <= budget)
        l1_cells(z + 1, period + 1, n - 1, w, budget - up, hash_cell(h, reduce(c + 1)), emit);
}

inline std::uint64_t reverse_bits(std::uint64_t v) noexcept
{
    v = ((v >> 1) & 0x5555555555555555ULL) | ((v & 0x5555555555555555ULL) << 1);
    v = ((v >> 2) & 0x3333333333333333ULL) | ((v & 0x3333333333333333ULL) << 2);
    v = ((v >> 4) & 0x0F0F0F0F0F0F0F0FULL) | ((v & 0x0F0F0F0F0F0F0F0FULL) << 4);
    return __builtin_bswap64(v);
}

} // namespace detail

/// Suspension of the circle rotation by theta under a constant ceiling
/// (1 unless stated). The space is a 2-torus.
///
/// Metric: minimum of |angle difference| + |u - v| over the representatives
/// (z, u), (z + theta, u - c), (z - theta, u + c). The rotation is an
/// isometry, so this is the quotient metric.
class RotationSuspension {
public:
    using base_type = CirclePoint;
    using point_type = SuspensionPoint<CirclePoint>;

    explicit RotationSuspension(double theta = std::numbers::sqrt2 - 1.0, double ceiling = 1.0)
        : theta_(theta), ceiling_(ceiling)
    {
        if (!(theta > 0.0 && theta < 1.0))
            throw std::domain_error("RotationSuspension: rotation angle must lie in (0, 1)");
        if (!(ceiling > 0.0))
            throw std::domain_error("RotationSuspension: ceiling must be positive");
    }

    double theta() const noexcept { return theta_; }

    double ceiling(const CirclePoint&) const noexcept { return ceiling_; }
    double min_ceiling() const noexcept { return ceiling_; }
    double max_ceiling() const noexcept { return ceiling_; }
    CirclePoint step(CirclePoint z) const noexcept { return {wrap_unit(z.angle + theta_)}; }
    CirclePoint unstep(CirclePoint z) const noexcept { return {wrap_unit(z.angle - theta_)}; }

    double distance(const point_type& p0, const point_type& q0) const noexcept
    {
        // fixed argument order keeps the float result exactly symmetric
        const bool swap = std::pair(p0.height, p0.base.angle) > std::pair(q0.height, q0.base.angle);
        const point_type& p = swap ? q0 : p0;
        const point_type& q = swap ? p0 : q0;
        double best = std::numeric_limits<double>::infinity();
        for (int k = -1; k <= 1; ++k) {
            const double dh = std::abs(p.height - k * ceiling_ - q.height);
            if (dh >= best)
                continue;
            best = std::min(best, dh + circle_distance({wrap_unit(p.base.angle + k * theta_)}, q.base));
        }
        return best;
    }

    /// Joint vertical motion keeps the distance constant between roofs.
    Kinks kinks(const CirclePoint&) const noexcept { return {}; }

    /// Key under which a canonical point is stored for eps-neighbour search.
    template <class Emit>
    void store_keys(const point_type& p, double eps, Emit&& emit) const
    {
        const double z[2] = {p.base.angle, p.height};
        const double period[2] = {1.0, 0.0};
        detail::l1_cells(z, period, 2, 2.0 * eps, 0.0, 0, emit);
    }

    /// Keys covering every stored point within eps of p.
    template <class Emit>
    void probe_keys(const point_type& p, double eps, Emit&& emit) const
    {
        const double period[2] = {1.0, 0.0};
        for (int k = -1; k <= 1; ++k) {
            const double h = p.height - k * ceiling_;
            if (h < -eps || h > ceiling_ + eps)
                continue;
            const double z[2] = {wrap_unit(p.base.angle + k * theta_), h};
            detail::l1_cells(z, period, 2, 2.0 * eps, eps, 0, emit);
        }
    }

    point_type sample(Rng& rng) const { return {{rng.uniform()}, rng.uniform() * ceiling_}; }

    /// A base point whose lift at any common height is closer than r.
    CirclePoint perturb_base(CirclePoint z, double r, Rng& rng) const
    {
        return {wrap_unit(z.angle + rng.uniform(-r, r) * 0.999)};
    }

    void check_horizon(double, double, double) const noexcept {}

private:
    double theta_;
    double ceiling_;
};

/// Suspension of the two-sided full 2-shift with ceiling a on [x_0 = 0]
/// and b on [x_0 = 1].
///
/// The metric is pulled back from an l1 embedding, because sigma is not an
/// isometry and the representative minimum is not a metric here. A point
/// (x, u) goes to (gamma, B, B') where
///  - gamma runs along a triangle in the plane, at unit speed over the
///    lower band 0 <= u <= band and back to the start over the upper band;
///  - B_n = (1 - m) x_n + m x_{n+1} and B'_n likewise with lambda(m), where
///    m is 0 on the lower band and rises linearly to 1 at the roof,
///    weighted by 2^{-|n|} / 2.
/// On the lower band the distance is |gamma - gamma'| plus the weighted
/// Hamming distance sum 2^{-|n|} |x_n - y_n|, so maps acting by digit
/// permutations at fixed heights there are isometries. Continuity at the
/// roof is built in, and the second interpolation removes the ambiguity at
/// m = 1/2.
class ShiftSuspension {
public:
    using base_type = ShiftPoint;
    using point_type = SuspensionPoint<ShiftPoint>;

    /// band <= 0 picks half the smaller ceiling.
    ShiftSuspension(double a = std::numbers::pi, double b = 2.0 + std::numbers::sqrt2,
                    int window = 32, TailRule tail = TailRule::zero_fill, double band = 0.0)
        : a_(a), b_(b), window_(window), tail_(tail)
    {
        if (!(a > 0.0) || !(b > 0.0))
            throw std::domain_error("ShiftSuspension: ceilings must be positive");
        ShiftPoint probe(window, tail); // validates the window
        (void)probe;
        band_ = band > 0.0 ? band : 0.5 * std::min(a, b);
        if (!(band_ < std::min(a, b)))
            throw std::domain_error("ShiftSuspension: band must lie below both ceilings");
        ret_ = std::min(0.5 * (a + b) - band_, 0.5 * band_);
        apex_ = 0.5 * (band_ - ret_);
    }

    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    int window() const noexcept { return window_; }
    TailRule tail() const noexcept { return tail_; }
    double band() const noexcept { return band_; }

    double ceiling(const ShiftPoint& x) const noexcept { return x[0] == 0 ? a_ : b_; }
    double min_ceiling() const noexcept { return std::min(a_, b_); }
    double max_ceiling() const noexcept { return std::max(a_, b_); }
    ShiftPoint step(const ShiftPoint& x) const noexcept { return x.shifted(); }
    ShiftPoint unstep(const ShiftPoint& x) const noexcept { return x.unshifted(); }

    /// Position of (x, u) on the embedding, without the digit blocks.
    struct Embedding {
        double gx;
        double gy;
        double m1; // interpolation weight of B
        double m2; // interpolation weight of B'
    };

    Embedding embed(const ShiftPoint& x, double u) const noexcept
    {
        const double half = 0.5 * band_;
        if (u <= half) {
            const double f = u / half;
            return {0.5 * ret_ * f, apex_ * f, 0.0, 0.0};
        }
        if (u <= band_) {
            const double f = (u - half) / half;
            return {0.5 * ret_ * (1.0 + f), apex_ * (1.0 - f), 0.0, 0.0};
        }
        const double m = std::min(1.0, (u - band_) / (ceiling(x) - band_));
        return {ret_ * (1.0 - m), 0.0, m, second_weight(m)};
    }

    /// Heights up to and including the ceiling are accepted, so left limits
    /// at the roof can be evaluated without normalising.
    double distance(const point_type& p0, const point_type& q0) const
    {
        ShiftPoint::check_same_window(p0.base, q0.base);
        // fixed argument order keeps the float result exactly symmetric
        const bool swap = std::tuple(p0.height, p0.base.positive_bits(), p0.base.negative_bits()) >
                          std::tuple(q0.height, q0.base.positive_bits(), q0.base.negative_bits());
        const point_type& p = swap ? q0 : p0;
        const point_type& q = swap ? p0 : q0;

        const Embedding ep = embed(p.base, p.height);
        const Embedding eq = embed(q.base, q.height);
        double d = std::abs(ep.gx - eq.gx) + std::abs(ep.gy - eq.gy);

        const ShiftPoint ps = p.base.shifted();
        const ShiftPoint qs = q.base.shifted();
        double W[4][4] = {};
        auto accumulate = [&W](std::uint64_t x, std::uint64_t xs, std::uint64_t y, std::uint64_t ys,
                               std::uint64_t valid, double scale) {
            x = detail::reverse_bits(x);
            xs = detail::reverse_bits(xs);
            y = detail::reverse_bits(y);
            ys = detail::reverse_bits(ys);
            valid = detail::reverse_bits(valid);
            // class 2 x_n + x_{n+1}
            const std::uint64_t cx[4] = {valid & ~x & ~xs, valid & ~x & xs, x & ~xs, x & xs};
            const std::uint64_t cy[4] = {valid & ~y & ~ys, valid & ~y & ys, y & ~ys, y & ys};
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j)
                    if (const std::uint64_t m = cx[i] & cy[j])
                        W[i][j] += static_cast<double>(m) * scale;
        };
        const std::uint64_t pos_valid = (2ULL << window_) - 1;
        const std::uint64_t neg_valid = (1ULL << window_) - 1;
        accumulate(p.base.positive_bits(), ps.positive_bits(), q.base.positive_bits(), qs.positive_bits(),
                   pos_valid, 0x1p-63);
        accumulate(p.base.negative_bits(), ps.negative_bits(), q.base.negative_bits(), qs.negative_bits(),
                   neg_valid, 0x1p-64);

        auto alpha = [](int cls, double m) {
            switch (cls) {
            case 0: return 0.0;
            case 1: return m;
            case 2: return 1.0 - m;
            default: return 1.0;
            }
        };
        double blocks = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                if (W[i][j] != 0.0)
                    blocks += W[i][j] * (std::abs(alpha(i, ep.m1) - alpha(j, eq.m1)) +
                                         std::abs(alpha(i, ep.m2) - alpha(j, eq.m2)));
        return d + 0.5 * blocks;
    }

    Kinks kinks(const ShiftPoint& x) const noexcept
    {
        return {{0.5 * band_, band_, 0.5 * (band_ + ceiling(x))}, 3};
    }

    template <class Emit>
    void store_keys(const point_type& p, double eps, Emit&& emit) const
    {
        emit_keys(p, eps, 0.0, emit);
    }

    template <class Emit>
    void probe_keys(const point_type& p, double eps, Emit&& emit) const
    {
        emit_keys(p, eps, eps, emit);
    }

    point_type sample(Rng& rng) const
    {
        ShiftPoint x = ShiftPoint::random(rng, window_, tail_);
        return {x, rng.uniform() * ceiling(x)};
    }

    /// Number of central digits two words must share to be closer than eps
    /// in the first-disagreement metric.
    static int shared_digits(double eps) noexcept
    {
        if (!(eps > 0.0) || eps >= 1.0)
            return -1;
        return static_cast<int>(std::ceil(-std::log2(eps))) - 1;
    }

    /// A word whose lift at any common height is closer than r: digits with
    /// 2^{-|n|} < r / 8 are redrawn (the tail of the weights sums to 4 2^{-k},
    /// doubled because the upper band reads x_{n+1}).
    ShiftPoint perturb_base(const ShiftPoint& x, double r, Rng& rng) const
    {
        ShiftPoint y = x;
        if (!(r > 0.0) || r > 8.0)
            return y;
        const int k = static_cast<int>(std::floor(std::log2(8.0 / r))) + 1;
        for (int n = k; n <= window_; ++n) {
            y.set(n, rng.bit());
            y.set(-n, rng.bit());
        }
        return y;
    }

    /// Throws when `horizon` needs more digits than the window stores:
    /// one digit per roof crossing (at most horizon / min_cycle + 1 of them)
    /// plus the digits resolving distances down to eps.
    void check_horizon(double horizon, double eps, double min_cycle) const
    {
        const double crossings = std::ceil(horizon / min_cycle) + 1.0;
        const double precision = std::max(0, shared_digits(eps)) + 1.0;
        if (crossings + precision > window_)
            throw std::domain_error("ShiftSuspension: word window " + std::to_string(window_) +
                                    " too short for horizon " + std::to_string(horizon));
    }

private:
    static double second_weight(double m) noexcept
    {
        return m <= 0.5 ? 1.5 * m : 0.75 + 0.5 * (m - 0.5);
    }

    /// Index coordinates: gamma and the summed blocks at the central digits.
    /// Each is a partial sum of the l1 terms, so the projection is 1-Lipschitz.
    template <class Emit>
    void emit_keys(const point_type& p, double eps, double budget, Emit& emit) const
    {
        const Embedding e = embed(p.base, p.height);
        const ShiftPoint xs = p.base.shifted();
        double z[2 + 2 * 6 + 1];
        double period[2 + 2 * 6 + 1] = {};
        int n = 0;
        z[n++] = e.gx;
        z[n++] = e.gy;
        for (int k = 0; k <= std::min(6, window_); ++k) {
            const double weight = 0.5 * std::ldexp(1.0, -k);
            if (2.0 * weight < 2.0 * eps)
                break;
            for (int sgn : {1, -1}) {
                if (k == 0 && sgn < 0)
                    continue;
                const int i = sgn * k;
                const double b1 = (1.0 - e.m1) * p.base[i] + e.m1 * xs[i];
                const double b2 = (1.0 - e.m2) * p.base[i] + e.m2 * xs[i];
                z[n++] = weight * (b1 + b2);
            }
        }
        detail::l1_cells(z, period, n, 2.0 * eps, budget, 0, emit);
    }

    double a_;
    double b_;
    int window_;
    TailRule tail_;
    double band_;
    double ret_;  // l1 length of the return edge
    double apex_; // height of the triangle
};

/// Brings a point to canonical form 0 <= height < ceiling(base).
template <SuspensionFlow F>
typename F::point_type normalize(const F& flow, typename F::point_type p)
{
    while (p.height < 0.0) {
        p.base = flow.unstep(p.base);
        p.height += flow.ceiling(p.base);
    }
    for (double c = flow.ceiling(p.base); p.height >= c; c = flow.ceiling(p.base)) {
        p.height -= c;
        p.base = flow.step(p.base);
    }
    return p;
}

/// The suspension semiflow phi_t.
template <SuspensionFlow F>
typename F::point_type evolve(const F& flow, typename F::point_type p, double t)
{
    if (!(t >= 0.0) || !std::isfinite(t))
        throw std::domain_error("evolve: time must be finite and non-negative");
    p.height += t;
    return normalize(flow, p);
}

/// phi_{-t}; suspension flows are invertible.
template <SuspensionFlow F>
typename F::point_type evolve_back(const F& flow, typename F::point_type p, double t)
{
    if (!(t >= 0.0) || !std::isfinite(t))
        throw std::domain_error("evolve_back: time must be finite and non-negative");
    p.height -= t;
    return normalize(flow, p);
}

template <SuspensionFlow F>
double distance(const F& flow, const typename F::point_type& p, const typename F::point_type& q)
{
    return flow.distance(p, q);
}

} // namespace isf

#endif
