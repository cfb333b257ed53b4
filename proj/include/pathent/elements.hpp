#pragma once

// Passive linear elements, applied by rewriting creation operators.

#include <array>
#include <numbers>
#include <variant>
#include <vector>

#include "pathent/fock.hpp"

namespace pathent {

namespace detail {

// Exact for arguments up to 18, plenty for any photon total this library sees.
inline double factorial_d(int n) {
    static const auto table = [] {
        std::array<double, 171> t{};
        t[0] = 1.0;
        for (int i = 1; i < 171; ++i) t[i] = t[i - 1] * double(i);
        return t;
    }();
    if (n < 0 || n >= int(table.size())) throw std::invalid_argument("factorial argument out of range");
    return table[n];
}

inline double binomial_d(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    return factorial_d(n) / (factorial_d(k) * factorial_d(n - k));
}

// std::pow(complex, 0) is not reliably 1 for a zero base; do it by hand.
inline complex_t cpow(complex_t z, int e) {
    complex_t r{1.0, 0.0};
    for (int i = 0; i < e; ++i) r *= z;
    return r;
}

}  // namespace detail

// Rewrites x' -> u00 x' + u01 y', y' -> u10 x' + u11 y' on the creation
// operators of two registry modes and re-expands each basis term.
inline PureState apply_two_mode(const PureState& psi, const ModeLabel& x, const ModeLabel& y,
                                const std::array<complex_t, 4>& u) {
    std::size_t ix = psi.mode_index(x);
    std::size_t iy = psi.mode_index(y);
    if (ix == iy) throw std::invalid_argument("two-mode element needs distinct modes");
    PureState out(psi.registry());
    for (const auto& [occ, amp] : psi.terms()) {
        int m = occ[ix], n = occ[iy];
        int total = m + n;
        double src = std::sqrt(detail::factorial_d(m) * detail::factorial_d(n));
        for (int j = 0; j <= total; ++j) {
            // Coefficient of x'^j y'^(total-j) in (u00 x' + u01 y')^m (u10 x' + u11 y')^n.
            complex_t cj{0.0, 0.0};
            for (int p = std::max(0, j - n); p <= std::min(m, j); ++p) {
                complex_t term = detail::binomial_d(m, p) * detail::binomial_d(n, j - p);
                term *= detail::cpow(u[0], p) * detail::cpow(u[1], m - p);
                term *= detail::cpow(u[2], j - p) * detail::cpow(u[3], n - j + p);
                cj += term;
            }
            if (cj == complex_t{0.0, 0.0}) continue;
            BasisState o = occ;
            o[ix] = j;
            o[iy] = total - j;
            double dst = std::sqrt(detail::factorial_d(j) * detail::factorial_d(total - j));
            out.add_term(o, amp * cj * dst / src);
        }
    }
    out.prune();
    return out;
}

struct BeamSplitterSpec {
    ModeLabel mode_a, mode_b;
    double transmission = 0.5;
};

struct PhaseShiftSpec {
    ModeLabel mode;
    double angle = 0.0;
};

struct PolarizationRotationSpec {
    int spatial = 0;
    double angle = 0.0;
};

// Transmits H, reflects V with a quarter-wave phase per photon.
struct PbsSpec {
    int in1 = 0, in2 = 0;
    int out_transmitted = 0, out_reflected = 0;
};

using ElementSpec =
    std::variant<BeamSplitterSpec, PhaseShiftSpec, PolarizationRotationSpec, PbsSpec>;

inline std::array<complex_t, 4> beam_splitter_matrix(double transmission) {
    if (!(transmission >= 0.0 && transmission <= 1.0))
        throw std::invalid_argument("transmission outside [0,1]");
    double st = std::sqrt(transmission);
    double sr = std::sqrt(1.0 - transmission);
    return {complex_t{-st, 0.0}, complex_t{0.0, sr}, complex_t{0.0, sr}, complex_t{-st, 0.0}};
}

inline PureState apply_beam_splitter(const PureState& psi, const BeamSplitterSpec& bs) {
    return apply_two_mode(psi, bs.mode_a, bs.mode_b, beam_splitter_matrix(bs.transmission));
}

inline PureState apply_phase_shift(const PureState& psi, const PhaseShiftSpec& ps) {
    std::size_t idx = psi.mode_index(ps.mode);
    PureState out(psi.registry());
    for (const auto& [occ, amp] : psi.terms()) {
        complex_t phase = std::polar(1.0, ps.angle * occ[idx]);
        out.add_term(occ, amp * phase);
    }
    return out;
}

inline PureState apply_polarization_rotation(const PureState& psi,
                                             const PolarizationRotationSpec& rot) {
    ModeLabel h{rot.spatial, Polarization::H};
    ModeLabel v{rot.spatial, Polarization::V};
    if (!psi.has_mode(h) || !psi.has_mode(v))
        throw std::invalid_argument("polarization rotation needs both sub-modes of spatial " +
                                    std::to_string(rot.spatial));
    double c = std::cos(rot.angle), s = std::sin(rot.angle);
    return apply_two_mode(psi, h, v,
                          {complex_t{c, 0.0}, complex_t{s, 0.0}, complex_t{-s, 0.0}, complex_t{c, 0.0}});
}

inline PureState apply_pbs(const PureState& psi, const PbsSpec& pbs) {
    if (pbs.in1 == pbs.in2 || pbs.out_transmitted == pbs.out_reflected)
        throw std::invalid_argument("pbs ports must be distinct");
    struct Route {
        std::size_t src, dst;
        bool reflected;
    };
    struct Wiring {
        ModeLabel from, to;
        bool reflected;
    };
    const Wiring wiring[] = {
        {{pbs.in1, Polarization::H}, {pbs.out_transmitted, Polarization::H}, false},
        {{pbs.in1, Polarization::V}, {pbs.out_reflected, Polarization::V}, true},
        {{pbs.in2, Polarization::H}, {pbs.out_reflected, Polarization::H}, false},
        {{pbs.in2, Polarization::V}, {pbs.out_transmitted, Polarization::V}, true},
    };
    // A route participates only if its input sub-mode exists in the registry.
    std::vector<Route> routes;
    for (const auto& w : wiring)
        if (psi.has_mode(w.from)) routes.push_back({psi.mode_index(w.from), psi.mode_index(w.to), w.reflected});
    PureState out(psi.registry());
    for (const auto& [occ, amp] : psi.terms()) {
        BasisState o = occ;
        complex_t a = amp;
        for (const auto& r : routes) o[r.src] = 0;
        for (const auto& r : routes) {
            int n = occ[r.src];
            if (n == 0) continue;
            if (o[r.dst] != 0)
                throw std::invalid_argument("pbs output mode already occupied");
            o[r.dst] = n;
            if (r.reflected)  // i per reflected photon
                a *= std::polar(1.0, 0.5 * std::numbers::pi * n);
        }
        out.add_term(o, a);
    }
    out.prune();
    return out;
}

inline PureState apply_element(const PureState& psi, const ElementSpec& el) {
    return std::visit(
        [&](const auto& e) -> PureState {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, BeamSplitterSpec>) return apply_beam_splitter(psi, e);
            if constexpr (std::is_same_v<T, PhaseShiftSpec>) return apply_phase_shift(psi, e);
            if constexpr (std::is_same_v<T, PolarizationRotationSpec>)
                return apply_polarization_rotation(psi, e);
            if constexpr (std::is_same_v<T, PbsSpec>) return apply_pbs(psi, e);
        },
        el);
}

}  // namespace pathent
