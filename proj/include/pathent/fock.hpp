#pragma once

// Sparse occupation-number states over a labelled set of optical modes.

#include <algorithm>
#include <cmath>
#include <complex>
#include <compare>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pathent {

using complex_t = std::complex<double>;

// Amplitudes below this magnitude are dropped after every operation.
inline constexpr double kPruneThreshold = 1e-14;

enum class Polarization : std::uint8_t { None, H, V };

// A mode is a spatial path plus an optional polarization sub-mode.
struct ModeLabel {
    int spatial = 0;
    Polarization pol = Polarization::None;
    friend auto operator<=>(const ModeLabel&, const ModeLabel&) = default;
};

inline std::string to_string(const ModeLabel& m) {
    std::string s = std::to_string(m.spatial);
    if (m.pol == Polarization::H) s += 'H';
    if (m.pol == Polarization::V) s += 'V';
    return s;
}

// Occupation vector, index-aligned with a mode registry.
using BasisState = std::vector<int>;
using ModeRegistry = std::vector<ModeLabel>;

// A registry is valid when labels are unique and no spatial index mixes a
// polarization-free label with polarized ones.
inline void validate_registry(const ModeRegistry& reg) {
    for (std::size_t i = 0; i < reg.size(); ++i) {
        for (std::size_t j = i + 1; j < reg.size(); ++j) {
            if (reg[i] == reg[j])
                throw std::invalid_argument("duplicate mode label " + to_string(reg[i]));
            if (reg[i].spatial == reg[j].spatial &&
                (reg[i].pol == Polarization::None) != (reg[j].pol == Polarization::None))
                throw std::invalid_argument(
                    "spatial index " + std::to_string(reg[i].spatial) +
                    " mixes polarized and polarization-free labels");
        }
    }
}

class PureState {
  public:
    PureState() = default;

    explicit PureState(ModeRegistry registry) : registry_(std::move(registry)) {
        validate_registry(registry_);
    }

    const ModeRegistry& registry() const { return registry_; }
    const std::map<BasisState, complex_t>& terms() const { return terms_; }

    // The zero vector doubles as the marker for impossible conditioning.
    bool is_zero() const { return terms_.empty(); }

    std::size_t mode_index(const ModeLabel& m) const {
        for (std::size_t i = 0; i < registry_.size(); ++i)
            if (registry_[i] == m) return i;
        throw std::out_of_range("mode " + to_string(m) + " not in registry");
    }

    bool has_mode(const ModeLabel& m) const {
        return std::find(registry_.begin(), registry_.end(), m) != registry_.end();
    }

    void add_term(const BasisState& occ, complex_t amp) {
        if (occ.size() != registry_.size())
            throw std::invalid_argument("occupation length does not match registry");
        for (int n : occ)
            if (n < 0) throw std::invalid_argument("negative occupation");
        auto it = terms_.find(occ);
        if (it == terms_.end())
            terms_.emplace(occ, amp);
        else
            it->second += amp;
    }

    void prune(double threshold = kPruneThreshold) {
        for (auto it = terms_.begin(); it != terms_.end();)
            it = std::abs(it->second) < threshold ? terms_.erase(it) : std::next(it);
    }

    double norm() const {
        double s = 0.0;
        for (const auto& [occ, amp] : terms_) s += std::norm(amp);
        return std::sqrt(s);
    }

    // Largest photon total over the support; 0 for the zero state.
    int max_photons() const {
        int best = 0;
        for (const auto& [occ, amp] : terms_) {
            int tot = 0;
            for (int n : occ) tot += n;
            best = std::max(best, tot);
        }
        return best;
    }

  private:
    ModeRegistry registry_;
    std::map<BasisState, complex_t> terms_;
};

inline PureState basis_state(const ModeRegistry& reg, const BasisState& occ) {
    PureState psi(reg);
    psi.add_term(occ, complex_t{1.0, 0.0});
    return psi;
}

inline PureState vacuum_state(const ModeRegistry& reg) {
    return basis_state(reg, BasisState(reg.size(), 0));
}

// Conjugate-linear in the first argument.
inline complex_t inner_product(const PureState& a, const PureState& b) {
    if (a.registry() != b.registry())
        throw std::invalid_argument("inner product across different registries");
    const auto& small = a.terms().size() <= b.terms().size() ? a : b;
    complex_t s{0.0, 0.0};
    for (const auto& [occ, amp] : small.terms()) {
        auto ita = a.terms().find(occ);
        auto itb = b.terms().find(occ);
        if (ita != a.terms().end() && itb != b.terms().end())
            s += std::conj(ita->second) * itb->second;
    }
    return s;
}

inline PureState scale(const PureState& psi, complex_t c) {
    PureState out(psi.registry());
    for (const auto& [occ, amp] : psi.terms()) out.add_term(occ, c * amp);
    out.prune();
    return out;
}

inline PureState add(const PureState& a, const PureState& b) {
    if (a.registry() != b.registry())
        throw std::invalid_argument("adding states over different registries");
    PureState out(a.registry());
    for (const auto& [occ, amp] : a.terms()) out.add_term(occ, amp);
    for (const auto& [occ, amp] : b.terms()) out.add_term(occ, amp);
    out.prune();
    return out;
}

enum class Ladder { Create, Annihilate };

// Repeated application of a single-mode ladder operator; result is left
// unnormalized so operator polynomials can be formed term by term.
inline PureState apply_ladder(const PureState& psi, const ModeLabel& mode, Ladder kind,
                              int repetitions = 1) {
    if (repetitions < 0) throw std::invalid_argument("negative repetition count");
    std::size_t idx = psi.mode_index(mode);
    PureState cur = psi;
    for (int r = 0; r < repetitions; ++r) {
        PureState next(cur.registry());
        for (const auto& [occ, amp] : cur.terms()) {
            BasisState o = occ;
            int n = o[idx];
            if (kind == Ladder::Annihilate) {
                if (n == 0) continue;  // annihilating vacuum kills the term
                o[idx] = n - 1;
                next.add_term(o, amp * std::sqrt(double(n)));
            } else {
                o[idx] = n + 1;
                next.add_term(o, amp * std::sqrt(double(n + 1)));
            }
        }
        next.prune();
        cur = std::move(next);
    }
    return cur;
}

// Concatenates registries; amplitudes multiply.
inline PureState tensor_product(const PureState& a, const PureState& b) {
    ModeRegistry reg = a.registry();
    reg.insert(reg.end(), b.registry().begin(), b.registry().end());
    validate_registry(reg);
    PureState out(std::move(reg));
    for (const auto& [oa, aa] : a.terms())
        for (const auto& [ob, ab] : b.terms()) {
            BasisState occ = oa;
            occ.insert(occ.end(), ob.begin(), ob.end());
            out.add_term(occ, aa * ab);
        }
    out.prune();
    return out;
}

struct Normalized {
    PureState state;
    double norm = 0.0;
};

// Zero input comes back zero with norm 0 rather than throwing, so callers can
// treat a failed herald as data.
inline Normalized normalize(const PureState& psi) {
    double n = psi.norm();
    if (n == 0.0) return {PureState(psi.registry()), 0.0};
    return {scale(psi, complex_t{1.0 / n, 0.0}), n};
}

// Removes a mode that is unoccupied in every surviving term.
inline PureState remove_empty_mode(const PureState& psi, const ModeLabel& mode) {
    std::size_t idx = psi.mode_index(mode);
    ModeRegistry reg = psi.registry();
    reg.erase(reg.begin() + idx);
    PureState out(std::move(reg));
    for (const auto& [occ, amp] : psi.terms()) {
        if (occ[idx] != 0)
            throw std::invalid_argument("mode " + to_string(mode) + " still occupied");
        BasisState o = occ;
        o.erase(o.begin() + idx);
        out.add_term(o, amp);
    }
    return out;
}

}  // namespace pathent
