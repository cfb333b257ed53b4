#pragma once

// Conditional detection: exact projections, lossy-detector POVM elements, and
// the branch ensembles mixed states collapse into.

#include <utility>
#include <vector>

#include "pathent/elements.hpp"
#include "pathent/fock.hpp"

namespace pathent {

// Branches with the same support whose amplitudes differ by less than this
// (after phase alignment) are merged.
inline constexpr double kBranchMergeThreshold = 1e-12;

struct DetectorModel {
    double efficiency = 1.0;
    bool resolving = true;
};

// One diagonal POVM element: coefficients[n] weights the n-photon projector.
struct PovmElement {
    int clicks = 0;
    bool resolving = true;
    std::vector<double> coefficients;
};

// A classical mixture of pure states over a shared registry.  Pure dynamics
// maps branch by branch; only detection with loss creates new branches.
struct EnsembleState {
    struct Branch {
        double weight = 0.0;
        PureState state;
    };
    std::vector<Branch> branches;

    static EnsembleState pure(PureState psi) { return {{{1.0, std::move(psi)}}}; }

    const ModeRegistry& registry() const {
        if (branches.empty()) throw std::invalid_argument("empty ensemble");
        return branches.front().state.registry();
    }

    double total_weight() const {
        double s = 0.0;
        for (const auto& b : branches) s += b.weight;
        return s;
    }
};

struct Projection {
    PureState state;     // renormalized; zero state when probability is 0
    double probability = 0.0;
};

// Keeps only terms with exactly n photons in the mode, then drops the mode.
inline Projection project_photon_number(const PureState& psi, const ModeLabel& mode, int n) {
    if (n < 0) throw std::invalid_argument("negative photon count");
    std::size_t idx = psi.mode_index(mode);
    ModeRegistry reg = psi.registry();
    reg.erase(reg.begin() + idx);
    PureState kept(std::move(reg));
    for (const auto& [occ, amp] : psi.terms()) {
        if (occ[idx] != n) continue;
        BasisState o = occ;
        o.erase(o.begin() + idx);
        kept.add_term(o, amp);
    }
    auto [state, norm] = normalize(kept);
    return {std::move(state), norm * norm};
}

// Simultaneous exact counts on several modes.
inline Projection condition_coincidence(const PureState& psi,
                                        const std::vector<std::pair<ModeLabel, int>>& pattern) {
    if (pattern.empty()) throw std::invalid_argument("empty detection pattern");
    Projection cur{psi, 1.0};
    for (const auto& [mode, count] : pattern) {
        Projection next = project_photon_number(cur.state, mode, count);
        next.probability *= cur.probability;
        cur = std::move(next);
        if (cur.probability == 0.0) {
            // Still strip the remaining modes so the registry is predictable.
            PureState z = cur.state;
            for (const auto& [m2, c2] : pattern)
                if (z.has_mode(m2)) z = project_photon_number(z, m2, c2).state;
            return {std::move(z), 0.0};
        }
    }
    return cur;
}

// Binomial loss model: element k sees k clicks out of n photons, each
// surviving independently with probability eta.
inline PovmElement build_efficiency_povm(const DetectorModel& det, int clicks, int photon_bound) {
    if (det.efficiency < 0.0 || det.efficiency > 1.0)
        throw std::invalid_argument("efficiency outside [0,1]");
    if (clicks < 0 || photon_bound < 0) throw std::invalid_argument("negative count");
    if (clicks > photon_bound) throw std::invalid_argument("clicks exceed photon bound");
    PovmElement el{clicks, true, std::vector<double>(photon_bound + 1, 0.0)};
    for (int n = clicks; n <= photon_bound; ++n)
        el.coefficients[n] = detail::binomial_d(n, clicks) * std::pow(det.efficiency, clicks) *
                             std::pow(1.0 - det.efficiency, n - clicks);
    return el;
}

// Non-resolving "at least one click": 1 - (1-eta)^n.
inline PovmElement build_click_povm(const DetectorModel& det, int photon_bound) {
    if (det.efficiency < 0.0 || det.efficiency > 1.0)
        throw std::invalid_argument("efficiency outside [0,1]");
    PovmElement el{1, false, std::vector<double>(photon_bound + 1, 0.0)};
    for (int n = 0; n <= photon_bound; ++n)
        el.coefficients[n] = 1.0 - std::pow(1.0 - det.efficiency, n);
    return el;
}

struct PovmOutcome {
    EnsembleState state;  // renormalized; mode removed, occupation split into branches
    double probability = 0.0;
};

// Applies a diagonal POVM element to one mode of every branch.  Each photon
// number n with a nonzero coefficient becomes its own pure branch, because the
// environment records how many photons were lost.
inline PovmOutcome apply_povm(const EnsembleState& ens, const ModeLabel& mode,
                              const PovmElement& el) {
    EnsembleState out;
    double prob = 0.0;
    for (const auto& br : ens.branches) {
        int bound = int(el.coefficients.size()) - 1;
        for (int n = 0; n <= bound; ++n) {
            if (el.coefficients[n] == 0.0) continue;
            Projection pr = project_photon_number(br.state, mode, n);
            if (pr.probability == 0.0) continue;
            double w = br.weight * el.coefficients[n] * pr.probability;
            prob += w;
            out.branches.push_back({w, std::move(pr.state)});
        }
    }
    if (prob == 0.0) {
        // Zero-probability outcome: keep a single zero branch over the reduced registry.
        PureState z = ens.branches.empty() ? PureState() : ens.branches.front().state;
        if (!ens.branches.empty()) z = project_photon_number(z, mode, 0).state;
        return {EnsembleState{{{0.0, std::move(z)}}}, 0.0};
    }
    for (auto& b : out.branches) b.weight /= prob;
    return {std::move(out), prob};
}

// Measures the mode destructively without reading the result: branch per
// occupation value, coherence between different values discarded.
inline EnsembleState trace_out_mode(const EnsembleState& ens, const ModeLabel& mode) {
    EnsembleState out;
    for (const auto& br : ens.branches) {
        int bound = 0;
        std::size_t idx = br.state.mode_index(mode);
        for (const auto& [occ, amp] : br.state.terms()) bound = std::max(bound, occ[idx]);
        for (int n = 0; n <= bound; ++n) {
            Projection pr = project_photon_number(br.state, mode, n);
            if (pr.probability == 0.0) continue;
            out.branches.push_back({br.weight * pr.probability, std::move(pr.state)});
        }
        if (br.state.is_zero())
            out.branches.push_back({br.weight, project_photon_number(br.state, mode, 0).state});
    }
    return out;
}

// Overlap of two branches' states as pure rays (1 means same ray).
inline bool branches_coincide(const PureState& a, const PureState& b, double tol) {
    if (a.registry() != b.registry()) return false;
    complex_t ov = inner_product(a, b);
    return std::abs(std::abs(ov) - 1.0) < tol;
}

// Collapses duplicate rays into one branch.  Weights add; the representative
// amplitude vector of the first occurrence is kept.
inline EnsembleState merge_branches(const EnsembleState& ens,
                                    double tol = kBranchMergeThreshold) {
    EnsembleState out;
    for (const auto& br : ens.branches) {
        bool merged = false;
        for (auto& kept : out.branches) {
            if (branches_coincide(kept.state, br.state, tol)) {
                kept.weight += br.weight;
                merged = true;
                break;
            }
        }
        if (!merged) out.branches.push_back(br);
    }
    return out;
}

// Mixed-state overlap with a pure target: sum of weighted pure overlaps.
inline double fidelity(const EnsembleState& ens, const PureState& target) {
    double f = 0.0;
    for (const auto& br : ens.branches) {
        if (br.state.registry() != target.registry())
            throw std::invalid_argument("fidelity across different registries");
        f += br.weight * std::norm(inner_product(target, br.state));
    }
    return f;
}

}  // namespace pathent
