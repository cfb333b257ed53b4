#pragma once

// Conditional-detection circuits that distill path-entangled |N::0> states
// from dual-beam inputs, plus the closed-form scaling results they obey.

#include <numbers>
#include <optional>

#include "pathent/exact.hpp"
#include "pathent/measurement.hpp"

namespace pathent {

inline constexpr double kPi = std::numbers::pi;

// (|P,Q> + e^{i phi} |Q,P>) / sqrt(2) over a two-mode registry.  P == Q
// collapses to the single ket |P,P> (only meaningful at phi = 0).
inline PureState target_noon(const ModeRegistry& reg, int p, int q, double phi) {
    if (reg.size() != 2) throw std::invalid_argument("noon target needs two modes");
    if (q < 0 || p < q) throw std::invalid_argument("noon target needs p >= q >= 0");
    PureState psi(reg);
    if (p == q) {
        if (std::abs(phi) > 1e-12) throw std::invalid_argument("degenerate noon target needs phi = 0");
        psi.add_term({p, p}, complex_t{1.0, 0.0});
        return psi;
    }
    double inv = 1.0 / std::sqrt(2.0);
    psi.add_term({p, q}, complex_t{inv, 0.0});
    psi.add_term({q, p}, std::polar(inv, phi));
    return psi;
}

inline PureState target_noon(int p, int q, double phi) {
    return target_noon(ModeRegistry{{0, Polarization::None}, {1, Polarization::None}}, p, q, phi);
}

enum class PhaseVariant { PaperEven, PaperOdd, ExactTarget };
enum class DetectionBasis { DiagonalProjection, PolarizationInsensitive };

struct PhaseSchedule {
    PhaseVariant variant = PhaseVariant::ExactTarget;
    std::vector<double> phases;  // one entry per conditional element
};

// Phase settings whose unit factors e^{i phi_k} multiply out to a pure
// two-term polynomial in the mode operators.  The published even-N setting
// yields a^N + b^N or a^N - b^N depending on the parity of N/2; the
// exact-target setting picks the other root family when needed so the product
// is always a^N + b^N.
inline PhaseSchedule resolve_phase_roots(int n, PhaseVariant variant) {
    if (n < 2) throw std::invalid_argument("phase schedule needs n >= 2");
    PhaseSchedule s{variant, {}};
    switch (variant) {
        case PhaseVariant::PaperEven:
            if (n % 2 != 0) throw std::invalid_argument("even-n schedule for odd n");
            for (int k = 1; k <= n / 2; ++k) s.phases.push_back(4.0 * kPi * k / n);
            break;
        case PhaseVariant::PaperOdd:
            if (n % 2 == 0) throw std::invalid_argument("odd-n schedule for even n");
            for (int k = 1; k <= n; ++k) s.phases.push_back(2.0 * kPi * k / n);
            break;
        case PhaseVariant::ExactTarget:
            if (n % 2 != 0) {
                for (int k = 1; k <= n; ++k) s.phases.push_back(2.0 * kPi * k / n);
            } else if ((n / 2) % 2 == 0) {
                for (int k = 1; k <= n / 2; ++k) s.phases.push_back(2.0 * kPi * (2 * k - 1) / n);
            } else {
                // n/2 odd: the published even-n phases already land on +b^N.
                for (int k = 1; k <= n / 2; ++k) s.phases.push_back(4.0 * kPi * k / n);
            }
            break;
    }
    return s;
}

struct DetectionEvent {
    ModeLabel mode;
    int count = 0;
};

struct Stage {
    ModeRegistry fresh_modes;
    std::vector<ElementSpec> elements;
    // Mutually exclusive detector outcomes accepted by the herald, combined
    // incoherently.  A plain coincidence is a single alternative.
    std::vector<std::vector<DetectionEvent>> detection_alternatives;
    ModeRegistry traced;
    double transmission = 0.0;  // bookkeeping for reports
    double phase = 0.0;
};

struct Circuit {
    ModeRegistry main_modes;
    BasisState input;
    std::vector<Stage> stages;
    DetectorModel detector;
    int photons = 0;  // n of the |n::0> target
};

struct ProtocolRun {
    EnsembleState output;
    double success_probability = 0.0;
    std::vector<double> stage_probabilities;
    double fidelity = 0.0;
    double achieved_phase = 0.0;
    bool herald_failed = false;
};

struct NoonFit {
    double fidelity = 0.0;
    double phase = 0.0;
};

// Best overlap with the |n::0> family, maximized over the relative phase.
// With per-branch amplitudes a_i = <n,0|psi_i>, b_i = <0,n|psi_i> the optimum
// is at the argument of sum w_i conj(a_i) b_i.
inline NoonFit noon_fit(const EnsembleState& ens, int n) {
    if (n < 1) throw std::invalid_argument("noon fit needs n >= 1");
    const ModeRegistry& reg = ens.registry();
    if (reg.size() != 2) throw std::invalid_argument("noon fit needs a two-mode state");
    PureState hi = basis_state(reg, {n, 0});
    PureState lo = basis_state(reg, {0, n});
    double direct = 0.0;
    complex_t cross{0.0, 0.0};
    for (const auto& br : ens.branches) {
        complex_t a = inner_product(hi, br.state);
        complex_t b = inner_product(lo, br.state);
        direct += br.weight * (std::norm(a) + std::norm(b));
        cross += br.weight * std::conj(a) * b;
    }
    double mag = std::abs(cross);
    NoonFit fit;
    fit.fidelity = 0.5 * direct + mag;
    fit.phase = mag < 1e-15 ? 0.0 : std::arg(cross);
    if (fit.phase <= -kPi + 1e-9) fit.phase += 2.0 * kPi;  // canonicalize -pi to +pi
    return fit;
}

namespace detail {

inline int mode_occupation_bound(const EnsembleState& ens, const ModeLabel& mode) {
    int bound = 0;
    for (const auto& br : ens.branches) {
        std::size_t idx = br.state.mode_index(mode);
        for (const auto& [occ, amp] : br.state.terms()) bound = std::max(bound, occ[idx]);
    }
    return bound;
}

}  // namespace detail

// Runs the staged conditional circuit.  A herald probability of zero is
// reported, not thrown: the run comes back flagged with zero output.
inline ProtocolRun run_circuit(const Circuit& circuit) {
    if (circuit.input.size() != circuit.main_modes.size())
        throw std::invalid_argument("input occupation does not match main registry");
    ProtocolRun run;
    EnsembleState ens = EnsembleState::pure(basis_state(circuit.main_modes, circuit.input));
    bool lossless = circuit.detector.efficiency == 1.0 && circuit.detector.resolving;
    run.success_probability = 1.0;
    for (const auto& stage : circuit.stages) {
        PureState vac = vacuum_state(stage.fresh_modes);
        for (auto& br : ens.branches) br.state = tensor_product(br.state, vac);
        for (const auto& el : stage.elements)
            for (auto& br : ens.branches) br.state = apply_element(br.state, el);

        double p_stage = 0.0;
        if (stage.detection_alternatives.empty())
            throw std::invalid_argument("stage without detection pattern");
        if (lossless) {
            EnsembleState next;
            for (const auto& br : ens.branches) {
                for (const auto& alt : stage.detection_alternatives) {
                    std::vector<std::pair<ModeLabel, int>> pattern;
                    for (const auto& ev : alt) pattern.emplace_back(ev.mode, ev.count);
                    Projection pr = condition_coincidence(br.state, pattern);
                    double w = br.weight * pr.probability;
                    p_stage += w;
                    if (w > 0.0) next.branches.push_back({w, std::move(pr.state)});
                }
            }
            if (p_stage > 0.0) {
                for (auto& br : next.branches) br.weight /= p_stage;
                ens = std::move(next);
            }
        } else {
            if (stage.detection_alternatives.size() != 1)
                throw std::invalid_argument(
                    "lossy detectors support a single detection pattern per stage");
            p_stage = 1.0;
            for (const auto& ev : stage.detection_alternatives.front()) {
                int bound = detail::mode_occupation_bound(ens, ev.mode);
                PovmElement el;
                if (ev.count == 0)
                    el = build_efficiency_povm(circuit.detector, 0, bound);
                else if (circuit.detector.resolving)
                    el = build_efficiency_povm(circuit.detector, std::min(ev.count, bound), bound);
                else
                    el = build_click_povm(circuit.detector, bound);
                PovmOutcome out = apply_povm(ens, ev.mode, el);
                p_stage *= out.probability;
                ens = std::move(out.state);
                if (p_stage == 0.0) break;
            }
        }

        run.stage_probabilities.push_back(p_stage);
        run.success_probability *= p_stage;
        if (p_stage == 0.0) {
            run.herald_failed = true;
            break;
        }

        for (const auto& m : stage.traced)
            ens = trace_out_mode(ens, m);
        for (const auto& m : stage.fresh_modes) {
            bool live = true;
            for (auto& br : ens.branches) {
                if (!br.state.has_mode(m)) {
                    live = false;
                    break;
                }
            }
            if (!live) continue;  // consumed by detection or tracing
            for (auto& br : ens.branches) br.state = remove_empty_mode(br.state, m);
        }
        ens = merge_branches(ens);
    }

    if (run.herald_failed || run.success_probability == 0.0) {
        run.herald_failed = true;
        run.success_probability = 0.0;
        run.output = EnsembleState{{{0.0, PureState(circuit.main_modes)}}};
        return run;
    }
    run.output = std::move(ens);
    NoonFit fit = noon_fit(run.output, circuit.photons);
    run.fidelity = fit.fidelity;
    run.achieved_phase = fit.phase;
    return run;
}

// Even-n distiller: each stage taps both beams with transmission t, phases the
// reflected arm, recombines the taps on a balanced splitter and heralds on a
// coincidence.  The conditioned action per stage is proportional to
// (-sqrt(t))^n_tot (a^2 + e^{i phi} b^2) with phi twice the arm setting.
inline Circuit build_even_circuit(int n, const std::vector<double>& transmissions,
                                  const PhaseSchedule& schedule, DetectorModel detector = {}) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("even circuit needs even n >= 2");
    if (int(transmissions.size()) != n / 2)
        throw std::invalid_argument("need one transmission per element");
    if (int(schedule.phases.size()) != n / 2)
        throw std::invalid_argument("schedule length does not match element count");
    Circuit c;
    c.photons = n;
    c.main_modes = {{0, Polarization::None}, {1, Polarization::None}};
    c.input = {n, n};
    c.detector = detector;
    for (int k = 0; k < n / 2; ++k) {
        ModeLabel tap_a{2 + 2 * k, Polarization::None};
        ModeLabel tap_b{3 + 2 * k, Polarization::None};
        Stage st;
        st.transmission = transmissions[k];
        st.phase = schedule.phases[k];
        st.fresh_modes = {tap_a, tap_b};
        st.elements = {
            BeamSplitterSpec{c.main_modes[0], tap_a, transmissions[k]},
            BeamSplitterSpec{c.main_modes[1], tap_b, transmissions[k]},
            PhaseShiftSpec{tap_b, schedule.phases[k] / 2.0},
            BeamSplitterSpec{tap_a, tap_b, 0.5},
        };
        st.detection_alternatives = {{{tap_a, 1}, {tap_b, 1}}};
        c.stages.push_back(std::move(st));
    }
    return c;
}

// Odd-n distiller: single-photon subtraction per stage.  The reflected taps
// are merged on a polarizing splitter into one beam carrying which-path
// information in polarization; detecting in the rotated (diagonal) basis
// erases it and leaves a^1 + e^{i phi} b^1 acting on the beams, while a
// polarization-insensitive detector keeps the marker and halves the fidelity.
inline Circuit build_odd_circuit(int n, const std::vector<double>& transmissions,
                                 const PhaseSchedule& schedule, DetectionBasis basis,
                                 DetectorModel detector = {}) {
    if (n < 1 || n % 2 == 0) throw std::invalid_argument("odd circuit needs odd n");
    if (int(transmissions.size()) != n)
        throw std::invalid_argument("need one transmission per element");
    if (int(schedule.phases.size()) != n)
        throw std::invalid_argument("schedule length does not match element count");
    bool lossless = detector.efficiency == 1.0 && detector.resolving;
    if (basis == DetectionBasis::PolarizationInsensitive && !lossless)
        throw std::invalid_argument(
            "polarization-insensitive heralding is modeled for lossless detectors only");
    Circuit c;
    c.photons = n;
    c.main_modes = {{0, Polarization::H}, {1, Polarization::H}};
    c.input = {n, n};
    c.detector = detector;
    for (int k = 0; k < n; ++k) {
        int tap_a_sp = 2 + 4 * k, tap_b_sp = 3 + 4 * k;
        int merged_sp = 4 + 4 * k, spare_sp = 5 + 4 * k;
        ModeLabel tap_a{tap_a_sp, Polarization::H};
        ModeLabel tap_b{tap_b_sp, Polarization::H};
        ModeLabel tap_b_v{tap_b_sp, Polarization::V};
        ModeLabel merged_h{merged_sp, Polarization::H};
        ModeLabel merged_v{merged_sp, Polarization::V};
        ModeLabel spare{spare_sp, Polarization::H};
        Stage st;
        st.transmission = transmissions[k];
        st.phase = schedule.phases[k];
        st.fresh_modes = {tap_a, tap_b, tap_b_v, merged_h, merged_v, spare};
        st.elements = {
            BeamSplitterSpec{c.main_modes[0], tap_a, transmissions[k]},
            BeamSplitterSpec{c.main_modes[1], tap_b, transmissions[k]},
            PhaseShiftSpec{tap_b, schedule.phases[k] - kPi / 2.0},
            PolarizationRotationSpec{tap_b_sp, kPi / 2.0},
            PbsSpec{tap_a_sp, tap_b_sp, merged_sp, spare_sp},
        };
        if (basis == DetectionBasis::DiagonalProjection) {
            st.elements.push_back(PolarizationRotationSpec{merged_sp, -kPi / 4.0});
            st.detection_alternatives = {{{merged_h, 1}, {merged_v, 0}}};
        } else {
            st.detection_alternatives = {{{merged_h, 1}, {merged_v, 0}},
                                         {{merged_h, 0}, {merged_v, 1}}};
        }
        st.traced = {spare};
        c.stages.push_back(std::move(st));
    }
    return c;
}

// One conditional element fed with two distilled states instead of fresh
// beams, fusing |n::0> pairs toward |2n-2::0>.
inline ProtocolRun nested_element(const PureState& left, const PureState& right,
                                  double transmission, double arm_phase = 0.0) {
    if (left.registry().size() != 2 || right.registry().size() != 2)
        throw std::invalid_argument("nested element needs two two-mode inputs");
    int n = left.max_photons();
    if (n < 2 || right.max_photons() != n)
        throw std::invalid_argument("nested element needs equal photon totals >= 2");

    ModeRegistry main = {{0, Polarization::None}, {1, Polarization::None}};
    ModeRegistry aux = {{2, Polarization::None}, {3, Polarization::None}};
    PureState l(main);
    for (const auto& [occ, amp] : left.terms()) l.add_term(occ, amp);
    PureState r(aux);
    for (const auto& [occ, amp] : right.terms()) r.add_term(occ, amp);
    PureState psi = tensor_product(l, r);
    psi = apply_beam_splitter(psi, {main[0], aux[0], transmission});
    psi = apply_beam_splitter(psi, {main[1], aux[1], transmission});
    psi = apply_phase_shift(psi, {aux[1], arm_phase});
    psi = apply_beam_splitter(psi, {aux[0], aux[1], 0.5});
    Projection pr = condition_coincidence(psi, {{aux[0], 1}, {aux[1], 1}});

    ProtocolRun run;
    run.stage_probabilities = {pr.probability};
    run.success_probability = pr.probability;
    if (pr.probability == 0.0) {
        run.herald_failed = true;
        run.output = EnsembleState{{{0.0, PureState(main)}}};
        return run;
    }
    run.output = EnsembleState::pure(std::move(pr.state));
    NoonFit fit = noon_fit(run.output, 2 * n - 2);
    run.fidelity = fit.fidelity;
    run.achieved_phase = fit.phase;
    return run;
}

// Probability that k of the n photons in one beam leave through the tap.
inline std::vector<double> reflection_distribution(int n, double transmission) {
    if (n < 0) throw std::invalid_argument("negative photon number");
    if (!(transmission >= 0.0 && transmission <= 1.0))
        throw std::invalid_argument("transmission outside [0,1]");
    std::vector<double> p(n + 1, 0.0);
    for (int k = 0; k <= n; ++k)
        p[k] = detail::binomial_d(n, k) * std::pow(transmission, n - k) *
               std::pow(1.0 - transmission, k);
    return p;
}

// Per-element herald weight t^(2n-2) (1-t)^2, maximal at t = (n-1)/n.
inline double transmission_objective(int n, double t) {
    if (n < 2) throw std::invalid_argument("objective needs n >= 2");
    return std::pow(t, 2 * n - 2) * (1.0 - t) * (1.0 - t);
}

inline double optimal_transmission(int n) {
    if (n < 2) throw std::invalid_argument("optimal transmission needs n >= 2");
    return double(n - 1) / double(n);
}

// Exact joint success probability of the even-n distiller at its optimal
// uniform transmission: 2 (1/4)^n n! / n^n.
inline BigRational analytic_success_probability(int n) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("closed form covers even n >= 2");
    BigRational r(2, 1);
    r *= BigRational(big_factorial(n), big_pow(4, n) * big_pow(n, n));
    return r;
}

// Stirling estimate sqrt(8 pi n) (eta / 4e)^n of the same probability with
// detector efficiency folded in; exactly the eta=1 value times eta^n.
inline double asymptotic_probability(int n, double eta = 1.0) {
    if (n < 1) throw std::invalid_argument("asymptotic form needs n >= 1");
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("efficiency outside [0,1]");
    double base = std::sqrt(8.0 * kPi * n) * std::pow(1.0 / (4.0 * std::numbers::e), n);
    return base * std::pow(eta, n);
}

}  // namespace pathent
