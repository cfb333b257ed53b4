#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "pathent/protocols.hpp"

using namespace pathent;
using Catch::Approx;

namespace {

// prod_k (a + e^{i phi_k} b) or (a^2 + e^{i phi_k} b^2) built from ladders.
PureState subtraction_product(const PureState& input, const std::vector<double>& phases,
                              int order) {
    const ModeLabel a = input.registry()[0];
    const ModeLabel b = input.registry()[1];
    PureState cur = input;
    for (double phi : phases) {
        PureState ta = apply_ladder(cur, a, Ladder::Annihilate, order);
        PureState tb = apply_ladder(cur, b, Ladder::Annihilate, order);
        cur = add(ta, scale(tb, std::polar(1.0, phi)));
    }
    return cur;
}

// Independent joint-probability oracle.  Each conditional element contributes
// a scalar (1-t)^order / 2^order (squared amplitude of routing the subtracted
// photons into the herald) and t to the number of photons it passes on, so
//   p = prod_k [(1-t)/2]^order * t^(photons left after element k)
//       * |prod_k (a^order + e^{i phi_k} b^order) |n,n>|^2.
double stage_product_probability(int n, double t, const std::vector<double>& phases, int order) {
    const ModeRegistry reg = {{0, Polarization::None}, {1, Polarization::None}};
    PureState shaped = subtraction_product(basis_state(reg, {n, n}), phases, order);
    double p = shaped.norm() * shaped.norm();
    int remaining = 2 * n;
    for (std::size_t k = 0; k < phases.size(); ++k) {
        remaining -= order;
        p *= std::pow((1.0 - t) / 2.0, order) * std::pow(t, remaining);
    }
    return p;
}

std::vector<double> uniform_ts(int n, double t) {
    return std::vector<double>(n % 2 == 0 ? n / 2 : n, t);
}

}  // namespace

TEST_CASE("noon targets") {
    SECTION("|2::0> with zero phase") {
        PureState psi = target_noon(2, 0, 0.0);
        CHECK(psi.norm() == Approx(1.0));
        CHECK(psi.terms().at({2, 0}).real() == Approx(1.0 / std::sqrt(2.0)));
        CHECK(psi.terms().at({0, 2}).real() == Approx(1.0 / std::sqrt(2.0)));
    }
    SECTION("relative phase sits on the swapped ket") {
        PureState psi = target_noon(4, 0, kPi);
        CHECK(psi.norm() == Approx(1.0));
        CHECK(psi.terms().at({0, 4}).real() == Approx(-1.0 / std::sqrt(2.0)));
    }
    SECTION("equal occupations collapse to a single ket") {
        PureState psi = target_noon(2, 2, 0.0);
        REQUIRE(psi.terms().size() == 1);
        CHECK(psi.terms().at({2, 2}).real() == Approx(1.0));
        CHECK_THROWS_AS(target_noon(2, 2, 0.3), std::invalid_argument);
    }
    SECTION("invalid orders throw") {
        CHECK_THROWS_AS(target_noon(1, 2, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(target_noon(2, -1, 0.0), std::invalid_argument);
    }
}

TEST_CASE("noon_fit scores family membership") {
    const ModeRegistry reg = {{0, Polarization::None}, {1, Polarization::None}};
    SECTION("exact member at some phase") {
        NoonFit fit = noon_fit(EnsembleState::pure(target_noon(reg, 3, 0, 0.7)), 3);
        CHECK(fit.fidelity == Approx(1.0));
        CHECK(fit.phase == Approx(0.7));
    }
    SECTION("incoherent mixture caps at one half") {
        EnsembleState mix{{{0.5, basis_state(reg, {3, 0})}, {0.5, basis_state(reg, {0, 3})}}};
        NoonFit fit = noon_fit(mix, 3);
        CHECK(fit.fidelity == Approx(0.5));
        CHECK(fit.phase == 0.0);
    }
    SECTION("minus-pi reports as plus-pi") {
        NoonFit fit = noon_fit(EnsembleState::pure(target_noon(reg, 2, 0, -kPi)), 2);
        CHECK(fit.phase == Approx(kPi));
    }
}

TEST_CASE("phase schedules") {
    SECTION("published even-count roots") {
        PhaseSchedule s = resolve_phase_roots(2, PhaseVariant::PaperEven);
        REQUIRE(s.phases.size() == 1);
        CHECK(s.phases[0] == Approx(2.0 * kPi));
    }
    SECTION("published odd-count roots") {
        PhaseSchedule s = resolve_phase_roots(3, PhaseVariant::PaperOdd);
        REQUIRE(s.phases.size() == 3);
        CHECK(s.phases[0] == Approx(2.0 * kPi / 3.0));
        CHECK(s.phases[1] == Approx(4.0 * kPi / 3.0));
        CHECK(s.phases[2] == Approx(2.0 * kPi));
    }
    SECTION("zero-phase-target roots for a count divisible by four") {
        PhaseSchedule s = resolve_phase_roots(4, PhaseVariant::ExactTarget);
        REQUIRE(s.phases.size() == 2);
        CHECK(s.phases[0] == Approx(kPi / 2.0));
        CHECK(s.phases[1] == Approx(3.0 * kPi / 2.0));
    }
    SECTION("mismatched parity throws") {
        CHECK_THROWS_AS(resolve_phase_roots(3, PhaseVariant::PaperEven), std::invalid_argument);
        CHECK_THROWS_AS(resolve_phase_roots(4, PhaseVariant::PaperOdd), std::invalid_argument);
        CHECK_THROWS_AS(resolve_phase_roots(1, PhaseVariant::ExactTarget), std::invalid_argument);
    }
}

TEST_CASE("schedule roots multiply to a pure two-term operator", "[property]") {
    // Oracle: expand prod_k (x + e^{i phi_k} y) as a coefficient list; the
    // interior coefficients must cancel, leaving x^M + c y^M.
    auto expand = [](const std::vector<double>& phases) {
        std::vector<complex_t> coeff{complex_t{1.0, 0.0}};
        for (double phi : phases) {
            std::vector<complex_t> next(coeff.size() + 1, complex_t{0.0, 0.0});
            for (std::size_t j = 0; j < coeff.size(); ++j) {
                next[j] += coeff[j];
                next[j + 1] += coeff[j] * std::polar(1.0, phi);
            }
            coeff = std::move(next);
        }
        return coeff;
    };
    for (int n = 2; n <= 10; ++n) {
        PhaseVariant variants[] = {n % 2 == 0 ? PhaseVariant::PaperEven : PhaseVariant::PaperOdd,
                                   PhaseVariant::ExactTarget};
        for (PhaseVariant v : variants) {
            auto coeff = expand(resolve_phase_roots(n, v).phases);
            CHECK(std::abs(coeff.front() - complex_t{1.0, 0.0}) < 1e-9);
            for (std::size_t j = 1; j + 1 < coeff.size(); ++j) CHECK(std::abs(coeff[j]) < 1e-9);
            complex_t tail = coeff.back();
            if (v == PhaseVariant::ExactTarget || n % 2 != 0) {
                CHECK(std::abs(tail - complex_t{1.0, 0.0}) < 1e-9);
            } else {
                double sign = (n / 2) % 2 == 0 ? -1.0 : 1.0;
                CHECK(std::abs(tail - complex_t{sign, 0.0}) < 1e-9);
            }
        }
    }
}

TEST_CASE("single conditional element applies a + e^{i phi} b on each beam pair") {
    // One stage with an arbitrary arm setting: the surviving amplitudes must
    // show exactly the programmed relative phase, at any tap transmission.
    double phi = 0.9, t = 0.37;
    Circuit c = build_even_circuit(2, {t}, PhaseSchedule{PhaseVariant::ExactTarget, {phi}});
    ProtocolRun run = run_circuit(c);
    REQUIRE(run.output.branches.size() == 1);
    const PureState& out = run.output.branches.front().state;
    complex_t hi = out.terms().at({2, 0});
    complex_t lo = out.terms().at({0, 2});
    CHECK(std::abs(hi / lo - std::polar(1.0, phi)) < 1e-9);
    CHECK(run.achieved_phase == Approx(-phi));
    CHECK(run.fidelity == Approx(1.0));
}

TEST_CASE("two-photon distiller at a balanced tap") {
    Circuit c = build_even_circuit(2, {0.5}, resolve_phase_roots(2, PhaseVariant::PaperEven));
    ProtocolRun run = run_circuit(c);
    CHECK(run.success_probability == Approx(1.0 / 16.0).epsilon(1e-12));
    CHECK(run.fidelity >= 1.0 - 1e-9);
    CHECK(run.achieved_phase == Approx(0.0).margin(1e-9));
    CHECK_FALSE(run.herald_failed);
}

TEST_CASE("even distiller matches the subtraction-operator oracle", "[property]") {
    for (int n : {2, 4, 6}) {
        for (double t : {0.5, optimal_transmission(n)}) {
            PhaseSchedule s = resolve_phase_roots(n, PhaseVariant::PaperEven);
            ProtocolRun run = run_circuit(build_even_circuit(n, uniform_ts(n, t), s));
            double oracle = stage_product_probability(n, t, s.phases, 2);
            CHECK(run.success_probability == Approx(oracle).epsilon(1e-10));
            // State check: output ray equals the normalized operator product.
            const ModeRegistry reg = {{0, Polarization::None}, {1, Polarization::None}};
            PureState shaped =
                normalize(subtraction_product(basis_state(reg, {n, n}), s.phases, 2)).state;
            REQUIRE(run.output.branches.size() == 1);
            complex_t ov = inner_product(shaped, run.output.branches.front().state);
            CHECK(std::abs(ov) == Approx(1.0).margin(1e-10));
        }
    }
}

TEST_CASE("even variants land on the advertised family phase") {
    struct Case {
        int n;
        PhaseVariant variant;
        double phase;
    };
    for (const auto& c : {Case{4, PhaseVariant::PaperEven, kPi},
                          Case{4, PhaseVariant::ExactTarget, 0.0},
                          Case{6, PhaseVariant::PaperEven, 0.0},
                          Case{6, PhaseVariant::ExactTarget, 0.0}}) {
        PhaseSchedule s = resolve_phase_roots(c.n, c.variant);
        ProtocolRun run =
            run_circuit(build_even_circuit(c.n, uniform_ts(c.n, optimal_transmission(c.n)), s));
        CHECK(run.fidelity >= 1.0 - 1e-9);
        CHECK(run.achieved_phase == Approx(c.phase).margin(1e-6));
    }
}

TEST_CASE("odd distiller with which-path erasure distills perfectly") {
    for (int n : {3, 5}) {
        double t = optimal_transmission(n);
        PhaseSchedule s = resolve_phase_roots(n, PhaseVariant::PaperOdd);
        ProtocolRun run = run_circuit(
            build_odd_circuit(n, uniform_ts(n, t), s, DetectionBasis::DiagonalProjection));
        CHECK(run.fidelity >= 1.0 - 1e-9);
        CHECK(run.achieved_phase == Approx(0.0).margin(1e-6));
        double oracle = stage_product_probability(n, t, s.phases, 1);
        CHECK(run.success_probability == Approx(oracle).epsilon(1e-10));
    }
}

TEST_CASE("odd distiller without erasure keeps the which-path penalty") {
    // Accepting the herald regardless of polarization tags each subtraction,
    // so the surviving |n,0>/<0,n| weight is the two extreme which-path
    // branches out of the binomial spread: fidelity 1 / C(2n, n).
    for (int n : {3, 5}) {
        PhaseSchedule s = resolve_phase_roots(n, PhaseVariant::PaperOdd);
        ProtocolRun run =
            run_circuit(build_odd_circuit(n, uniform_ts(n, optimal_transmission(n)), s,
                                          DetectionBasis::PolarizationInsensitive));
        double expected = 1.0 / detail::binomial_d(2 * n, n);
        CHECK(run.fidelity == Approx(expected).margin(1e-9));
        ProtocolRun erased = run_circuit(build_odd_circuit(
            n, uniform_ts(n, optimal_transmission(n)), s, DetectionBasis::DiagonalProjection));
        CHECK(run.success_probability >= erased.success_probability);
    }
}

TEST_CASE("joint success probability is the product of stage probabilities") {
    PhaseSchedule s = resolve_phase_roots(6, PhaseVariant::ExactTarget);
    ProtocolRun run = run_circuit(build_even_circuit(6, uniform_ts(6, 0.8), s));
    double product = 1.0;
    for (double p : run.stage_probabilities) product *= p;
    CHECK(run.success_probability == Approx(product).epsilon(1e-12));
    CHECK(run.stage_probabilities.size() == 3);
}

TEST_CASE("permuting the phase schedule leaves the joint outcome alone") {
    // Arm phases steer only the conditioned state, never the herald weights,
    // so any ordering of the same root set gives the same joint numbers.
    PhaseSchedule s = resolve_phase_roots(6, PhaseVariant::PaperEven);
    std::vector<double> ts = uniform_ts(6, 0.8);
    ProtocolRun base = run_circuit(build_even_circuit(6, ts, s));
    PhaseSchedule s_perm = s;
    std::rotate(s_perm.phases.begin(), s_perm.phases.begin() + 1, s_perm.phases.end());
    ProtocolRun perm = run_circuit(build_even_circuit(6, ts, s_perm));
    CHECK(base.success_probability == Approx(perm.success_probability).epsilon(1e-10));
    CHECK(base.fidelity == Approx(perm.fidelity).margin(1e-10));
    CHECK(base.achieved_phase == Approx(perm.achieved_phase).margin(1e-9));
    std::reverse(s_perm.phases.begin(), s_perm.phases.end());
    ProtocolRun rev = run_circuit(build_even_circuit(6, ts, s_perm));
    CHECK(base.success_probability == Approx(rev.success_probability).epsilon(1e-10));
}

TEST_CASE("builder validation") {
    PhaseSchedule even2 = resolve_phase_roots(2, PhaseVariant::PaperEven);
    CHECK_THROWS_AS(build_even_circuit(3, {0.5}, even2), std::invalid_argument);
    CHECK_THROWS_AS(build_even_circuit(2, {0.5, 0.5}, even2), std::invalid_argument);
    CHECK_THROWS_AS(build_even_circuit(4, {0.5, 0.5}, even2), std::invalid_argument);
    PhaseSchedule odd3 = resolve_phase_roots(3, PhaseVariant::PaperOdd);
    CHECK_THROWS_AS(build_odd_circuit(4, {0.5, 0.5, 0.5}, odd3, DetectionBasis::DiagonalProjection),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_odd_circuit(3, {0.5}, odd3, DetectionBasis::DiagonalProjection),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_odd_circuit(3, {0.5, 0.5, 0.5}, odd3,
                                      DetectionBasis::PolarizationInsensitive, {0.5, false}),
                    std::invalid_argument);
}

TEST_CASE("fully transmitting taps starve the herald") {
    PhaseSchedule s = resolve_phase_roots(2, PhaseVariant::PaperEven);
    ProtocolRun run = run_circuit(build_even_circuit(2, {1.0}, s));
    CHECK(run.herald_failed);
    CHECK(run.success_probability == 0.0);
    CHECK(run.fidelity == 0.0);
}

TEST_CASE("fusing two distilled pairs") {
    SECTION("two |2::0> inputs at a three-quarter tap") {
        PureState left = target_noon(2, 0, 0.0);
        PureState right = target_noon(2, 0, 0.0);
        ProtocolRun run = nested_element(left, right, 0.75);
        CHECK_FALSE(run.herald_failed);
        CHECK(run.fidelity >= 1.0 - 1e-9);
        CHECK(run.achieved_phase == Approx(0.0).margin(1e-9));
        CHECK(run.success_probability == Approx(0.0625).epsilon(1e-10));
    }
    SECTION("balanced tap nulls the two-photon fusion") {
        ProtocolRun run = nested_element(target_noon(2, 0, 0.0), target_noon(2, 0, 0.0), 0.5);
        CHECK(run.herald_failed);
        CHECK(run.success_probability == 0.0);
    }
    SECTION("three-photon inputs fuse to |4::0> with a phased right port") {
        ProtocolRun run = nested_element(target_noon(3, 0, 0.0), target_noon(3, 0, kPi), 0.5);
        CHECK_FALSE(run.herald_failed);
        CHECK(run.fidelity >= 1.0 - 1e-9);
        CHECK(run.achieved_phase == Approx(kPi).margin(1e-6));
        CHECK(run.success_probability == Approx(0.046875).epsilon(1e-10));
    }
    SECTION("mismatched inputs throw") {
        CHECK_THROWS_AS(nested_element(target_noon(2, 0, 0.0), target_noon(3, 0, 0.0), 0.75),
                        std::invalid_argument);
    }
}

TEST_CASE("tap reflection counts follow the binomial law") {
    auto p = reflection_distribution(4, 0.75);
    REQUIRE(p.size() == 5);
    CHECK(p[2] == Approx(54.0 / 256.0));
    double total = 0.0;
    for (double v : p) total += v;
    CHECK(total == Approx(1.0));
    CHECK_THROWS_AS(reflection_distribution(-1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(reflection_distribution(2, 1.5), std::invalid_argument);
}

TEST_CASE("per-element herald weight peaks at the advertised transmission") {
    for (int n : {2, 3, 5, 8}) {
        double t_star = optimal_transmission(n);
        CHECK(t_star == Approx(double(n - 1) / double(n)));
        // Independent check: coarse numeric argmax of the objective.
        double best_t = 0.0, best = -1.0;
        for (double t = 0.0; t <= 1.0 + 1e-12; t += 1e-4) {
            double v = transmission_objective(n, t);
            if (v > best) {
                best = v;
                best_t = t;
            }
        }
        CHECK(std::abs(best_t - t_star) < 1e-3);
        CHECK(transmission_objective(n, t_star) >= transmission_objective(n, t_star - 1e-3));
        CHECK(transmission_objective(n, t_star) >= transmission_objective(n, t_star + 1e-3));
    }
}

TEST_CASE("closed-form success probability is exact in rational arithmetic") {
    CHECK(rational_string(analytic_success_probability(2)) == "1/16");
    CHECK(rational_string(analytic_success_probability(4)) == "3/4096");
    CHECK(rational_string(analytic_success_probability(6)) == "5/663552");
    CHECK(to_double(analytic_success_probability(2)) == Approx(1.0 / 16.0));
    CHECK_THROWS_AS(analytic_success_probability(3), std::invalid_argument);
}

TEST_CASE("asymptotic probability folds efficiency in as a pure power") {
    for (int n : {2, 4, 8, 16}) {
        for (double eta : {0.25, 0.5, 0.9}) {
            CHECK(asymptotic_probability(n, eta) ==
                  asymptotic_probability(n, 1.0) * std::pow(eta, n));
        }
    }
    // The estimate approaches the exact value from below as n grows.
    double prev = 0.0;
    for (int n = 2; n <= 32; n += 2) {
        double ratio = asymptotic_probability(n) / to_double(analytic_success_probability(n));
        CHECK(ratio < 1.0);
        CHECK(ratio > prev);
        prev = ratio;
    }
    CHECK(prev > 0.98);
}

TEST_CASE("lossy click detectors degrade the two-photon distiller gracefully") {
    PhaseSchedule s = resolve_phase_roots(2, PhaseVariant::PaperEven);
    SECTION("perfect efficiency, click-only heralding") {
        // A click no longer certifies exactly one photon, so extra-reflection
        // terms survive: probability 9/64, fidelity 4/9 at a balanced tap.
        ProtocolRun run = run_circuit(build_even_circuit(2, {0.5}, s, {1.0, false}));
        CHECK(run.success_probability == Approx(9.0 / 64.0).epsilon(1e-12));
        CHECK(run.fidelity == Approx(4.0 / 9.0).epsilon(1e-12));
    }
    SECTION("higher transmission restores fidelity at reduced yield") {
        ProtocolRun low = run_circuit(build_even_circuit(2, {0.5}, s, {0.5, false}));
        ProtocolRun high = run_circuit(build_even_circuit(2, {0.95}, s, {0.5, false}));
        CHECK(high.fidelity > low.fidelity);
        CHECK(high.success_probability < low.success_probability);
        CHECK(high.fidelity > 0.9);
    }
    SECTION("resolving lossy detectors beat click-only ones") {
        ProtocolRun click = run_circuit(build_even_circuit(2, {0.5}, s, {0.5, false}));
        ProtocolRun resolving = run_circuit(build_even_circuit(2, {0.5}, s, {0.5, true}));
        CHECK(resolving.fidelity >= click.fidelity - 1e-12);
    }
}
