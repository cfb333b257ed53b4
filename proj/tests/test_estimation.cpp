#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "pathent/estimation.hpp"
#include "pathent/protocols.hpp"

using namespace pathent;
using Catch::Approx;

TEST_CASE("closed-form probe moments") {
    SECTION("independent probes") {
        Moments m = uncorrelated_statistics(1, 0.0);
        CHECK(m.mean == Approx(1.0));
        CHECK(m.variance == Approx(0.0).margin(1e-15));
        Moments m4 = uncorrelated_statistics(4, kPi / 2.0);
        CHECK(m4.mean == Approx(0.0).margin(1e-12));
        CHECK(m4.variance == Approx(4.0));
    }
    SECTION("path-entangled probe") {
        Moments m = entangled_statistics(2, kPi / 4.0);
        CHECK(m.mean == Approx(0.0).margin(1e-12));
        CHECK(m.variance == Approx(1.0));
        Moments one = entangled_statistics(1, 0.37);
        Moments unc = uncorrelated_statistics(1, 0.37);
        CHECK(one.mean == Approx(unc.mean));
        CHECK(one.variance == Approx(unc.variance));
    }
    SECTION("invalid counts throw") {
        CHECK_THROWS_AS(uncorrelated_statistics(0, 0.1), std::invalid_argument);
        CHECK_THROWS_AS(entangled_statistics(0, 0.1), std::invalid_argument);
    }
}

TEST_CASE("entangled probe mean matches the two-mode matrix element", "[property]") {
    // Oracle: <A> on (|n,0> + e^{i n phi} |0,n>)/sqrt(2) with A swapping the
    // two kets is Re e^{i n phi}; no trigonometry shared with the library.
    for (int n = 1; n <= 6; ++n) {
        double phi = 0.17 + 0.29 * n;
        PureState probe = target_noon(n, 0, n * phi);
        PureState hi = basis_state(probe.registry(), {n, 0});
        PureState lo = basis_state(probe.registry(), {0, n});
        // A = |n,0><0,n| + |0,n><n,0| applied by hand.
        PureState swapped = add(scale(hi, inner_product(lo, probe)),
                                scale(lo, inner_product(hi, probe)));
        double mean = inner_product(probe, swapped).real();
        CHECK(mean == Approx(entangled_statistics(n, phi).mean).margin(1e-12));
    }
}

TEST_CASE("variance complements the squared mean for a single entangled probe",
          "[property]") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
    for (int rep = 0; rep < 100; ++rep) {
        int n = 1 + rep % 6;
        double phi = ang(rng);
        Moments m = entangled_statistics(n, phi);
        CHECK(m.variance == Approx(1.0 - m.mean * m.mean).margin(1e-12));
    }
}

TEST_CASE("propagated phase uncertainty hits both scaling limits") {
    SECTION("independent probes: 1/sqrt(n) at any workable phase") {
        auto mean = [](double ph) { return uncorrelated_statistics(9, ph).mean; };
        auto var = [](double ph) { return uncorrelated_statistics(9, ph).variance; };
        PhaseUncertainty u = phase_uncertainty(mean, var, kPi / 3.0);
        REQUIRE_FALSE(u.singular);
        CHECK(u.value == Approx(1.0 / 3.0).margin(1e-6));
        std::mt19937 rng(23);
        std::uniform_real_distribution<double> ang(0.2, kPi - 0.2);
        for (int rep = 0; rep < 20; ++rep) {
            PhaseUncertainty each = phase_uncertainty(mean, var, ang(rng));
            REQUIRE_FALSE(each.singular);
            CHECK(each.value == Approx(1.0 / 3.0).margin(1e-6));
        }
    }
    SECTION("entangled probe: 1/n at its working point") {
        auto mean = [](double ph) { return entangled_statistics(5, ph).mean; };
        auto var = [](double ph) { return entangled_statistics(5, ph).variance; };
        PhaseUncertainty u = phase_uncertainty(mean, var, kPi / 10.0);
        REQUIRE_FALSE(u.singular);
        CHECK(u.value == Approx(0.2).margin(1e-6));
    }
    SECTION("stationary phase is flagged, not divided by") {
        auto mean = [](double ph) { return entangled_statistics(4, ph).mean; };
        auto var = [](double ph) { return entangled_statistics(4, ph).variance; };
        CHECK(phase_uncertainty(mean, var, 0.0).singular);
    }
}

TEST_CASE("finite-difference slope matches the analytic derivative", "[property]") {
    for (int n = 1; n <= 10; ++n) {
        double phi = 0.3 + 0.11 * n;
        auto mean = [n](double ph) { return entangled_statistics(n, ph).mean; };
        double fd = (mean(phi + kDerivativeStep) - mean(phi - kDerivativeStep)) /
                    (2.0 * kDerivativeStep);
        CHECK(fd == Approx(-n * std::sin(n * phi)).margin(1e-6));
    }
}

TEST_CASE("precision limits") {
    PrecisionLimits one = precision_limits(1);
    CHECK(one.shot_noise == Approx(1.0));
    CHECK(one.heisenberg == Approx(1.0));
    PrecisionLimits four = precision_limits(4);
    CHECK(four.shot_noise == Approx(0.5));
    CHECK(four.heisenberg == Approx(0.25));
    for (int n = 1; n <= 100; ++n) {
        PrecisionLimits lim = precision_limits(n);
        CHECK(lim.shot_noise / lim.heisenberg == Approx(std::sqrt(double(n))).margin(1e-12));
    }
}

TEST_CASE("closed-form uncertainty wrapper agrees with the limits") {
    for (int n : {1, 4, 9}) {
        PhaseUncertainty unc = closed_form_uncertainty(ProbeKind::Uncorrelated, n, kPi / 3.0);
        CHECK(unc.value == Approx(1.0 / std::sqrt(double(n))).margin(1e-6));
        PhaseUncertainty ent =
            closed_form_uncertainty(ProbeKind::Entangled, n, kPi / (2.0 * n));
        CHECK(ent.value == Approx(1.0 / double(n)).margin(1e-6));
    }
}

TEST_CASE("sampled estimates are deterministic for a fixed seed") {
    EstimationSample a = monte_carlo_phase_estimate(ProbeKind::Entangled, 4, kPi / 8.0, 20000, 77);
    EstimationSample b = monte_carlo_phase_estimate(ProbeKind::Entangled, 4, kPi / 8.0, 20000, 77);
    CHECK(a.mean == b.mean);
    CHECK(a.variance == b.variance);
    CHECK(a.uncertainty.value == b.uncertainty.value);
    EstimationSample c = monte_carlo_phase_estimate(ProbeKind::Entangled, 4, kPi / 8.0, 20000, 78);
    CHECK(a.mean != c.mean);  // different stream actually sampled
}

TEST_CASE("sampled estimates converge to the closed forms") {
    SECTION("single independent probe at quadrature") {
        EstimationSample s =
            monte_carlo_phase_estimate(ProbeKind::Uncorrelated, 1, kPi / 2.0, 100000, 1234);
        CHECK(s.uncertainty.value == Approx(1.0).epsilon(0.05));
    }
    SECTION("entangled probe at its working point") {
        EstimationSample s =
            monte_carlo_phase_estimate(ProbeKind::Entangled, 4, kPi / 8.0, 100000, 1234);
        CHECK(s.uncertainty.value == Approx(0.25).epsilon(0.10));
    }
    SECTION("error bands shrink with the trial count") {
        double closed = closed_form_uncertainty(ProbeKind::Entangled, 3, kPi / 6.0).value;
        double err_small = 0.0, err_large = 0.0;
        // Average error over a few seeds so the comparison is not one lucky draw.
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            err_small += std::abs(
                monte_carlo_phase_estimate(ProbeKind::Entangled, 3, kPi / 6.0, 1000, seed)
                    .uncertainty.value -
                closed);
            err_large += std::abs(
                monte_carlo_phase_estimate(ProbeKind::Entangled, 3, kPi / 6.0, 100000, seed)
                    .uncertainty.value -
                closed);
        }
        CHECK(err_large < err_small);
    }
    SECTION("empirical mean lands within a few standard errors") {
        long trials = 100000;
        EstimationSample s =
            monte_carlo_phase_estimate(ProbeKind::Uncorrelated, 4, 0.9, trials, 42);
        Moments m = uncorrelated_statistics(4, 0.9);
        double se = std::sqrt(m.variance / double(trials));
        CHECK(std::abs(s.mean - m.mean) < 4.0 * se);
        CHECK(s.variance == Approx(m.variance).epsilon(0.05));
    }
    SECTION("stationary point flags the sampled result too") {
        EstimationSample s = monte_carlo_phase_estimate(ProbeKind::Entangled, 4, 0.0, 1000, 9);
        CHECK(s.uncertainty.singular);
    }
}
