#include <catch2/catch_amalgamated.hpp>

#include <prespa/circuitmodel.hpp>

using namespace prespa;

TEST_CASE("dispersive hamiltonian structure", "[circuitmodel]") {
  DeviceParams p;
  p.validate();
  HilbertSpace sp({8, 2});
  auto h = dispersive_hamiltonian(p, sp);
  REQUIRE((h.elements - h.elements.adjoint()).norm() < 1e-14);
  REQUIRE((h.elements - Mat(h.elements.diagonal().asDiagonal())).norm() == 0.0);

  auto level = [&](int n, int q) { return h.elements(n * 2 + q, n * 2 + q).real(); };
  // transmon in g: pure Kerr ladder, spacing differences step by K
  for (int n = 1; n <= 6; ++n) {
    double gap1 = level(n + 1, 0) - level(n, 0);
    double gap0 = level(n, 0) - level(n - 1, 0);
    REQUIRE(gap0 - gap1 == Catch::Approx(kTwoPi * p.K * 1e-3).margin(1e-9));
  }
  // transmon in e: dispersive + second-order shifts
  for (int n = 0; n < 8; ++n) {
    double want = -kTwoPi * (p.chi_q * n + 0.5 * p.K * 1e-3 * n * (n - 1) +
                             0.5 * p.chi_q_prime * 1e-3 * n * (n - 1));
    REQUIRE(level(n, 1) == Catch::Approx(want).margin(1e-9));
  }
  // e-g transition frequency steps by chi_q per photon (plus chi'_q correction)
  for (int n = 0; n < 7; ++n) {
    double step = (level(n + 1, 1) - level(n + 1, 0)) - (level(n, 1) - level(n, 0));
    REQUIRE(step == Catch::Approx(-kTwoPi * (p.chi_q + p.chi_q_prime * 1e-3 * n))
                        .margin(1e-9));
  }

  // reservoir slot is a spectator
  HilbertSpace sp3({4, 2, 2});
  auto h3 = dispersive_hamiltonian(p, sp3);
  for (int n = 0; n < 4; ++n)
    for (int q = 0; q < 2; ++q)
      REQUIRE(h3.elements((n * 2 + q) * 2, (n * 2 + q) * 2) ==
              h3.elements((n * 2 + q) * 2 + 1, (n * 2 + q) * 2 + 1));
}

TEST_CASE("raman drive hamiltonian", "[circuitmodel]") {
  HilbertSpace sp({8, 2, 2});
  auto h = drive_hamiltonian(28.0, 90.0, sp);
  REQUIRE((h.elements - h.elements.adjoint()).norm() < 1e-14);

  auto idx = [](int n, int q, int r) { return (n * 2 + q) * 2 + r; };
  for (int n = 0; n <= 6; n += 2) {
    REQUIRE(h.elements(idx(n, 1, 0), idx(n, 0, 0)).real() ==
            Catch::Approx(kTwoPi * 28e-3));
    REQUIRE(h.elements(idx(n + 1, 0, 1), idx(n, 1, 0)).real() ==
            Catch::Approx(kTwoPi * 90e-3));
  }

  auto first_stage_only = drive_hamiltonian(0.0, 90.0, sp);
  for (int n = 0; n <= 6; n += 2)
    REQUIRE(first_stage_only.elements(idx(n, 1, 0), idx(n, 0, 0)) == 0.0);

  // conserved parity: (-1)^(n + r)
  Mat par = Mat::Zero(32, 32);
  for (int n = 0; n < 8; ++n)
    for (int q = 0; q < 2; ++q)
      for (int r = 0; r < 2; ++r)
        par(idx(n, q, r), idx(n, q, r)) = ((n + r) % 2 == 0) ? 1.0 : -1.0;
  REQUIRE((h.elements * par - par * h.elements).cwiseAbs().maxCoeff() < 1e-12);

  REQUIRE_THROWS_AS(drive_hamiltonian(28.0, 90.0, HilbertSpace({8, 3, 2})),
                    invalid_dimension);
}

TEST_CASE("parametric mixing rates", "[circuitmodel]") {
  auto c = CombConfig::table_defaults();
  c.prefactor_mix = calibrate_mixing_prefactor(c, 127.0);
  REQUIRE(c.prefactor_mix < 0.0);

  auto om = mixing_rates(c);
  REQUIRE(om[1].real() == Catch::Approx(127.0).margin(1e-9));
  const double targets[4] = {-125.0, 127.0, 127.0, 124.0};
  for (int n = 0; n < 4; ++n) {
    REQUIRE(std::abs(om[n].imag()) < 1e-9);
    REQUIRE(std::abs(om[n].real() - targets[n]) / std::abs(targets[n]) < 0.05);
  }
  REQUIRE(om[0].real() < 0.0);  // path-1 sign flip survives the correction

  // single-tone limit: correction sum needs two distinct tones
  CombConfig single = c;
  single.xi = {cx(0, 0), cx(0.05, 0), cx(0, 0), cx(0, 0)};
  auto oms = mixing_rates(single);
  REQUIRE(oms[1].real() ==
          Catch::Approx(single.prefactor_mix * -std::sqrt(3.0) * 0.05).margin(1e-12));
  for (int n : {0, 2, 3}) REQUIRE(std::abs(oms[n]) == 0.0);

  CombConfig quiet = c;
  quiet.xi = {};
  for (auto& o : mixing_rates(quiet)) REQUIRE(std::abs(o) == 0.0);

  CombConfig wild = c;
  wild.xi[0] = 0.3;
  REQUIRE_THROWS_AS(mixing_rates(wild), invalid_input);
}

TEST_CASE("transmon comb rates", "[circuitmodel]") {
  auto c = CombConfig::table_defaults();
  auto lam = transmon_rates(c);
  double scale = 28.0 / std::abs(lam[1]);
  const double mag_target[4] = {27.0, 28.0, 28.0, 27.0};
  const double ph_target[4] = {3.14159265358979 - 0.37, 0.04, 0.07, -0.34};
  for (int n = 0; n < 4; ++n) {
    REQUIRE(std::abs(scale * std::abs(lam[n]) - mag_target[n]) / mag_target[n] < 0.05);
    double dph = std::arg(lam[n]) - ph_target[n];
    while (dph > 3.14159265358979) dph -= kTwoPi;
    while (dph < -3.14159265358979) dph += kTwoPi;
    REQUIRE(std::abs(dph) < 0.05);
  }

  CombConfig quiet = c;
  quiet.xi = {};
  auto bare = transmon_rates(quiet);
  for (int n = 0; n < 4; ++n) REQUIRE(bare[n] == c.lambda_bare[n]);

  CombConfig solo = quiet;
  solo.lambda_bare = {cx(0, 0), cx(0, 0), cx(1.0, 0), cx(0, 0)};
  auto lone = transmon_rates(solo);
  for (int n : {0, 1, 3}) REQUIRE(std::abs(lone[n]) == 0.0);
  REQUIRE(lone[2] == cx(1.0, 0));
}

TEST_CASE("comb residual detunings", "[circuitmodel]") {
  DeviceParams p;

  // linear-dispersion limit: everything lands exactly on resonance
  DeviceParams lin = p;
  lin.K = 1e-12;
  lin.chi_q_prime = 1e-12;
  auto zero = comb_frequencies(lin, 2 * lin.chi_q, 2.9);
  for (int n = 0; n < 4; ++n) {
    REQUIRE(std::abs(zero.transmon_tone_kHz[n]) < 1e-6);
    REQUIRE(std::abs(zero.mixing_tone_kHz[n]) < 1e-6);
    REQUIRE(std::abs(zero.path_kHz[n]) < 1e-6);
  }

  // paper comb: every pair lands within 10 kHz of its Raman condition
  auto r = comb_frequencies(p, 2.679, 2.9);
  double worst = 0.0;
  for (double v : r.path_kHz) worst = std::max(worst, std::abs(v));
  REQUIRE(worst <= 10.0);
  REQUIRE(worst == Catch::Approx(5.1).margin(1e-9));
  // pair residuals come from the Kerr alone: independent of eta
  auto r2 = comb_frequencies(p, 2.6, 1.0);
  for (int n = 0; n < 4; ++n)
    REQUIRE(r.path_kHz[n] == Catch::Approx(r2.path_kHz[n]).margin(1e-12));

  // delta cancels in every residual
  auto rd = comb_frequencies(p, 2.679, 0.0);
  for (int n = 0; n < 4; ++n) {
    REQUIRE(r.transmon_tone_kHz[n] == rd.transmon_tone_kHz[n]);
    REQUIRE(r.mixing_tone_kHz[n] == rd.mixing_tone_kHz[n]);
  }

  // at the best spacing the per-tone residuals equioscillate at 2 chi'_q with
  // the sign pattern (-,+,+,-); a brute-force grid agrees on the optimum
  double eta_opt = 2 * p.chi_q + 5 * p.chi_q_prime * 1e-3;
  auto ro = comb_frequencies(p, eta_opt, 2.9);
  for (int n = 0; n < 4; ++n)
    REQUIRE(std::abs(std::abs(ro.transmon_tone_kHz[n]) - 2 * p.chi_q_prime) < 1e-6);
  REQUIRE(ro.transmon_tone_kHz[0] < 0);
  REQUIRE(ro.transmon_tone_kHz[1] > 0);
  REQUIRE(ro.transmon_tone_kHz[2] > 0);
  REQUIRE(ro.transmon_tone_kHz[3] < 0);

  double best = 1e18, best_eta = 0;
  for (double eta = 2.6; eta <= 2.71; eta += 1e-4) {
    auto g = comb_frequencies(p, eta, 2.9);
    double mx = 0;
    for (double v : g.transmon_tone_kHz) mx = std::max(mx, std::abs(v));
    if (mx < best) {
      best = mx;
      best_eta = eta;
    }
  }
  REQUIRE(best == Catch::Approx(2 * p.chi_q_prime).margin(0.05));
  REQUIRE(best_eta == Catch::Approx(eta_opt).margin(2e-4));
}

TEST_CASE("stark shifts", "[circuitmodel]") {
  DeviceParams p;
  REQUIRE(stark_shift(cx(0, 0), p) == 0.0);
  REQUIRE(stark_shift(cx(0.058, 0), p) == Catch::Approx(1.354).margin(1e-3));

  auto c = CombConfig::table_defaults();
  double sum = 0.0;
  for (const auto& x : c.xi) sum += stark_shift(x, p);
  REQUIRE(sum > 2.9 / 1.5);
  REQUIRE(sum < 2.9 * 1.5);

  REQUIRE_THROWS_AS(stark_shift(cx(0.25, 0), p), invalid_input);
}
