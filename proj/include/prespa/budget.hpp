#pragma once
// Decay-rate budget for the corrected logical qubit: a table of error
// mechanisms with their occurrence (a rate in 1/ms or a fraction of correction
// attempts) and their contribution to the longitudinal and transverse logical
// decay rates.  The module only does bookkeeping arithmetic; the entries
// themselves come from measurement and modeling outside this library.

#include <string>
#include <vector>

#include "circuitmodel.hpp"
#include "errors.hpp"

namespace prespa {

// Mean photon occupation of the code manifold (average over the two words).
inline constexpr double kCodeMeanOccupation = 3.5;

struct ErrorChannelRow {
  std::string mechanism;
  double occurrence = 0;          // rate in 1/ms, or fraction per attempt
  bool occurrence_is_fraction = false;
  double longitudinal = 0;        // contribution to 1/T1_logical, 1/ms
  double transverse = 0;          // contribution to 1/T2-type decay, 1/ms

  void validate() const {
    if (!(occurrence >= 0) || !(longitudinal >= 0) || !(transverse >= 0))
      throw invalid_input("ErrorChannelRow: negative or non-finite entry");
    if (occurrence_is_fraction && occurrence > 1.0)
      throw invalid_input("ErrorChannelRow: fraction above one");
  }
};

struct BudgetTotals {
  double longitudinal = 0;  // 1/ms
  double transverse = 0;    // 1/ms
};

// Converts "fraction of correction events that fail" into a decay rate:
// correction events fire at the single-photon loss rate nbar/T1A.
inline double rate_from_fraction(double fraction, const DeviceParams& dev,
                                 double nbar = kCodeMeanOccupation) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw invalid_input("rate_from_fraction: fraction outside [0, 1]");
  if (!(dev.T1A > 0) || !(nbar > 0))
    throw invalid_input("rate_from_fraction: nonpositive scale");
  return fraction * nbar / (dev.T1A * 1e-3);  // T1A in us -> ms
}

inline double rate_to_lifetime_us(double rate_ms) {
  if (!(rate_ms > 0)) throw invalid_input("rate_to_lifetime_us: nonpositive rate");
  return 1000.0 / rate_ms;
}

// The standard nine-mechanism budget of the corrected memory.  Contributions
// are quoted to the precision they are known at; occurrence fields let callers
// cross-check fraction-type rows against rate_from_fraction.
inline std::vector<ErrorChannelRow> standard_budget() {
  return {
      {"ancilla spurious excitation", 1.8, false, 2.2, 1.8},
      {"other cavity dephasing", 0.4, false, 0.0, 0.4},
      {"ancilla relaxation during correction", 0.07, true, 0.0, 0.5},
      {"second photon decay during correction", 0.06, true, 0.7, 0.4},
      {"intrinsic code-word distortion", 0.03, true, 0.0, 0.2},
      {"incorrectly driven conversion", 0.03, true, 0.0, 0.2},
      {"Kerr and correction-time uncertainty", 0.02, true, 0.0, 0.1},
      {"dispersive curvature and correction-time uncertainty", 0.01, true, 0.0,
       0.1},
      {"other correction phase errors", 0.02, true, 0.0, 0.1},
  };
}

inline BudgetTotals budget_totals(const std::vector<ErrorChannelRow>& rows) {
  if (rows.empty()) throw invalid_input("budget_totals: empty table");
  BudgetTotals t;
  for (const auto& r : rows) {
    r.validate();
    t.longitudinal += r.longitudinal;
    t.transverse += r.transverse;
  }
  return t;
}

}  // namespace prespa
