#pragma once

// Synthetic type-1 patients: randomized three-meal daily scenarios driving a
// Bergman minimal model with a two-compartment gut.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "glyfe/core.hpp"

namespace glyfe::synthgen {

inline constexpr Timestamp kDefaultStart = 1577836800;  // 2020-01-01 00:00 UTC
inline constexpr std::int64_t kMealDuration = 900;      // 15 min
inline constexpr std::int64_t kSimStep = 60;

struct Meal {
  Timestamp start = 0;
  std::int64_t duration = kMealDuration;
  double carbs = 0.0;  // g
};

struct Bolus {
  Timestamp time = 0;
  double dose = 0.0;  // U
};

struct Scenario {
  int days = 0;
  Timestamp start = kDefaultStart;
  std::vector<Meal> meals;      // 3 per day, in day order
  std::vector<Bolus> boluses;   // one per meal, at meal start
  double basal_rate = 0.0;      // U/h

  Timestamp end() const { return start + days * kSecondsPerDay; }
  double total_carbs() const;
  double total_bolus() const;
};

// Minimal-model units: time in minutes, G in mg/dL, I in mU/L, X in 1/min,
// gut compartments in mg. The ODE is driven by insulin delivered on top of
// basal, so I_b is the plasma level basal delivery sustains.
struct VirtualPatientParams {
  double carb_ratio = 10.0;  // g/U
  double basal_rate = 1.0;   // U/h
  double p1 = 0.0337;        // 1/min
  double p2 = 0.0209;        // 1/min
  double p3 = 7.5e-6;        // 1/min^2 per mU/L
  double n = 0.23;           // 1/min
  double k_abs = 0.035;      // 1/min
  double f = 0.9;
  double V_g = 1.6 * 70.0;   // dL
  double V_i = 12.0;         // L
  double G_b = 110.0;        // mg/dL
  double I_b = 0.0;          // mU/L; derived from basal_rate when 0
  double initial_glucose = 110.0;
  double cgm_noise_sd = 2.0;  // mg/dL (variance 4)

  double basal_plasma_insulin() const;
  void validate() const;
  nlohmann::json to_json() const;
};

VirtualPatientParams default_params();
// Defaults with every parameter scaled by an independent U(0.8, 1.2) factor
// drawn from a stream seeded by the patient index.
VirtualPatientParams patient_params(int patient_index);

// Per-meal scenario statistics: means at 7 h, 13 h, 20 h with variance
// 0.5 h^2; carbs with means 40, 85, 60 g and variance 0.5 * mean.
inline constexpr double kMealHourMean[3] = {7.0, 13.0, 20.0};
inline constexpr double kMealHourVariance = 0.5;
inline constexpr double kCarbMean[3] = {40.0, 85.0, 60.0};
inline constexpr double kCarbVarianceFactor = 0.5;
inline constexpr double kMinCarbs = 5.0;

double bolus_dose(double carbs, double carb_ratio, double factor);

Scenario generate_scenario(int days, const VirtualPatientParams& params, std::uint64_t seed,
                           Timestamp start = kDefaultStart);

// Integrates the model on a 60 s grid with fixed-step RK4 and returns the
// 1-min record (glucose with CGM noise, CHO and insulin per minute).
PatientRecord simulate(const Scenario& scenario, const VirtualPatientParams& params,
                       std::uint64_t seed, std::string patient_id = "synthetic");

nlohmann::json scenario_to_json(const Scenario& scenario);

std::string patient_name(int index);  // "synthetic_01", ...

}  // namespace glyfe::synthgen
