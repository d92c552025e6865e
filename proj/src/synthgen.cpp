#include "glyfe/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "glyfe/errors.hpp"
#include "glyfe/rng.hpp"

namespace glyfe::synthgen {

double Scenario::total_carbs() const {
  double s = 0.0;
  for (const auto& m : meals) s += m.carbs;
  return s;
}

double Scenario::total_bolus() const {
  double s = 0.0;
  for (const auto& b : boluses) s += b.dose;
  return s;
}

double VirtualPatientParams::basal_plasma_insulin() const {
  if (I_b > 0.0) return I_b;
  return basal_rate * 1000.0 / 60.0 / (n * V_i);
}

void VirtualPatientParams::validate() const {
  const std::array<std::pair<const char*, double>, 12> fields{{{"carb_ratio", carb_ratio},
                                                               {"basal_rate", basal_rate},
                                                               {"p1", p1},
                                                               {"p2", p2},
                                                               {"p3", p3},
                                                               {"n", n},
                                                               {"k_abs", k_abs},
                                                               {"f", f},
                                                               {"V_g", V_g},
                                                               {"V_i", V_i},
                                                               {"G_b", G_b},
                                                               {"initial_glucose",
                                                                initial_glucose}}};
  for (const auto& [name, v] : fields) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ArgumentError(std::string("patient parameter ") + name + " must be positive");
  }
  if (G_b < 80.0 || G_b > 140.0) throw ArgumentError("G_b must lie within [80, 140] mg/dL");
  if (cgm_noise_sd < 0.0) throw ArgumentError("CGM noise must be non-negative");
}

nlohmann::json VirtualPatientParams::to_json() const {
  return {{"carb_ratio", carb_ratio}, {"basal_rate", basal_rate}, {"p1", p1},
          {"p2", p2},                 {"p3", p3},                 {"n", n},
          {"k_abs", k_abs},           {"f", f},                   {"V_g", V_g},
          {"V_i", V_i},               {"G_b", G_b},               {"I_b", basal_plasma_insulin()},
          {"initial_glucose", initial_glucose},                   {"cgm_noise_sd", cgm_noise_sd}};
}

VirtualPatientParams default_params() { return VirtualPatientParams{}; }

VirtualPatientParams patient_params(int patient_index) {
  Rng rng(mix_seed(0x61c8864680b583ebULL, static_cast<std::uint64_t>(patient_index)));
  VirtualPatientParams p;
  auto jitter = [&](double& v) { v *= rng.uniform(0.8, 1.2); };
  jitter(p.carb_ratio);
  jitter(p.basal_rate);
  jitter(p.p1);
  jitter(p.p2);
  jitter(p.p3);
  jitter(p.n);
  jitter(p.k_abs);
  jitter(p.f);
  jitter(p.V_g);
  jitter(p.V_i);
  jitter(p.G_b);
  p.f = std::min(p.f, 1.0);
  p.initial_glucose = p.G_b;
  return p;
}

double bolus_dose(double carbs, double carb_ratio, double factor) {
  return factor * (carbs / carb_ratio);
}

Scenario generate_scenario(int days, const VirtualPatientParams& params, std::uint64_t seed,
                           Timestamp start) {
  if (days < 1) throw ArgumentError("scenario needs at least one day");
  params.validate();
  Rng rng(seed);
  Scenario s;
  s.days = days;
  s.start = start;
  s.basal_rate = params.basal_rate;
  const double time_sd = std::sqrt(kMealHourVariance);
  const double last_minute = 1440.0 - static_cast<double>(kMealDuration) / 60.0;
  for (int d = 0; d < days; ++d) {
    const Timestamp day_start = start + d * kSecondsPerDay;
    for (int j = 0; j < 3; ++j) {
      const double hour = rng.normal(kMealHourMean[j], time_sd);
      const double carbs =
          rng.normal(kCarbMean[j], std::sqrt(kCarbVarianceFactor * kCarbMean[j]));
      const double factor = rng.uniform(0.7, 1.3);
      const double minute = std::clamp(std::round(hour * 60.0), 0.0, last_minute);
      Meal meal;
      meal.start = day_start + static_cast<Timestamp>(minute) * 60;
      meal.carbs = std::max(carbs, kMinCarbs);
      s.meals.push_back(meal);
      s.boluses.push_back({meal.start, bolus_dose(meal.carbs, params.carb_ratio, factor)});
    }
  }
  return s;
}

namespace {

struct State {
  double G, X, I, q1, q2;
};

State add(const State& a, const State& b, double h) {
  return {a.G + h * b.G, a.X + h * b.X, a.I + h * b.I, a.q1 + h * b.q1, a.q2 + h * b.q2};
}

State derivative(const State& s, const VirtualPatientParams& p, double I_b, double u_meal,
                 double u_ins) {
  const double ra = p.f * p.k_abs * s.q2;
  return {-p.p1 * (s.G - p.G_b) - s.X * s.G + ra / p.V_g,
          -p.p2 * s.X + p.p3 * (s.I - I_b),
          -p.n * (s.I - I_b) + u_ins / p.V_i,
          -p.k_abs * s.q1 + u_meal,
          p.k_abs * (s.q1 - s.q2)};
}

std::string describe(const VirtualPatientParams& p) {
  std::ostringstream os;
  os << p.to_json().dump();
  return os.str();
}

}  // namespace

PatientRecord simulate(const Scenario& scenario, const VirtualPatientParams& params,
                       std::uint64_t seed, std::string patient_id) {
  params.validate();
  if (scenario.days < 1) throw ArgumentError("scenario has no days");
  const std::size_t minutes = static_cast<std::size_t>(scenario.days) * 1440;
  const TimeGrid grid{scenario.start, kSimStep, minutes};

  std::vector<double> cho(minutes, 0.0);
  std::vector<double> bolus(minutes, 0.0);
  for (const auto& m : scenario.meals) {
    const std::size_t first = slot_of(grid, m.start);
    const std::size_t span = static_cast<std::size_t>(m.duration / kSimStep);
    for (std::size_t k = 0; k < span && first + k < minutes; ++k)
      cho[first + k] += m.carbs / static_cast<double>(span);
  }
  for (const auto& b : scenario.boluses) bolus[slot_of(grid, b.time)] += b.dose;

  const double basal_per_min = scenario.basal_rate / 60.0;
  std::vector<double> insulin(minutes);
  for (std::size_t k = 0; k < minutes; ++k) insulin[k] = basal_per_min + bolus[k];

  const double I_b = params.basal_plasma_insulin();
  const double h = static_cast<double>(kSimStep) / 60.0;  // minutes
  Rng noise(seed);
  std::vector<std::optional<double>> glucose(minutes);
  State s{params.initial_glucose, 0.0, I_b, 0.0, 0.0};
  for (std::size_t k = 0; k < minutes; ++k) {
    double g = s.G;
    if (params.cgm_noise_sd > 0.0) g += noise.normal(0.0, params.cgm_noise_sd);
    glucose[k] = std::clamp(g, 20.0, 600.0);

    const double u_meal = cho[k] * 1000.0 / h;   // mg/min
    const double u_ins = bolus[k] * 1000.0 / h;  // mU/min above basal
    const State k1 = derivative(s, params, I_b, u_meal, u_ins);
    const State k2 = derivative(add(s, k1, h / 2), params, I_b, u_meal, u_ins);
    const State k3 = derivative(add(s, k2, h / 2), params, I_b, u_meal, u_ins);
    const State k4 = derivative(add(s, k3, h), params, I_b, u_meal, u_ins);
    s.G += h / 6.0 * (k1.G + 2 * k2.G + 2 * k3.G + k4.G);
    s.X += h / 6.0 * (k1.X + 2 * k2.X + 2 * k3.X + k4.X);
    s.I += h / 6.0 * (k1.I + 2 * k2.I + 2 * k3.I + k4.I);
    s.q1 += h / 6.0 * (k1.q1 + 2 * k2.q1 + 2 * k3.q1 + k4.q1);
    s.q2 += h / 6.0 * (k1.q2 + 2 * k2.q2 + 2 * k3.q2 + k4.q2);
    if (!std::isfinite(s.G) || !std::isfinite(s.X) || !std::isfinite(s.I) ||
        !std::isfinite(s.q1) || !std::isfinite(s.q2)) {
      throw SimulationDiverged("simulation diverged at minute " + std::to_string(k) +
                               " for parameters " + describe(params));
    }
  }
  return PatientRecord(std::move(patient_id), Source::synthetic, grid, std::move(glucose),
                       std::move(cho), std::move(insulin));
}

nlohmann::json scenario_to_json(const Scenario& scenario) {
  nlohmann::json meals = nlohmann::json::array();
  for (const auto& m : scenario.meals)
    meals.push_back({{"start", m.start}, {"duration", m.duration}, {"carbs", m.carbs}});
  nlohmann::json boluses = nlohmann::json::array();
  for (const auto& b : scenario.boluses) boluses.push_back({{"time", b.time}, {"dose", b.dose}});
  return {{"days", scenario.days},
          {"start", scenario.start},
          {"basal_rate", scenario.basal_rate},
          {"meals", meals},
          {"boluses", boluses}};
}

std::string patient_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "synthetic_%02d", index + 1);
  return buf;
}

}  // namespace glyfe::synthgen
